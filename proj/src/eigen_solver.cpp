// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/eigen_solver.hpp>
#include <palimpsest/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace palimpsest
{

namespace
{

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_symmetric( const MatrixXd &X, const char *name, double tol )
{
    if ( X.rows() != X.cols() )
        throw UsageError( std::string( name ) + " must be square" );
    if ( X.rows() == 0 )
        throw UsageError( "empty eigenproblem" );
    if ( !X.allFinite() )
        throw NumericError( std::string( name ) + " has non-finite entries" );
    double scale = X.cwiseAbs().maxCoeff();
    double asym  = ( X - X.transpose() ).cwiseAbs().maxCoeff();
    if ( asym > tol * std::max( scale, std::numeric_limits<double>::min() ) && asym > 0.0 )
        throw UsageError( std::string( name ) + " is not symmetric" );
}

/// In-place lower Cholesky factor. Returns false on a non-positive pivot.
/// min_pivot / max_pivot receive the extreme diagonal entries of L.
bool cholesky( MatrixXd &L, double &min_pivot, double &max_pivot )
{
    const Index n = L.rows();
    min_pivot     = std::numeric_limits<double>::infinity();
    max_pivot     = 0.0;
    for ( Index j = 0; j < n; ++j )
    {
        double d = L( j, j );
        for ( Index k = 0; k < j; ++k )
            d -= L( j, k ) * L( j, k );
        if ( !( d > 0.0 ) )
        {
            min_pivot = 0.0;
            return false;
        }
        double ljj = std::sqrt( d );
        L( j, j )  = ljj;
        min_pivot  = std::min( min_pivot, ljj );
        max_pivot  = std::max( max_pivot, ljj );
        for ( Index i = j + 1; i < n; ++i )
        {
            double s = L( i, j );
            for ( Index k = 0; k < j; ++k )
                s -= L( i, k ) * L( j, k );
            L( i, j ) = s / ljj;
        }
    }
    for ( Index j = 0; j < n; ++j )
        for ( Index i = 0; i < j; ++i )
            L( i, j ) = 0.0;
    return true;
}

/// Overwrites X with L^-1 X.
void forward_substitute( const MatrixXd &L, MatrixXd &X )
{
    const Index n = L.rows();
    for ( Index c = 0; c < X.cols(); ++c )
        for ( Index i = 0; i < n; ++i )
        {
            double s = X( i, c );
            for ( Index k = 0; k < i; ++k )
                s -= L( i, k ) * X( k, c );
            X( i, c ) = s / L( i, i );
        }
}

/// Overwrites X with L^-T X.
void back_substitute_transposed( const MatrixXd &L, MatrixXd &X )
{
    const Index n = L.rows();
    for ( Index c = 0; c < X.cols(); ++c )
        for ( Index i = n - 1; i >= 0; --i )
        {
            double s = X( i, c );
            for ( Index k = i + 1; k < n; ++k )
                s -= L( k, i ) * X( k, c );
            X( i, c ) = s / L( i, i );
        }
}

/// Householder reduction of the symmetric matrix held in V to tridiagonal
/// form. On return d holds the diagonal, e the subdiagonal (e[0] unused) and
/// V the accumulated orthogonal transformation.
void tridiagonalize( MatrixXd &V, VectorXd &d, VectorXd &e )
{
    const Index n = V.rows();
    for ( Index j = 0; j < n; ++j )
        d[j] = V( n - 1, j );

    for ( Index i = n - 1; i > 0; --i )
    {
        double scale = 0.0;
        double h     = 0.0;
        for ( Index k = 0; k < i; ++k )
            scale += std::abs( d[k] );

        if ( scale == 0.0 )
        {
            e[i] = d[i - 1];
            for ( Index j = 0; j < i; ++j )
            {
                d[j]      = V( i - 1, j );
                V( i, j ) = 0.0;
                V( j, i ) = 0.0;
            }
        }
        else
        {
            for ( Index k = 0; k < i; ++k )
            {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt( h );
            if ( f > 0 )
                g = -g;
            e[i]     = scale * g;
            h        = h - f * g;
            d[i - 1] = f - g;
            for ( Index j = 0; j < i; ++j )
                e[j] = 0.0;

            for ( Index j = 0; j < i; ++j )
            {
                f         = d[j];
                V( j, i ) = f;
                g         = e[j] + V( j, j ) * f;
                for ( Index k = j + 1; k <= i - 1; ++k )
                {
                    g += V( k, j ) * d[k];
                    e[k] += V( k, j ) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for ( Index j = 0; j < i; ++j )
            {
                e[j] /= h;
                f += e[j] * d[j];
            }
            double hh = f / ( h + h );
            for ( Index j = 0; j < i; ++j )
                e[j] -= hh * d[j];
            for ( Index j = 0; j < i; ++j )
            {
                f = d[j];
                g = e[j];
                for ( Index k = j; k <= i - 1; ++k )
                    V( k, j ) -= ( f * e[k] + g * d[k] );
                d[j]      = V( i - 1, j );
                V( i, j ) = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for ( Index i = 0; i < n - 1; ++i )
    {
        V( n - 1, i ) = V( i, i );
        V( i, i )     = 1.0;
        double h      = d[i + 1];
        if ( h != 0.0 )
        {
            for ( Index k = 0; k <= i; ++k )
                d[k] = V( k, i + 1 ) / h;
            for ( Index j = 0; j <= i; ++j )
            {
                double g = 0.0;
                for ( Index k = 0; k <= i; ++k )
                    g += V( k, i + 1 ) * V( k, j );
                for ( Index k = 0; k <= i; ++k )
                    V( k, j ) -= g * d[k];
            }
        }
        for ( Index k = 0; k <= i; ++k )
            V( k, i + 1 ) = 0.0;
    }
    for ( Index j = 0; j < n; ++j )
    {
        d[j]          = V( n - 1, j );
        V( n - 1, j ) = 0.0;
    }
    V( n - 1, n - 1 ) = 1.0;
    e[0]              = 0.0;
}

/// Implicit QL with Wilkinson-style shifts on the tridiagonal (d, e),
/// rotating the columns of V along.
void tridiagonal_ql( MatrixXd &V, VectorXd &d, VectorXd &e )
{
    const Index n = V.rows();
    for ( Index i = 1; i < n; ++i )
        e[i - 1] = e[i];
    e[n - 1] = 0.0;

    const double eps      = std::numeric_limits<double>::epsilon();
    const int    max_iter = 60;
    double       f        = 0.0;
    double       tst1     = 0.0;

    for ( Index l = 0; l < n; ++l )
    {
        tst1    = std::max( tst1, std::abs( d[l] ) + std::abs( e[l] ) );
        Index m = l;
        while ( m < n - 1 && std::abs( e[m] ) > eps * tst1 )
            ++m;

        if ( m > l )
        {
            int iter = 0;
            do
            {
                if ( ++iter > max_iter )
                    throw NumericError( "implicit QL iteration did not converge" );

                double g   = d[l];
                double p   = ( d[l + 1] - g ) / ( 2.0 * e[l] );
                double r   = std::hypot( p, 1.0 );
                if ( p < 0 )
                    r = -r;
                d[l]       = e[l] / ( p + r );
                d[l + 1]   = e[l] * ( p + r );
                double dl1 = d[l + 1];
                double h   = g - d[l];
                for ( Index i = l + 2; i < n; ++i )
                    d[i] -= h;
                f += h;

                p          = d[m];
                double c   = 1.0;
                double c2  = c;
                double c3  = c;
                double el1 = e[l + 1];
                double s   = 0.0;
                double s2  = 0.0;
                for ( Index i = m - 1; i >= l; --i )
                {
                    c3       = c2;
                    c2       = c;
                    s2       = s;
                    g        = c * e[i];
                    h        = c * p;
                    r        = std::hypot( p, e[i] );
                    e[i + 1] = s * r;
                    s        = e[i] / r;
                    c        = p / r;
                    p        = c * d[i] - s * g;
                    d[i + 1] = h + s * ( c * g + s * d[i] );
                    for ( Index k = 0; k < n; ++k )
                    {
                        h             = V( k, i + 1 );
                        V( k, i + 1 ) = s * V( k, i ) + c * h;
                        V( k, i )     = c * V( k, i ) - s * h;
                    }
                }
                p    = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while ( std::abs( e[l] ) > eps * tst1 );
        }
        d[l] = d[l] + f;
        e[l] = 0.0;
    }
}

/// Diagonalizes the symmetric matrix S; returns descending eigenpairs.
EigenSolution symmetric_eigen( const MatrixXd &S )
{
    const Index n = S.rows();
    MatrixXd    V = S;
    VectorXd    d( n ), e( n );
    tridiagonalize( V, d, e );
    tridiagonal_ql( V, d, e );

    std::vector<Index> order( static_cast<std::size_t>( n ) );
    std::iota( order.begin(), order.end(), Index( 0 ) );
    std::stable_sort( order.begin(), order.end(), [&]( Index a, Index b ) {
        return d[a] > d[b];
    } );

    EigenSolution sol;
    sol.eigenvalues.resize( n );
    sol.eigenvectors.resize( n, n );
    for ( Index k = 0; k < n; ++k )
    {
        sol.eigenvalues[k]      = d[order[static_cast<std::size_t>( k )]];
        sol.eigenvectors.col( k ) = V.col( order[static_cast<std::size_t>( k )] );
    }
    return sol;
}

std::string condition_text( double min_pivot, double max_pivot )
{
    if ( !( min_pivot > 0.0 ) )
        return "inf";
    std::ostringstream ss;
    ss.precision( 3 );
    ss << ( max_pivot / min_pivot ) * ( max_pivot / min_pivot );
    return ss.str();
}

} // namespace

void normalize_signs( Eigen::MatrixXd &vectors )
{
    for ( Index k = 0; k < vectors.cols(); ++k )
    {
        auto   col  = vectors.col( k );
        double peak = col.cwiseAbs().maxCoeff();
        if ( peak == 0.0 )
            continue;
        for ( Index i = 0; i < col.size(); ++i )
        {
            if ( std::abs( col[i] ) >= peak * ( 1.0 - 1e-9 ) )
            {
                if ( col[i] < 0.0 )
                    col = -col;
                break;
            }
        }
    }
}

EigenSolution solve_gen_eig_sym(
    const Eigen::MatrixXd &A,
    const Eigen::MatrixXd &M,
    const GenEigOptions   &options )
{
    require_symmetric( A, "A", options.symmetry_tolerance );
    require_symmetric( M, "M", options.symmetry_tolerance );
    if ( A.rows() != M.rows() )
        throw UsageError( "A and M must have the same size" );
    const Index n = A.rows();
    if ( n == 0 )
        throw UsageError( "empty eigenproblem" );

    const MatrixXd As = 0.5 * ( A + A.transpose() );
    const MatrixXd Ms = 0.5 * ( M + M.transpose() );

    const double floor_value =
        options.ridge_epsilon * Ms.trace() / static_cast<double>( n );

    MatrixXd L;
    double   min_pivot = 0.0, max_pivot = 0.0;
    double   ridge     = 0.0;
    bool     factored  = false;

    if ( options.ridge_policy == RidgePolicy::WhenNeeded )
    {
        L        = Ms;
        factored = cholesky( L, min_pivot, max_pivot ) &&
                   min_pivot * min_pivot > floor_value;
    }
    if ( !factored )
    {
        ridge = floor_value > 0.0 ? floor_value : 0.0;
        L     = Ms;
        L.diagonal().array() += ridge;
        if ( !cholesky( L, min_pivot, max_pivot ) )
            throw NumericError(
                "M is not positive definite after regularization (condition estimate: " +
                condition_text( min_pivot, max_pivot ) + ")" );
    }

    // S = L^-1 A L^-T
    MatrixXd X = As;
    forward_substitute( L, X );
    MatrixXd S = X.transpose();
    forward_substitute( L, S );
    S = 0.5 * ( S + S.transpose() ).eval();

    EigenSolution sol = symmetric_eigen( S );
    back_substitute_transposed( L, sol.eigenvectors );
    normalize_signs( sol.eigenvectors );
    sol.ridge = ridge;
    return sol;
}

EigenSolution solve_sym_eig( const Eigen::MatrixXd &A )
{
    require_symmetric( A, "A", GenEigOptions{}.symmetry_tolerance );
    if ( A.rows() == 0 )
        throw UsageError( "empty eigenproblem" );
    EigenSolution sol = symmetric_eigen( 0.5 * ( A + A.transpose() ) );
    normalize_signs( sol.eigenvectors );
    return sol;
}

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/dimred.hpp>
#include <palimpsest/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace palimpsest
{

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string method_name( Method m )
{
    switch ( m )
    {
        case Method::CVA: return "cva";
        case Method::LDA: return "lda";
        case Method::PCA: return "pca";
        case Method::PCA_UNSUPERVISED: return "pca_unsupervised";
    }
    return "unknown";
}

Method parse_method( const std::string &name )
{
    std::string lower = name;
    std::transform( lower.begin(), lower.end(), lower.begin(), []( unsigned char c ) {
        return static_cast<char>( c == '-' ? '_' : std::tolower( c ) );
    } );
    if ( lower == "cva" )
        return Method::CVA;
    if ( lower == "lda" )
        return Method::LDA;
    if ( lower == "pca" )
        return Method::PCA;
    if ( lower == "pca_unsupervised" )
        return Method::PCA_UNSUPERVISED;
    throw UsageError(
        "unknown method '" + name + "' (expected cva, lda, pca or pca_unsupervised)" );
}

bool is_supervised( Method m ) { return m != Method::PCA_UNSUPERVISED; }

namespace
{

std::size_t resolve_k( std::size_t k, Index bands )
{
    if ( k == 0 )
        return static_cast<std::size_t>( bands );
    if ( k > static_cast<std::size_t>( bands ) )
        throw UsageError(
            "requested " + std::to_string( k ) + " components but the data has only " +
            std::to_string( bands ) + " bands" );
    return k;
}

std::size_t populated_classes( const DesignMatrix &dm )
{
    std::vector<int> ids = dm.labels;
    std::sort( ids.begin(), ids.end() );
    return static_cast<std::size_t>(
        std::unique( ids.begin(), ids.end() ) - ids.begin() );
}

/// Shared CVA solve on an already prepared matrix.
ProjectionModel
canonical_variates( const DesignMatrix &dm, std::size_t k, const GenEigOptions &options )
{
    ScatterPair   sp  = compute_scatter( dm );
    EigenSolution sol = solve_gen_eig_sym( sp.between, sp.within, options );

    const Index     kk = static_cast<Index>( resolve_k( k, dm.bands() ) );
    ProjectionModel model;
    model.coefficients = sol.eigenvectors.leftCols( kk );
    model.eigenvalues  = sol.eigenvalues.head( kk );
    model.mean         = sp.grand_mean;
    model.ridge        = sol.ridge;
    model.requires_normalized = dm.normalized;
    MatrixXd centred   = dm.values.colwise() - sp.grand_mean;
    model.training_scores = model.coefficients.transpose() * centred;
    return model;
}

/// Top-k eigenpairs of a correlation/covariance matrix.
void principal_axes( ProjectionModel &model, const MatrixXd &cov, std::size_t k )
{
    EigenSolution sol  = solve_sym_eig( cov );
    const Index   kk   = static_cast<Index>( resolve_k( k, cov.rows() ) );
    model.coefficients = sol.eigenvectors.leftCols( kk );
    model.eigenvalues  = sol.eigenvalues.head( kk );
}

} // namespace

Standardized standardize( const DesignMatrix &dm )
{
    const Index n = dm.points();
    if ( n < 2 )
        throw DataError( "standardization needs at least 2 points" );

    Standardized out;
    out.matrix = dm;
    out.mean   = dm.values.rowwise().mean();
    out.std.resize( dm.bands() );
    for ( Index i = 0; i < dm.bands(); ++i )
    {
        auto   row = out.matrix.values.row( i );
        row.array() -= out.mean[i];
        double ss = row.squaredNorm() / static_cast<double>( n - 1 );
        double sd = std::sqrt( ss );
        if ( sd > 0.0 )
            row /= sd;
        else
            sd = 1.0;
        out.std[i] = sd;
    }
    return out;
}

ScatterPair compute_scatter( const DesignMatrix &dm )
{
    const Index bands = dm.bands();
    const Index n     = dm.points();
    if ( static_cast<Index>( dm.labels.size() ) != n )
        throw DataError( "design matrix labels do not match its columns" );

    std::map<int, std::pair<VectorXd, Index>> sums;
    for ( Index j = 0; j < n; ++j )
    {
        auto &entry = sums[dm.labels[static_cast<std::size_t>( j )]];
        if ( entry.first.size() == 0 )
            entry.first = VectorXd::Zero( bands );
        entry.first += dm.values.col( j );
        entry.second += 1;
    }
    if ( sums.size() < 2 )
        throw DataError(
            "at least 2 classes with points are required (found " +
            std::to_string( sums.size() ) + ")" );

    ScatterPair sp;
    sp.grand_mean = dm.values.rowwise().mean();
    std::map<int, std::size_t> slot;
    for ( auto &[id, entry] : sums )
    {
        slot[id] = sp.class_means.size();
        sp.class_ids.push_back( id );
        sp.class_means.push_back( entry.first / static_cast<double>( entry.second ) );
    }

    sp.within = MatrixXd::Zero( bands, bands );
    for ( Index j = 0; j < n; ++j )
    {
        VectorXd d = dm.values.col( j ) -
                     sp.class_means[slot[dm.labels[static_cast<std::size_t>( j )]]];
        sp.within.noalias() += d * d.transpose();
    }

    sp.between = MatrixXd::Zero( bands, bands );
    for ( std::size_t c = 0; c < sp.class_means.size(); ++c )
    {
        VectorXd d = sp.class_means[c] - sp.grand_mean;
        sp.between.noalias() +=
            static_cast<double>( sums[sp.class_ids[c]].second ) * ( d * d.transpose() );
    }
    return sp;
}

ProjectionModel fit_cva( const DesignMatrix &dm, std::size_t k, const GenEigOptions &options )
{
    ProjectionModel model = canonical_variates( dm, k, options );
    model.method          = Method::CVA;
    return model;
}

ProjectionModel fit_lda( const DesignMatrix &dm, const GenEigOptions &options )
{
    if ( populated_classes( dm ) != 2 )
        throw DataError( "LDA requires exactly 2 classes" );

    Standardized    st    = standardize( dm );
    ProjectionModel model = canonical_variates( st.matrix, 0, options );
    model.method          = Method::LDA;
    // Scores are taken on the standardized columns themselves.
    model.training_scores = model.coefficients.transpose() * st.matrix.values;
    model.mean            = st.mean;
    model.std             = st.std;
    return model;
}

ProjectionModel fit_pca( const DesignMatrix &dm, std::size_t k )
{
    Standardized st  = standardize( dm );
    const Index  n   = dm.points();
    MatrixXd     cov = st.matrix.values * st.matrix.values.transpose() /
                   static_cast<double>( n - 1 );
    cov = 0.5 * ( cov + cov.transpose() ).eval();

    ProjectionModel model;
    model.method = Method::PCA;
    principal_axes( model, cov, k );
    model.requires_normalized = dm.normalized;
    model.mean            = st.mean;
    model.std             = st.std;
    model.training_scores = model.coefficients.transpose() * st.matrix.values;
    return model;
}

ProjectionModel fit_pca_unsupervised(
    const SpectralStack        &stack,
    const std::optional<Rect> &region,
    std::size_t                k )
{
    Rect r = region.value_or( Rect{ 0, 0, stack.width(), stack.height() } );
    if ( r.width <= 0 || r.height <= 0 )
        throw DataError( "PCA region is empty" );
    if ( r.x < 0 || r.y < 0 || r.x + r.width > stack.width() ||
         r.y + r.height > stack.height() )
        throw DataError( "PCA region lies outside the stack" );

    const Index       bands = static_cast<Index>( stack.band_count() );
    const std::size_t n     = static_cast<std::size_t>( r.width ) * r.height;
    if ( n < 2 )
        throw DataError( "PCA needs at least 2 pixels (region has " + std::to_string( n ) + ")" );
    resolve_k( k, bands );

    VectorXd mean = VectorXd::Zero( bands );
    for ( Index b = 0; b < bands; ++b )
    {
        const auto &s   = stack.band( static_cast<std::size_t>( b ) ).samples;
        double      sum = 0.0;
        for ( int y = r.y; y < r.y + r.height; ++y )
        {
            const std::uint16_t *row = s.data() + static_cast<std::size_t>( y ) * stack.width();
            for ( int x = r.x; x < r.x + r.width; ++x )
                sum += row[x];
        }
        mean[b] = sum / static_cast<double>( n );
    }

    // Centred cross-products, accumulated one image row at a time.
    MatrixXd cross = MatrixXd::Zero( bands, bands );
    MatrixXd chunk( bands, r.width );
    for ( int y = r.y; y < r.y + r.height; ++y )
    {
        for ( Index b = 0; b < bands; ++b )
        {
            const std::uint16_t *row = stack.band( static_cast<std::size_t>( b ) ).samples.data() +
                                       static_cast<std::size_t>( y ) * stack.width();
            for ( int x = 0; x < r.width; ++x )
                chunk( b, x ) = row[r.x + x] - mean[b];
        }
        cross.noalias() += chunk * chunk.transpose();
    }
    MatrixXd cov = cross / static_cast<double>( n - 1 );

    VectorXd sd( bands );
    for ( Index b = 0; b < bands; ++b )
    {
        double v = std::sqrt( std::max( cov( b, b ), 0.0 ) );
        sd[b]    = v > 0.0 ? v : 1.0;
    }
    MatrixXd corr( bands, bands );
    for ( Index i = 0; i < bands; ++i )
        for ( Index j = 0; j < bands; ++j )
            corr( i, j ) = cov( i, j ) / ( sd[i] * sd[j] );
    corr = 0.5 * ( corr + corr.transpose() ).eval();

    ProjectionModel model;
    model.method = Method::PCA_UNSUPERVISED;
    principal_axes( model, corr, k );
    model.mean                = mean;
    model.std                 = sd;
    model.requires_normalized = stack.normalized();
    return model;
}

ScorePlane::ScorePlane( int width, int height, std::vector<double> values )
    : width_( width ), height_( height ), values_( std::move( values ) )
{
    if ( width_ <= 0 || height_ <= 0 )
        throw DataError( "score plane dimensions must be positive" );
    if ( values_.size() != static_cast<std::size_t>( width_ ) * height_ )
        throw DataError( "score plane buffer does not match its geometry" );
    for ( double v : values_ )
        if ( !std::isfinite( v ) )
            throw NumericError( "score plane contains a non-finite value" );
}

ScorePlane project_plane(
    const SpectralStack   &stack,
    const ProjectionModel &model,
    Index                  k,
    unsigned               threads )
{
    const Index bands = static_cast<Index>( stack.band_count() );
    if ( bands != model.bands() )
        throw DataError(
            "band-count mismatch: stack has " + std::to_string( bands ) +
            " bands, model expects " + std::to_string( model.bands() ) );
    if ( k < 0 || k >= model.components() )
        throw UsageError( "plane index " + std::to_string( k ) + " out of range" );
    if ( model.requires_normalized && !stack.normalized() )
        throw DataError( "model was fitted on a normalized stack; normalize before projecting" );

    const int            width  = stack.width();
    const int            height = stack.height();
    std::vector<double>  out( stack.pixel_count(), 0.0 );
    const VectorXd       coeff  = model.coefficients.col( k );
    const VectorXd      &mean   = model.mean;
    const bool           has_sd = model.std.has_value();

    auto work = [&]( int y0, int y1 ) {
        for ( int y = y0; y < y1; ++y )
        {
            double *acc = out.data() + static_cast<std::size_t>( y ) * width;
            for ( Index b = 0; b < bands; ++b )
            {
                const std::uint16_t *s = stack.band( static_cast<std::size_t>( b ) ).samples.data() +
                                         static_cast<std::size_t>( y ) * width;
                const double c = coeff[b];
                const double m = mean[b];
                if ( has_sd )
                {
                    const double sd = ( *model.std )[b];
                    for ( int x = 0; x < width; ++x )
                        acc[x] += c * ( ( s[x] - m ) / sd );
                }
                else
                {
                    for ( int x = 0; x < width; ++x )
                        acc[x] += c * ( s[x] - m );
                }
            }
        }
    };

    unsigned workers = threads ? threads : std::max( 1u, std::thread::hardware_concurrency() );
    workers          = std::min<unsigned>( workers, static_cast<unsigned>( height ) );
    if ( workers <= 1 )
    {
        work( 0, height );
    }
    else
    {
        std::vector<std::thread> pool;
        for ( unsigned t = 0; t < workers; ++t )
        {
            int y0 = static_cast<int>( static_cast<long long>( height ) * t / workers );
            int y1 = static_cast<int>( static_cast<long long>( height ) * ( t + 1 ) / workers );
            pool.emplace_back( work, y0, y1 );
        }
        for ( auto &th : pool )
            th.join();
    }
    return ScorePlane( width, height, std::move( out ) );
}

std::vector<ScorePlane>
project_stack( const SpectralStack &stack, const ProjectionModel &model, unsigned threads )
{
    std::vector<ScorePlane> planes;
    planes.reserve( static_cast<std::size_t>( model.components() ) );
    for ( Index k = 0; k < model.components(); ++k )
        planes.push_back( project_plane( stack, model, k, threads ) );
    return planes;
}

} // namespace palimpsest

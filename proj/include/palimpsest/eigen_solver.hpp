// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <Eigen/Core>

namespace palimpsest
{

enum class RidgePolicy
{
    /// Add the ridge only when M has a Cholesky pivot at or below the ridge
    /// floor (or cannot be factored at all).
    WhenNeeded,
    /// Always factor M + ridge.
    Always,
};

struct GenEigOptions
{
    /// Ridge is ridge_epsilon * trace(M) / B added to the diagonal of M.
    double      ridge_epsilon      = 1e-8;
    RidgePolicy ridge_policy       = RidgePolicy::WhenNeeded;
    /// Max |X - X^T| relative to max |X| accepted as symmetric.
    double      symmetry_tolerance = 1e-10;
};

/// Eigenpairs sorted by descending eigenvalue. Column k of eigenvectors
/// pairs with eigenvalues[k]; columns are sign-normalized.
struct EigenSolution
{
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    /// Diagonal shift that was added to M (0 when none).
    double ridge = 0.0;
};

/// Solves A v = lambda M v for symmetric A and symmetric positive
/// (semi)definite M.
///
/// M (plus ridge, see GenEigOptions) is Cholesky-factored as L L^T, the
/// problem is reduced to the standard symmetric matrix L^-1 A L^-T, which is
/// Householder-tridiagonalized and diagonalized with implicit QL. Vectors are
/// mapped back through L^-T so they are orthonormal in the metric of the
/// factored matrix: v_i^T (M + ridge I) v_j = delta_ij.
///
/// Throws UsageError on shape/symmetry violations and NumericError when the
/// (regularized) M is not positive definite; the message carries a condition
/// estimate.
EigenSolution solve_gen_eig_sym(
    const Eigen::MatrixXd &A,
    const Eigen::MatrixXd &M,
    const GenEigOptions   &options = {} );

/// Ordinary symmetric eigenproblem; vectors are orthonormal.
EigenSolution solve_sym_eig( const Eigen::MatrixXd &A );

/// Makes the largest-magnitude component of every column positive. Ties
/// (within 1e-9 relative) go to the lowest index.
void normalize_signs( Eigen::MatrixXd &vectors );

} // namespace palimpsest

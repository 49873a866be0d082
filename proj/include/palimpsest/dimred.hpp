// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/eigen_solver.hpp>
#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/training_set.hpp>

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace palimpsest
{

enum class Method
{
    CVA,
    LDA,
    PCA,
    PCA_UNSUPERVISED,
};

std::string method_name( Method m );
Method      parse_method( const std::string &name );
bool        is_supervised( Method m );

/// Pooled within-class and between-class scatter of a design matrix.
struct ScatterPair
{
    Eigen::MatrixXd              within;
    Eigen::MatrixXd              between;
    std::vector<Eigen::VectorXd> class_means; ///< one per populated class, in id order
    std::vector<int>             class_ids;   ///< ids matching class_means
    Eigen::VectorXd              grand_mean;
};

struct Provenance
{
    std::string manifest_hash;
    std::string annotation_hash;

    bool operator==( const Provenance & ) const = default;
};

/// A fitted linear projection.
///
/// Score plane k of a pixel x is sum_b coefficients(b, k) * z_b, where
/// z_b = (x_b - mean_b) / std_b, or x_b - mean_b when no std is recorded.
struct ProjectionModel
{
    Method                         method = Method::CVA;
    Eigen::VectorXd                mean;
    std::optional<Eigen::VectorXd> std;
    Eigen::MatrixXd                coefficients; ///< B x K
    Eigen::VectorXd                eigenvalues;  ///< K, descending
    /// K x N scores of the training columns; absent for unsupervised fits.
    std::optional<Eigen::MatrixXd> training_scores;
    /// Fitted on a normalized stack; projecting then requires one too.
    bool       requires_normalized = false;
    double     ridge               = 0.0;
    Provenance provenance;

    Eigen::Index bands() const noexcept { return coefficients.rows(); }
    Eigen::Index components() const noexcept { return coefficients.cols(); }
};

struct Standardized
{
    DesignMatrix    matrix;
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

/// Centres every band (row) to mean 0 and scales it to unit sample standard
/// deviation (divisor N-1). Zero-variance rows are only centred and their std
/// is recorded as 1. Requires N >= 2.
Standardized standardize( const DesignMatrix &dm );

/// W = sum_c sum_{j in c} (x_j - m_c)(x_j - m_c)^T,
/// B = sum_c n_c (m_c - m)(m_c - m)^T. Classes without points are skipped;
/// at least two populated classes are required.
ScatterPair compute_scatter( const DesignMatrix &dm );

/// Canonical variates: top-k solutions of B v = lambda W v on the raw
/// matrix. k == 0 keeps all B directions.
ProjectionModel fit_cva(
    const DesignMatrix  &dm,
    std::size_t          k       = 0,
    const GenEigOptions &options = {} );

/// Two-class discriminant on standardized input; all B directions kept.
ProjectionModel fit_lda( const DesignMatrix &dm, const GenEigOptions &options = {} );

/// Principal components of the standardized training columns (labels
/// ignored). k == 0 keeps all.
ProjectionModel fit_pca( const DesignMatrix &dm, std::size_t k = 0 );

/// Principal components over every pixel of `region` (whole stack when
/// absent).
ProjectionModel fit_pca_unsupervised(
    const SpectralStack        &stack,
    const std::optional<Rect> &region,
    std::size_t                k );

/// A W x H plane of finite doubles. Construction rejects NaN/Inf.
class ScorePlane
{
public:
    ScorePlane( int width, int height, std::vector<double> values );

    int                        width() const noexcept { return width_; }
    int                        height() const noexcept { return height_; }
    const std::vector<double> &values() const noexcept { return values_; }
    double                     at( int x, int y ) const
    {
        return values_[static_cast<std::size_t>( y ) * width_ + x];
    }

private:
    int                 width_;
    int                 height_;
    std::vector<double> values_;
};

/// Projects onto one coefficient column. Rows are split across `threads`
/// workers (0 = hardware concurrency); the per-pixel sum always runs in band
/// order, so output does not depend on the thread count.
ScorePlane project_plane(
    const SpectralStack   &stack,
    const ProjectionModel &model,
    Eigen::Index           k,
    unsigned               threads = 0 );

std::vector<ScorePlane>
project_stack( const SpectralStack &stack, const ProjectionModel &model, unsigned threads = 0 );

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/dimred.hpp>
#include <palimpsest/image.hpp>
#include <palimpsest/training_set.hpp>

#include <optional>
#include <string>
#include <vector>

namespace palimpsest
{

/// A set of d-dimensional points compared under the p-norm.
struct Cluster
{
    std::vector<std::vector<double>> points;
    double                           p_norm = 2.0;

    /// Wraps scalar samples as 1-D points.
    static Cluster from_values( const std::vector<double> &values, double p_norm = 2.0 );

    std::vector<double> centroid() const;
};

/// Two-cluster validity report. The DB ratio and the Dunn variant use the
/// same scatters S and centroid distance M:
///   db   = (S_i + S_j) / M
///   dunn = (M - S_i - S_j) / max(S_i, S_j)
/// When both scatters are zero the Dunn value is absent and dunn_error says
/// why; db is still reported.
struct IndexReport
{
    double                S_i  = 0.0;
    double                S_j  = 0.0;
    double                M_ij = 0.0;
    double                db   = 0.0;
    std::optional<double> dunn;
    std::string           dunn_error;
};

/// Mean p-norm distance of the members to the centroid.
double scatter( const Cluster &c );

/// p-norm distance between centroids; clusters must agree in p and dimension.
double centroid_distance( const Cluster &ci, const Cluster &cj );

/// Throws NumericError("clusters indistinguishable by centroid") when M = 0.
double db_index( const Cluster &ci, const Cluster &cj );

/// May be negative for overlapping clusters. Throws NumericError when both
/// scatters are zero.
double dunn_index( const Cluster &ci, const Cluster &cj );

/// Throws when db is undefined (M = 0).
IndexReport index_report( const Cluster &ci, const Cluster &cj );

/// 1-D clusters from gray values at the given coordinates. i = underwriting,
/// j = parchment.
IndexReport evaluate_image(
    const Image                       &img,
    const std::vector<AnnotatedPoint> &under_pts,
    const std::vector<AnnotatedPoint> &parch_pts,
    int                                channel = 0 );

/// Same, on an unquantized score plane.
IndexReport evaluate_plane(
    const ScorePlane                  &plane,
    const std::vector<AnnotatedPoint> &under_pts,
    const std::vector<AnnotatedPoint> &parch_pts );

/// One row of an evaluation run; error is set instead of the report when the
/// image could not be scored.
struct EvaluationRow
{
    std::string                name;
    std::optional<IndexReport> report;
    std::string                error;
};

/// Ascending db; failed rows last, in input order.
void sort_by_db( std::vector<EvaluationRow> &rows );

/// `image,S_i,S_j,M,db,dunn` header plus one line per row.
std::string report_csv( const std::vector<EvaluationRow> &rows );

/// Fixed-width table: method/image, DB index, Dunn index.
std::string report_table( const std::vector<EvaluationRow> &rows );

} // namespace palimpsest

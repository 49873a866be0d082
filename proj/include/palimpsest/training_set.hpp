// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/errors.hpp>
#include <palimpsest/spectral_stack.hpp>

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace palimpsest
{

/// Canonical class names used by the evaluation tooling.
namespace classes
{
inline constexpr const char *overwriting  = "overwriting";
inline constexpr const char *underwriting = "underwriting";
inline constexpr const char *parchment    = "parchment";
inline constexpr const char *both         = "both";
inline constexpr const char *outside      = "outside";
} // namespace classes

struct ClassLabel
{
    std::string name;
    int         id = 0;

    bool operator==( const ClassLabel & ) const = default;
};

struct AnnotatedPoint
{
    int x     = 0;
    int y     = 0;
    int label = 0; ///< ClassLabel::id

    bool operator==( const AnnotatedPoint & ) const = default;
};

/// Annotated pixels grouped by class. Class ids follow declaration order.
class TrainingSet
{
public:
    /// Returns the id of `name`, declaring the class if it is new.
    int declare_class( const std::string &name );

    /// Appends a point; returns false (and adds nothing) for a duplicate.
    bool add_point( const std::string &class_name, int x, int y );

    const std::vector<ClassLabel>     &classes() const noexcept { return classes_; }
    const std::vector<AnnotatedPoint> &points() const noexcept { return points_; }

    std::size_t size() const noexcept { return points_.size(); }
    bool        empty() const noexcept { return points_.empty(); }

    /// -1 when absent.
    int find_class( const std::string &name ) const;

    std::size_t count( int class_id ) const;

    /// Points of one class, in insertion order.
    std::vector<AnnotatedPoint> points_of( const std::string &name ) const;

    bool operator==( const TrainingSet & ) const = default;

private:
    std::vector<ClassLabel>     classes_;
    std::vector<AnnotatedPoint> points_;
};

/// B x N matrix of spectral vectors at the annotated points.
struct DesignMatrix
{
    Eigen::MatrixXd          values; ///< column j = spectral vector of point j
    std::vector<int>         labels; ///< class id of column j
    std::vector<std::string> class_names;
    /// Sampled from a normalized stack.
    bool normalized = false;

    Eigen::Index bands() const noexcept { return values.rows(); }
    Eigen::Index points() const noexcept { return values.cols(); }
};

/// Reads `class,x,y` records. Supports `#` comments, an optional
/// `class,x,y` header and `#class:<name>` declarations. Duplicate points
/// are dropped with a warning.
TrainingSet parse_annotations( const std::string &text, Warnings *warnings = nullptr );

/// Emits the format parse_annotations reads. comment_lines are written
/// first, each prefixed with "# ".
std::string serialize_annotations(
    const TrainingSet                 &ts,
    std::span<const std::string> comment_lines = {} );

DesignMatrix assemble_matrix( const SpectralStack &stack, const TrainingSet &ts );

} // namespace palimpsest

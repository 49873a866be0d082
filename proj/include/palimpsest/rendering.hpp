// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/dimred.hpp>
#include <palimpsest/errors.hpp>
#include <palimpsest/image.hpp>
#include <palimpsest/spectral_stack.hpp>

#include <optional>
#include <span>
#include <string>
#include <utility>

namespace palimpsest
{

enum class RenderMode
{
    FullRange,     ///< plane min/max onto the full code range
    TrainingRange, ///< min/max of the model's training scores, clamped
    Percentile,    ///< nearest-rank p / (100-p) percentiles, clamped
};

/// Which tails a percentile render clips.
enum class ClipTails
{
    Both,
    Low,
    High,
};

struct RenderSpec
{
    RenderMode mode       = RenderMode::FullRange;
    double     percentile = 0.0; ///< one of 0.01, 0.1, 1, 5 in Percentile mode
    int        out_depth  = 8;
    ClipTails  tails      = ClipTails::Both;
};

/// Accepts "full", "training" (or "train"), "p0.01", "p0.1", "p1", "p5".
RenderSpec  parse_render_spec( const std::string &tag, int depth = 8 );
/// Filename tag: "full", "train", "p5", ...
std::string render_tag( const RenderSpec &spec );

Image rescale_full( const ScorePlane &plane, int depth, Warnings *warnings = nullptr );

Image rescale_training_range(
    const ScorePlane      &plane,
    const ProjectionModel &model,
    Eigen::Index           k,
    int                    depth,
    Warnings              *warnings = nullptr );

/// Nearest-rank percentile bounds: rank ceil(p/100 * n) for the low bound,
/// ceil((100-p)/100 * n) for the high bound (1-based, over sorted values).
std::pair<double, double>
percentile_bounds( const std::vector<double> &values, double p, ClipTails tails = ClipTails::Both );

Image rescale_percentile(
    const ScorePlane &plane,
    double            p,
    int               depth,
    Warnings         *warnings = nullptr,
    ClipTails         tails    = ClipTails::Both );

/// Dispatches on spec.mode. model is only consulted for TrainingRange.
Image render_plane(
    const ScorePlane      &plane,
    const RenderSpec      &spec,
    const ProjectionModel *model,
    Eigen::Index           k,
    Warnings              *warnings = nullptr );

/// Plane indices for R, G, B plus an optional exchange of two output
/// channels (0 = R, 1 = G, 2 = B) applied after assignment.
struct CompositeRecipe
{
    int                                red   = 0;
    int                                green = 1;
    int                                blue  = 2;
    std::optional<std::pair<int, int>> swap;

    bool operator==( const CompositeRecipe & ) const = default;
};

/// "r,g,b" plus an optional swap like "01" or "1,2".
CompositeRecipe parse_recipe( const std::string &rgb, const std::string &swap = "" );

/// `<run>_R<k>G<k>B<k>[_swapXY]`
std::string composite_stem( const std::string &run, const CompositeRecipe &recipe );

/// Builds an RGB image from the gray images `set` indexed by the recipe.
Image compose_rgb( std::span<const Image> set, const CompositeRecipe &recipe );

Image extract_channel( const Image &rgb, int channel );

/// R = red band, G = B = UV band.
Image pseudocolor( const SpectralStack &stack, int red_band_id, int uv_band_id );

/// v <= t1 -> max code; t1 < v <= t2 -> round(alpha * v); otherwise unchanged.
Image double_threshold( const Image &img, int t1, int t2, double alpha = 0.5 );

/// v -> round(max * (v / max)^order), order in {2, 3, 4}.
Image enhance_polynomial( const Image &img, int order );

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/cluster_metrics.hpp>
#include <palimpsest/dimred.hpp>
#include <palimpsest/image.hpp>
#include <palimpsest/rendering.hpp>
#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/training_set.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace palimpsest
{

/// Load, optionally crop, then normalize.
SpectralStack prepare_stack(
    const std::filesystem::path &manifest,
    const std::optional<Rect>   &crop_rect,
    NormalizeScope               scope    = NormalizeScope::PerBand,
    Warnings                    *warnings = nullptr );

/// Writes every band as a TIFF `<stem>_band<id>.tif` next to a manifest
/// `<stem>.manifest` listing them; returns the manifest path. A normalized
/// stack is written as 8-bit.
std::filesystem::path write_stack(
    const SpectralStack         &stack,
    const std::filesystem::path &dir,
    const std::string           &stem );

struct FitOptions
{
    Method        method = Method::CVA;
    std::size_t   k      = 0; ///< 0 keeps every component
    GenEigOptions eig;
    /// Region for unsupervised PCA (whole stack when absent).
    std::optional<Rect> region;
};

/// Dispatches to the method's fit. Supervised methods need `ts`.
ProjectionModel fit_model(
    const SpectralStack &stack,
    const TrainingSet   *ts,
    const FitOptions    &options,
    Provenance           provenance = {} );

/// `k  eigenvalue  cumulative%` lines.
std::string eigenvalue_table( const ProjectionModel &model );

struct RenderOptions
{
    std::string             run_name = "run";
    std::vector<RenderSpec> specs; ///< empty means one 8-bit full-range pass
    std::vector<int>        planes; ///< empty means every component
    ImageFormat             format      = ImageFormat::Png;
    TiffCompression         compression = TiffCompression::None;
    /// Built from the first spec's renderings.
    std::optional<CompositeRecipe> recipe;
    /// Adds `_poly<n>` copies of every grayscale.
    std::optional<int> poly_order;
    unsigned           threads = 0;
    /// Skip writing files (benchmarks, dry runs).
    bool write = true;
};

struct RenderOutput
{
    std::vector<std::filesystem::path> files;
    std::optional<std::filesystem::path> composite_path;
    std::optional<Image>                 composite;
    /// First-spec rendering of the composite's green plane, or of the first
    /// rendered plane without a composite.
    std::optional<Image> green;
    Warnings             warnings;
    double               project_seconds = 0.0;
    double               render_seconds  = 0.0;
    double               write_seconds   = 0.0;
    /// SHA-256 over every rendered image, in output order.
    std::string digest;
};

/// `<run>_plane<kk>_<tag>.<ext>`
std::string plane_filename( const std::string &run, int k, const RenderSpec &spec, ImageFormat f );

/// Projects one plane at a time and renders it under every spec.
RenderOutput render_model(
    const SpectralStack         &stack,
    const ProjectionModel       &model,
    const RenderOptions         &options,
    const std::filesystem::path &out_dir );

/// 8-bit copy for previews.
Image to_8bit( const Image &img );

/// Splits eval points into underwriting / parchment lists.
std::pair<std::vector<AnnotatedPoint>, std::vector<AnnotatedPoint>>
evaluation_points( const TrainingSet &eval );

/// One row per image; unreadable or degenerate images become error rows.
std::vector<EvaluationRow> evaluate_files(
    const std::vector<std::filesystem::path> &images,
    const TrainingSet                        &eval,
    int                                       channel = 0 );

/// Same on unquantized score planes, rows named `plane<kk>`.
std::vector<EvaluationRow> evaluate_planes(
    const SpectralStack   &stack,
    const ProjectionModel &model,
    const TrainingSet     &eval,
    unsigned               threads = 0 );

using MetaEntries = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines under a comment header.
std::string format_run_meta( const MetaEntries &entries );
void        write_run_meta( const std::filesystem::path &path, const MetaEntries &entries );

struct BenchOptions
{
    int           width     = 2000;
    int           height    = 2000;
    int           bands     = 23;
    std::uint64_t seed      = 1;
    int           per_class = 50;
    unsigned      threads   = 0;
    /// Rendered planes are written here when set.
    std::optional<std::filesystem::path> out_dir;
    ImageFormat                          format = ImageFormat::Png;
};

struct BenchReport
{
    double      generate_seconds  = 0.0;
    double      normalize_seconds = 0.0;
    double      fit_seconds       = 0.0;
    double      project_seconds   = 0.0;
    double      render_seconds    = 0.0;
    double      write_seconds     = 0.0;
    std::string model_json;
    std::string digest;

    /// fit + project + render
    double pipeline_seconds() const { return fit_seconds + project_seconds + render_seconds; }
};

BenchReport run_bench( const BenchOptions &options );

std::string format_bench( const BenchOptions &options, const BenchReport &report );

} // namespace palimpsest

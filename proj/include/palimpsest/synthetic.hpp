// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/training_set.hpp>

#include <cstdint>
#include <vector>

namespace palimpsest
{

/// Pixel classes painted by the generator.
enum class PageClass : std::uint8_t
{
    Parchment    = 0,
    Underwriting = 1,
    Overwriting  = 2,
    Both         = 3,
};

const char *page_class_name( PageClass c );

struct SyntheticOptions
{
    int           width  = 512;
    int           height = 512;
    int           bands  = 23;
    std::uint64_t seed   = 1;
    /// Parchment texture shared by all bands (per-band gain varies slightly).
    double common_sigma = 9.0;
    /// Independent sensor noise per band.
    double noise_sigma = 2.0;
    /// Text line spacing in pixels; 0 picks one that fits the page.
    int line_pitch = 0;
    /// Peak darkening of the erased text, reached in the shortest band.
    double undertext_depth = 12.0;
};

/// A generated 8-bit multispectral page with horizontal lines of faint
/// erased text and perpendicular columns of dark overtext. Single bands show
/// the undertext only weakly against the shared parchment texture; a linear
/// combination that cancels the texture separates it well.
struct SyntheticPage
{
    SpectralStack          stack;
    std::vector<PageClass> truth; ///< row-major class of every pixel
};

SyntheticPage make_synthetic_page( const SyntheticOptions &options );

/// Draws up to per_class distinct pixels from every listed class, seeded.
/// Classes are declared in the order given.
TrainingSet sample_training_set(
    const SyntheticPage          &page,
    const std::vector<PageClass> &classes,
    int                           per_class,
    std::uint64_t                 seed );

} // namespace palimpsest

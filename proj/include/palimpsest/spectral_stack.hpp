// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/errors.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace palimpsest
{

/// Acquisition metadata of one band. band_id is 1-based in manifest order.
struct BandMeta
{
    int                        band_id       = 0;
    double                     wavelength_nm = 0.0;
    std::string                illumination;
    std::optional<std::string> filter;

    bool operator==( const BandMeta & ) const = default;
};

struct Band
{
    BandMeta meta;
    /// Row-major width*height samples.
    std::vector<std::uint16_t> samples;
};

/// Pixel rectangle; x0/y0 is the top-left corner.
struct Rect
{
    int x      = 0;
    int y      = 0;
    int width  = 0;
    int height = 0;

    bool operator==( const Rect & ) const = default;
};

/// Parses "x,y,w,h".
Rect parse_rect( const std::string &text );

/// Co-registered single-channel planes sharing one geometry.
///
/// Immutable once constructed; every operation returns a new stack. The
/// constructor enforces the invariants: at least one band, equal plane
/// sizes, unique band ids, positive wavelengths, samples below 2^bit_depth,
/// and samples within [0, 255] when the normalized flag is set.
class SpectralStack
{
public:
    SpectralStack(
        int               width,
        int               height,
        int               bit_depth,
        std::vector<Band> bands,
        bool              normalized = false );

    int  width() const noexcept { return width_; }
    int  height() const noexcept { return height_; }
    int  bit_depth() const noexcept { return bit_depth_; }
    bool normalized() const noexcept { return normalized_; }

    std::size_t band_count() const noexcept { return bands_.size(); }
    std::size_t pixel_count() const noexcept
    {
        return static_cast<std::size_t>( width_ ) * height_;
    }

    const Band &band( std::size_t index ) const { return bands_.at( index ); }
    const std::vector<Band> &bands() const noexcept { return bands_; }

    /// Index of the band carrying band_id; throws DataError if absent.
    std::size_t index_of( int band_id ) const;

    std::uint16_t sample( std::size_t band_index, int x, int y ) const
    {
        return bands_[band_index].samples[static_cast<std::size_t>( y ) * width_ + x];
    }

    bool contains( int x, int y ) const noexcept
    {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

private:
    int               width_;
    int               height_;
    int               bit_depth_;
    bool              normalized_;
    std::vector<Band> bands_;
};

/// One parsed manifest line.
struct ManifestEntry
{
    std::filesystem::path path;
    BandMeta              meta;
};

/// Parses manifest text: `path,wavelength_nm,illumination[,filter]` per
/// line, `#` comments. Relative paths resolve against base_dir.
std::vector<ManifestEntry>
parse_manifest( const std::string &text, const std::filesystem::path &base_dir );

/// Loads every band listed in the manifest file.
SpectralStack load_stack( const std::filesystem::path &manifest );

enum class NormalizeScope
{
    PerBand,
    Global,
};

/// Min-max maps samples onto [0, 255]. Constant bands become zero planes
/// and a warning is recorded. Throws DataError if already normalized.
SpectralStack normalize_stack(
    const SpectralStack &stack,
    NormalizeScope       scope    = NormalizeScope::PerBand,
    Warnings            *warnings = nullptr );

SpectralStack crop( const SpectralStack &stack, const Rect &rect );

/// The B samples at (x, y) in band order.
Eigen::VectorXd pixel_vector( const SpectralStack &stack, int x, int y );

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace palimpsest
{

/// 8- or 16-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
/// Samples are kept in 16-bit storage regardless of depth.
struct Image
{
    int                        width    = 0;
    int                        height   = 0;
    int                        channels = 1;
    int                        depth    = 8;
    std::vector<std::uint16_t> data;

    Image() = default;
    Image( int w, int h, int c, int d )
        : width( w )
        , height( h )
        , channels( c )
        , depth( d )
        , data( static_cast<std::size_t>( w ) * h * c, 0 )
    {}

    std::uint16_t &at( int x, int y, int c = 0 )
    {
        return data[( static_cast<std::size_t>( y ) * width + x ) * channels + c];
    }
    std::uint16_t at( int x, int y, int c = 0 ) const
    {
        return data[( static_cast<std::size_t>( y ) * width + x ) * channels + c];
    }

    bool operator==( const Image & ) const = default;
};

enum class ImageFormat
{
    Tiff,
    Png,
};

enum class TiffCompression
{
    None,
    Deflate,
};

ImageFormat parse_image_format( const std::string &name );
std::string extension_for( ImageFormat format );

/// Writes img; reloading yields identical samples. RGB channel order is
/// preserved on disk (R first).
void save_image(
    const Image                 &img,
    const std::filesystem::path &path,
    ImageFormat                  format,
    TiffCompression              compression = TiffCompression::None );

/// Reads an 8/16-bit gray or RGB file (alpha is rejected).
Image load_image( const std::filesystem::path &path );

std::vector<unsigned char> encode_png( const Image &img );

/// Single-channel float32 TIFF dump, used for raw score planes.
void save_float_tiff(
    const std::vector<double>   &values,
    int                          width,
    int                          height,
    const std::filesystem::path &path );

} // namespace palimpsest

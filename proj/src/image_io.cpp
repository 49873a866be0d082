// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/errors.hpp>
#include <palimpsest/image.hpp>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>

namespace palimpsest
{

namespace
{

// libtiff compression tags
constexpr int kTiffNone    = 1;
constexpr int kTiffDeflate = 8;

void check_image( const Image &img )
{
    if ( img.depth != 8 && img.depth != 16 )
        throw UsageError( "unsupported image depth " + std::to_string( img.depth ) );
    if ( img.channels != 1 && img.channels != 3 )
        throw UsageError(
            "unsupported channel count " + std::to_string( img.channels ) );
    if ( img.data.size() !=
         static_cast<std::size_t>( img.width ) * img.height * img.channels )
        throw DataError( "image buffer does not match its geometry" );
}

// OpenCV keeps colour images as BGR; our buffers are RGB.
cv::Mat to_mat( const Image &img )
{
    check_image( img );
    int type = img.depth == 8 ? CV_MAKETYPE( CV_8U, img.channels )
                              : CV_MAKETYPE( CV_16U, img.channels );
    cv::Mat mat( img.height, img.width, type );
    std::size_t i = 0;
    for ( int y = 0; y < img.height; ++y )
    {
        for ( int x = 0; x < img.width; ++x )
        {
            for ( int c = 0; c < img.channels; ++c, ++i )
            {
                int dst = img.channels == 3 ? 2 - c : c;
                if ( img.depth == 8 )
                    mat.ptr<std::uint8_t>( y )[x * img.channels + dst] =
                        static_cast<std::uint8_t>( img.data[i] );
                else
                    mat.ptr<std::uint16_t>( y )[x * img.channels + dst] =
                        img.data[i];
            }
        }
    }
    return mat;
}

Image from_mat( const cv::Mat &mat, const std::string &origin )
{
    int depth = 0;
    if ( mat.depth() == CV_8U )
        depth = 8;
    else if ( mat.depth() == CV_16U )
        depth = 16;
    else
        throw DataError( origin + ": only 8- and 16-bit unsigned samples are supported" );

    int channels = mat.channels();
    if ( channels != 1 && channels != 3 )
        throw DataError(
            origin + ": unsupported channel count " + std::to_string( channels ) );

    Image img( mat.cols, mat.rows, channels, depth );
    std::size_t i = 0;
    for ( int y = 0; y < mat.rows; ++y )
    {
        for ( int x = 0; x < mat.cols; ++x )
        {
            for ( int c = 0; c < channels; ++c, ++i )
            {
                int src = channels == 3 ? 2 - c : c;
                img.data[i] = depth == 8
                                  ? mat.ptr<std::uint8_t>( y )[x * channels + src]
                                  : mat.ptr<std::uint16_t>( y )[x * channels + src];
            }
        }
    }
    return img;
}

} // namespace

ImageFormat parse_image_format( const std::string &name )
{
    std::string lower = name;
    std::transform( lower.begin(), lower.end(), lower.begin(), []( unsigned char c ) {
        return static_cast<char>( std::tolower( c ) );
    } );
    if ( lower == "png" )
        return ImageFormat::Png;
    if ( lower == "tif" || lower == "tiff" )
        return ImageFormat::Tiff;
    throw UsageError( "unknown image format '" + name + "' (expected png or tiff)" );
}

std::string extension_for( ImageFormat format )
{
    return format == ImageFormat::Png ? ".png" : ".tif";
}

void save_image(
    const Image                 &img,
    const std::filesystem::path &path,
    ImageFormat                  format,
    TiffCompression              compression )
{
    cv::Mat          mat = to_mat( img );
    std::vector<int> params;
    if ( format == ImageFormat::Tiff )
    {
        params = { cv::IMWRITE_TIFF_COMPRESSION,
                   compression == TiffCompression::Deflate ? kTiffDeflate : kTiffNone };
    }
    else
    {
        params = { cv::IMWRITE_PNG_COMPRESSION, 6 };
    }

    // imwrite picks the codec from the extension, so route through a buffer
    // when the caller's path carries a different suffix.
    std::vector<unsigned char> bytes;
    bool ok = false;
    try
    {
        ok = cv::imencode( extension_for( format ), mat, bytes, params );
    }
    catch ( const cv::Exception &e )
    {
        throw DataError( "cannot encode " + path.string() + ": " + e.what() );
    }
    if ( !ok )
        throw DataError( "cannot encode " + path.string() );

    std::FILE *f = std::fopen( path.c_str(), "wb" );
    if ( !f )
        throw DataError( "cannot open " + path.string() + " for writing" );
    std::size_t written = std::fwrite( bytes.data(), 1, bytes.size(), f );
    bool closed = std::fclose( f ) == 0;
    if ( written != bytes.size() || !closed )
        throw DataError( "short write to " + path.string() );
}

Image load_image( const std::filesystem::path &path )
{
    if ( !std::filesystem::exists( path ) )
        throw DataError( "file not found: " + path.string() );
    cv::Mat mat;
    try
    {
        mat = cv::imread( path.string(), cv::IMREAD_UNCHANGED );
    }
    catch ( const cv::Exception &e )
    {
        throw DataError( "cannot decode " + path.string() + ": " + e.what() );
    }
    if ( mat.empty() )
        throw DataError( "cannot decode " + path.string() );
    return from_mat( mat, path.string() );
}

std::vector<unsigned char> encode_png( const Image &img )
{
    std::vector<unsigned char> bytes;
    if ( !cv::imencode( ".png", to_mat( img ), bytes, { cv::IMWRITE_PNG_COMPRESSION, 6 } ) )
        throw DataError( "PNG encoding failed" );
    return bytes;
}

void save_float_tiff(
    const std::vector<double>   &values,
    int                          width,
    int                          height,
    const std::filesystem::path &path )
{
    cv::Mat mat( height, width, CV_32FC1 );
    for ( int y = 0; y < height; ++y )
        for ( int x = 0; x < width; ++x )
            mat.at<float>( y, x ) =
                static_cast<float>( values[static_cast<std::size_t>( y ) * width + x] );
    std::vector<unsigned char> bytes;
    if ( !cv::imencode( ".tif", mat, bytes, { cv::IMWRITE_TIFF_COMPRESSION, kTiffNone } ) )
        throw DataError( "cannot encode " + path.string() );
    std::FILE *f = std::fopen( path.c_str(), "wb" );
    if ( !f )
        throw DataError( "cannot open " + path.string() + " for writing" );
    std::fwrite( bytes.data(), 1, bytes.size(), f );
    std::fclose( f );
}

} // namespace palimpsest

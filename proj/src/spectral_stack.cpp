// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/image.hpp>
#include <palimpsest/quantize.hpp>
#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/text.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace palimpsest
{

SpectralStack::SpectralStack(
    int               width,
    int               height,
    int               bit_depth,
    std::vector<Band> bands,
    bool              normalized )
    : width_( width )
    , height_( height )
    , bit_depth_( bit_depth )
    , normalized_( normalized )
    , bands_( std::move( bands ) )
{
    if ( width_ <= 0 || height_ <= 0 )
        throw DataError( "stack dimensions must be positive" );
    if ( bit_depth_ != 8 && bit_depth_ != 16 )
        throw DataError( "bit depth must be 8 or 16" );
    if ( bands_.empty() )
        throw DataError( "a stack needs at least one band" );

    const std::uint32_t limit = normalized_ ? 256u : ( 1u << bit_depth_ );
    std::set<int>       ids;
    for ( const Band &b : bands_ )
    {
        if ( !ids.insert( b.meta.band_id ).second )
            throw DataError( "duplicate band id " + std::to_string( b.meta.band_id ) );
        if ( !( b.meta.wavelength_nm > 0.0 ) )
            throw DataError(
                "band " + std::to_string( b.meta.band_id ) +
                ": wavelength must be positive" );
        if ( b.samples.size() != pixel_count() )
            throw DataError(
                "band " + std::to_string( b.meta.band_id ) +
                ": plane size does not match stack geometry" );
        auto hi = std::max_element( b.samples.begin(), b.samples.end() );
        if ( *hi >= limit )
            throw DataError(
                "band " + std::to_string( b.meta.band_id ) + ": sample " +
                std::to_string( *hi ) + " exceeds the stack range" );
    }
}

std::size_t SpectralStack::index_of( int band_id ) const
{
    for ( std::size_t i = 0; i < bands_.size(); ++i )
        if ( bands_[i].meta.band_id == band_id )
            return i;
    throw DataError( "unknown band id " + std::to_string( band_id ) );
}

Rect parse_rect( const std::string &text )
{
    auto fields = split( text, ',' );
    if ( fields.size() != 4 )
        throw UsageError( "rectangle must be x,y,width,height: '" + text + "'" );
    Rect r;
    r.x      = parse_int( fields[0], "rect x" );
    r.y      = parse_int( fields[1], "rect y" );
    r.width  = parse_int( fields[2], "rect width" );
    r.height = parse_int( fields[3], "rect height" );
    return r;
}

std::vector<ManifestEntry>
parse_manifest( const std::string &text, const std::filesystem::path &base_dir )
{
    std::vector<ManifestEntry> entries;
    std::istringstream         in( text );
    std::string                line;
    int                        line_no = 0;
    while ( std::getline( in, line ) )
    {
        ++line_no;
        std::string body = trim( strip_cr( line ) );
        if ( body.empty() || body[0] == '#' )
            continue;

        auto fields = split( body, ',' );
        if ( fields.size() < 3 || fields.size() > 4 )
            throw DataError(
                "manifest line " + std::to_string( line_no ) +
                ": expected path,wavelength_nm,illumination[,filter]" );

        ManifestEntry e;
        e.path = trim( fields[0] );
        if ( e.path.is_relative() )
            e.path = base_dir / e.path;
        e.meta.band_id = static_cast<int>( entries.size() ) + 1;
        try
        {
            e.meta.wavelength_nm = parse_double( fields[1], "wavelength" );
        }
        catch ( const Error &err )
        {
            throw DataError(
                "manifest line " + std::to_string( line_no ) + ": " + err.what() );
        }
        if ( !( e.meta.wavelength_nm > 0.0 ) )
            throw DataError(
                "manifest line " + std::to_string( line_no ) +
                ": wavelength must be positive" );
        e.meta.illumination = trim( fields[2] );
        if ( fields.size() == 4 && !trim( fields[3] ).empty() )
            e.meta.filter = trim( fields[3] );
        entries.push_back( std::move( e ) );
    }
    if ( entries.empty() )
        throw DataError( "manifest lists no bands" );
    return entries;
}

SpectralStack load_stack( const std::filesystem::path &manifest )
{
    std::string text = read_text_file( manifest );
    auto        entries =
        parse_manifest( text, manifest.has_parent_path() ? manifest.parent_path()
                                                         : std::filesystem::path( "." ) );

    std::vector<Band> bands;
    bands.reserve( entries.size() );
    int width = 0, height = 0, depth = 0;
    for ( const ManifestEntry &e : entries )
    {
        const std::string who = "band " + std::to_string( e.meta.band_id );
        Image             img;
        try
        {
            img = load_image( e.path );
        }
        catch ( const Error &err )
        {
            throw DataError( who + ": " + err.what() );
        }
        if ( img.channels != 1 )
            throw DataError(
                who + ": " + e.path.string() + " is a multi-channel image" );
        if ( bands.empty() )
        {
            width  = img.width;
            height = img.height;
            depth  = img.depth;
        }
        else if ( img.width != width || img.height != height )
        {
            throw DataError(
                who + ": dimension mismatch (" + std::to_string( img.width ) + "x" +
                std::to_string( img.height ) + " vs " + std::to_string( width ) + "x" +
                std::to_string( height ) + ")" );
        }
        else if ( img.depth != depth )
        {
            throw DataError(
                who + ": mixed bit depths (" + std::to_string( img.depth ) + " vs " +
                std::to_string( depth ) + ")" );
        }
        bands.push_back( Band{ e.meta, std::move( img.data ) } );
    }
    return SpectralStack( width, height, depth, std::move( bands ) );
}

SpectralStack
normalize_stack( const SpectralStack &stack, NormalizeScope scope, Warnings *warnings )
{
    if ( stack.normalized() )
        throw DataError( "stack is already normalized" );

    auto range_of = []( const std::vector<std::uint16_t> &s ) {
        auto [lo, hi] = std::minmax_element( s.begin(), s.end() );
        return std::pair<std::uint16_t, std::uint16_t>( *lo, *hi );
    };

    std::uint16_t global_lo = 65535, global_hi = 0;
    if ( scope == NormalizeScope::Global )
    {
        for ( const Band &b : stack.bands() )
        {
            auto [lo, hi] = range_of( b.samples );
            global_lo     = std::min( global_lo, lo );
            global_hi     = std::max( global_hi, hi );
        }
    }

    std::vector<Band> out;
    out.reserve( stack.band_count() );
    for ( const Band &b : stack.bands() )
    {
        auto [lo, hi] = scope == NormalizeScope::Global
                            ? std::pair( global_lo, global_hi )
                            : range_of( b.samples );
        Band nb{ b.meta, std::vector<std::uint16_t>( b.samples.size(), 0 ) };
        if ( lo == hi )
        {
            warn(
                warnings, "band " + std::to_string( b.meta.band_id ) +
                              " is constant (" + std::to_string( lo ) +
                              "); mapped to zeros" );
        }
        else
        {
            // 16-bit input has at most 65536 distinct values; a lookup table
            // keeps large stacks cheap.
            std::vector<std::uint16_t> lut( static_cast<std::size_t>( hi ) + 1, 0 );
            for ( std::uint32_t v = lo; v <= hi; ++v )
                lut[v] = quantize_linear( v, lo, hi, 255 );
            std::transform(
                b.samples.begin(), b.samples.end(), nb.samples.begin(),
                [&]( std::uint16_t v ) { return lut[v]; } );
        }
        out.push_back( std::move( nb ) );
    }
    return SpectralStack( stack.width(), stack.height(), 8, std::move( out ), true );
}

SpectralStack crop( const SpectralStack &stack, const Rect &r )
{
    if ( r.width <= 0 || r.height <= 0 )
        throw DataError( "crop rectangle has zero area" );
    if ( r.x < 0 || r.y < 0 || r.x + r.width > stack.width() ||
         r.y + r.height > stack.height() )
        throw DataError(
            "crop rectangle (" + std::to_string( r.x ) + "," + std::to_string( r.y ) +
            "," + std::to_string( r.width ) + "," + std::to_string( r.height ) +
            ") lies outside the " + std::to_string( stack.width() ) + "x" +
            std::to_string( stack.height() ) + " stack" );

    std::vector<Band> out;
    out.reserve( stack.band_count() );
    for ( const Band &b : stack.bands() )
    {
        Band nb{ b.meta, {} };
        nb.samples.reserve( static_cast<std::size_t>( r.width ) * r.height );
        for ( int y = r.y; y < r.y + r.height; ++y )
        {
            auto row = b.samples.begin() + static_cast<std::ptrdiff_t>( y ) * stack.width();
            nb.samples.insert( nb.samples.end(), row + r.x, row + r.x + r.width );
        }
        out.push_back( std::move( nb ) );
    }
    return SpectralStack(
        r.width, r.height, stack.bit_depth(), std::move( out ), stack.normalized() );
}

Eigen::VectorXd pixel_vector( const SpectralStack &stack, int x, int y )
{
    if ( !stack.contains( x, y ) )
        throw DataError(
            "pixel (" + std::to_string( x ) + "," + std::to_string( y ) +
            ") is outside the stack" );
    Eigen::VectorXd v( static_cast<Eigen::Index>( stack.band_count() ) );
    for ( std::size_t b = 0; b < stack.band_count(); ++b )
        v[static_cast<Eigen::Index>( b )] = stack.sample( b, x, y );
    return v;
}

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include "support.hpp"

#include <palimpsest/image.hpp>
#include <palimpsest/pipeline.hpp>
#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/text.hpp>

#include <doctest.h>

#include <algorithm>

using namespace palimpsest;
using testing::make_stack;
using testing::TempDir;

namespace
{

void write_band( const std::filesystem::path &path, int w, int h, int depth, std::uint16_t fill )
{
    Image img( w, h, 1, depth );
    for ( std::size_t i = 0; i < img.data.size(); ++i )
        img.data[i] = static_cast<std::uint16_t>( ( fill + i ) % ( depth == 8 ? 256 : 65536 ) );
    save_image( img, path, ImageFormat::Tiff );
}

// Independent evaluation of round(255 (v - lo) / (hi - lo)), ties upward.
std::uint16_t expected_code( double v, double lo, double hi )
{
    return static_cast<std::uint16_t>( std::floor( 255.0 * ( v - lo ) / ( hi - lo ) + 0.5 ) );
}

} // namespace

TEST_CASE( "load_stack reads bands in manifest order" )
{
    TempDir     dir;
    std::string manifest = "# test stack\n";
    for ( int b = 0; b < 23; ++b )
    {
        std::string name = "b" + std::to_string( b ) + ".tif";
        write_band( dir / name, 100, 80, 16, static_cast<std::uint16_t>( b * 100 ) );
        manifest += name + "," + std::to_string( 365 + 25 * b ) + ",LED\n";
    }
    write_text_file( dir / "stack.manifest", manifest );

    SpectralStack s = load_stack( dir / "stack.manifest" );
    CHECK( s.band_count() == 23 );
    CHECK( s.width() == 100 );
    CHECK( s.height() == 80 );
    CHECK( s.bit_depth() == 16 );
    CHECK( !s.normalized() );
    CHECK( s.band( 0 ).meta.band_id == 1 );
    CHECK( s.band( 22 ).meta.wavelength_nm == 365 + 25 * 22 );
    CHECK( s.sample( 3, 0, 0 ) == 300 );
}

TEST_CASE( "load_stack accepts a single band and keeps the filter label" )
{
    TempDir dir;
    write_band( dir / "only.tif", 5, 4, 8, 0 );
    write_text_file( dir / "m.txt", "only.tif,940,tungsten,red filter\n" );
    SpectralStack s = load_stack( dir / "m.txt" );
    CHECK( s.band_count() == 1 );
    REQUIRE( s.band( 0 ).meta.filter );
    CHECK( *s.band( 0 ).meta.filter == "red filter" );
    CHECK( s.band( 0 ).meta.illumination == "tungsten" );
}

TEST_CASE( "load_stack errors" )
{
    TempDir dir;
    write_band( dir / "a.tif", 100, 80, 8, 0 );
    write_band( dir / "b.tif", 99, 80, 8, 0 );
    write_band( dir / "c16.tif", 100, 80, 16, 0 );
    Image rgb( 100, 80, 3, 8 );
    save_image( rgb, dir / "rgb.png", ImageFormat::Png );

    SUBCASE( "dimension mismatch names the band" )
    {
        write_text_file( dir / "m", "a.tif,400,UV\nb.tif,500,VIS\n" );
        try
        {
            load_stack( dir / "m" );
            FAIL( "expected an error" );
        }
        catch ( const DataError &e )
        {
            CHECK( std::string( e.what() ).find( "band 2" ) != std::string::npos );
            CHECK( std::string( e.what() ).find( "dimension" ) != std::string::npos );
        }
    }
    SUBCASE( "missing manifest" )
    {
        CHECK_THROWS_AS( load_stack( dir / "nope" ), DataError );
    }
    SUBCASE( "missing band file" )
    {
        write_text_file( dir / "m", "a.tif,400,UV\nmissing.tif,500,VIS\n" );
        CHECK_THROWS_AS( load_stack( dir / "m" ), DataError );
    }
    SUBCASE( "mixed bit depths" )
    {
        write_text_file( dir / "m", "a.tif,400,UV\nc16.tif,500,VIS\n" );
        CHECK_THROWS_WITH_AS( load_stack( dir / "m" ), doctest::Contains( "bit depth" ), DataError );
    }
    SUBCASE( "multi-channel source" )
    {
        write_text_file( dir / "m", "rgb.png,400,UV\n" );
        CHECK_THROWS_WITH_AS( load_stack( dir / "m" ), doctest::Contains( "multi-channel" ), DataError );
    }
    SUBCASE( "bad wavelength" )
    {
        write_text_file( dir / "m", "a.tif,-4,UV\n" );
        CHECK_THROWS_AS( load_stack( dir / "m" ), DataError );
        write_text_file( dir / "m", "a.tif,abc,UV\n" );
        CHECK_THROWS_AS( load_stack( dir / "m" ), DataError );
    }
    SUBCASE( "empty manifest" )
    {
        write_text_file( dir / "m", "# nothing\n" );
        CHECK_THROWS_AS( load_stack( dir / "m" ), DataError );
    }
}

TEST_CASE( "normalize_stack maps each band min to 0 and max to 255" )
{
    SUBCASE( "16-bit full span" )
    {
        SpectralStack s = make_stack( 3, 1, { { 0, 65535, 32768 } }, 16 );
        SpectralStack n = normalize_stack( s );
        CHECK( n.normalized() );
        CHECK( n.bit_depth() == 8 );
        CHECK( n.sample( 0, 0, 0 ) == 0 );
        CHECK( n.sample( 0, 1, 0 ) == 255 );
        CHECK( n.sample( 0, 2, 0 ) == 128 );
        CHECK( n.sample( 0, 2, 0 ) == expected_code( 32768, 0, 65535 ) );
    }
    SUBCASE( "8-bit band already spanning 0..255 is unchanged" )
    {
        std::vector<std::uint16_t> v( 256 );
        for ( int i = 0; i < 256; ++i )
            v[static_cast<std::size_t>( i )] = static_cast<std::uint16_t>( 255 - i );
        SpectralStack s = make_stack( 16, 16, { v } );
        CHECK( normalize_stack( s ).band( 0 ).samples == v );
    }
    SUBCASE( "constant band becomes zeros with a warning" )
    {
        SpectralStack s = make_stack( 2, 2, { { 7, 7, 7, 7 }, { 1, 2, 3, 4 } } );
        Warnings      w;
        SpectralStack n = normalize_stack( s, NormalizeScope::PerBand, &w );
        CHECK( n.band( 0 ).samples == std::vector<std::uint16_t>{ 0, 0, 0, 0 } );
        CHECK( n.band( 1 ).samples == std::vector<std::uint16_t>{ 0, 85, 170, 255 } );
        REQUIRE( w.size() == 1 );
        CHECK( w[0].find( "band 1" ) != std::string::npos );
    }
    SUBCASE( "refuses re-normalization" )
    {
        SpectralStack n = normalize_stack( make_stack( 2, 1, { { 1, 2 } } ) );
        CHECK_THROWS_AS( normalize_stack( n ), DataError );
    }
    SUBCASE( "global scope shares one min and max" )
    {
        SpectralStack s = make_stack( 2, 1, { { 10, 20 }, { 30, 110 } } );
        SpectralStack n = normalize_stack( s, NormalizeScope::Global );
        CHECK( n.band( 0 ).samples[0] == 0 );
        CHECK( n.band( 0 ).samples[1] == expected_code( 20, 10, 110 ) );
        CHECK( n.band( 1 ).samples[0] == expected_code( 30, 10, 110 ) );
        CHECK( n.band( 1 ).samples[1] == 255 );
    }
}

TEST_CASE( "normalize_stack properties on random bands" )
{
    std::mt19937_64 rng( 11 );
    for ( int trial = 0; trial < 50; ++trial )
    {
        std::uniform_int_distribution<int> dv( 0, 65535 );
        std::vector<std::uint16_t>         v( 200 );
        for ( auto &x : v )
            x = static_cast<std::uint16_t>( dv( rng ) );
        SpectralStack n  = normalize_stack( make_stack( 20, 10, { v }, 16 ) );
        const auto   &o  = n.band( 0 ).samples;
        auto [lo, hi]    = std::minmax_element( v.begin(), v.end() );
        CHECK( *std::min_element( o.begin(), o.end() ) == 0 );
        CHECK( *std::max_element( o.begin(), o.end() ) == 255 );
        for ( std::size_t i = 0; i < v.size(); ++i )
        {
            CHECK( o[i] == expected_code( v[i], *lo, *hi ) );
            for ( std::size_t j = i + 1; j < v.size(); j += 17 )
                if ( v[i] <= v[j] )
                    CHECK( o[i] <= o[j] );
        }
    }
}

TEST_CASE( "crop" )
{
    std::mt19937_64 rng( 3 );
    SpectralStack   s = testing::random_stack( 100, 80, 3, rng, false );

    SpectralStack c = crop( s, { 10, 10, 50, 40 } );
    CHECK( c.width() == 50 );
    CHECK( c.height() == 40 );
    CHECK( c.band_count() == 3 );
    CHECK( c.band( 2 ).meta == s.band( 2 ).meta );
    CHECK( c.sample( 1, 0, 0 ) == s.sample( 1, 10, 10 ) );
    CHECK( c.sample( 2, 49, 39 ) == s.sample( 2, 59, 49 ) );

    SpectralStack full = crop( s, { 0, 0, 100, 80 } );
    for ( std::size_t b = 0; b < 3; ++b )
        CHECK( full.band( b ).samples == s.band( b ).samples );

    CHECK_THROWS_AS( crop( s, { 0, 0, 0, 10 } ), DataError );
    CHECK_THROWS_AS( crop( s, { 90, 0, 20, 10 } ), DataError );
    CHECK_THROWS_AS( crop( s, { -1, 0, 5, 5 } ), DataError );

    // crop(crop(s, r1), r2) == crop(s, r1 offset by r2)
    for ( int trial = 0; trial < 100; ++trial )
    {
        std::uniform_int_distribution<int> d( 0, 1 << 20 );
        Rect r1{ d( rng ) % 50, d( rng ) % 40, 0, 0 };
        r1.width  = 1 + d( rng ) % ( 100 - r1.x );
        r1.height = 1 + d( rng ) % ( 80 - r1.y );
        Rect r2{ d( rng ) % r1.width, d( rng ) % r1.height, 0, 0 };
        r2.width  = 1 + d( rng ) % ( r1.width - r2.x );
        r2.height = 1 + d( rng ) % ( r1.height - r2.y );
        SpectralStack a = crop( crop( s, r1 ), r2 );
        SpectralStack b = crop( s, { r1.x + r2.x, r1.y + r2.y, r2.width, r2.height } );
        for ( std::size_t k = 0; k < 3; ++k )
            CHECK( a.band( k ).samples == b.band( k ).samples );
    }
}

TEST_CASE( "parse_rect" )
{
    CHECK( parse_rect( "1, 2,3,4" ) == Rect{ 1, 2, 3, 4 } );
    CHECK_THROWS_AS( parse_rect( "1,2,3" ), UsageError );
}

TEST_CASE( "pixel_vector" )
{
    SpectralStack s = make_stack( 2, 1, { { 10, 1 }, { 20, 2 }, { 30, 3 } } );
    Eigen::VectorXd v = pixel_vector( s, 0, 0 );
    REQUIRE( v.size() == 3 );
    CHECK( v[0] == 10.0 );
    CHECK( v[1] == 20.0 );
    CHECK( v[2] == 30.0 );
    CHECK_THROWS_AS( pixel_vector( s, 2, 0 ), DataError );
    CHECK( pixel_vector( make_stack( 1, 1, { { 9 } } ), 0, 0 ).size() == 1 );
}

TEST_CASE( "stack invariants are enforced at construction" )
{
    CHECK_THROWS_AS( make_stack( 2, 1, { { 1, 256 } } ), DataError );
    CHECK_THROWS_AS( make_stack( 2, 1, { { 1, 2, 3 } } ), DataError );
    CHECK_THROWS_AS( make_stack( 2, 1, {} ), DataError );
    CHECK_THROWS_AS( make_stack( 2, 1, { { 1, 2 } }, 12 ), DataError );
}

TEST_CASE( "write_stack then load_stack is value-exact" )
{
    TempDir         dir;
    std::mt19937_64 rng( 5 );
    SpectralStack   s = testing::random_stack( 13, 7, 4, rng, false );
    auto            m = write_stack( s, dir.path(), "t" );
    SpectralStack   r = load_stack( m );
    REQUIRE( r.band_count() == 4 );
    for ( std::size_t b = 0; b < 4; ++b )
    {
        CHECK( r.band( b ).samples == s.band( b ).samples );
        CHECK( r.band( b ).meta.wavelength_nm == s.band( b ).meta.wavelength_nm );
    }
}

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include "support.hpp"

#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/training_set.hpp>

#include <doctest.h>

using namespace palimpsest;

namespace
{

std::string four_class_file( int per_class )
{
    const char *names[] = { "overwriting", "underwriting", "parchment", "both" };
    std::string text    = "class,x,y\n";
    for ( int c = 0; c < 4; ++c )
        for ( int i = 0; i < per_class; ++i )
            text += std::string( names[c] ) + "," + std::to_string( i ) + "," +
                    std::to_string( c ) + "\n";
    return text;
}

std::string strip_comments( const std::string &text )
{
    std::string out, line;
    for ( std::size_t i = 0; i < text.size(); )
    {
        std::size_t e = text.find( '\n', i );
        line          = text.substr( i, e - i );
        i             = e == std::string::npos ? text.size() : e + 1;
        if ( !line.empty() && line[0] != '#' && line != "class,x,y" )
            out += line + "\n";
    }
    return out;
}

} // namespace

TEST_CASE( "parse_annotations" )
{
    SUBCASE( "4 classes x 50 points" )
    {
        TrainingSet ts = parse_annotations( four_class_file( 50 ) );
        CHECK( ts.size() == 200 );
        REQUIRE( ts.classes().size() == 4 );
        CHECK( ts.classes()[0].name == "overwriting" );
        CHECK( ts.classes()[3].name == "both" );
        for ( int c = 0; c < 4; ++c )
            CHECK( ts.count( c ) == 50 );
    }
    SUBCASE( "single line" )
    {
        TrainingSet ts = parse_annotations( "underwriting,5,9" );
        REQUIRE( ts.size() == 1 );
        CHECK( ts.classes().size() == 1 );
        CHECK( ts.points()[0] == AnnotatedPoint{ 5, 9, 0 } );
    }
    SUBCASE( "negative coordinate cites the line" )
    {
        CHECK_THROWS_WITH_AS(
            parse_annotations( "class,x,y\nunderwriting,1,1\nparchment,-1,4\n" ),
            doctest::Contains( "line 3" ), DataError );
    }
    SUBCASE( "malformed lines" )
    {
        CHECK_THROWS_WITH_AS(
            parse_annotations( "parchment,1\n" ), doctest::Contains( "line 1" ), DataError );
        CHECK_THROWS_WITH_AS(
            parse_annotations( "parchment,1,2\nparchment,a,2\n" ), doctest::Contains( "line 2" ),
            DataError );
        CHECK_THROWS_AS( parse_annotations( ",1,2\n" ), DataError );
        CHECK_THROWS_AS( parse_annotations( "parchment,1.5,2\n" ), DataError );
    }
    SUBCASE( "empty file" )
    {
        CHECK_THROWS_AS( parse_annotations( "" ), DataError );
        CHECK_THROWS_AS( parse_annotations( "# only a comment\n\n" ), DataError );
    }
    SUBCASE( "CRLF and comments" )
    {
        TrainingSet ts = parse_annotations( "# manifest: a.txt\r\nclass,x,y\r\nparchment,1,2\r\n" );
        CHECK( ts.size() == 1 );
    }
    SUBCASE( "duplicates collapse with a warning" )
    {
        Warnings    w;
        TrainingSet ts = parse_annotations( "parchment,1,2\nparchment,1,2\nunderwriting,1,2\n", &w );
        CHECK( ts.size() == 2 );
        REQUIRE( w.size() == 1 );
        CHECK( w[0].find( "line 2" ) != std::string::npos );
    }
    SUBCASE( "class directive declares an empty class" )
    {
        TrainingSet ts = parse_annotations( "#class:outside\nparchment,1,2\n" );
        REQUIRE( ts.classes().size() == 2 );
        CHECK( ts.classes()[0].name == "outside" );
        CHECK( ts.count( 0 ) == 0 );
    }
}

TEST_CASE( "serialize_annotations round trips" )
{
    std::string text = four_class_file( 50 );
    TrainingSet ts   = parse_annotations( text );

    std::vector<std::string> comments = { "manifest: pages/f12.manifest", "crop: 0,0,100,80" };
    std::string              out      = serialize_annotations( ts, comments );
    CHECK( parse_annotations( out ) == ts );
    CHECK( strip_comments( out ) == strip_comments( text ) );
    CHECK( out.rfind( "# manifest: pages/f12.manifest\n", 0 ) == 0 );

    TrainingSet with_empty;
    with_empty.declare_class( "outside" );
    with_empty.add_point( "parchment", 3, 4 );
    std::string s = serialize_annotations( with_empty );
    CHECK( s.find( "#class:outside\n" ) != std::string::npos );
    CHECK( parse_annotations( s ) == with_empty );

    TrainingSet one;
    one.add_point( "underwriting", 5, 9 );
    CHECK( strip_comments( serialize_annotations( one ) ) == "underwriting,5,9\n" );

    // random sets
    std::mt19937_64 rng( 8 );
    for ( int trial = 0; trial < 50; ++trial )
    {
        TrainingSet                        r;
        std::uniform_int_distribution<int> d( 0, 40 );
        int                                n = 1 + d( rng );
        for ( int i = 0; i < n; ++i )
            r.add_point( "c" + std::to_string( d( rng ) % 5 ), d( rng ), d( rng ) );
        if ( trial % 3 == 0 )
            r.declare_class( "unused" );
        CHECK( parse_annotations( serialize_annotations( r ) ) == r );
    }
}

TEST_CASE( "assemble_matrix" )
{
    SpectralStack s = testing::make_stack( 2, 1, { { 3, 0 }, { 7, 1 } }, 8, true );
    TrainingSet   ts;
    ts.add_point( "a", 0, 0 );
    DesignMatrix dm = assemble_matrix( s, ts );
    REQUIRE( dm.bands() == 2 );
    REQUIRE( dm.points() == 1 );
    CHECK( dm.values( 0, 0 ) == 3.0 );
    CHECK( dm.values( 1, 0 ) == 7.0 );
    CHECK( dm.normalized );

    TrainingSet bad;
    bad.add_point( "parchment", 3, 0 );
    CHECK_THROWS_WITH_AS(
        assemble_matrix( s, bad ), doctest::Contains( "(3,0) of class 'parchment'" ), DataError );
    CHECK_THROWS_AS( assemble_matrix( s, TrainingSet{} ), DataError );
    CHECK_THROWS_AS(
        assemble_matrix( testing::make_stack( 2, 1, { { 3, 0 } } ), ts ), DataError );
}

TEST_CASE( "assemble_matrix on 23 bands and 200 points" )
{
    std::mt19937_64 rng( 4 );
    SpectralStack   s  = testing::random_stack( 60, 50, 23, rng );
    TrainingSet     ts = parse_annotations( four_class_file( 50 ) );
    DesignMatrix    dm = assemble_matrix( s, ts );
    CHECK( dm.bands() == 23 );
    CHECK( dm.points() == 200 );
    std::vector<std::size_t> counts( 4, 0 );
    for ( Eigen::Index j = 0; j < dm.points(); ++j )
    {
        const auto &p = ts.points()[static_cast<std::size_t>( j )];
        CHECK( dm.values.col( j ) == pixel_vector( s, p.x, p.y ) );
        CHECK( dm.labels[static_cast<std::size_t>( j )] == p.label );
        ++counts[static_cast<std::size_t>( p.label )];
    }
    for ( int c = 0; c < 4; ++c )
        CHECK( counts[static_cast<std::size_t>( c )] == ts.count( c ) );
}

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

// Small helpers for the line-oriented text formats (manifest, annotations,
// run metadata).

#pragma once

#include <palimpsest/errors.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace palimpsest
{

inline std::string trim( std::string_view s )
{
    const char *ws    = " \t\r\n";
    auto        begin = s.find_first_not_of( ws );
    if ( begin == std::string_view::npos )
        return {};
    auto end = s.find_last_not_of( ws );
    return std::string( s.substr( begin, end - begin + 1 ) );
}

inline std::string strip_cr( std::string_view s )
{
    if ( !s.empty() && s.back() == '\r' )
        s.remove_suffix( 1 );
    return std::string( s );
}

inline std::vector<std::string> split( std::string_view s, char sep )
{
    std::vector<std::string> out;
    std::size_t              start = 0;
    while ( true )
    {
        auto pos = s.find( sep, start );
        if ( pos == std::string_view::npos )
        {
            out.emplace_back( s.substr( start ) );
            return out;
        }
        out.emplace_back( s.substr( start, pos - start ) );
        start = pos + 1;
    }
}

inline long long parse_integer( std::string_view text, const std::string &what )
{
    std::string t = trim( text );
    long long   v = 0;
    auto [p, ec]  = std::from_chars( t.data(), t.data() + t.size(), v );
    if ( t.empty() || ec != std::errc() || p != t.data() + t.size() )
        throw DataError( what + ": '" + t + "' is not an integer" );
    return v;
}

inline int parse_int( std::string_view text, const std::string &what )
{
    long long v = parse_integer( text, what );
    if ( v < -2147483647LL || v > 2147483647LL )
        throw DataError( what + ": value out of range" );
    return static_cast<int>( v );
}

inline double parse_double( std::string_view text, const std::string &what )
{
    std::string t = trim( text );
    double      v = 0;
    auto [p, ec]  = std::from_chars( t.data(), t.data() + t.size(), v );
    if ( t.empty() || ec != std::errc() || p != t.data() + t.size() )
        throw DataError( what + ": '" + t + "' is not a number" );
    return v;
}

inline std::string read_text_file( const std::filesystem::path &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw DataError( "cannot read " + path.string() );
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file( const std::filesystem::path &path, const std::string &text )
{
    std::ofstream out( path, std::ios::binary );
    if ( !out )
        throw DataError( "cannot write " + path.string() );
    out << text;
    if ( !out )
        throw DataError( "short write to " + path.string() );
}

} // namespace palimpsest

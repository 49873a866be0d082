// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/quantize.hpp>
#include <palimpsest/rendering.hpp>
#include <palimpsest/text.hpp>

#include <algorithm>
#include <cmath>

namespace palimpsest
{

namespace
{

void check_depth( int depth )
{
    if ( depth != 8 && depth != 16 )
        throw UsageError( "output depth must be 8 or 16" );
}

/// Percentile as integer hundredths of a percent; rejects unsupported p.
long long percentile_hundredths( double p )
{
    double    scaled = p * 100.0;
    long long bp     = static_cast<long long>( std::llround( scaled ) );
    bool      exact  = std::abs( scaled - static_cast<double>( bp ) ) < 1e-9;
    if ( !exact || ( bp != 1 && bp != 10 && bp != 100 && bp != 500 ) )
        throw UsageError( "percentile must be one of 0.01, 0.1, 1 or 5" );
    return bp;
}

Image map_linear(
    const ScorePlane &plane,
    double            lo,
    double            hi,
    int               depth,
    Warnings         *warnings,
    const char       *what )
{
    Image out( plane.width(), plane.height(), 1, depth );
    if ( !( lo < hi ) )
    {
        warn( warnings, std::string( what ) + ": degenerate range, plane rendered as zeros" );
        return out;
    }
    const std::uint16_t top    = max_code( depth );
    const auto         &values = plane.values();
    for ( std::size_t i = 0; i < values.size(); ++i )
        out.data[i] = quantize_linear( values[i], lo, hi, top );
    return out;
}

} // namespace

RenderSpec parse_render_spec( const std::string &tag, int depth )
{
    check_depth( depth );
    RenderSpec spec;
    spec.out_depth = depth;
    if ( tag == "full" )
        spec.mode = RenderMode::FullRange;
    else if ( tag == "training" || tag == "train" )
        spec.mode = RenderMode::TrainingRange;
    else if ( tag.size() > 1 && tag[0] == 'p' )
    {
        spec.mode = RenderMode::Percentile;
        try
        {
            spec.percentile = parse_double( tag.substr( 1 ), "percentile" );
        }
        catch ( const Error & )
        {
            throw UsageError( "bad render mode '" + tag + "'" );
        }
        percentile_hundredths( spec.percentile );
    }
    else
        throw UsageError(
            "unknown render mode '" + tag + "' (expected full, training, p0.01, p0.1, p1 or p5)" );
    return spec;
}

std::string render_tag( const RenderSpec &spec )
{
    switch ( spec.mode )
    {
        case RenderMode::FullRange: return "full";
        case RenderMode::TrainingRange: return "train";
        case RenderMode::Percentile:
        {
            switch ( percentile_hundredths( spec.percentile ) )
            {
                case 1: return "p0.01";
                case 10: return "p0.1";
                case 100: return "p1";
                default: return "p5";
            }
        }
    }
    return "full";
}

Image rescale_full( const ScorePlane &plane, int depth, Warnings *warnings )
{
    check_depth( depth );
    auto [lo, hi] = std::minmax_element( plane.values().begin(), plane.values().end() );
    return map_linear( plane, *lo, *hi, depth, warnings, "full-range rescale" );
}

Image rescale_training_range(
    const ScorePlane      &plane,
    const ProjectionModel &model,
    Eigen::Index           k,
    int                    depth,
    Warnings              *warnings )
{
    check_depth( depth );
    if ( !model.training_scores )
        throw UsageError(
            "model has no training scores (unsupervised fit); use the full-range mode" );
    if ( k < 0 || k >= model.training_scores->rows() )
        throw UsageError( "plane index " + std::to_string( k ) + " out of range" );
    auto   row = model.training_scores->row( k );
    double lo  = row.minCoeff();
    double hi  = row.maxCoeff();
    return map_linear( plane, lo, hi, depth, warnings, "training-range rescale" );
}

std::pair<double, double>
percentile_bounds( const std::vector<double> &values, double p, ClipTails tails )
{
    if ( values.empty() )
        throw DataError( "percentile of an empty plane" );
    const long long bp = percentile_hundredths( p );
    const long long n  = static_cast<long long>( values.size() );

    // ceil(bp * n / 10000) in integers, at least rank 1.
    auto rank = [n]( long long hundredths ) {
        long long r = ( hundredths * n + 9999 ) / 10000;
        return std::clamp( r, 1LL, n );
    };

    std::vector<double> work = values;
    auto                pick = [&]( long long r ) {
        auto it = work.begin() + ( r - 1 );
        std::nth_element( work.begin(), it, work.end() );
        return *it;
    };

    double lo = tails == ClipTails::High ? *std::min_element( values.begin(), values.end() )
                                         : pick( rank( bp ) );
    double hi = tails == ClipTails::Low ? *std::max_element( values.begin(), values.end() )
                                        : pick( rank( 10000 - bp ) );
    return { lo, hi };
}

Image rescale_percentile(
    const ScorePlane &plane,
    double            p,
    int               depth,
    Warnings         *warnings,
    ClipTails         tails )
{
    check_depth( depth );
    auto [lo, hi] = percentile_bounds( plane.values(), p, tails );
    return map_linear( plane, lo, hi, depth, warnings, "percentile rescale" );
}

Image render_plane(
    const ScorePlane      &plane,
    const RenderSpec      &spec,
    const ProjectionModel *model,
    Eigen::Index           k,
    Warnings              *warnings )
{
    switch ( spec.mode )
    {
        case RenderMode::FullRange: return rescale_full( plane, spec.out_depth, warnings );
        case RenderMode::TrainingRange:
            if ( !model )
                throw UsageError( "training-range rendering needs the fitted model" );
            return rescale_training_range( plane, *model, k, spec.out_depth, warnings );
        case RenderMode::Percentile:
            return rescale_percentile(
                plane, spec.percentile, spec.out_depth, warnings, spec.tails );
    }
    throw UsageError( "unknown render mode" );
}

CompositeRecipe parse_recipe( const std::string &rgb, const std::string &swap )
{
    auto fields = split( rgb, ',' );
    if ( fields.size() != 3 )
        throw UsageError( "composite recipe must be r,g,b plane indices: '" + rgb + "'" );
    CompositeRecipe r;
    try
    {
        r.red   = parse_int( fields[0], "red plane" );
        r.green = parse_int( fields[1], "green plane" );
        r.blue  = parse_int( fields[2], "blue plane" );
    }
    catch ( const Error &e )
    {
        throw UsageError( e.what() );
    }
    if ( r.red < 0 || r.green < 0 || r.blue < 0 )
        throw UsageError( "composite plane indices must be non-negative" );

    std::string s = swap;
    s.erase( std::remove( s.begin(), s.end(), ',' ), s.end() );
    if ( !s.empty() )
    {
        if ( s.size() != 2 || s[0] < '0' || s[0] > '2' || s[1] < '0' || s[1] > '2' ||
             s[0] == s[1] )
            throw UsageError( "channel swap must name two distinct channels 0-2: '" + swap + "'" );
        r.swap = std::pair( s[0] - '0', s[1] - '0' );
    }
    return r;
}

std::string composite_stem( const std::string &run, const CompositeRecipe &recipe )
{
    std::string stem = run + "_R" + std::to_string( recipe.red ) + "G" +
                       std::to_string( recipe.green ) + "B" + std::to_string( recipe.blue );
    if ( recipe.swap )
        stem += "_swap" + std::to_string( recipe.swap->first ) +
                std::to_string( recipe.swap->second );
    return stem;
}

Image compose_rgb( std::span<const Image> set, const CompositeRecipe &recipe )
{
    const int idx[3] = { recipe.red, recipe.green, recipe.blue };
    for ( int i : idx )
        if ( i < 0 || static_cast<std::size_t>( i ) >= set.size() )
            throw UsageError(
                "composite plane index " + std::to_string( i ) + " is not in the rendered set" );

    const Image &first = set[static_cast<std::size_t>( idx[0] )];
    for ( int i : idx )
    {
        const Image &p = set[static_cast<std::size_t>( i )];
        if ( p.channels != 1 )
            throw DataError( "composite inputs must be grayscale" );
        if ( p.width != first.width || p.height != first.height )
            throw DataError( "composite inputs differ in dimensions" );
        if ( p.depth != first.depth )
            throw DataError( "composite inputs differ in bit depth" );
    }

    int order[3] = { 0, 1, 2 };
    if ( recipe.swap )
        std::swap( order[recipe.swap->first], order[recipe.swap->second] );

    Image             out( first.width, first.height, 3, first.depth );
    const std::size_t n = static_cast<std::size_t>( first.width ) * first.height;
    for ( int c = 0; c < 3; ++c )
    {
        const Image &src = set[static_cast<std::size_t>( idx[order[c]] )];
        for ( std::size_t i = 0; i < n; ++i )
            out.data[i * 3 + static_cast<std::size_t>( c )] = src.data[i];
    }
    return out;
}

Image extract_channel( const Image &rgb, int channel )
{
    if ( channel < 0 || channel >= rgb.channels )
        throw UsageError( "channel " + std::to_string( channel ) + " out of range" );
    Image             out( rgb.width, rgb.height, 1, rgb.depth );
    const std::size_t n = static_cast<std::size_t>( rgb.width ) * rgb.height;
    for ( std::size_t i = 0; i < n; ++i )
        out.data[i] = rgb.data[i * static_cast<std::size_t>( rgb.channels ) +
                               static_cast<std::size_t>( channel )];
    return out;
}

Image pseudocolor( const SpectralStack &stack, int red_band_id, int uv_band_id )
{
    const auto &red   = stack.band( stack.index_of( red_band_id ) ).samples;
    const auto &uv    = stack.band( stack.index_of( uv_band_id ) ).samples;
    const int   depth = stack.normalized() ? 8 : stack.bit_depth();
    Image       out( stack.width(), stack.height(), 3, depth );
    for ( std::size_t i = 0; i < red.size(); ++i )
    {
        out.data[i * 3]     = red[i];
        out.data[i * 3 + 1] = uv[i];
        out.data[i * 3 + 2] = uv[i];
    }
    return out;
}

Image double_threshold( const Image &img, int t1, int t2, double alpha )
{
    if ( img.channels != 1 )
        throw UsageError( "double thresholding expects a grayscale image" );
    const int top = max_code( img.depth );
    if ( t1 >= t2 )
        throw UsageError( "threshold 1 must be below threshold 2" );
    if ( t1 < 0 || t2 > top )
        throw UsageError( "thresholds must lie within the code range" );
    if ( !( alpha > 0.0 && alpha <= 1.0 ) )
        throw UsageError( "darkening factor must lie in (0, 1]" );

    Image out = img;
    for ( auto &v : out.data )
    {
        if ( v <= t1 )
            v = static_cast<std::uint16_t>( top );
        else if ( v <= t2 )
            v = static_cast<std::uint16_t>( round_half_away( alpha * v ) );
    }
    return out;
}

Image enhance_polynomial( const Image &img, int order )
{
    if ( order < 2 || order > 4 )
        throw UsageError( "polynomial order must be 2, 3 or 4" );
    const double top = max_code( img.depth );
    Image        out = img;
    for ( auto &v : out.data )
    {
        double t = v / top;
        double p = t;
        for ( int i = 1; i < order; ++i )
            p *= t;
        v = static_cast<std::uint16_t>( round_half_away( top * p ) );
    }
    return out;
}

} // namespace palimpsest

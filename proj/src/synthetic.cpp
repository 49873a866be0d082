// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/quantize.hpp>
#include <palimpsest/synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace palimpsest
{

namespace
{

/// Triangular noise with unit variance from a 32-bit draw.
inline double triangular( std::uint32_t bits )
{
    constexpr double scale = 1.0 / 65535.0;
    double           a     = ( bits & 0xffffu ) * scale;
    double           b     = ( bits >> 16 ) * scale;
    return ( a + b - 1.0 ) * std::sqrt( 6.0 );
}

std::uint64_t mix( std::uint64_t x )
{
    x += 0x9e3779b97f4a7c15ULL;
    x = ( x ^ ( x >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
    x = ( x ^ ( x >> 27 ) ) * 0x94d049bb133111ebULL;
    return x ^ ( x >> 31 );
}

/// Glyph geometry is laid out on a grid of `p` pixels (32 at full size).
bool undertext_at( int x, int y, int p )
{
    int line = y % p;
    int top  = p * 10 / 32;
    if ( line < top || line >= p * 22 / 32 )
        return false;
    // word gaps
    if ( mix( static_cast<std::uint64_t>( x / ( p + p / 4 ) ) * 131 +
              static_cast<std::uint64_t>( y / p ) ) % 5 == 0 )
        return false;
    return x % 7 < 2 || line < top + std::max( 1, p / 16 );
}

bool overtext_at( int x, int y, int p )
{
    int col  = x % ( p + p / 2 );
    int left = p * 20 / 32;
    if ( col < left || col >= p * 34 / 32 )
        return false;
    if ( mix( static_cast<std::uint64_t>( y / ( p + p * 3 / 4 ) ) * 977 +
              static_cast<std::uint64_t>( x / ( p + p / 2 ) ) ) % 4 == 0 )
        return false;
    return y % 8 < 2 || col < left + std::max( 1, p / 16 );
}

} // namespace

const char *page_class_name( PageClass c )
{
    switch ( c )
    {
        case PageClass::Parchment: return classes::parchment;
        case PageClass::Underwriting: return classes::underwriting;
        case PageClass::Overwriting: return classes::overwriting;
        case PageClass::Both: return classes::both;
    }
    return "unknown";
}

SyntheticPage make_synthetic_page( const SyntheticOptions &o )
{
    const int         W = o.width, H = o.height, B = o.bands;
    const std::size_t n = static_cast<std::size_t>( W ) * H;
    const int         p = o.line_pitch > 0 ? o.line_pitch : std::clamp( std::min( W, H ) / 4, 8, 32 );

    std::vector<PageClass> truth( n );
    for ( int y = 0; y < H; ++y )
        for ( int x = 0; x < W; ++x )
        {
            bool u = undertext_at( x, y, p );
            bool v = overtext_at( x, y, p );
            truth[static_cast<std::size_t>( y ) * W + x] =
                u && v ? PageClass::Both
                       : u ? PageClass::Underwriting
                           : v ? PageClass::Overwriting : PageClass::Parchment;
        }

    std::mt19937_64 rng( o.seed );
    const double    two_pi = 2.0 * std::numbers::pi;
    const double    phase1 = ( rng() >> 11 ) * 0x1.0p-53 * two_pi;
    const double    phase2 = ( rng() >> 11 ) * 0x1.0p-53 * two_pi;

    // Shared parchment texture: slow undulation plus per-pixel grain.
    std::vector<double> common( n );
    for ( int y = 0; y < H; ++y )
    {
        double cy = std::cos( two_pi * y / 211.0 + phase2 );
        for ( int x = 0; x < W; ++x )
        {
            std::size_t i = static_cast<std::size_t>( y ) * W + x;
            common[i]     = 6.0 * std::sin( two_pi * x / 173.0 + phase1 ) * cy +
                        o.common_sigma * triangular( static_cast<std::uint32_t>( rng() ) );
        }
    }

    std::vector<Band> bands;
    bands.reserve( static_cast<std::size_t>( B ) );
    for ( int b = 0; b < B; ++b )
    {
        const double t          = B > 1 ? static_cast<double>( b ) / ( B - 1 ) : 0.0;
        const double parchment  = 130.0 + 60.0 * t;
        const double gain       = 1.0 + 0.3 * t;
        const double under      = -( o.undertext_depth * ( 1.0 - t ) * ( 1.0 - t ) + 1.0 );
        const double over       = -90.0 + 25.0 * t;
        const double offsets[4] = { 0.0, under, over, over + under };

        Band band;
        band.meta.band_id       = b + 1;
        band.meta.wavelength_nm = 365.0 + ( 940.0 - 365.0 ) * t;
        band.meta.illumination  = "synthetic";
        band.samples.resize( n );
        for ( std::size_t i = 0; i < n; i += 2 )
        {
            std::uint64_t bits = rng();
            for ( std::size_t h = 0; h < 2 && i + h < n; ++h )
            {
                std::size_t j = i + h;
                double      v = parchment + gain * common[j] +
                           offsets[static_cast<int>( truth[j] )] +
                           o.noise_sigma *
                               triangular( static_cast<std::uint32_t>( bits >> ( 32 * h ) ) );
                band.samples[j] =
                    static_cast<std::uint16_t>( std::clamp( round_half_away( v ), 0.0, 255.0 ) );
            }
        }
        bands.push_back( std::move( band ) );
    }

    return SyntheticPage{ SpectralStack( W, H, 8, std::move( bands ) ), std::move( truth ) };
}

TrainingSet sample_training_set(
    const SyntheticPage          &page,
    const std::vector<PageClass> &wanted,
    int                           per_class,
    std::uint64_t                 seed )
{
    std::mt19937_64 rng( seed );
    TrainingSet     ts;
    const int       W = page.stack.width();
    for ( PageClass c : wanted )
    {
        ts.declare_class( page_class_name( c ) );
        std::vector<std::size_t> pool;
        for ( std::size_t i = 0; i < page.truth.size(); ++i )
            if ( page.truth[i] == c )
                pool.push_back( i );
        const std::size_t take = std::min<std::size_t>( pool.size(), static_cast<std::size_t>( per_class ) );
        for ( std::size_t i = 0; i < take; ++i )
        {
            std::size_t j = i + static_cast<std::size_t>( rng() % ( pool.size() - i ) );
            std::swap( pool[i], pool[j] );
            ts.add_point(
                page_class_name( c ), static_cast<int>( pool[i] % static_cast<std::size_t>( W ) ),
                static_cast<int>( pool[i] / static_cast<std::size_t>( W ) ) );
        }
    }
    return ts;
}

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace palimpsest
{

/// Nearest integer, ties away from zero. Every quantization in the toolkit
/// goes through this so outputs are bit-exact across modules.
inline double round_half_away( double v ) { return std::round( v ); }

inline std::uint16_t max_code( int depth )
{
    return depth == 16 ? std::uint16_t( 65535 ) : std::uint16_t( 255 );
}

/// Linear map of v from [lo, hi] onto [0, max], clamping outside the range.
/// Requires lo < hi.
inline std::uint16_t quantize_linear( double v, double lo, double hi, std::uint16_t max )
{
    double t = ( v - lo ) / ( hi - lo );
    t        = std::clamp( t, 0.0, 1.0 );
    return static_cast<std::uint16_t>( round_half_away( t * max ) );
}

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

// Small fixtures shared by the unit and acceptance tests.

#pragma once

#include <palimpsest/spectral_stack.hpp>
#include <palimpsest/training_set.hpp>

#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing
{

/// Directory removed on destruction.
class TempDir
{
public:
    TempDir()
    {
        static std::atomic<int> counter{ 0 };
        path_ = std::filesystem::temp_directory_path() /
                ( "palimpsest-test-" + std::to_string( ::getpid() ) + "-" +
                  std::to_string( counter++ ) );
        std::filesystem::remove_all( path_ );
        std::filesystem::create_directories( path_ );
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all( path_, ec );
    }
    TempDir( const TempDir & )            = delete;
    TempDir &operator=( const TempDir & ) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path        operator/( const std::string &name ) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Stack from row-major per-band sample lists.
inline palimpsest::SpectralStack make_stack(
    int                                             width,
    int                                             height,
    const std::vector<std::vector<std::uint16_t>> &planes,
    int                                             depth      = 8,
    bool                                            normalized = false )
{
    std::vector<palimpsest::Band> bands;
    for ( std::size_t b = 0; b < planes.size(); ++b )
    {
        palimpsest::Band band;
        band.meta.band_id       = static_cast<int>( b ) + 1;
        band.meta.wavelength_nm = 400.0 + 10.0 * static_cast<double>( b );
        band.meta.illumination  = "test";
        band.samples            = planes[b];
        bands.push_back( std::move( band ) );
    }
    return palimpsest::SpectralStack( width, height, depth, std::move( bands ), normalized );
}

/// Random normalized stack.
inline palimpsest::SpectralStack
random_stack( int width, int height, int bands, std::mt19937_64 &rng, bool normalized = true )
{
    std::uniform_int_distribution<int>      d( 0, 255 );
    std::vector<std::vector<std::uint16_t>> planes( static_cast<std::size_t>( bands ) );
    for ( auto &p : planes )
    {
        p.resize( static_cast<std::size_t>( width ) * height );
        for ( auto &v : p )
            v = static_cast<std::uint16_t>( d( rng ) );
    }
    return make_stack( width, height, planes, 8, normalized );
}

/// Design matrix from explicit columns and labels; class names c0, c1, ...
inline palimpsest::DesignMatrix
make_design( const Eigen::MatrixXd &values, const std::vector<int> &labels, bool normalized = true )
{
    palimpsest::DesignMatrix dm;
    dm.values     = values;
    dm.labels     = labels;
    dm.normalized = normalized;
    int classes   = 0;
    for ( int l : labels )
        classes = std::max( classes, l + 1 );
    for ( int c = 0; c < classes; ++c )
        dm.class_names.push_back( "c" + std::to_string( c ) );
    return dm;
}

/// Gaussian class clouds around random means; `spread` scales the within-class
/// covariance, which is a random (full-rank) linear mix.
inline palimpsest::DesignMatrix random_labeled(
    std::mt19937_64 &rng,
    int              bands,
    int              classes,
    int              per_class,
    double           separation = 3.0 )
{
    std::normal_distribution<double> n01( 0.0, 1.0 );
    Eigen::MatrixXd                  mix( bands, bands );
    for ( int i = 0; i < bands; ++i )
        for ( int j = 0; j < bands; ++j )
            mix( i, j ) = n01( rng ) + ( i == j ? 2.0 : 0.0 );
    Eigen::MatrixXd  values( bands, classes * per_class );
    std::vector<int> labels;
    int              col = 0;
    for ( int c = 0; c < classes; ++c )
    {
        Eigen::VectorXd mean( bands );
        for ( int b = 0; b < bands; ++b )
            mean[b] = separation * n01( rng );
        for ( int j = 0; j < per_class; ++j )
        {
            Eigen::VectorXd z( bands );
            for ( int b = 0; b < bands; ++b )
                z[b] = n01( rng );
            values.col( col++ ) = mean + mix * z;
            labels.push_back( c );
        }
    }
    return make_design( values, labels, false );
}

inline double rel_diff( double a, double b )
{
    double scale = std::max( { std::abs( a ), std::abs( b ), 1e-300 } );
    return std::abs( a - b ) / scale;
}

} // namespace testing

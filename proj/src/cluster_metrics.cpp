// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/cluster_metrics.hpp>
#include <palimpsest/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace palimpsest
{

namespace
{

double p_distance( const std::vector<double> &a, const std::vector<double> &b, double p )
{
    if ( a.size() == 1 )
        return std::abs( a[0] - b[0] );
    if ( p == 2.0 )
    {
        double s = 0.0;
        for ( std::size_t k = 0; k < a.size(); ++k )
            s += ( a[k] - b[k] ) * ( a[k] - b[k] );
        return std::sqrt( s );
    }
    double s = 0.0;
    for ( std::size_t k = 0; k < a.size(); ++k )
        s += std::pow( std::abs( a[k] - b[k] ), p );
    return std::pow( s, 1.0 / p );
}

void validate( const Cluster &c )
{
    if ( c.points.empty() )
        throw DataError( "cluster is empty" );
    if ( !( c.p_norm >= 1.0 ) )
        throw UsageError( "norm order p must be >= 1" );
    const std::size_t d = c.points.front().size();
    if ( d == 0 )
        throw DataError( "cluster points must have at least one dimension" );
    for ( const auto &x : c.points )
        if ( x.size() != d )
            throw DataError( "cluster points differ in dimension" );
}

std::vector<double> sample_values(
    const Image                       &img,
    const std::vector<AnnotatedPoint> &pts,
    int                                channel,
    const char                        *what )
{
    if ( pts.empty() )
        throw DataError( std::string( "no " ) + what + " points to evaluate" );
    if ( channel < 0 || channel >= img.channels )
        throw UsageError( "channel out of range" );
    std::vector<double> v;
    v.reserve( pts.size() );
    for ( const AnnotatedPoint &p : pts )
    {
        if ( p.x < 0 || p.y < 0 || p.x >= img.width || p.y >= img.height )
            throw DataError(
                std::string( what ) + " point (" + std::to_string( p.x ) + "," +
                std::to_string( p.y ) + ") is outside the image" );
        v.push_back( img.at( p.x, p.y, channel ) );
    }
    return v;
}

} // namespace

Cluster Cluster::from_values( const std::vector<double> &values, double p_norm )
{
    Cluster c;
    c.p_norm = p_norm;
    c.points.reserve( values.size() );
    for ( double v : values )
        c.points.push_back( { v } );
    return c;
}

std::vector<double> Cluster::centroid() const
{
    validate( *this );
    std::vector<double> a( points.front().size(), 0.0 );
    for ( const auto &x : points )
        for ( std::size_t k = 0; k < a.size(); ++k )
            a[k] += x[k];
    for ( double &v : a )
        v /= static_cast<double>( points.size() );
    return a;
}

double scatter( const Cluster &c )
{
    const std::vector<double> a = c.centroid();
    double                    s = 0.0;
    for ( const auto &x : c.points )
        s += p_distance( x, a, c.p_norm );
    return s / static_cast<double>( c.points.size() );
}

double centroid_distance( const Cluster &ci, const Cluster &cj )
{
    validate( ci );
    validate( cj );
    if ( ci.p_norm != cj.p_norm )
        throw UsageError( "clusters use different norm orders" );
    if ( ci.points.front().size() != cj.points.front().size() )
        throw DataError( "clusters differ in dimension" );
    return p_distance( ci.centroid(), cj.centroid(), ci.p_norm );
}

double db_index( const Cluster &ci, const Cluster &cj )
{
    double m = centroid_distance( ci, cj );
    if ( m == 0.0 )
        throw NumericError( "clusters indistinguishable by centroid" );
    return ( scatter( ci ) + scatter( cj ) ) / m;
}

double dunn_index( const Cluster &ci, const Cluster &cj )
{
    double si = scatter( ci );
    double sj = scatter( cj );
    double mx = std::max( si, sj );
    if ( mx == 0.0 )
        throw NumericError( "degenerate: singleton clusters" );
    return ( centroid_distance( ci, cj ) - si - sj ) / mx;
}

IndexReport index_report( const Cluster &ci, const Cluster &cj )
{
    IndexReport r;
    r.S_i  = scatter( ci );
    r.S_j  = scatter( cj );
    r.M_ij = centroid_distance( ci, cj );
    r.db   = db_index( ci, cj );
    try
    {
        r.dunn = dunn_index( ci, cj );
    }
    catch ( const NumericError &e )
    {
        r.dunn_error = e.what();
    }
    return r;
}

IndexReport evaluate_image(
    const Image                       &img,
    const std::vector<AnnotatedPoint> &under_pts,
    const std::vector<AnnotatedPoint> &parch_pts,
    int                                channel )
{
    return index_report(
        Cluster::from_values( sample_values( img, under_pts, channel, "underwriting" ) ),
        Cluster::from_values( sample_values( img, parch_pts, channel, "parchment" ) ) );
}

IndexReport evaluate_plane(
    const ScorePlane                  &plane,
    const std::vector<AnnotatedPoint> &under_pts,
    const std::vector<AnnotatedPoint> &parch_pts )
{
    auto values = [&]( const std::vector<AnnotatedPoint> &pts, const char *what ) {
        if ( pts.empty() )
            throw DataError( std::string( "no " ) + what + " points to evaluate" );
        std::vector<double> v;
        for ( const AnnotatedPoint &p : pts )
        {
            if ( p.x < 0 || p.y < 0 || p.x >= plane.width() || p.y >= plane.height() )
                throw DataError( std::string( what ) + " point outside the plane" );
            v.push_back( plane.at( p.x, p.y ) );
        }
        return v;
    };
    return index_report(
        Cluster::from_values( values( under_pts, "underwriting" ) ),
        Cluster::from_values( values( parch_pts, "parchment" ) ) );
}

void sort_by_db( std::vector<EvaluationRow> &rows )
{
    std::stable_sort( rows.begin(), rows.end(), []( const EvaluationRow &a, const EvaluationRow &b ) {
        if ( a.report && b.report )
            return a.report->db < b.report->db;
        return a.report.has_value() && !b.report.has_value();
    } );
}

std::string report_csv( const std::vector<EvaluationRow> &rows )
{
    std::ostringstream out;
    out.precision( 17 );
    out << "image,S_i,S_j,M,db,dunn\n";
    for ( const EvaluationRow &r : rows )
    {
        out << r.name;
        if ( r.report )
        {
            out << ',' << r.report->S_i << ',' << r.report->S_j << ',' << r.report->M_ij << ','
                << r.report->db << ',';
            if ( r.report->dunn )
                out << *r.report->dunn << '\n';
            else
                out << "ERROR\n";
        }
        else
            out << ",ERROR,ERROR,ERROR,ERROR,ERROR\n";
    }
    return out.str();
}

std::string report_table( const std::vector<EvaluationRow> &rows )
{
    std::size_t width = 6;
    for ( const EvaluationRow &r : rows )
        width = std::max( width, r.name.size() );

    std::ostringstream out;
    char               buf[128];
    out << "Method" << std::string( width - 6 + 2, ' ' ) << "DB index    Dunn index\n";
    out << std::string( width + 2 + 22, '-' ) << '\n';
    for ( const EvaluationRow &r : rows )
    {
        out << r.name << std::string( width - r.name.size() + 2, ' ' );
        if ( r.report )
        {
            if ( r.report->dunn )
                std::snprintf( buf, sizeof buf, "%-10.4f  %-10.4f", r.report->db, *r.report->dunn );
            else
                std::snprintf( buf, sizeof buf, "%-10.4f  ERROR", r.report->db );
            out << buf << '\n';
        }
        else
        {
            out << "ERROR: " << r.error << '\n';
        }
    }
    return out.str();
}

} // namespace palimpsest

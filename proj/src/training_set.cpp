// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/text.hpp>
#include <palimpsest/training_set.hpp>

#include <algorithm>
#include <sstream>

namespace palimpsest
{

int TrainingSet::declare_class( const std::string &name )
{
    int id = find_class( name );
    if ( id >= 0 )
        return id;
    id = static_cast<int>( classes_.size() );
    classes_.push_back( ClassLabel{ name, id } );
    return id;
}

bool TrainingSet::add_point( const std::string &class_name, int x, int y )
{
    int            id = declare_class( class_name );
    AnnotatedPoint p{ x, y, id };
    if ( std::find( points_.begin(), points_.end(), p ) != points_.end() )
        return false;
    points_.push_back( p );
    return true;
}

int TrainingSet::find_class( const std::string &name ) const
{
    for ( const ClassLabel &c : classes_ )
        if ( c.name == name )
            return c.id;
    return -1;
}

std::size_t TrainingSet::count( int class_id ) const
{
    return static_cast<std::size_t>( std::count_if(
        points_.begin(), points_.end(),
        [&]( const AnnotatedPoint &p ) { return p.label == class_id; } ) );
}

std::vector<AnnotatedPoint> TrainingSet::points_of( const std::string &name ) const
{
    std::vector<AnnotatedPoint> out;
    int                         id = find_class( name );
    for ( const AnnotatedPoint &p : points_ )
        if ( p.label == id )
            out.push_back( p );
    return out;
}

TrainingSet parse_annotations( const std::string &text, Warnings *warnings )
{
    TrainingSet        ts;
    std::istringstream in( text );
    std::string        line;
    int                line_no   = 0;
    bool               seen_data = false;

    while ( std::getline( in, line ) )
    {
        ++line_no;
        const std::string where = "line " + std::to_string( line_no );
        std::string       body  = trim( strip_cr( line ) );
        if ( body.empty() )
            continue;
        if ( body[0] == '#' )
        {
            constexpr std::string_view directive = "#class:";
            if ( body.compare( 0, directive.size(), directive ) == 0 )
            {
                std::string name = trim( body.substr( directive.size() ) );
                if ( name.empty() )
                    throw DataError( where + ": empty class declaration" );
                ts.declare_class( name );
            }
            continue;
        }

        auto fields = split( body, ',' );
        if ( fields.size() != 3 )
            throw DataError( where + ": expected class,x,y" );
        for ( auto &f : fields )
            f = trim( f );

        if ( !seen_data && fields[0] == "class" && fields[1] == "x" && fields[2] == "y" )
        {
            seen_data = true;
            continue;
        }
        seen_data = true;

        if ( fields[0].empty() )
            throw DataError( where + ": empty class name" );
        int x = 0, y = 0;
        try
        {
            x = parse_int( fields[1], "x" );
            y = parse_int( fields[2], "y" );
        }
        catch ( const Error &e )
        {
            throw DataError( where + ": " + e.what() );
        }
        if ( x < 0 || y < 0 )
            throw DataError( where + ": negative coordinate" );

        if ( !ts.add_point( fields[0], x, y ) )
            warn(
                warnings, where + ": duplicate point " + fields[0] + "," +
                              std::to_string( x ) + "," + std::to_string( y ) +
                              " ignored" );
    }

    if ( ts.classes().empty() )
        throw DataError( "annotation file is empty" );
    return ts;
}

std::string
serialize_annotations( const TrainingSet &ts, std::span<const std::string> comment_lines )
{
    std::ostringstream out;
    for ( const std::string &c : comment_lines )
        out << "# " << c << '\n';
    for ( const ClassLabel &c : ts.classes() )
        out << "#class:" << c.name << '\n';
    out << "class,x,y\n";
    for ( const AnnotatedPoint &p : ts.points() )
        out << ts.classes()[static_cast<std::size_t>( p.label )].name << ',' << p.x << ','
            << p.y << '\n';
    return out.str();
}

DesignMatrix assemble_matrix( const SpectralStack &stack, const TrainingSet &ts )
{
    if ( ts.empty() )
        throw DataError( "training set has no points" );
    if ( !stack.normalized() )
        throw DataError( "stack must be normalized before assembling the design matrix" );

    DesignMatrix dm;
    dm.values.resize(
        static_cast<Eigen::Index>( stack.band_count() ),
        static_cast<Eigen::Index>( ts.size() ) );
    dm.labels.reserve( ts.size() );
    dm.normalized = true;
    for ( const ClassLabel &c : ts.classes() )
        dm.class_names.push_back( c.name );

    for ( std::size_t j = 0; j < ts.points().size(); ++j )
    {
        const AnnotatedPoint &p = ts.points()[j];
        if ( !stack.contains( p.x, p.y ) )
            throw DataError(
                "point (" + std::to_string( p.x ) + "," + std::to_string( p.y ) +
                ") of class '" + ts.classes()[static_cast<std::size_t>( p.label )].name +
                "' is outside the " + std::to_string( stack.width() ) + "x" +
                std::to_string( stack.height() ) + " stack" );
        dm.values.col( static_cast<Eigen::Index>( j ) ) = pixel_vector( stack, p.x, p.y );
        dm.labels.push_back( p.label );
    }
    return dm;
}

} // namespace palimpsest

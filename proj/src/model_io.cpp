// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/model_io.hpp>
#include <palimpsest/text.hpp>

#include <json.hpp>

namespace palimpsest
{

using nlohmann::json;

namespace
{

json vector_json( const Eigen::VectorXd &v )
{
    json out = json::array();
    for ( Eigen::Index i = 0; i < v.size(); ++i )
        out.push_back( v[i] );
    return out;
}

json matrix_json( const Eigen::MatrixXd &m )
{
    json out = json::array();
    for ( Eigen::Index r = 0; r < m.rows(); ++r )
        out.push_back( vector_json( m.row( r ).transpose() ) );
    return out;
}

Eigen::VectorXd vector_from( const json &j, Eigen::Index expected, const char *what )
{
    if ( !j.is_array() || static_cast<Eigen::Index>( j.size() ) != expected )
        throw DataError( std::string( "model field '" ) + what + "' has the wrong length" );
    Eigen::VectorXd v( expected );
    for ( Eigen::Index i = 0; i < expected; ++i )
        v[i] = j[static_cast<std::size_t>( i )].get<double>();
    return v;
}

Eigen::MatrixXd
matrix_from( const json &j, Eigen::Index rows, Eigen::Index cols, const char *what )
{
    if ( !j.is_array() || static_cast<Eigen::Index>( j.size() ) != rows )
        throw DataError( std::string( "model field '" ) + what + "' has the wrong shape" );
    Eigen::MatrixXd m( rows, cols );
    for ( Eigen::Index r = 0; r < rows; ++r )
        m.row( r ) = vector_from( j[static_cast<std::size_t>( r )], cols, what ).transpose();
    return m;
}

} // namespace

std::string serialize_model( const ProjectionModel &model )
{
    json j;
    j["format"]              = "palimpsest-projection-model";
    j["version"]             = kModelFormatVersion;
    j["method"]              = method_name( model.method );
    j["bands"]               = model.bands();
    j["components"]          = model.components();
    j["requires_normalized"] = model.requires_normalized;
    j["ridge"]               = model.ridge;
    j["mean"]                = vector_json( model.mean );
    j["std"]                 = model.std ? vector_json( *model.std ) : json( nullptr );
    j["eigenvalues"]         = vector_json( model.eigenvalues );
    j["coefficients"]        = matrix_json( model.coefficients );
    j["training_scores"] =
        model.training_scores ? matrix_json( *model.training_scores ) : json( nullptr );
    j["provenance"] = { { "manifest_hash", model.provenance.manifest_hash },
                        { "annotation_hash", model.provenance.annotation_hash } };
    return j.dump( 2 ) + "\n";
}

ProjectionModel parse_model( const std::string &text )
{
    json j;
    try
    {
        j = json::parse( text );
    }
    catch ( const json::exception &e )
    {
        throw DataError( std::string( "model file is not valid JSON: " ) + e.what() );
    }

    try
    {
        if ( j.value( "format", "" ) != "palimpsest-projection-model" )
            throw DataError( "not a projection model document" );
        int version = j.at( "version" ).get<int>();
        if ( version != kModelFormatVersion )
            throw DataError( "unsupported model version " + std::to_string( version ) );

        ProjectionModel m;
        m.method                = parse_method( j.at( "method" ).get<std::string>() );
        const Eigen::Index B    = j.at( "bands" ).get<Eigen::Index>();
        const Eigen::Index K    = j.at( "components" ).get<Eigen::Index>();
        m.requires_normalized   = j.at( "requires_normalized" ).get<bool>();
        m.ridge                 = j.at( "ridge" ).get<double>();
        m.mean                  = vector_from( j.at( "mean" ), B, "mean" );
        if ( !j.at( "std" ).is_null() )
            m.std = vector_from( j.at( "std" ), B, "std" );
        m.eigenvalues  = vector_from( j.at( "eigenvalues" ), K, "eigenvalues" );
        m.coefficients = matrix_from( j.at( "coefficients" ), B, K, "coefficients" );
        const json &ts = j.at( "training_scores" );
        if ( !ts.is_null() )
        {
            if ( !ts.is_array() || ts.empty() )
                throw DataError( "model field 'training_scores' has the wrong shape" );
            const Eigen::Index n = static_cast<Eigen::Index>( ts.at( 0 ).size() );
            m.training_scores    = matrix_from( ts, K, n, "training_scores" );
        }
        const json &prov            = j.at( "provenance" );
        m.provenance.manifest_hash   = prov.value( "manifest_hash", "" );
        m.provenance.annotation_hash = prov.value( "annotation_hash", "" );
        return m;
    }
    catch ( const json::exception &e )
    {
        throw DataError( std::string( "malformed model file: " ) + e.what() );
    }
}

void save_model( const ProjectionModel &model, const std::filesystem::path &path )
{
    write_text_file( path, serialize_model( model ) );
}

ProjectionModel load_model( const std::filesystem::path &path )
{
    return parse_model( read_text_file( path ) );
}

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include "support.hpp"

#include <palimpsest/hash.hpp>
#include <palimpsest/model_io.hpp>
#include <palimpsest/pipeline.hpp>
#include <palimpsest/service.hpp>
#include <palimpsest/synthetic.hpp>
#include <palimpsest/text.hpp>

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <thread>

using namespace palimpsest;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

SyntheticOptions page_options()
{
    SyntheticOptions o;
    o.width  = 100;
    o.height = 80;
    o.seed   = 3;
    return o;
}

/// Service bound to an ephemeral port on the loopback interface.
struct Harness
{
    testing::TempDir dir;
    SyntheticPage    page = make_synthetic_page( page_options() );
    fs::path         manifest;
    std::string      annotations;
    std::unique_ptr<AnnotatorService> service;
    httplib::Server  server;
    std::thread      thread;
    int              port = 0;

    Harness()
    {
        manifest    = write_stack( page.stack, dir / "stack", "page" );
        annotations = serialize_annotations( sample_training_set(
            page,
            { PageClass::Overwriting, PageClass::Underwriting, PageClass::Parchment, PageClass::Both },
            25, 11 ) );
        ServiceOptions o;
        o.out_dir = dir / "out";
        o.threads = 1;
        fs::create_directories( dir / "ui" );
        std::ofstream( dir / "ui" / "index.html" ) << "<html>annotator</html>";
        o.ui_dir = dir / "ui";
        service  = std::make_unique<AnnotatorService>( o );
        service->install( server );
        port   = server.bind_to_any_port( "127.0.0.1" );
        thread = std::thread( [this] { server.listen_after_bind(); } );
        server.wait_until_ready();
    }

    ~Harness()
    {
        server.stop();
        thread.join();
        service.reset();
    }

    httplib::Client client() const
    {
        httplib::Client c( "127.0.0.1", port );
        c.set_read_timeout( 120, 0 );
        return c;
    }

    json load_stack()
    {
        auto res = client().Post(
            "/api/session/stack", json{ { "manifest", manifest.string() } }.dump(), "application/json" );
        REQUIRE( res );
        REQUIRE( res->status == 200 );
        return json::parse( res->body );
    }

    void upload()
    {
        auto res = client().Put( "/api/annotations", annotations, "text/csv" );
        REQUIRE( res );
        REQUIRE( res->status == 200 );
    }

    json wait_run( int id )
    {
        REQUIRE( service->wait_idle( std::chrono::seconds( 120 ) ) );
        auto res = client().Get( "/api/runs/" + std::to_string( id ) );
        REQUIRE( res );
        REQUIRE( res->status == 200 );
        return json::parse( res->body );
    }
};

Image decode_png( const std::string &bytes, const fs::path &scratch )
{
    std::ofstream( scratch, std::ios::binary ) << bytes;
    return load_image( scratch );
}

} // namespace

TEST_CASE( "service session and bands" )
{
    Harness h;
    auto    c = h.client();

    auto session = json::parse( c.Get( "/api/session" )->body );
    CHECK( session["stack"].is_null() );
    CHECK( c.Get( "/api/bands" )->status == 404 );
    CHECK( c.Get( "/api/band/1" )->status == 404 );

    CHECK( c.Post( "/api/session/stack", "not json", "application/json" )->status == 400 );
    CHECK( c.Post( "/api/session/stack", json{ { "manifest", ( h.dir / "nope.manifest" ).string() } }.dump(),
                   "application/json" )
               ->status == 422 );
    CHECK( c.Post( "/api/session/stack",
                   json{ { "manifest", h.manifest.string() }, { "crop", "90,0,20,20" } }.dump(),
                   "application/json" )
               ->status == 422 );

    json loaded = h.load_stack();
    CHECK( loaded["stack"]["width"] == 100 );
    CHECK( loaded["stack"]["height"] == 80 );

    auto bands = json::parse( c.Get( "/api/bands" )->body );
    CHECK( bands["bands"].size() == 23 );
    CHECK( bands["bands"][0]["band_id"] == 1 );

    SpectralStack expect = prepare_stack( h.manifest, std::nullopt );
    auto          res    = c.Get( "/api/band/4?scale=1/4" );
    REQUIRE( res->status == 200 );
    CHECK( res->get_header_value( "Content-Type" ) == "image/png" );
    Image img = decode_png( res->body, h.dir / "band.png" );
    CHECK( img.width == 25 );
    CHECK( img.height == 20 );
    CHECK( img.depth == 8 );
    for ( int y = 0; y < 20; y += 3 )
        for ( int x = 0; x < 25; x += 4 )
        {
            double sum = 0;
            for ( int dy = 0; dy < 4; ++dy )
                for ( int dx = 0; dx < 4; ++dx )
                    sum += expect.sample( 3, x * 4 + dx, y * 4 + dy );
            CHECK( img.at( x, y ) == static_cast<int>( std::lround( sum / 16.0 ) ) );
        }

    Image full = decode_png( c.Get( "/api/band/23" )->body, h.dir / "full.png" );
    CHECK( full.data == expect.band( 22 ).samples );
    CHECK( c.Get( "/api/band/4?scale=0.125" )->status == 200 );
    CHECK( c.Get( "/api/band/4?scale=1/3" )->status == 400 );
    CHECK( c.Get( "/api/band/24" )->status == 404 );
    CHECK( c.Get( "/api/band/0" )->status == 404 );

    auto ui = c.Get( "/index.html" );
    REQUIRE( ui );
    CHECK( ui->body == "<html>annotator</html>" );
}

TEST_CASE( "service annotations" )
{
    Harness h;
    auto    c = h.client();
    CHECK( c.Get( "/api/annotations" )->status == 404 );
    CHECK( c.Put( "/api/annotations", "", "text/csv" )->status == 422 );
    CHECK( c.Put( "/api/annotations", "parchment,-1,2\n", "text/csv" )->status == 422 );

    auto put = c.Put( "/api/annotations", h.annotations, "text/csv" );
    REQUIRE( put->status == 200 );
    auto body = json::parse( put->body );
    CHECK( body["version"] == 1 );
    CHECK( body["counts"]["underwriting"] == 25 );

    auto get = c.Get( "/api/annotations" );
    REQUIRE( get->status == 200 );
    CHECK( get->body == h.annotations );
    CHECK( get->get_header_value( "X-Annotation-Version" ) == "1" );

    auto dup = json::parse( c.Put( "/api/annotations", "parchment,1,1\nparchment,1,1\n", "text/csv" )->body );
    CHECK( dup["version"] == 2 );
    CHECK( dup["warnings"].size() == 1 );

    // a new stack starts a new session without annotations
    h.load_stack();
    CHECK( c.Get( "/api/annotations" )->status == 404 );
}

TEST_CASE( "service runs" )
{
    Harness h;
    auto    c = h.client();

    CHECK( c.Post( "/api/runs", json{ { "method", "cva" } }.dump(), "application/json" )->status == 409 );
    h.load_stack();
    CHECK( c.Post( "/api/runs", json{ { "method", "cva" } }.dump(), "application/json" )->status == 409 );
    CHECK( c.Post( "/api/runs", json{ { "method", "ica" } }.dump(), "application/json" )->status == 400 );
    CHECK( c.Post( "/api/runs", json{ { "mode", "p3" } }.dump(), "application/json" )->status == 400 );
    CHECK( c.Post( "/api/runs", "{", "application/json" )->status == 400 );

    SUBCASE( "unsupervised PCA needs no annotations" )
    {
        auto res = c.Post(
            "/api/runs", json{ { "method", "pca_unsupervised" }, { "k", 3 } }.dump(), "application/json" );
        REQUIRE( res->status == 202 );
        auto accepted = json::parse( res->body );
        CHECK( accepted["run_id"] == 1 );
        CHECK( accepted["url"] == "/api/runs/1" );
        json run = h.wait_run( 1 );
        CHECK( run["status"] == "DONE" );
        CHECK( run["eigenvalues"].size() == 3 );
        CHECK( run["metrics"].is_null() );
    }

    SUBCASE( "failed run reports the error" )
    {
        h.upload();
        auto res = c.Post( "/api/runs", json{ { "method", "lda" } }.dump(), "application/json" );
        REQUIRE( res->status == 202 );
        json run = h.wait_run( 1 );
        CHECK( run["status"] == "FAILED" );
        CHECK( run["error"] == "LDA requires exactly 2 classes" );
        CHECK( run["error_kind"] == "data" );
        CHECK( c.Get( "/api/runs/1/artifact/run.meta" )->status == 404 );
    }

    SUBCASE( "CVA run matches the library pipeline" )
    {
        h.upload();
        auto res = c.Post(
            "/api/runs", json{ { "method", "cva" }, { "recipe", "1,0,2" } }.dump(), "application/json" );
        REQUIRE( res->status == 202 );
        json run = h.wait_run( 1 );
        REQUIRE( run["status"] == "DONE" );
        CHECK( run["composite"] == "/api/runs/1/artifact/cva_R1G0B2.png" );
        CHECK( run["eigenvalues"].size() == 23 );
        CHECK( run["metrics"]["db"].is_number() );

        // the same calls made directly
        SpectralStack stack = prepare_stack( h.manifest, std::nullopt );
        TrainingSet   ts    = parse_annotations( h.annotations );
        Provenance    prov{ sha256_file( h.manifest ), sha256_hex( h.annotations ) };
        ProjectionModel  model = fit_model( stack, &ts, {}, prov );
        testing::TempDir lib;
        RenderOptions    ro;
        ro.run_name = "cva";
        ro.recipe   = parse_recipe( "1,0,2" );
        RenderOutput out = render_model( stack, model, ro, lib.path() );

        auto model_res = c.Get( "/api/runs/1/artifact/cva.model.json" );
        REQUIRE( model_res->status == 200 );
        CHECK( model_res->body == serialize_model( model ) );
        for ( const auto &f : out.files )
        {
            auto a = c.Get( "/api/runs/1/artifact/" + f.filename().string() );
            REQUIRE( a->status == 200 );
            CHECK( a->body == read_text_file( f ) );
        }

        auto [under, parch] = evaluation_points( ts );
        IndexReport r       = evaluate_image( *out.green, under, parch );
        CHECK( run["metrics"]["db"].get<double>() == r.db );

        CHECK( c.Get( "/api/runs/1/artifact/preview.png" )->status == 200 );
        CHECK( c.Get( "/api/runs/1/artifact/..%2Fsecret" )->status == 404 );
        CHECK( c.Get( "/api/runs/1/artifact/other.png" )->status == 404 );
        CHECK( c.Get( "/api/runs/9" )->status == 404 );

        std::string meta = c.Get( "/api/runs/1/artifact/run.meta" )->body;
        CHECK( meta.find( "method = cva\n" ) != std::string::npos );
        CHECK( meta.find( "k = 23\n" ) != std::string::npos );

        auto list = json::parse( c.Get( "/api/runs" )->body );
        CHECK( list.size() == 1 );
        auto session = json::parse( c.Get( "/api/session" )->body );
        CHECK( session["runs"].size() == 1 );
    }

    SUBCASE( "runs queue in order" )
    {
        h.upload();
        for ( int i = 0; i < 3; ++i )
            REQUIRE( c.Post( "/api/runs",
                             json{ { "method", "pca" }, { "k", 2 }, { "run_name", "r" + std::to_string( i ) } }.dump(),
                             "application/json" )
                         ->status == 202 );
        REQUIRE( h.service->wait_idle( std::chrono::seconds( 120 ) ) );
        for ( int i = 1; i <= 3; ++i )
            CHECK( h.wait_run( i )["status"] == "DONE" );
        CHECK( fs::exists( h.dir / "out" / "runs" / "3" / "r2_plane01_full.png" ) );
    }
}

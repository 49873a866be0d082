// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/cluster_metrics.hpp>
#include <palimpsest/hash.hpp>
#include <palimpsest/model_io.hpp>
#include <palimpsest/pipeline.hpp>
#include <palimpsest/rendering.hpp>
#include <palimpsest/service.hpp>
#include <palimpsest/text.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace palimpsest;
namespace fs = std::filesystem;

namespace
{

struct StackArgs
{
    std::string manifest;
    std::string crop;
    bool        global = false;

    void add( CLI::App *cmd, bool required = true )
    {
        auto *m = cmd->add_option( "--manifest", manifest, "Band manifest" );
        if ( required )
            m->required();
        cmd->add_option( "--crop", crop, "Region x,y,width,height" );
        cmd->add_flag( "--global-normalize", global, "One min/max across all bands" );
    }

    std::optional<Rect> rect() const
    {
        if ( crop.empty() )
            return std::nullopt;
        return parse_rect( crop );
    }

    SpectralStack load( Warnings *warnings ) const
    {
        return prepare_stack(
            manifest, rect(), global ? NormalizeScope::Global : NormalizeScope::PerBand, warnings );
    }
};

struct FitArgs
{
    std::string annotations;
    std::string method = "cva";
    std::size_t k      = 0;
    double      ridge_epsilon = 1e-8;
    bool        always_ridge  = false;
    std::string region;

    void add( CLI::App *cmd )
    {
        cmd->add_option( "--annotations", annotations, "Training points (class,x,y)" );
        cmd->add_option( "--method", method, "cva, lda, pca or pca_unsupervised" );
        cmd->add_option( "--k", k, "Components to keep (0 = all)" );
        cmd->add_option( "--ridge-epsilon", ridge_epsilon, "Ridge scale on the within matrix" );
        cmd->add_flag( "--always-ridge", always_ridge, "Regularize even a well-conditioned matrix" );
        cmd->add_option( "--region", region, "Unsupervised PCA region x,y,width,height" );
    }

    ProjectionModel fit( const StackArgs &s, const SpectralStack &stack, Warnings *warnings ) const
    {
        FitOptions fo;
        fo.method                = parse_method( method );
        fo.k                     = k;
        fo.eig.ridge_epsilon     = ridge_epsilon;
        fo.eig.ridge_policy      = always_ridge ? RidgePolicy::Always : RidgePolicy::WhenNeeded;
        if ( !region.empty() )
            fo.region = parse_rect( region );

        Provenance                 prov;
        std::optional<TrainingSet> ts;
        prov.manifest_hash = sha256_file( s.manifest );
        if ( is_supervised( fo.method ) )
        {
            if ( annotations.empty() )
                throw UsageError( method + " needs --annotations" );
            std::string text     = read_text_file( annotations );
            ts                   = parse_annotations( text, warnings );
            prov.annotation_hash = sha256_hex( text );
        }
        return fit_model( stack, ts ? &*ts : nullptr, fo, prov );
    }
};

struct RenderArgs
{
    std::string modes  = "full";
    int         depth  = 8;
    std::string format = "png";
    bool        deflate = false;
    std::string recipe;
    std::string swap;
    int         poly = 0;
    std::string planes;
    std::string tails = "both";

    void add( CLI::App *cmd )
    {
        cmd->add_option( "--modes", modes, "Comma list of full, training, p0.01, p0.1, p1, p5" );
        cmd->add_option( "--depth", depth, "Output bit depth (8 or 16)" );
        cmd->add_option( "--format", format, "png or tiff" );
        cmd->add_flag( "--deflate", deflate, "Deflate-compress TIFF output" );
        cmd->add_option( "--recipe", recipe, "Composite planes r,g,b" );
        cmd->add_option( "--swap", swap, "Exchange two composite channels, e.g. 01" );
        cmd->add_option( "--poly", poly, "Also write polynomial-contrast copies (order 2-4)" );
        cmd->add_option( "--planes", planes, "Comma list of plane indices (default all)" );
        cmd->add_option( "--tails", tails, "Percentile clipping: both, low or high" );
    }

    RenderOptions options( const std::string &run, unsigned threads ) const
    {
        RenderOptions o;
        o.run_name = run;
        ClipTails t;
        if ( tails == "both" )
            t = ClipTails::Both;
        else if ( tails == "low" )
            t = ClipTails::Low;
        else if ( tails == "high" )
            t = ClipTails::High;
        else
            throw UsageError( "--tails must be both, low or high" );
        for ( const auto &m : split( modes, ',' ) )
        {
            RenderSpec spec = parse_render_spec( trim( m ), depth );
            spec.tails      = t;
            o.specs.push_back( spec );
        }
        o.format      = parse_image_format( format );
        o.compression = deflate ? TiffCompression::Deflate : TiffCompression::None;
        if ( !recipe.empty() )
            o.recipe = parse_recipe( recipe, swap );
        else if ( !swap.empty() )
            throw UsageError( "--swap needs --recipe" );
        if ( poly != 0 )
            o.poly_order = poly;
        if ( !planes.empty() )
            for ( const auto &p : split( planes, ',' ) )
                o.planes.push_back( parse_int( trim( p ), "plane index" ) );
        o.threads = threads;
        return o;
    }
};

void print_warnings( const Warnings &warnings )
{
    for ( const auto &w : warnings )
        std::cerr << "warning: " << w << '\n';
}

fs::path output_dir( const std::string &out )
{
    fs::path dir = out.empty() ? fs::path( "." ) : fs::path( out );
    fs::create_directories( dir );
    return dir;
}

std::string rect_text( const std::optional<Rect> &r )
{
    if ( !r )
        return "";
    return std::to_string( r->x ) + "," + std::to_string( r->y ) + "," +
           std::to_string( r->width ) + "," + std::to_string( r->height );
}

} // namespace

int main( int argc, char **argv )
{
    CLI::App app{ "Multispectral palimpsest enhancement" };
    app.require_subcommand( 1 );
    app.config_formatter( std::make_shared<CLI::ConfigINI>() );
    app.set_config( "--config", "", "INI file; [section] per subcommand, flags override" );

    std::string out;
    unsigned    threads = 0;
    auto        add_common = [&]( CLI::App *cmd ) {
        cmd->add_option( "--out", out, "Output directory" )->envname( "PALIMPSEST_OUT" );
        cmd->add_option( "--threads", threads, "Worker threads (0 = all cores)" );
    };

    // ingest
    StackArgs ingest_stack;
    bool      ingest_write = false;
    auto     *ingest       = app.add_subcommand( "ingest", "Validate and normalize a band stack" );
    ingest_stack.add( ingest );
    ingest->add_flag( "--write", ingest_write, "Write the normalized bands and a manifest" );
    add_common( ingest );

    // fit
    StackArgs   fit_stack;
    FitArgs     fit_args;
    std::string fit_model_path;
    auto       *fit = app.add_subcommand( "fit", "Fit a projection model" );
    fit_stack.add( fit );
    fit_args.add( fit );
    fit->add_option( "--model", fit_model_path, "Model file to write" );
    add_common( fit );

    // project
    StackArgs   proj_stack;
    std::string proj_model;
    std::string proj_run = "scores";
    std::string proj_planes;
    auto       *project = app.add_subcommand( "project", "Write raw float score planes" );
    proj_stack.add( project );
    project->add_option( "--model", proj_model, "Fitted model" )->required();
    project->add_option( "--run", proj_run, "File name prefix" );
    project->add_option( "--planes", proj_planes, "Comma list of plane indices" );
    add_common( project );

    // render
    StackArgs   ren_stack;
    FitArgs     ren_fit;
    RenderArgs  ren_args;
    std::string ren_model;
    std::string ren_run;
    std::string ren_eval;
    auto       *render = app.add_subcommand( "render", "Project and render grayscales and composites" );
    ren_stack.add( render );
    ren_fit.add( render );
    ren_args.add( render );
    render->add_option( "--model", ren_model, "Fitted model (otherwise fit with --method)" );
    render->add_option( "--run", ren_run, "Run name used as file prefix" );
    render->add_option( "--eval", ren_eval, "Evaluation points for the green plane" );
    add_common( render );

    // evaluate
    std::vector<std::string> eval_images;
    std::string              eval_points;
    int                      eval_channel = 1;
    std::string              eval_csv;
    bool                     eval_raw = false;
    StackArgs                eval_stack;
    std::string              eval_model;
    auto *evaluate = app.add_subcommand( "evaluate", "Score images with the DB and Dunn indices" );
    evaluate->add_option( "images", eval_images, "Images to score" );
    evaluate->add_option( "--eval", eval_points, "Points with underwriting and parchment classes" )
        ->required();
    evaluate->add_option( "--channel", eval_channel, "Channel of color images (default green)" );
    evaluate->add_option( "--csv", eval_csv, "Also write the CSV report here" );
    evaluate->add_flag( "--raw", eval_raw, "Score unquantized planes of --model instead" );
    eval_stack.add( evaluate, false );
    evaluate->add_option( "--model", eval_model, "Model for --raw" );
    add_common( evaluate );

    // dt
    std::string dt_input, dt_output;
    int         dt_t1 = 0, dt_t2 = 0;
    double      dt_alpha = 0.5;
    auto       *dt = app.add_subcommand( "dt", "Double-threshold a grayscale image" );
    dt->add_option( "input", dt_input, "Grayscale image" )->required();
    dt->add_option( "--t1", dt_t1, "Whitening threshold" )->required();
    dt->add_option( "--t2", dt_t2, "Darkening threshold" )->required();
    dt->add_option( "--alpha", dt_alpha, "Darkening factor in (0, 1]" );
    dt->add_option( "--output", dt_output, "Output image" )->required();

    // pseudocolor
    StackArgs   pc_stack;
    int         pc_red = 0, pc_uv = 0;
    std::string pc_output;
    std::string pc_format;
    auto       *pc = app.add_subcommand( "pseudocolor", "Red band in R, UV band in G and B" );
    pc_stack.add( pc );
    pc->add_option( "--red", pc_red, "Band id for red" )->required();
    pc->add_option( "--uv", pc_uv, "Band id for green and blue" )->required();
    pc->add_option( "--output", pc_output, "Output image" )->required();
    pc->add_option( "--format", pc_format, "png or tiff (default from extension)" );

    // bench
    std::string   bench_size = "2000x2000";
    int           bench_bands = 23;
    std::uint64_t bench_seed  = 1;
    std::string   bench_write;
    std::string   bench_format = "png";
    auto         *bench = app.add_subcommand( "bench", "Time fit, project and render on synthetic data" );
    bench->add_option( "--size", bench_size, "WIDTHxHEIGHT" );
    bench->add_option( "--bands", bench_bands, "Band count" );
    bench->add_option( "--seed", bench_seed, "Generator seed" );
    bench->add_option( "--write", bench_write, "Write rendered planes to this directory" );
    bench->add_option( "--format", bench_format, "png or tiff" );
    bench->add_option( "--threads", threads, "Worker threads (0 = all cores)" );

    // serve
    std::string serve_host = "127.0.0.1";
    int         serve_port = 8080;
    std::string serve_ui;
    bool        serve_global = false;
    auto       *serve_cmd    = app.add_subcommand( "serve", "Start the annotation service" );
    serve_cmd->add_option( "--host", serve_host, "Bind address" );
    serve_cmd->add_option( "--port", serve_port, "Port" );
    serve_cmd->add_option( "--ui", serve_ui, "Directory with the UI bundle" );
    serve_cmd->add_flag( "--global-normalize", serve_global, "One min/max across all bands" );
    add_common( serve_cmd );

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        int code = app.exit( e );
        return code == 0 ? 0 : 1;
    }

    try
    {
        Warnings warnings;

        if ( *ingest )
        {
            SpectralStack raw = load_stack( ingest_stack.manifest );
            std::printf(
                "%d x %d, %zu bands, %d-bit\n", raw.width(), raw.height(), raw.band_count(),
                raw.bit_depth() );
            for ( const Band &b : raw.bands() )
                std::printf(
                    "  band %2d  %8.1f nm  %s%s%s\n", b.meta.band_id, b.meta.wavelength_nm,
                    b.meta.illumination.c_str(), b.meta.filter ? "  " : "",
                    b.meta.filter ? b.meta.filter->c_str() : "" );
            SpectralStack norm = ingest_stack.load( &warnings );
            print_warnings( warnings );
            if ( ingest_write )
            {
                fs::path m = write_stack( norm, output_dir( out ), "normalized" );
                std::printf( "wrote %s\n", m.string().c_str() );
            }
            return 0;
        }

        if ( *fit )
        {
            SpectralStack   stack = fit_stack.load( &warnings );
            ProjectionModel model = fit_args.fit( fit_stack, stack, &warnings );
            print_warnings( warnings );
            fs::path path = fit_model_path.empty()
                                ? output_dir( out ) / ( method_name( model.method ) + ".model.json" )
                                : fs::path( fit_model_path );
            save_model( model, path );
            std::cout << eigenvalue_table( model );
            if ( model.ridge > 0.0 )
                std::printf( "ridge %.17g added to the within matrix\n", model.ridge );
            std::printf( "wrote %s\n", path.string().c_str() );
            return 0;
        }

        if ( *project )
        {
            SpectralStack   stack = proj_stack.load( &warnings );
            ProjectionModel model = load_model( proj_model );
            print_warnings( warnings );
            fs::path         dir = output_dir( out );
            std::vector<int> planes;
            if ( proj_planes.empty() )
                for ( int k = 0; k < model.components(); ++k )
                    planes.push_back( k );
            else
                for ( const auto &p : split( proj_planes, ',' ) )
                    planes.push_back( parse_int( trim( p ), "plane index" ) );
            for ( int k : planes )
            {
                if ( k < 0 || k >= model.components() )
                    throw UsageError( "plane " + std::to_string( k ) + " out of range" );
                ScorePlane plane = project_plane( stack, model, k, threads );
                char       name[64];
                std::snprintf( name, sizeof name, "_plane%02d.tif", k );
                save_float_tiff( plane.values(), plane.width(), plane.height(), dir / ( proj_run + name ) );
                std::printf( "wrote %s\n", ( dir / ( proj_run + name ) ).string().c_str() );
            }
            return 0;
        }

        if ( *render )
        {
            SpectralStack   stack = ren_stack.load( &warnings );
            ProjectionModel model = ren_model.empty() ? ren_fit.fit( ren_stack, stack, &warnings )
                                                      : load_model( ren_model );
            fs::path    dir = output_dir( out );
            std::string run = ren_run.empty() ? method_name( model.method ) : ren_run;
            std::string model_name = run + ".model.json";
            if ( ren_model.empty() )
                save_model( model, dir / model_name );

            RenderOptions ro  = ren_args.options( run, threads );
            RenderOutput  res = render_model( stack, model, ro, dir );
            warnings.insert( warnings.end(), res.warnings.begin(), res.warnings.end() );
            print_warnings( warnings );
            for ( const auto &f : res.files )
                std::printf( "wrote %s\n", f.string().c_str() );

            if ( !ren_eval.empty() )
            {
                TrainingSet eval        = parse_annotations( read_text_file( ren_eval ) );
                auto [under, parch]     = evaluation_points( eval );
                IndexReport r           = evaluate_image( *res.green, under, parch );
                if ( r.dunn )
                    std::printf( "green plane: db %.6f  dunn %.6f\n", r.db, *r.dunn );
                else
                    std::printf( "green plane: db %.6f  dunn %s\n", r.db, r.dunn_error.c_str() );
            }

            MetaEntries meta = {
                { "manifest", ren_stack.manifest },
                { "manifest_sha256", model.provenance.manifest_hash },
                { "annotation_sha256", model.provenance.annotation_hash },
                { "crop", rect_text( ren_stack.rect() ) },
                { "method", method_name( model.method ) },
                { "k", std::to_string( model.components() ) },
                { "depth", std::to_string( ren_args.depth ) },
                { "format", extension_for( ro.format ).substr( 1 ) },
                { "run", run },
                { "model_sha256", ren_model.empty() ? sha256_file( dir / model_name )
                                                    : sha256_file( ren_model ) },
                { "modes", ren_args.modes },
            };
            if ( !ren_model.empty() )
                meta.emplace_back( "model", ren_model );
            if ( !ren_fit.annotations.empty() )
                meta.emplace_back( "annotations", ren_fit.annotations );
            if ( !ren_args.recipe.empty() )
                meta.emplace_back( "recipe", ren_args.recipe );
            if ( !ren_args.swap.empty() )
                meta.emplace_back( "swap", ren_args.swap );
            if ( ren_args.poly )
                meta.emplace_back( "poly", std::to_string( ren_args.poly ) );
            meta.emplace_back( "tails", ren_args.tails );
            meta.emplace_back( "global_normalize", ren_stack.global ? "true" : "false" );
            write_run_meta( dir / "run.meta", meta );
            return 0;
        }

        if ( *evaluate )
        {
            TrainingSet                eval = parse_annotations( read_text_file( eval_points ), &warnings );
            std::vector<EvaluationRow> rows;
            if ( eval_raw )
            {
                if ( eval_stack.manifest.empty() || eval_model.empty() )
                    throw UsageError( "--raw needs --manifest and --model" );
                SpectralStack stack = eval_stack.load( &warnings );
                rows = evaluate_planes( stack, load_model( eval_model ), eval, threads );
            }
            else
            {
                if ( eval_images.empty() )
                    throw UsageError( "no images to evaluate" );
                std::vector<fs::path> paths( eval_images.begin(), eval_images.end() );
                rows = evaluate_files( paths, eval, eval_channel );
            }
            print_warnings( warnings );
            std::cout << report_table( rows ) << '\n' << report_csv( rows );
            if ( !eval_csv.empty() )
                write_text_file( eval_csv, report_csv( rows ) );
            return 0;
        }

        if ( *dt )
        {
            Image img = load_image( dt_input );
            Image res = double_threshold( img, dt_t1, dt_t2, dt_alpha );
            fs::path p = dt_output;
            std::string ext = p.extension().string();
            save_image( res, p, parse_image_format( ext.empty() ? "png" : ext.substr( 1 ) ) );
            return 0;
        }

        if ( *pc )
        {
            SpectralStack stack = pc_stack.load( &warnings );
            print_warnings( warnings );
            fs::path    p   = pc_output;
            std::string fmt = pc_format;
            if ( fmt.empty() )
                fmt = p.extension().empty() ? "png" : p.extension().string().substr( 1 );
            save_image( pseudocolor( stack, pc_red, pc_uv ), p, parse_image_format( fmt ) );
            return 0;
        }

        if ( *bench )
        {
            BenchOptions bo;
            auto         dims = split( bench_size, 'x' );
            if ( dims.size() != 2 )
                throw UsageError( "--size must be WIDTHxHEIGHT" );
            bo.width   = parse_int( dims[0], "width" );
            bo.height  = parse_int( dims[1], "height" );
            bo.bands   = bench_bands;
            bo.seed    = bench_seed;
            bo.threads = threads;
            bo.format  = parse_image_format( bench_format );
            if ( !bench_write.empty() )
                bo.out_dir = bench_write;
            BenchReport r = run_bench( bo );
            std::cout << format_bench( bo, r );
            return 0;
        }

        if ( *serve_cmd )
        {
            ServiceOptions so;
            so.out_dir = out.empty() ? fs::path( "palimpsest-out" ) : fs::path( out );
            if ( !serve_ui.empty() )
                so.ui_dir = serve_ui;
            so.scope   = serve_global ? NormalizeScope::Global : NormalizeScope::PerBand;
            so.threads = threads;
            std::printf( "listening on http://%s:%d\n", serve_host.c_str(), serve_port );
            std::fflush( stdout );
            if ( serve( so, serve_host, serve_port ) != 0 )
                throw UsageError( "cannot bind " + serve_host + ":" + std::to_string( serve_port ) );
            return 0;
        }
    }
    catch ( const Error &e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    }
    catch ( const fs::filesystem_error &e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch ( const std::exception &e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/hash.hpp>
#include <palimpsest/model_io.hpp>
#include <palimpsest/pipeline.hpp>
#include <palimpsest/quantize.hpp>
#include <palimpsest/synthetic.hpp>
#include <palimpsest/text.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

namespace palimpsest
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since( Clock::time_point t0 )
{
    return std::chrono::duration<double>( Clock::now() - t0 ).count();
}

std::string two_digits( int k )
{
    char buf[16];
    std::snprintf( buf, sizeof buf, "%02d", k );
    return buf;
}

} // namespace

SpectralStack prepare_stack(
    const std::filesystem::path &manifest,
    const std::optional<Rect>   &crop_rect,
    NormalizeScope               scope,
    Warnings                    *warnings )
{
    SpectralStack stack = load_stack( manifest );
    if ( crop_rect )
        stack = crop( stack, *crop_rect );
    return normalize_stack( stack, scope, warnings );
}

std::filesystem::path write_stack(
    const SpectralStack         &stack,
    const std::filesystem::path &dir,
    const std::string           &stem )
{
    std::filesystem::create_directories( dir );
    const int   depth    = stack.normalized() ? 8 : stack.bit_depth();
    std::string manifest = "# path,wavelength_nm,illumination[,filter]\n";
    for ( const Band &b : stack.bands() )
    {
        std::string name = stem + "_band" + two_digits( b.meta.band_id ) + ".tif";
        Image       img( stack.width(), stack.height(), 1, depth );
        img.data = b.samples;
        save_image( img, dir / name, ImageFormat::Tiff );

        char wl[64];
        auto [end, ec] = std::to_chars( wl, wl + sizeof wl, b.meta.wavelength_nm );
        manifest += name + "," + std::string( wl, end ) + "," + b.meta.illumination;
        if ( b.meta.filter )
            manifest += "," + *b.meta.filter;
        manifest += "\n";
    }
    std::filesystem::path path = dir / ( stem + ".manifest" );
    write_text_file( path, manifest );
    return path;
}

ProjectionModel fit_model(
    const SpectralStack &stack,
    const TrainingSet   *ts,
    const FitOptions    &options,
    Provenance           provenance )
{
    ProjectionModel model;
    if ( options.method == Method::PCA_UNSUPERVISED )
        model = fit_pca_unsupervised( stack, options.region, options.k );
    else
    {
        if ( !ts || ts->empty() )
            throw DataError( method_name( options.method ) + " needs annotated training points" );
        DesignMatrix dm = assemble_matrix( stack, *ts );
        switch ( options.method )
        {
            case Method::CVA: model = fit_cva( dm, options.k, options.eig ); break;
            case Method::LDA:
                if ( options.k != 0 && options.k != static_cast<std::size_t>( dm.bands() ) )
                    throw UsageError( "LDA keeps every direction; omit k" );
                model = fit_lda( dm, options.eig );
                break;
            case Method::PCA: model = fit_pca( dm, options.k ); break;
            case Method::PCA_UNSUPERVISED: break;
        }
    }
    model.provenance = std::move( provenance );
    return model;
}

std::string eigenvalue_table( const ProjectionModel &model )
{
    std::ostringstream out;
    char               buf[128];
    double             total = 0.0;
    for ( Eigen::Index k = 0; k < model.eigenvalues.size(); ++k )
        total += std::max( 0.0, model.eigenvalues[k] );
    out << "plane  eigenvalue              cumulative%\n";
    double run = 0.0;
    for ( Eigen::Index k = 0; k < model.eigenvalues.size(); ++k )
    {
        run += std::max( 0.0, model.eigenvalues[k] );
        std::snprintf(
            buf, sizeof buf, "%5lld  %-22.15g  %8.3f\n", static_cast<long long>( k ),
            model.eigenvalues[k], total > 0.0 ? 100.0 * run / total : 0.0 );
        out << buf;
    }
    return out.str();
}

std::string plane_filename( const std::string &run, int k, const RenderSpec &spec, ImageFormat f )
{
    return run + "_plane" + two_digits( k ) + "_" + render_tag( spec ) + extension_for( f );
}

RenderOutput render_model(
    const SpectralStack         &stack,
    const ProjectionModel       &model,
    const RenderOptions         &o,
    const std::filesystem::path &out_dir )
{
    const int K = static_cast<int>( model.components() );

    std::vector<RenderSpec> specs = o.specs;
    if ( specs.empty() )
        specs.push_back( RenderSpec{} );

    std::vector<int> planes = o.planes;
    if ( planes.empty() )
        for ( int k = 0; k < K; ++k )
            planes.push_back( k );
    for ( int k : planes )
        if ( k < 0 || k >= K )
            throw UsageError(
                "plane " + std::to_string( k ) + " out of range (model has " +
                std::to_string( K ) + " components)" );

    // Planes needed by the composite are rendered even when not requested.
    std::vector<int> keep;
    if ( o.recipe )
    {
        for ( int k : { o.recipe->red, o.recipe->green, o.recipe->blue } )
        {
            if ( k >= K )
                throw UsageError(
                    "composite plane " + std::to_string( k ) + " out of range (model has " +
                    std::to_string( K ) + " components)" );
            keep.push_back( k );
        }
    }
    const int green_plane = o.recipe ? o.recipe->green : planes.front();
    std::vector<int> order = planes;
    for ( int k : keep )
        if ( std::find( order.begin(), order.end(), k ) == order.end() )
            order.push_back( k );
    if ( std::find( order.begin(), order.end(), green_plane ) == order.end() )
        order.push_back( green_plane );

    if ( o.write )
        std::filesystem::create_directories( out_dir );

    RenderOutput         out;
    Sha256               digest;
    std::map<int, Image> kept;

    auto emit = [&]( const Image &img, const std::filesystem::path &name ) {
        digest.update( img.data.data(), img.data.size() * sizeof( std::uint16_t ) );
        if ( !o.write )
            return;
        auto t0 = Clock::now();
        save_image( img, out_dir / name, o.format, o.compression );
        out.write_seconds += seconds_since( t0 );
        out.files.push_back( out_dir / name );
    };

    for ( int k : order )
    {
        const bool requested = std::find( planes.begin(), planes.end(), k ) != planes.end();

        auto       t0    = Clock::now();
        ScorePlane plane = project_plane( stack, model, k, o.threads );
        out.project_seconds += seconds_since( t0 );

        for ( std::size_t s = 0; s < specs.size(); ++s )
        {
            t0        = Clock::now();
            Image img = render_plane( plane, specs[s], &model, k, &out.warnings );
            out.render_seconds += seconds_since( t0 );

            if ( requested )
            {
                std::string name = plane_filename( o.run_name, k, specs[s], o.format );
                emit( img, name );
                if ( o.poly_order )
                {
                    std::string stem = name.substr( 0, name.rfind( '.' ) );
                    emit(
                        enhance_polynomial( img, *o.poly_order ),
                        stem + "_poly" + std::to_string( *o.poly_order ) + extension_for( o.format ) );
                }
            }
            if ( s == 0 )
            {
                if ( k == green_plane )
                    out.green = img;
                if ( std::find( keep.begin(), keep.end(), k ) != keep.end() )
                    kept[k] = std::move( img );
            }
        }
    }

    if ( o.recipe )
    {
        // compose_rgb indexes a dense set; map the three planes onto 0..2.
        std::vector<Image> set = { kept.at( o.recipe->red ), kept.at( o.recipe->green ),
                                   kept.at( o.recipe->blue ) };
        CompositeRecipe    local = *o.recipe;
        local.red                = 0;
        local.green              = 1;
        local.blue               = 2;
        Image       rgb          = compose_rgb( set, local );
        std::string name =
            composite_stem( o.run_name, *o.recipe ) + extension_for( o.format );
        emit( rgb, name );
        if ( o.write )
            out.composite_path = out_dir / name;
        out.composite = std::move( rgb );
    }

    out.digest = digest.hex_digest();
    return out;
}

Image to_8bit( const Image &img )
{
    if ( img.depth == 8 )
        return img;
    Image out( img.width, img.height, img.channels, 8 );
    for ( std::size_t i = 0; i < img.data.size(); ++i )
        out.data[i] = quantize_linear( img.data[i], 0.0, 65535.0, 255 );
    return out;
}

std::pair<std::vector<AnnotatedPoint>, std::vector<AnnotatedPoint>>
evaluation_points( const TrainingSet &eval )
{
    auto under = eval.points_of( classes::underwriting );
    auto parch = eval.points_of( classes::parchment );
    if ( under.empty() || parch.empty() )
        throw DataError( "evaluation points need both 'underwriting' and 'parchment' classes" );
    return { std::move( under ), std::move( parch ) };
}

std::vector<EvaluationRow> evaluate_files(
    const std::vector<std::filesystem::path> &images,
    const TrainingSet                        &eval,
    int                                       channel )
{
    auto [under, parch] = evaluation_points( eval );
    std::vector<EvaluationRow> rows;
    for ( const auto &path : images )
    {
        EvaluationRow row;
        row.name = path.filename().string();
        try
        {
            Image img  = load_image( path );
            row.report = evaluate_image( img, under, parch, img.channels == 1 ? 0 : channel );
        }
        catch ( const Error &e )
        {
            row.error = e.what();
        }
        rows.push_back( std::move( row ) );
    }
    sort_by_db( rows );
    return rows;
}

std::vector<EvaluationRow> evaluate_planes(
    const SpectralStack   &stack,
    const ProjectionModel &model,
    const TrainingSet     &eval,
    unsigned               threads )
{
    auto [under, parch] = evaluation_points( eval );
    std::vector<EvaluationRow> rows;
    for ( Eigen::Index k = 0; k < model.components(); ++k )
    {
        EvaluationRow row;
        row.name = "plane" + two_digits( static_cast<int>( k ) );
        try
        {
            row.report = evaluate_plane( project_plane( stack, model, k, threads ), under, parch );
        }
        catch ( const Error &e )
        {
            row.error = e.what();
        }
        rows.push_back( std::move( row ) );
    }
    sort_by_db( rows );
    return rows;
}

std::string format_run_meta( const MetaEntries &entries )
{
    std::string out = "# palimpsest run metadata\n";
    for ( const auto &[key, value] : entries )
        out += key + " = " + value + "\n";
    return out;
}

void write_run_meta( const std::filesystem::path &path, const MetaEntries &entries )
{
    write_text_file( path, format_run_meta( entries ) );
}

BenchReport run_bench( const BenchOptions &o )
{
    if ( o.width < 1 || o.height < 1 || o.bands < 1 )
        throw UsageError( "bench size and band count must be positive" );

    BenchReport report;

    SyntheticOptions so;
    so.width  = o.width;
    so.height = o.height;
    so.bands  = o.bands;
    so.seed   = o.seed;

    TrainingSet                  ts;
    std::optional<SpectralStack> normalized;
    {
        auto          t0   = Clock::now();
        SyntheticPage page = make_synthetic_page( so );
        ts                 = sample_training_set(
            page,
            { PageClass::Overwriting, PageClass::Underwriting, PageClass::Parchment,
                              PageClass::Both },
            o.per_class, o.seed ^ 0x5bd1e995ULL );
        report.generate_seconds = seconds_since( t0 );

        t0                       = Clock::now();
        normalized               = normalize_stack( page.stack );
        report.normalize_seconds = seconds_since( t0 );
    }
    const SpectralStack &stack = *normalized;

    auto       t0 = Clock::now();
    FitOptions fo;
    ProjectionModel model = fit_model( stack, &ts, fo );
    report.fit_seconds    = seconds_since( t0 );
    report.model_json     = serialize_model( model );

    RenderOptions ro;
    ro.run_name = "bench";
    ro.threads  = o.threads;
    ro.format   = o.format;
    ro.write    = o.out_dir.has_value();
    RenderOutput r = render_model( stack, model, ro, o.out_dir.value_or( "." ) );

    report.project_seconds = r.project_seconds;
    report.render_seconds  = r.render_seconds;
    report.write_seconds   = r.write_seconds;
    report.digest          = r.digest;
    return report;
}

std::string format_bench( const BenchOptions &o, const BenchReport &r )
{
    std::ostringstream out;
    char               buf[160];
    std::snprintf(
        buf, sizeof buf, "bench %dx%dx%d seed %llu\n", o.width, o.height, o.bands,
        static_cast<unsigned long long>( o.seed ) );
    out << buf;
    auto line = [&]( const char *stage, double s ) {
        std::snprintf( buf, sizeof buf, "  %-10s %10.3f s\n", stage, s );
        out << buf;
    };
    line( "generate", r.generate_seconds );
    line( "normalize", r.normalize_seconds );
    line( "fit", r.fit_seconds );
    line( "project", r.project_seconds );
    line( "render", r.render_seconds );
    if ( o.out_dir )
        line( "write", r.write_seconds );
    line( "pipeline", r.pipeline_seconds() );
    out << "  digest     " << r.digest << '\n';
    return out.str();
}

} // namespace palimpsest

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/hash.hpp>
#include <palimpsest/model_io.hpp>
#include <palimpsest/pipeline.hpp>
#include <palimpsest/quantize.hpp>
#include <palimpsest/service.hpp>
#include <palimpsest/text.hpp>

#include <httplib.h>
#include <json.hpp>

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace palimpsest
{

using json = nlohmann::json;

namespace
{

enum class RunStatus
{
    Queued,
    Running,
    Done,
    Failed,
};

const char *status_name( RunStatus s )
{
    switch ( s )
    {
        case RunStatus::Queued: return "QUEUED";
        case RunStatus::Running: return "RUNNING";
        case RunStatus::Done: return "DONE";
        case RunStatus::Failed: return "FAILED";
    }
    return "FAILED";
}

struct StackState
{
    SpectralStack         stack;
    std::filesystem::path manifest;
    std::string           manifest_hash;
    std::optional<Rect>   crop;
};

struct RunRequest
{
    Method                         method = Method::CVA;
    std::size_t                    k      = 0;
    std::vector<std::string>       modes  = { "full" };
    int                            depth  = 8;
    ImageFormat                    format = ImageFormat::Png;
    std::optional<CompositeRecipe> recipe;
    std::optional<int>             poly_order;
    std::string                    run_name;
    ClipTails                      tails = ClipTails::Both;
};

struct RunRecord
{
    int                               id = 0;
    RunRequest                        request;
    RunStatus                         status = RunStatus::Queued;
    std::string                       error;
    std::string                       error_kind;
    std::vector<std::string>          artifacts;
    std::optional<std::string>        preview;
    std::optional<std::string>        composite;
    std::optional<IndexReport>        metrics;
    std::string                       metrics_error;
    std::vector<double>               eigenvalues;
    Warnings                          warnings;
    std::filesystem::path             dir;

    // Inputs captured at submission.
    std::shared_ptr<const StackState> stack;
    std::optional<TrainingSet>        annotations;
    std::string                       annotation_text;
    std::optional<TrainingSet>        eval;
};

json report_json( const IndexReport &r )
{
    json j = { { "S_i", r.S_i }, { "S_j", r.S_j }, { "M", r.M_ij }, { "db", r.db } };
    j["dunn"] = r.dunn ? json( *r.dunn ) : json( nullptr );
    if ( !r.dunn )
        j["dunn_error"] = r.dunn_error;
    return j;
}

const char *error_kind_name( ErrorKind k )
{
    switch ( k )
    {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Data: return "data";
        case ErrorKind::Numeric: return "numeric";
    }
    return "data";
}

int http_status_for( const Error &e )
{
    return e.kind() == ErrorKind::Usage ? 400 : 422;
}

void send_json( httplib::Response &res, int status, const json &body )
{
    res.status = status;
    res.set_content( body.dump(), "application/json" );
}

void send_error( httplib::Response &res, int status, const std::string &message )
{
    send_json( res, status, { { "error", message } } );
}

/// Accepts 1, 1/2, 1/4, 1/8 and their decimal forms; returns the divisor.
int parse_scale( const std::string &text )
{
    if ( text.empty() || text == "1" || text == "1.0" )
        return 1;
    static const std::pair<const char *, int> forms[] = {
        { "1/2", 2 }, { "0.5", 2 },  { "1/4", 4 },   { "0.25", 4 },
        { "1/8", 8 }, { "0.125", 8 }, { ".5", 2 }, { ".25", 4 }, { ".125", 8 },
    };
    for ( const auto &[form, divisor] : forms )
        if ( text == form )
            return divisor;
    throw UsageError( "scale must be one of 1, 1/2, 1/4, 1/8" );
}

/// Block-averages one band of a normalized stack into an 8-bit gray image.
Image downsample_band( const SpectralStack &stack, std::size_t band, int f )
{
    const int w = stack.width() / f;
    const int h = stack.height() / f;
    if ( w < 1 || h < 1 )
        throw UsageError( "scale leaves no pixels" );
    Image        out( w, h, 1, 8 );
    const double area = static_cast<double>( f ) * f;
    for ( int y = 0; y < h; ++y )
        for ( int x = 0; x < w; ++x )
        {
            long sum = 0;
            for ( int dy = 0; dy < f; ++dy )
                for ( int dx = 0; dx < f; ++dx )
                    sum += stack.sample( band, x * f + dx, y * f + dy );
            out.at( x, y ) = static_cast<std::uint16_t>( round_half_away( sum / area ) );
        }
    return out;
}

std::string content_type_for( const std::string &name )
{
    auto ends = [&]( const char *ext ) {
        std::string e = ext;
        return name.size() >= e.size() && name.compare( name.size() - e.size(), e.size(), e ) == 0;
    };
    if ( ends( ".png" ) )
        return "image/png";
    if ( ends( ".tif" ) || ends( ".tiff" ) )
        return "image/tiff";
    if ( ends( ".json" ) )
        return "application/json";
    return "text/plain";
}

RunRequest parse_run_request( const json &body )
{
    RunRequest r;
    if ( !body.is_object() )
        throw UsageError( "run request must be a JSON object" );
    r.method = parse_method( body.value( "method", std::string( "cva" ) ) );
    if ( body.contains( "k" ) && !body["k"].is_null() )
    {
        if ( !body["k"].is_number_integer() || body["k"].get<long long>() < 0 )
            throw UsageError( "k must be a non-negative integer" );
        r.k = body["k"].get<std::size_t>();
    }
    if ( body.contains( "modes" ) )
    {
        r.modes.clear();
        for ( const auto &m : body["modes"] )
            r.modes.push_back( m.get<std::string>() );
    }
    else if ( body.contains( "mode" ) )
        r.modes = { body["mode"].get<std::string>() };
    r.depth  = body.value( "depth", 8 );
    r.format = parse_image_format( body.value( "format", std::string( "png" ) ) );
    if ( body.contains( "recipe" ) && !body["recipe"].is_null() )
        r.recipe = parse_recipe(
            body["recipe"].get<std::string>(), body.value( "swap", std::string() ) );
    if ( body.contains( "poly" ) && !body["poly"].is_null() )
        r.poly_order = body["poly"].get<int>();
    std::string tails = body.value( "tails", std::string( "both" ) );
    if ( tails == "both" )
        r.tails = ClipTails::Both;
    else if ( tails == "low" )
        r.tails = ClipTails::Low;
    else if ( tails == "high" )
        r.tails = ClipTails::High;
    else
        throw UsageError( "tails must be both, low or high" );
    r.run_name = body.value( "run_name", method_name( r.method ) );
    if ( r.run_name.empty() ||
         r.run_name.find_first_of( "/\\" ) != std::string::npos || r.run_name[0] == '.' )
        throw UsageError( "bad run name" );
    // Validate the specs up front so bad requests fail with 400, not FAILED.
    for ( const auto &m : r.modes )
        parse_render_spec( m, r.depth );
    return r;
}

} // namespace

struct AnnotatorService::Impl
{
    ServiceOptions options;

    std::mutex                              mutex;
    std::condition_variable                 cv;
    int                                     session_id = 0;
    std::shared_ptr<const StackState>       stack;
    std::optional<TrainingSet>              annotations;
    std::string                             annotation_text;
    Warnings                                annotation_warnings;
    long                                    annotation_version = 0;
    std::vector<std::shared_ptr<RunRecord>> runs;
    std::deque<std::shared_ptr<RunRecord>>  queue;
    bool                                    busy     = false;
    bool                                    stopping = false;
    std::thread                             worker;

    explicit Impl( ServiceOptions o )
        : options( std::move( o ) )
    {
        worker = std::thread( [this] { work(); } );
    }

    ~Impl()
    {
        {
            std::lock_guard lock( mutex );
            stopping = true;
        }
        cv.notify_all();
        worker.join();
    }

    void work()
    {
        for ( ;; )
        {
            std::shared_ptr<RunRecord> run;
            {
                std::unique_lock lock( mutex );
                cv.wait( lock, [this] { return stopping || !queue.empty(); } );
                if ( stopping )
                    return;
                run = queue.front();
                queue.pop_front();
                busy        = true;
                run->status = RunStatus::Running;
            }
            execute( *run );
            {
                std::lock_guard lock( mutex );
                busy = false;
            }
            cv.notify_all();
        }
    }

    /// Same core calls and filenames as `palimpsest render --method ...`.
    void execute( RunRecord &run )
    {
        RunRecord result = run; // work on a copy; publish under the lock
        try
        {
            const RunRequest &q = result.request;
            std::filesystem::create_directories( result.dir );

            FitOptions fo;
            fo.method = q.method;
            fo.k      = q.k;
            Provenance prov;
            prov.manifest_hash = result.stack->manifest_hash;
            if ( is_supervised( q.method ) )
                prov.annotation_hash = sha256_hex( result.annotation_text );
            ProjectionModel model = fit_model(
                result.stack->stack, result.annotations ? &*result.annotations : nullptr, fo,
                prov );
            const std::string model_name = q.run_name + ".model.json";
            save_model( model, result.dir / model_name );
            result.artifacts.push_back( model_name );
            for ( Eigen::Index k = 0; k < model.eigenvalues.size(); ++k )
                result.eigenvalues.push_back( model.eigenvalues[k] );

            RenderOptions ro;
            ro.run_name = q.run_name;
            for ( const auto &m : q.modes )
            {
                RenderSpec spec = parse_render_spec( m, q.depth );
                spec.tails      = q.tails;
                ro.specs.push_back( spec );
            }
            ro.format     = q.format;
            ro.recipe     = q.recipe;
            ro.poly_order = q.poly_order;
            ro.threads    = options.threads;
            RenderOutput out = render_model( result.stack->stack, model, ro, result.dir );
            for ( const auto &f : out.files )
                result.artifacts.push_back( f.filename().string() );
            if ( out.composite_path )
                result.composite = out.composite_path->filename().string();
            result.warnings = out.warnings;

            const Image &shown = out.composite ? *out.composite : *out.green;
            save_image( to_8bit( shown ), result.dir / "preview.png", ImageFormat::Png );
            result.preview = "preview.png";
            result.artifacts.push_back( "preview.png" );

            const TrainingSet *eval = result.eval ? &*result.eval
                                                  : result.annotations ? &*result.annotations
                                                                       : nullptr;
            if ( eval && eval->find_class( classes::underwriting ) >= 0 &&
                 eval->find_class( classes::parchment ) >= 0 )
            {
                try
                {
                    auto [under, parch] = evaluation_points( *eval );
                    result.metrics      = evaluate_image( *out.green, under, parch );
                }
                catch ( const Error &e )
                {
                    result.metrics_error = e.what();
                }
            }

            MetaEntries meta = {
                { "manifest", result.stack->manifest.string() },
                { "manifest_sha256", result.stack->manifest_hash },
                { "annotation_sha256", prov.annotation_hash },
                { "crop",
                  result.stack->crop
                      ? std::to_string( result.stack->crop->x ) + "," +
                            std::to_string( result.stack->crop->y ) + "," +
                            std::to_string( result.stack->crop->width ) + "," +
                            std::to_string( result.stack->crop->height )
                      : "" },
                { "method", method_name( q.method ) },
                { "k", std::to_string( model.components() ) },
                { "depth", std::to_string( q.depth ) },
                { "format", extension_for( q.format ).substr( 1 ) },
                { "run", q.run_name },
                { "model_sha256", sha256_file( result.dir / model_name ) },
            };
            std::string modes;
            for ( const auto &m : q.modes )
                modes += ( modes.empty() ? "" : "," ) + m;
            meta.emplace_back( "modes", modes );
            if ( q.recipe )
                meta.emplace_back(
                    "recipe", std::to_string( q.recipe->red ) + "," +
                                  std::to_string( q.recipe->green ) + "," +
                                  std::to_string( q.recipe->blue ) );
            write_run_meta( result.dir / "run.meta", meta );
            result.artifacts.push_back( "run.meta" );
            result.status = RunStatus::Done;
        }
        catch ( const Error &e )
        {
            result.status     = RunStatus::Failed;
            result.error      = e.what();
            result.error_kind = error_kind_name( e.kind() );
        }
        catch ( const std::exception &e )
        {
            result.status     = RunStatus::Failed;
            result.error      = e.what();
            result.error_kind = "internal";
        }

        std::lock_guard lock( mutex );
        run = std::move( result );
    }

    json session_json() const
    {
        json j = { { "session_id", session_id }, { "annotation_version", annotation_version } };
        if ( stack )
            j["stack"] = { { "manifest", stack->manifest.string() },
                           { "width", stack->stack.width() },
                           { "height", stack->stack.height() },
                           { "bands", stack->stack.band_count() } };
        else
            j["stack"] = nullptr;
        json counts = json::object();
        if ( annotations )
            for ( const auto &c : annotations->classes() )
                counts[c.name] = annotations->count( c.id );
        j["annotations"] = counts;
        json ids         = json::array();
        for ( const auto &r : runs )
            ids.push_back( r->id );
        j["runs"] = ids;
        return j;
    }

    json run_json( const RunRecord &r ) const
    {
        json j = { { "run_id", r.id },
                   { "method", method_name( r.request.method ) },
                   { "k", r.request.k },
                   { "modes", r.request.modes },
                   { "depth", r.request.depth },
                   { "status", status_name( r.status ) } };
        const std::string base = "/api/runs/" + std::to_string( r.id ) + "/artifact/";
        if ( r.status == RunStatus::Done )
        {
            json arts = json::array();
            for ( const auto &a : r.artifacts )
                arts.push_back( { { "name", a }, { "url", base + a } } );
            j["artifacts"] = arts;
            j["preview"]   = r.preview ? json( base + *r.preview ) : json( nullptr );
            j["composite"] = r.composite ? json( base + *r.composite ) : json( nullptr );
            j["metrics"]   = r.metrics ? report_json( *r.metrics ) : json( nullptr );
            if ( !r.metrics_error.empty() )
                j["metrics_error"] = r.metrics_error;
            j["eigenvalues"] = r.eigenvalues;
            j["warnings"]    = r.warnings;
        }
        else
            j["artifacts"] = json::array();
        if ( r.status == RunStatus::Failed )
        {
            j["error"]      = r.error;
            j["error_kind"] = r.error_kind;
        }
        return j;
    }

    std::shared_ptr<RunRecord> find_run( int id )
    {
        for ( auto &r : runs )
            if ( r->id == id )
                return r;
        return nullptr;
    }

    void install( httplib::Server &server )
    {
        server.Get( "/api/session", [this]( const httplib::Request &, httplib::Response &res ) {
            std::lock_guard lock( mutex );
            send_json( res, 200, session_json() );
        } );

        server.Post(
            "/api/session/stack", [this]( const httplib::Request &req, httplib::Response &res ) {
                try
                {
                    json body = json::parse( req.body, nullptr, false );
                    if ( body.is_discarded() || !body.is_object() || !body.contains( "manifest" ) ||
                         !body["manifest"].is_string() )
                        throw UsageError( "body must be a JSON object with a 'manifest' path" );
                    std::filesystem::path manifest = body["manifest"].get<std::string>();
                    std::optional<Rect>   rect;
                    if ( body.contains( "crop" ) && !body["crop"].is_null() )
                    {
                        const json &c = body["crop"];
                        if ( c.is_string() )
                            rect = parse_rect( c.get<std::string>() );
                        else
                            rect = Rect{ c.at( "x" ).get<int>(), c.at( "y" ).get<int>(),
                                         c.at( "width" ).get<int>(), c.at( "height" ).get<int>() };
                    }
                    Warnings warnings;
                    auto     state = std::make_shared<StackState>( StackState{
                        prepare_stack( manifest, rect, options.scope, &warnings ), manifest,
                        sha256_file( manifest ), rect } );

                    std::lock_guard lock( mutex );
                    ++session_id;
                    stack = std::move( state );
                    annotations.reset();
                    annotation_text.clear();
                    annotation_warnings.clear();
                    json j        = session_json();
                    j["warnings"] = warnings;
                    send_json( res, 200, j );
                }
                catch ( const Error &e )
                {
                    send_error( res, http_status_for( e ), e.what() );
                }
                catch ( const json::exception &e )
                {
                    send_error( res, 400, e.what() );
                }
            } );

        server.Get( "/api/bands", [this]( const httplib::Request &, httplib::Response &res ) {
            std::lock_guard lock( mutex );
            if ( !stack )
                return send_error( res, 404, "no stack loaded" );
            json bands = json::array();
            for ( const Band &b : stack->stack.bands() )
                bands.push_back(
                    { { "band_id", b.meta.band_id },
                      { "wavelength_nm", b.meta.wavelength_nm },
                      { "illumination", b.meta.illumination },
                      { "filter", b.meta.filter ? json( *b.meta.filter ) : json( nullptr ) } } );
            send_json(
                res, 200,
                { { "width", stack->stack.width() },
                  { "height", stack->stack.height() },
                  { "bands", bands } } );
        } );

        server.Get(
            R"(/api/band/(-?\d+))", [this]( const httplib::Request &req, httplib::Response &res ) {
                std::shared_ptr<const StackState> s;
                {
                    std::lock_guard lock( mutex );
                    s = stack;
                }
                if ( !s )
                    return send_error( res, 404, "no stack loaded" );
                try
                {
                    int         id = parse_int( req.matches[1].str(), "band id" );
                    std::size_t index;
                    try
                    {
                        index = s->stack.index_of( id );
                    }
                    catch ( const Error & )
                    {
                        return send_error( res, 404, "unknown band " + std::to_string( id ) );
                    }
                    int   f   = parse_scale( req.get_param_value( "scale" ) );
                    auto  png = encode_png( downsample_band( s->stack, index, f ) );
                    res.status = 200;
                    res.set_content(
                        std::string( png.begin(), png.end() ), "image/png" );
                }
                catch ( const Error &e )
                {
                    send_error( res, http_status_for( e ), e.what() );
                }
            } );

        server.Put( "/api/annotations", [this]( const httplib::Request &req, httplib::Response &res ) {
            Warnings    warnings;
            TrainingSet ts;
            try
            {
                ts = parse_annotations( req.body, &warnings );
                if ( ts.empty() )
                    throw DataError( "annotation file has no points" );
            }
            catch ( const Error &e )
            {
                return send_error( res, 422, e.what() );
            }
            std::lock_guard lock( mutex );
            annotations         = std::move( ts );
            annotation_text     = req.body;
            annotation_warnings = warnings;
            ++annotation_version;
            json counts = json::object();
            for ( const auto &c : annotations->classes() )
                counts[c.name] = annotations->count( c.id );
            send_json(
                res, 200,
                { { "version", annotation_version },
                  { "counts", counts },
                  { "warnings", warnings } } );
        } );

        server.Get( "/api/annotations", [this]( const httplib::Request &, httplib::Response &res ) {
            std::lock_guard lock( mutex );
            if ( !annotations )
                return send_error( res, 404, "no annotations uploaded" );
            res.status = 200;
            res.set_header( "X-Annotation-Version", std::to_string( annotation_version ) );
            res.set_content( annotation_text, "text/csv" );
        } );

        server.Post( "/api/runs", [this]( const httplib::Request &req, httplib::Response &res ) {
            auto run = std::make_shared<RunRecord>();
            try
            {
                json body = req.body.empty() ? json::object() : json::parse( req.body, nullptr, false );
                if ( body.is_discarded() )
                    throw UsageError( "run request is not valid JSON" );
                run->request = parse_run_request( body );
                if ( body.contains( "eval" ) && !body["eval"].is_null() )
                    run->eval = parse_annotations( body["eval"].get<std::string>() );
            }
            catch ( const Error &e )
            {
                return send_error( res, http_status_for( e ), e.what() );
            }
            catch ( const json::exception &e )
            {
                return send_error( res, 400, e.what() );
            }

            {
                std::lock_guard lock( mutex );
                if ( !stack )
                    return send_error( res, 409, "no stack loaded" );
                if ( is_supervised( run->request.method ) && !annotations )
                    return send_error(
                        res, 409,
                        method_name( run->request.method ) + " needs annotations; upload them first" );
                run->id              = static_cast<int>( runs.size() ) + 1;
                run->stack           = stack;
                run->annotations     = annotations;
                run->annotation_text = annotation_text;
                run->dir = options.out_dir / "runs" / std::to_string( run->id );
                runs.push_back( run );
                queue.push_back( run );
                send_json(
                    res, 202,
                    { { "run_id", run->id },
                      { "status", status_name( run->status ) },
                      { "url", "/api/runs/" + std::to_string( run->id ) } } );
            }
            cv.notify_all();
        } );

        server.Get( "/api/runs", [this]( const httplib::Request &, httplib::Response &res ) {
            std::lock_guard lock( mutex );
            json            list = json::array();
            for ( const auto &r : runs )
                list.push_back( run_json( *r ) );
            send_json( res, 200, list );
        } );

        server.Get( R"(/api/runs/(\d+))", [this]( const httplib::Request &req, httplib::Response &res ) {
            std::lock_guard lock( mutex );
            auto            run = find_run( std::atoi( req.matches[1].str().c_str() ) );
            if ( !run )
                return send_error( res, 404, "unknown run" );
            send_json( res, 200, run_json( *run ) );
        } );

        server.Get(
            R"(/api/runs/(\d+)/artifact/([^/]+))",
            [this]( const httplib::Request &req, httplib::Response &res ) {
                std::filesystem::path path;
                std::string           name = req.matches[2].str();
                {
                    std::lock_guard lock( mutex );
                    auto            run = find_run( std::atoi( req.matches[1].str().c_str() ) );
                    if ( !run || run->status != RunStatus::Done ||
                         std::find( run->artifacts.begin(), run->artifacts.end(), name ) ==
                             run->artifacts.end() )
                        return send_error( res, 404, "unknown artifact" );
                    path = run->dir / name;
                }
                try
                {
                    res.status = 200;
                    res.set_content( read_text_file( path ), content_type_for( name ) );
                }
                catch ( const Error &e )
                {
                    send_error( res, 404, e.what() );
                }
            } );

        if ( options.ui_dir && std::filesystem::is_directory( *options.ui_dir ) )
            server.set_mount_point( "/", options.ui_dir->string() );
    }
};

AnnotatorService::AnnotatorService( ServiceOptions options )
    : impl_( std::make_unique<Impl>( std::move( options ) ) )
{}

AnnotatorService::~AnnotatorService() = default;

void AnnotatorService::install( httplib::Server &server )
{
    impl_->install( server );
}

bool AnnotatorService::wait_idle( std::chrono::milliseconds timeout )
{
    std::unique_lock lock( impl_->mutex );
    return impl_->cv.wait_for(
        lock, timeout, [this] { return impl_->queue.empty() && !impl_->busy; } );
}

int serve( const ServiceOptions &options, const std::string &host, int port )
{
    AnnotatorService service( options );
    httplib::Server  server;
    service.install( server );
    if ( !server.bind_to_port( host, port ) )
        return 1;
    server.listen_after_bind();
    return 0;
}

} // namespace palimpsest

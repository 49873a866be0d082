// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/spectral_stack.hpp>

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace httplib
{
class Server;
}

namespace palimpsest
{

struct ServiceOptions
{
    /// Run artifacts go to `<out_dir>/runs/<run_id>/`.
    std::filesystem::path out_dir = "palimpsest-out";
    /// Static UI bundle served at `/` when set and present.
    std::optional<std::filesystem::path> ui_dir;
    NormalizeScope                       scope   = NormalizeScope::PerBand;
    unsigned                             threads = 0;
};

/// In-memory annotation session plus a FIFO run queue executed by one worker
/// thread. Handlers may be called concurrently.
class AnnotatorService
{
public:
    explicit AnnotatorService( ServiceOptions options );
    ~AnnotatorService();

    AnnotatorService( const AnnotatorService & )            = delete;
    AnnotatorService &operator=( const AnnotatorService & ) = delete;

    /// Registers the `/api` routes (and the static mount) on `server`.
    void install( httplib::Server &server );

    /// Blocks until the queue is empty and no run is executing.
    bool wait_idle( std::chrono::milliseconds timeout );

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serves until the process is interrupted. Returns nonzero if binding fails.
int serve( const ServiceOptions &options, const std::string &host, int port );

} // namespace palimpsest

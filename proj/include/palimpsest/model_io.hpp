// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <palimpsest/dimred.hpp>

#include <filesystem>
#include <string>

namespace palimpsest
{

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document. Doubles are written in shortest round-trip
/// form, so parse_model(serialize_model(m)) reproduces m bit for bit.
std::string     serialize_model( const ProjectionModel &model );
ProjectionModel parse_model( const std::string &text );

void            save_model( const ProjectionModel &model, const std::filesystem::path &path );
ProjectionModel load_model( const std::filesystem::path &path );

} // namespace palimpsest

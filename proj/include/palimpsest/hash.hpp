// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace palimpsest
{

/// Lower-case hex SHA-256.
std::string sha256_hex( std::string_view bytes );
std::string sha256_file( const std::filesystem::path &path );

/// Incremental SHA-256.
class Sha256
{
public:
    Sha256();
    ~Sha256();
    Sha256( const Sha256 & )            = delete;
    Sha256 &operator=( const Sha256 & ) = delete;

    void        update( const void *data, std::size_t size );
    std::string hex_digest();

private:
    struct State;
    std::unique_ptr<State> state_;
};

} // namespace palimpsest

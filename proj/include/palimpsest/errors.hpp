// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace palimpsest
{

/// Error categories. The numeric value doubles as the process exit code.
enum class ErrorKind
{
    Usage   = 1,
    Data    = 2,
    Numeric = 3,
};

class Error : public std::runtime_error
{
public:
    Error( ErrorKind kind, const std::string &what )
        : std::runtime_error( what ), kind_( kind )
    {}

    ErrorKind kind() const noexcept { return kind_; }
    int       exit_code() const noexcept { return static_cast<int>( kind_ ); }

private:
    ErrorKind kind_;
};

/// Bad invocation or invalid parameter combination.
class UsageError : public Error
{
public:
    explicit UsageError( const std::string &what )
        : Error( ErrorKind::Usage, what )
    {}
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error
{
public:
    explicit DataError( const std::string &what )
        : Error( ErrorKind::Data, what )
    {}
};

/// Degenerate numerics: singular matrices, zero denominators.
class NumericError : public Error
{
public:
    explicit NumericError( const std::string &what )
        : Error( ErrorKind::Numeric, what )
    {}
};

/// Sink for non-fatal diagnostics. Operations append when one is supplied.
using Warnings = std::vector<std::string>;

inline void warn( Warnings *sink, std::string message )
{
    if ( sink )
        sink->push_back( std::move( message ) );
}

} // namespace palimpsest

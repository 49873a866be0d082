// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the palimpsest-enhance Project.

#include <palimpsest/hash.hpp>
#include <palimpsest/text.hpp>

#include <openssl/evp.h>

#include <array>
#include <memory>

namespace palimpsest
{

struct Sha256::State
{
    std::unique_ptr<EVP_MD_CTX, decltype( &EVP_MD_CTX_free )> ctx{ EVP_MD_CTX_new(), &EVP_MD_CTX_free };
};

Sha256::Sha256()
    : state_( std::make_unique<State>() )
{
    if ( !state_->ctx || EVP_DigestInit_ex( state_->ctx.get(), EVP_sha256(), nullptr ) != 1 )
        throw DataError( "SHA-256 computation failed" );
}

Sha256::~Sha256() = default;

void Sha256::update( const void *data, std::size_t size )
{
    if ( EVP_DigestUpdate( state_->ctx.get(), data, size ) != 1 )
        throw DataError( "SHA-256 computation failed" );
}

std::string Sha256::hex_digest()
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int                               len = 0;
    if ( EVP_DigestFinal_ex( state_->ctx.get(), digest.data(), &len ) != 1 )
        throw DataError( "SHA-256 computation failed" );

    static constexpr char hex[] = "0123456789abcdef";
    std::string           out;
    out.reserve( len * 2 );
    for ( unsigned int i = 0; i < len; ++i )
    {
        out.push_back( hex[digest[i] >> 4] );
        out.push_back( hex[digest[i] & 0xf] );
    }
    return out;
}

std::string sha256_hex( std::string_view bytes )
{
    Sha256 h;
    h.update( bytes.data(), bytes.size() );
    return h.hex_digest();
}

std::string sha256_file( const std::filesystem::path &path )
{
    return sha256_hex( read_text_file( path ) );
}

} // namespace palimpsest

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <openssl/evp.h>
#include <openssl/rand.h>

namespace biokey {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(const std::vector<std::uint8_t>& data) {
    Digest out{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("sha256: EVP_MD_CTX_new failed");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, out.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok || len != out.size()) throw std::runtime_error("sha256: digest computation failed");
    return out;
}

inline std::vector<std::uint8_t> secure_random_bytes(std::size_t count) {
    std::vector<std::uint8_t> out(count);
    if (RAND_bytes(out.data(), static_cast<int>(count)) != 1)
        throw std::runtime_error("secure_random_bytes: entropy source failure");
    return out;
}

} // namespace biokey

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/prng.hpp"

namespace biokey {

// Packed bit vector. Bit i lives in byte i/8, LSB-first within the byte;
// pad bits in the final byte are always zero. This packing is the
// project-wide convention for files and hashes.
class BitVector {
  public:
    BitVector() = default;
    explicit BitVector(std::size_t len) : len_(len), bytes_((len + 7) / 8, 0) {}

    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    bool get(std::size_t i) const { return (bytes_[i >> 3] >> (i & 7)) & 1u; }

    void set(std::size_t i, bool v) {
        const std::uint8_t mask = static_cast<std::uint8_t>(1u << (i & 7));
        if (v)
            bytes_[i >> 3] |= mask;
        else
            bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
    }

    void flip(std::size_t i) { bytes_[i >> 3] ^= static_cast<std::uint8_t>(1u << (i & 7)); }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

    std::size_t popcount() const {
        std::size_t c = 0;
        for (std::uint8_t b : bytes_) c += static_cast<std::size_t>(std::popcount(b));
        return c;
    }

    BitVector operator^(const BitVector& o) const {
        require_same_length(o, "xor");
        BitVector r(len_);
        for (std::size_t i = 0; i < bytes_.size(); ++i) r.bytes_[i] = bytes_[i] ^ o.bytes_[i];
        return r;
    }

    BitVector operator&(const BitVector& o) const {
        require_same_length(o, "and");
        BitVector r(len_);
        for (std::size_t i = 0; i < bytes_.size(); ++i) r.bytes_[i] = bytes_[i] & o.bytes_[i];
        return r;
    }

    bool operator==(const BitVector& o) const { return len_ == o.len_ && bytes_ == o.bytes_; }
    bool operator!=(const BitVector& o) const { return !(*this == o); }

    std::size_t hamming(const BitVector& o) const { return (*this ^ o).popcount(); }

    BitVector slice(std::size_t begin, std::size_t count) const {
        if (begin + count > len_) throw std::invalid_argument("BitVector::slice out of range");
        BitVector r(count);
        for (std::size_t i = 0; i < count; ++i) r.set(i, get(begin + i));
        return r;
    }

    static BitVector random(std::size_t len, SplitMix64& rng) {
        BitVector r(len);
        for (std::size_t i = 0; i < len; ++i) r.set(i, rng.next() & 1u);
        return r;
    }

    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s;
        s.reserve(bytes_.size() * 2);
        for (std::uint8_t b : bytes_) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 0xF]);
        }
        return s;
    }

    static BitVector from_hex(const std::string& hex, std::size_t len) {
        if (hex.size() != ((len + 7) / 8) * 2)
            throw std::invalid_argument("BitVector::from_hex: hex length does not match bit length");
        BitVector r(len);
        for (std::size_t i = 0; i < r.bytes_.size(); ++i) {
            r.bytes_[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
        }
        // reject nonzero pad bits
        if (len % 8 != 0) {
            const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFF << (len % 8));
            if (r.bytes_.back() & pad_mask)
                throw std::invalid_argument("BitVector::from_hex: nonzero pad bits");
        }
        return r;
    }

  private:
    static unsigned nibble(char c) {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
        throw std::invalid_argument("BitVector::from_hex: bad hex digit");
    }

    void require_same_length(const BitVector& o, const char* op) const {
        if (len_ != o.len_)
            throw std::invalid_argument(std::string("BitVector ") + op + ": length mismatch");
    }

    std::size_t len_ = 0;
    std::vector<std::uint8_t> bytes_;
};

} // namespace biokey

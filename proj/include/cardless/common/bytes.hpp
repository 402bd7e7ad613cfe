#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cardless {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view text);
std::string to_string(ByteView bytes);

// Lower-case hex. hex_decode throws std::invalid_argument on odd length or
// non-hex characters.
std::string hex_encode(ByteView bytes);
Bytes hex_decode(std::string_view hex);

// RFC 4648 base-64 with padding.
std::string base64_encode(ByteView bytes);
Bytes base64_decode(std::string_view text);

// Unpadded URL-safe alphabet ('-' and '_').
std::string base64url_encode(ByteView bytes);
Bytes base64url_decode(std::string_view text);

void append_be(Bytes& out, std::uint64_t value, std::size_t width);
std::uint64_t read_be(ByteView bytes, std::size_t offset, std::size_t width);

}  // namespace cardless

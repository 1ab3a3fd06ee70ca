#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coreg {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// nullopt on malformed input.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

/// PCM-16 little-endian <-> base64, the AudioChunk wire encoding.
std::string pcm_to_base64(std::span<const std::int16_t> pcm);
std::optional<std::vector<std::int16_t>> pcm_from_base64(std::string_view text);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace coreg

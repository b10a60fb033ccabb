#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace promptsteer {

std::string sha256_hex(std::string_view data);

// FNV-1a; stable across processes and platforms.
std::uint64_t stable_hash64(std::string_view data);

// Deterministic byte stream: SHA-256(key || 0x00 || message || counter_be64) blocks.
std::string keyed_expand(std::string_view key, std::string_view message, std::size_t length);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

}  // namespace promptsteer

#pragma once

#include <string>

#include "wavemap/matching.hpp"

namespace wavemap::archive {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "wavemap 1.0.0";

// Serialize/parse the profile archive (schema 1). Doubles round-trip
// bit-exactly (shortest-round-trip decimal, <= 17 significant digits).
std::string to_json(const match::GlobalProfile& p);
match::GlobalProfile from_json(const std::string& text);

// Write text to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

}  // namespace wavemap::archive

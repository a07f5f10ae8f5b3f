#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace omd {

/// Compact JSON with object keys in sorted order and every floating-point
/// number written with 17 significant digits, so that parsing the text back
/// reproduces each double bit for bit.  Non-finite numbers are rejected.
std::string dump_json(const nlohmann::json& j);

/// Formats one double the way dump_json does.
std::string format_double(double v);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace omd

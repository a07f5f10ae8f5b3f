#include "omd/json_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace omd {

using nlohmann::json;

namespace {

void write_string(std::string& out, const std::string& s) {
  // nlohmann's own escaping is exactly what we want for strings.
  out += json(s).dump();
}

void write(std::string& out, const json& j) {
  switch (j.type()) {
    case json::value_t::null:
      out += "null";
      break;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case json::value_t::string:
      write_string(out, j.get_ref<const std::string&>());
      break;
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        write(out, e);
      }
      out += ']';
      break;
    }
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        write_string(out, it.key());
        out += ':';
        write(out, it.value());
      }
      out += '}';
      break;
    }
    default:
      throw std::invalid_argument("dump_json: unsupported value type");
  }
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::domain_error("dump_json: non-finite number");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: to_chars failed");
  std::string s(buf, res.ptr);
  // Keep the value typed as floating point when read back.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string dump_json(const json& j) {
  std::string out;
  write(out, j);
  return out;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace omd

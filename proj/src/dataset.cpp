#include "omd/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "omd/json_io.hpp"

namespace omd {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                                  : source + ": " + what),
      line_(line) {}

DataFormat parse_data_format(const std::string& name) {
  if (name == "svmlight") return DataFormat::svmlight;
  if (name == "csv") return DataFormat::csv;
  throw std::invalid_argument("unknown data format '" + name + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double finish_label(double y, const ParseOptions& opts, const std::string& source, std::size_t line) {
  if (opts.remap01) {
    if (y == 0.0) {
      y = -1.0;
    } else if (y != 1.0) {
      throw ParseError(source, line, "label must be 0 or 1 when remapping");
    }
  }
  if (opts.classification && y != 1.0 && y != -1.0) {
    throw ParseError(source, line, "classification label must be -1 or +1");
  }
  return y;
}

struct RawExample {
  std::vector<SparseVec::Entry> entries;
  double y;
  std::size_t line;
};

Dataset assemble(std::vector<RawExample> raw, std::size_t max_index_plus_one, const ParseOptions& opts,
                 const std::string& source) {
  Dataset data;
  if (opts.dim != 0) {
    if (max_index_plus_one > opts.dim) {
      throw ParseError(source, 0,
                       "feature index " + std::to_string(max_index_plus_one) +
                           " exceeds declared dimension " + std::to_string(opts.dim));
    }
    data.dim = opts.dim;
  } else {
    data.dim = max_index_plus_one;
  }
  data.examples.reserve(raw.size());
  for (auto& r : raw) data.examples.push_back({SparseVec(data.dim, std::move(r.entries)), r.y});
  return data;
}

Dataset parse_svmlight(std::istream& in, const ParseOptions& opts, const std::string& source) {
  std::vector<RawExample> raw;
  std::size_t max_dim = 0;
  std::string line;
  std::size_t lineno = 0;
  bool any_line = false;
  while (std::getline(in, line)) {
    ++lineno;
    any_line = true;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto tokens = split_ws(body);
    RawExample ex{{}, 0.0, lineno};
    double y;
    if (!parse_real(tokens[0], y)) throw ParseError(source, lineno, "bad label '" + std::string(tokens[0]) + "'");
    ex.y = finish_label(y, opts, source, lineno);
    std::size_t prev = 0;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto tok = tokens[k];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(source, lineno, "expected idx:val, got '" + std::string(tok) + "'");
      }
      std::size_t idx;
      double val;
      if (!parse_index(tok.substr(0, colon), idx) || idx == 0) {
        throw ParseError(source, lineno, "bad feature index in '" + std::string(tok) + "'");
      }
      if (!parse_real(tok.substr(colon + 1), val)) {
        throw ParseError(source, lineno, "non-numeric value in '" + std::string(tok) + "'");
      }
      if (idx <= prev) throw ParseError(source, lineno, "feature indices must be strictly increasing");
      prev = idx;
      ex.entries.push_back({idx - 1, val});
      max_dim = std::max(max_dim, idx);
    }
    raw.push_back(std::move(ex));
  }
  if (!any_line) throw ParseError(source, 0, "empty file");
  return assemble(std::move(raw), max_dim, opts, source);
}

Dataset parse_csv(std::istream& in, const ParseOptions& opts, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 0, "empty file");
  ++lineno;
  const auto header = split_commas(trim(line));
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == opts.label_column) label_col = i;
  }
  if (label_col == header.size()) {
    throw ParseError(source, 1, "no column named '" + opts.label_column + "'");
  }
  const std::size_t d = header.size() - 1;
  std::vector<RawExample> raw;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split_commas(body);
    if (cells.size() != header.size()) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()));
    }
    RawExample ex{{}, 0.0, lineno};
    std::size_t feature = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v;
      if (!parse_real(cells[i], v)) {
        throw ParseError(source, lineno, "non-numeric field '" + std::string(cells[i]) + "'");
      }
      if (i == label_col) {
        ex.y = finish_label(v, opts, source, lineno);
      } else {
        if (v != 0.0) ex.entries.push_back({feature, v});
        ++feature;
      }
    }
    raw.push_back(std::move(ex));
  }
  return assemble(std::move(raw), d, opts, source);
}

}  // namespace

Dataset parse_dataset(std::istream& in, const ParseOptions& opts, const std::string& source) {
  return opts.format == DataFormat::svmlight ? parse_svmlight(in, opts, source)
                                             : parse_csv(in, opts, source);
}

Dataset parse_dataset_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_dataset(in, opts, path);
}

void write_svmlight(std::ostream& out, const Dataset& data) {
  for (const auto& ex : data.examples) {
    out << format_double(ex.y);
    for (const auto& e : ex.x.entries()) out << ' ' << (e.index + 1) << ':' << format_double(e.value);
    out << '\n';
  }
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (std::size_t i = 0; i < data.dim; ++i) out << ",f" << (i + 1);
  out << '\n';
  for (const auto& ex : data.examples) {
    out << format_double(ex.y);
    const RealVec dense = ex.x.to_dense();
    for (double v : dense) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace omd

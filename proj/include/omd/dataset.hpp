#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "omd/linalg.hpp"

namespace omd {

struct Example {
  SparseVec x;
  double y = 0.0;
  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t dim = 0;
  /// Comparator embedded by a generator, if any.
  std::optional<RealVec> target;
};

/// Malformed input; line is 1-based (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class DataFormat { svmlight, csv };
DataFormat parse_data_format(const std::string& name);

struct ParseOptions {
  DataFormat format = DataFormat::svmlight;
  /// Column holding the label (csv only).
  std::string label_column = "label";
  /// Map labels 0/1 to -1/+1.
  bool remap01 = false;
  /// Require labels in {-1, +1} after remapping.
  bool classification = false;
  /// 0 infers the dimension from the data.
  std::size_t dim = 0;
};

Dataset parse_dataset(std::istream& in, const ParseOptions& opts, const std::string& source = "<stream>");
Dataset parse_dataset_file(const std::string& path, const ParseOptions& opts);

/// "label idx:val ..." with 1-based indices and 17-digit values.
void write_svmlight(std::ostream& out, const Dataset& data);
/// Header "label,f1,...,fd" then one dense row per example.
void write_csv(std::ostream& out, const Dataset& data);

}  // namespace omd

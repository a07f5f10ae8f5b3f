#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "omd/dataset.hpp"
#include "omd/learners.hpp"
#include "omd/linalg.hpp"

namespace omd {

inline constexpr int kTraceVersion = 1;

struct TraceHeader {
  int version = kTraceVersion;
  std::string learner;
  nlohmann::json params = nlohmann::json::object();
  std::string fingerprint;
  std::string config_hash;
  nlohmann::json config = nlohmann::json::object();
  std::size_t dim = 0;
};

/// One audited round.
struct TraceRecord {
  std::size_t t = 0;
  SparseVec x;
  double y = 0.0;
  StepOutcome out;
};

struct TraceFooter {
  std::size_t T = 0;
  RealVec theta;
  nlohmann::json regularizer;
};

struct RunTrace {
  TraceHeader header;
  std::vector<TraceRecord> records;
  TraceFooter footer;

  /// f_T as a live object, rebuilt from the footer.
  RegularizerPtr final_regularizer() const;
};

/// Hash of the learner's name and hyperparameters.
std::string learner_fingerprint(const std::string& name, const nlohmann::json& params);
std::string learner_fingerprint(const Learner& learner);

TraceHeader make_header(const Learner& learner, const nlohmann::json& config);
TraceFooter make_footer(const Learner& learner);

nlohmann::json to_json(const TraceHeader& h);
nlohmann::json to_json(const TraceRecord& r);
nlohmann::json to_json(const TraceFooter& f);

/// JSON lines: header, one line per record, footer.
void write_trace(std::ostream& out, const RunTrace& trace);
std::string trace_to_string(const RunTrace& trace);
/// Throws ParseError naming the first bad line; a missing footer is an error.
RunTrace read_trace(std::istream& in, const std::string& source = "<trace>");
RunTrace read_trace_file(const std::string& path);

}  // namespace omd

#include "omd/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "omd/json_io.hpp"

namespace omd {

using nlohmann::json;

RegularizerPtr RunTrace::final_regularizer() const { return regularizer_from_json(footer.regularizer); }

std::string learner_fingerprint(const std::string& name, const json& params) {
  json j;
  j["learner"] = name;
  j["params"] = params;
  return fnv1a_hex(dump_json(j));
}

std::string learner_fingerprint(const Learner& learner) {
  return learner_fingerprint(std::string(learner.name()), learner.params());
}

TraceHeader make_header(const Learner& learner, const json& config) {
  TraceHeader h;
  h.learner = std::string(learner.name());
  h.params = learner.params();
  h.fingerprint = learner_fingerprint(h.learner, h.params);
  h.config = config;
  h.config_hash = fnv1a_hex(dump_json(config));
  h.dim = learner.dim();
  return h;
}

TraceFooter make_footer(const Learner& learner) {
  TraceFooter f;
  f.T = learner.state().t;
  f.theta = learner.state().theta;
  f.regularizer = learner.regularizer().to_json();
  return f;
}

json to_json(const TraceHeader& h) {
  json j;
  j["type"] = "header";
  j["version"] = h.version;
  j["learner"] = h.learner;
  j["params"] = h.params;
  j["fingerprint"] = h.fingerprint;
  j["config_hash"] = h.config_hash;
  j["config"] = h.config;
  j["dim"] = h.dim;
  return j;
}

json to_json(const TraceRecord& r) {
  json j;
  j["type"] = "step";
  j["t"] = r.t;
  json idx = json::array();
  json val = json::array();
  for (const auto& e : r.x.entries()) {
    idx.push_back(e.index);
    val.push_back(e.value);
  }
  j["x"] = {{"idx", idx}, {"val", val}};
  j["y"] = r.y;
  const StepOutcome& o = r.out;
  j["prediction"] = o.prediction;
  j["loss"] = o.loss;
  j["eta"] = o.eta;
  j["z_scale"] = o.z_scale;
  j["mistake"] = o.mistake;
  j["margin_error"] = o.margin_error;
  j["updated"] = o.updated;
  j["inner_zw"] = o.inner_zw;
  j["z_dual_norm_sq"] = o.z_dual_norm_sq;
  j["beta"] = o.beta;
  j["residue"] = o.residue;
  j["residue_upper"] = o.residue_upper;
  j["penalty"] = o.penalty;
  json extras = json::object();
  for (const auto& [k, v] : o.extras) extras[k] = v;
  j["extras"] = extras;
  return j;
}

json to_json(const TraceFooter& f) {
  json j;
  j["type"] = "footer";
  j["T"] = f.T;
  j["theta"] = f.theta;
  j["regularizer"] = f.regularizer;
  return j;
}

void write_trace(std::ostream& out, const RunTrace& trace) {
  out << dump_json(to_json(trace.header)) << '\n';
  for (const auto& r : trace.records) out << dump_json(to_json(r)) << '\n';
  out << dump_json(to_json(trace.footer)) << '\n';
}

std::string trace_to_string(const RunTrace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

namespace {

double num(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw std::runtime_error(std::string("missing number '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite '") + key + "'");
  return v;
}

bool flag(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) throw std::runtime_error(std::string("missing flag '") + key + "'");
  return it->get<bool>();
}

std::size_t count(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw std::runtime_error(std::string("missing count '") + key + "'");
  }
  return it->get<std::size_t>();
}

TraceHeader header_from_json(const json& j) {
  TraceHeader h;
  h.version = j.at("version").get<int>();
  if (h.version != kTraceVersion) throw std::runtime_error("unsupported trace version " + std::to_string(h.version));
  h.learner = j.at("learner").get<std::string>();
  h.params = j.at("params");
  h.fingerprint = j.at("fingerprint").get<std::string>();
  h.config_hash = j.at("config_hash").get<std::string>();
  h.config = j.at("config");
  h.dim = count(j, "dim");
  return h;
}

TraceRecord record_from_json(const json& j, std::size_t dim) {
  TraceRecord r;
  r.t = count(j, "t");
  const json& x = j.at("x");
  const auto idx = x.at("idx").get<std::vector<std::size_t>>();
  const auto val = x.at("val").get<std::vector<double>>();
  if (idx.size() != val.size()) throw std::runtime_error("x.idx and x.val differ in length");
  std::vector<SparseVec::Entry> entries;
  entries.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) entries.push_back({idx[k], val[k]});
  r.x = SparseVec(dim, std::move(entries));
  r.y = num(j, "y");
  StepOutcome& o = r.out;
  o.prediction = num(j, "prediction");
  o.loss = num(j, "loss");
  o.eta = num(j, "eta");
  o.z_scale = num(j, "z_scale");
  o.mistake = flag(j, "mistake");
  o.margin_error = flag(j, "margin_error");
  o.updated = flag(j, "updated");
  o.inner_zw = num(j, "inner_zw");
  o.z_dual_norm_sq = num(j, "z_dual_norm_sq");
  o.beta = num(j, "beta");
  o.residue = num(j, "residue");
  o.residue_upper = num(j, "residue_upper");
  o.penalty = num(j, "penalty");
  for (const auto& [k, v] : j.at("extras").items()) {
    if (!v.is_number()) throw std::runtime_error("extra '" + k + "' is not a number");
    o.extras[k] = v.get<double>();
  }
  return r;
}

}  // namespace

RunTrace read_trace(std::istream& in, const std::string& source) {
  RunTrace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool have_footer = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (have_footer) throw ParseError(source, lineno, "content after footer");
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw std::runtime_error("first record must be the header");
        trace.header = header_from_json(j);
        have_header = true;
      } else if (type == "step") {
        TraceRecord r = record_from_json(j, trace.header.dim);
        const std::size_t expect = trace.records.size() + 1;
        if (r.t != expect) {
          throw std::runtime_error("expected step t=" + std::to_string(expect) + ", got " + std::to_string(r.t));
        }
        trace.records.push_back(std::move(r));
      } else if (type == "footer") {
        trace.footer.T = count(j, "T");
        trace.footer.theta = j.at("theta").get<RealVec>();
        trace.footer.regularizer = j.at("regularizer");
        if (trace.footer.T != trace.records.size()) {
          throw std::runtime_error("footer T=" + std::to_string(trace.footer.T) + " but " +
                                   std::to_string(trace.records.size()) + " steps were read");
        }
        have_footer = true;
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source, lineno, std::string("bad trace record: ") + e.what());
    }
  }
  if (!have_header) throw ParseError(source, 0, "empty trace");
  if (!have_footer) throw ParseError(source, lineno + 1, "trace ends without a footer (truncated?)");
  return trace;
}

RunTrace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_trace(in, path);
}

}  // namespace omd

#include "omd/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "omd/json_io.hpp"
#include "omd/regularizers.hpp"

namespace omd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Learner specs

LearnerSpec LearnerSpec::canonical() const {
  LearnerSpec s = *this;
  if (name == "perceptron") {
    s.name = "first_order";
    s.regularizer = "quadratic";
    s.eta_mode = "conservative";
  } else if (name == "pnorm_perceptron") {
    s.name = "first_order";
    s.regularizer = "pnorm";
    s.eta_mode = "conservative";
  } else if (name == "pa") {
    s.name = "first_order";
    s.eta_mode = "pa_optimal";
  }
  return s;
}

json to_json(const LearnerSpec& s) {
  json j;
  j["name"] = s.name;
  j["eta"] = s.eta;
  j["loss"] = s.loss;
  j["schedule"] = s.schedule;
  j["scale"] = s.scale;
  j["l1"] = s.l1;
  j["l2"] = s.l2;
  j["regularizer"] = s.regularizer;
  j["p"] = s.p;
  j["q"] = s.q;
  j["weights"] = s.weights;
  j["eta_mode"] = s.eta_mode;
  j["variant"] = s.variant;
  j["trigger"] = s.trigger;
  j["r"] = s.r;
  j["a"] = s.a;
  j["L"] = s.L;
  j["kind"] = s.kind;
  return j;
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it != j.end()) out = it->get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || k == a;
    if (!known) throw std::invalid_argument(std::string(what) + ": unknown key '" + k + "'");
  }
}

}  // namespace

LearnerSpec learner_spec_from_json(const json& j) {
  check_keys(j,
             {"name", "eta", "loss", "schedule", "scale", "l1", "l2", "regularizer", "p", "q", "weights", "eta_mode",
              "variant", "trigger", "r", "a", "L", "kind"},
             "learner");
  LearnerSpec s;
  read_opt(j, "name", s.name);
  read_opt(j, "eta", s.eta);
  read_opt(j, "loss", s.loss);
  read_opt(j, "schedule", s.schedule);
  read_opt(j, "scale", s.scale);
  read_opt(j, "l1", s.l1);
  read_opt(j, "l2", s.l2);
  read_opt(j, "regularizer", s.regularizer);
  read_opt(j, "p", s.p);
  read_opt(j, "q", s.q);
  read_opt(j, "weights", s.weights);
  read_opt(j, "eta_mode", s.eta_mode);
  read_opt(j, "variant", s.variant);
  read_opt(j, "trigger", s.trigger);
  read_opt(j, "r", s.r);
  read_opt(j, "a", s.a);
  read_opt(j, "L", s.L);
  read_opt(j, "kind", s.kind);
  return s;
}

namespace {

RegularizerPtr fixed_regularizer(const LearnerSpec& s, std::size_t dim) {
  if (s.regularizer == "quadratic") return std::make_unique<FixedQuadratic>(dim, s.scale);
  if (s.regularizer == "pnorm") return std::make_unique<PNorm>(dim, s.p);
  if (s.regularizer == "weighted_qnorm") {
    RealVec w = s.weights.empty() ? RealVec(dim, 1.0) : s.weights;
    require_dim("weighted_qnorm weights", dim, w.size());
    return std::make_unique<WeightedQNorm>(s.q, std::move(w));
  }
  throw std::invalid_argument("unknown regularizer '" + s.regularizer + "'");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

LearnerPtr make_learner(const LearnerSpec& raw, std::size_t dim) {
  const LearnerSpec s = raw.canonical();
  if (s.name == "ogd") {
    require_positive(s.scale, "ogd: scale");
    return make_ogd(dim, s.eta, parse_loss_kind(s.loss), parse_quadratic_schedule(s.schedule), s.scale);
  }
  if (s.name == "composite") {
    CompositeQuadL1::Params p;
    p.schedule = parse_quad_schedule(s.schedule);
    p.base_scale = s.scale;
    p.eta = s.eta;
    p.l1 = s.l1;
    p.l2 = s.l2;
    return make_composite(dim, p, parse_loss_kind(s.loss));
  }
  if (s.name == "first_order") {
    const EtaMode mode = parse_eta_mode(s.eta_mode);
    return std::make_unique<FirstOrderClassifier>(fixed_regularizer(s, dim), mode, mode == EtaMode::fixed ? s.eta : 1.0);
  }
  if (s.name == "second_order") {
    require_positive(s.r, "second_order: r");
    return std::make_unique<SecondOrderClassifier>(dim, parse_variant(s.variant), parse_trigger(s.trigger), s.r);
  }
  if (s.name == "vaw") {
    require_positive(s.a, "vaw: a");
    return std::make_unique<VawRegressor>(dim, s.a);
  }
  if (s.name == "adaptive_filter") return std::make_unique<AdaptiveFilter>(fixed_regularizer(s, dim));
  if (s.name == "scale_invariant") {
    require_positive(s.L, "scale_invariant: L");
    return make_scale_invariant(dim, parse_scale_inv_kind(s.kind), s.L, s.eta, parse_loss_kind(s.loss));
  }
  throw std::invalid_argument("unknown learner '" + s.name + "'");
}

// ---------------------------------------------------------------------------
// Data specs

json to_json(const DataSpec& s) {
  json j;
  if (s.use_generator) {
    j["source"] = "generator";
    j["generator"] = to_json(s.generator);
  } else {
    j["source"] = "file";
    j["path"] = s.path;
    j["format"] = s.format;
    j["label_column"] = s.label_column;
    j["remap01"] = s.remap01;
    j["dim"] = s.dim;
  }
  return j;
}

DataSpec data_spec_from_json(const json& j) {
  check_keys(j, {"source", "generator", "path", "format", "label_column", "remap01", "dim"}, "data");
  DataSpec s;
  const std::string source = j.value("source", std::string("generator"));
  if (source == "generator") {
    s.use_generator = true;
    s.generator = generator_from_json(j.at("generator"));
  } else if (source == "file") {
    s.use_generator = false;
    s.path = j.at("path").get<std::string>();
    read_opt(j, "format", s.format);
    parse_data_format(s.format);
    read_opt(j, "label_column", s.label_column);
    read_opt(j, "remap01", s.remap01);
    read_opt(j, "dim", s.dim);
  } else {
    throw std::invalid_argument("data: unknown source '" + source + "'");
  }
  return s;
}

Dataset load_data(const DataSpec& spec) {
  if (spec.use_generator) return generate(spec.generator);
  ParseOptions opts;
  opts.format = parse_data_format(spec.format);
  opts.label_column = spec.label_column;
  opts.remap01 = spec.remap01;
  opts.dim = spec.dim;
  try {
    return parse_dataset_file(spec.path, opts);
  } catch (const ParseError& e) {
    throw DataError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Experiment configs

json to_json(const ExperimentConfig& c) {
  json j = run_identity(c);
  j["strict_audit"] = c.strict_audit;
  j["trace_path"] = c.trace_path;
  j["summary_path"] = c.summary_path;
  return j;
}

json run_identity(const ExperimentConfig& c) {
  json j;
  j["learner"] = to_json(c.learner);
  j["data"] = to_json(c.data);
  j["comparators"] = c.comparators;
  j["audit"] = c.audit;
  j["compare_predictions"] = c.compare_predictions;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"learner", "data", "comparators", "audit", "strict_audit", "compare_predictions", "trace_path",
                 "summary_path"},
             "config");
  ExperimentConfig c;
  if (j.contains("learner")) c.learner = learner_spec_from_json(j.at("learner"));
  if (j.contains("data")) c.data = data_spec_from_json(j.at("data"));
  read_opt(j, "comparators", c.comparators);
  for (const auto& s : c.comparators) parse_comparator_spec(s);
  read_opt(j, "audit", c.audit);
  read_opt(j, "strict_audit", c.strict_audit);
  read_opt(j, "compare_predictions", c.compare_predictions);
  read_opt(j, "trace_path", c.trace_path);
  read_opt(j, "summary_path", c.summary_path);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Running

json reports_json(const std::vector<BoundReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

json RunResult::summary() const {
  json j;
  const auto& recs = trace.records;
  double loss = 0.0;
  std::size_t mistakes = 0, margin_errors = 0, updates = 0;
  for (const auto& r : recs) {
    loss += r.out.loss;
    mistakes += r.out.mistake ? 1 : 0;
    margin_errors += r.out.margin_error ? 1 : 0;
    updates += r.out.updated ? 1 : 0;
  }
  j["T"] = recs.size();
  j["cumulative_loss"] = loss;
  j["mistakes"] = mistakes;
  j["margin_errors"] = margin_errors;
  j["updates"] = updates;
  j["theta_norm"] = std::sqrt(squared_norm(trace.footer.theta));
  j["wall_time_s"] = wall_time_s;
  j["learner"] = trace.header.learner;
  j["fingerprint"] = trace.header.fingerprint;
  j["config_hash"] = trace.header.config_hash;
  j["bounds"] = reports_json(reports);
  if (comparison) {
    j["prediction_deviation"] = {{"T", comparison->T},
                                 {"max_relative_deviation", comparison->max_relative_deviation},
                                 {"worst_round", comparison->worst_round}};
  }
  j["ok"] = ok;
  return j;
}

RunTrace record_trace(Learner& learner, std::span<const Example> examples, const json& identity) {
  RunTrace trace;
  trace.header = make_header(learner, identity);
  trace.records.reserve(examples.size());
  for (std::size_t t = 0; t < examples.size(); ++t) {
    TraceRecord rec;
    rec.t = learner.state().t + 1;
    rec.x = examples[t].x;
    rec.y = examples[t].y;
    rec.out = learner.round(rec.x, rec.y);
    trace.records.push_back(std::move(rec));
  }
  trace.footer = make_footer(learner);
  return trace;
}

namespace {

struct Replay {
  RunTrace trace;
  std::optional<RealVec> target;
};

Replay replay(const ExperimentConfig& config) {
  Dataset data = load_data(config.data);
  LearnerPtr learner = make_learner(config.learner, data.dim);
  if (learner->is_classifier()) {
    for (std::size_t t = 0; t < data.examples.size(); ++t) {
      const double y = data.examples[t].y;
      if (y != 1.0 && y != -1.0) {
        throw DataError("classification learner '" + std::string(learner->name()) + "' needs labels in {-1,+1}; example " +
                        std::to_string(t + 1) + " has label " + format_double(y));
      }
    }
  }
  Replay out;
  out.target = data.target;
  out.trace = record_trace(*learner, data.examples, run_identity(config));
  return out;
}

std::vector<ComparatorSpec> comparator_specs(const ExperimentConfig& c) {
  std::vector<ComparatorSpec> specs;
  for (const auto& s : c.comparators) specs.push_back(parse_comparator_spec(s));
  return specs;
}

bool all_ok(const std::vector<BoundReport>& reports) {
  for (const auto& r : reports) {
    if (!r.ok) return false;
  }
  return true;
}

}  // namespace

ExperimentConfig base_of_rescaled(const ExperimentConfig& c) {
  if (!c.data.use_generator || c.data.generator.kind != GeneratorKind::rescaled) {
    throw std::invalid_argument("prediction comparison needs a rescaled generator as the data source");
  }
  ExperimentConfig b = c;
  b.data.generator = *c.data.generator.base;
  b.compare_predictions = false;
  b.audit = false;
  b.trace_path.clear();
  b.summary_path.clear();
  return b;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Replay rp = replay(config);
  RunResult result;
  result.trace = std::move(rp.trace);
  if (config.audit) result.reports = evaluate_bounds(result.trace, comparator_specs(config), rp.target);
  if (config.compare_predictions) {
    ExperimentConfig plain = config;
    plain.compare_predictions = false;
    plain.audit = false;
    result.comparison = compare_predictions(base_of_rescaled(config), plain);
  }
  result.ok = all_ok(result.reports);
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<BoundReport> audit_trace(const RunTrace& trace, const ExperimentConfig& config) {
  const LearnerPtr learner = make_learner(config.learner, trace.header.dim);
  const std::string expected = learner_fingerprint(*learner);
  if (expected != trace.header.fingerprint) {
    throw TraceMismatch("learner fingerprint mismatch: trace has " + trace.header.fingerprint + " (" +
                        trace.header.learner + "), config gives " + expected + " (" + std::string(learner->name()) + ")");
  }
  const std::string recomputed = learner_fingerprint(trace.header.learner, trace.header.params);
  if (recomputed != trace.header.fingerprint) {
    throw TraceMismatch("trace header is inconsistent: params do not hash to the stored fingerprint");
  }
  std::optional<RealVec> target;
  const auto specs = comparator_specs(config);
  for (const auto& s : specs) {
    if (s.kind == ComparatorSpec::Kind::target) target = load_data(config.data).target;
  }
  return evaluate_bounds(trace, specs, target);
}

PredictionComparison compare_predictions(const ExperimentConfig& a, const ExperimentConfig& b) {
  const Replay ra = replay(a);
  const Replay rb = replay(b);
  const auto& A = ra.trace.records;
  const auto& B = rb.trace.records;
  if (A.size() != B.size()) {
    throw DataError("prediction comparison: streams differ in length (" + std::to_string(A.size()) + " vs " +
                    std::to_string(B.size()) + ")");
  }
  PredictionComparison cmp;
  cmp.T = A.size();
  for (std::size_t t = 0; t < A.size(); ++t) {
    const double pa = A[t].out.prediction;
    const double pb = B[t].out.prediction;
    double scale = std::max(std::abs(pa), std::abs(pb));
    for (const auto* rec : {&A[t], &B[t]}) {
      const auto it = rec->out.extras.find("abs_sum");
      if (it != rec->out.extras.end()) scale = std::max(scale, it->second);
    }
    const double dev = scale > 0.0 ? std::abs(pa - pb) / scale : 0.0;
    if (dev > cmp.max_relative_deviation) {
      cmp.max_relative_deviation = dev;
      cmp.worst_round = t + 1;
    }
  }
  return cmp;
}

RunResult execute(const ExperimentConfig& config) {
  RunResult result = run_experiment(config);
  if (!config.trace_path.empty()) {
    std::ofstream out(config.trace_path, std::ios::binary);
    if (!out) throw DataError("cannot write trace '" + config.trace_path + "'");
    write_trace(out, result.trace);
  }
  if (!config.summary_path.empty()) {
    std::ofstream out(config.summary_path, std::ios::binary);
    if (!out) throw DataError("cannot write summary '" + config.summary_path + "'");
    out << dump_json(result.summary()) << '\n';
  }
  return result;
}

std::vector<BatchOutcome> run_batch(const std::vector<ExperimentConfig>& configs, unsigned threads) {
  std::vector<BatchOutcome> out(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      BatchOutcome& o = out[i];
      try {
        const RunResult r = execute(configs[i]);
        o.summary = r.summary();
        o.ok = r.ok;
        o.exit_code = (configs[i].strict_audit && !r.ok) ? 3 : 0;
      } catch (const DataError& e) {
        o.error = e.what();
        o.exit_code = 2;
      } catch (const ParseError& e) {
        o.error = e.what();
        o.exit_code = 2;
      } catch (const std::exception& e) {
        o.error = e.what();
        o.exit_code = 1;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace omd

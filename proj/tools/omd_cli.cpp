// omd: generate streams, run learners, audit traces, compare prediction
// sequences across rescaled inputs, and run batches of configs.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 strict-audit violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omd/experiment.hpp"
#include "omd/json_io.hpp"

namespace {

using nlohmann::json;
using namespace omd;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kStrict = 3;

struct GenFlags {
  std::string kind;
  std::size_t d = 0;
  std::size_t T = 0;
  std::uint64_t seed = 0;
  double gamma = 0, sigma = 0, exponent = 0;
  std::size_t k = 0;
  bool classify = false;
  std::string base;  // base kind for rescaled
  std::vector<double> factors;
  std::vector<CLI::Option*> opts;

  void add(CLI::App* app) {
    opts.push_back(app->add_option("--generator", kind, "separable_margin | noisy_linear | sparse_target | "
                                                         "heavy_tail_features | rescaled"));
    opts.push_back(app->add_option("--d", d, "Dimension"));
    opts.push_back(app->add_option("--T", T, "Number of examples"));
    opts.push_back(app->add_option("--seed", seed, "64-bit seed"));
    opts.push_back(app->add_option("--gamma", gamma, "Margin of separable_margin"));
    opts.push_back(app->add_option("--sigma", sigma, "Label noise of the linear generators"));
    opts.push_back(app->add_option("--k", k, "Support size of sparse_target"));
    opts.push_back(app->add_option("--exponent", exponent, "Zipf exponent of heavy_tail_features"));
    opts.push_back(app->add_flag("--classify", classify, "Sign labels for the linear generators"));
    opts.push_back(app->add_option("--base", base, "Base generator of rescaled"));
    opts.push_back(app->add_option("--factors", factors, "Per-coordinate factors of rescaled")->delimiter(','));
  }

  bool any() const {
    for (auto* o : opts) {
      if (o->count() > 0) return true;
    }
    return false;
  }

  // Applies the given flags on top of `spec`.
  void apply(GeneratorSpec& spec) const {
    GeneratorSpec* inner = &spec;
    const bool rescaled = (opts[0]->count() ? kind : to_string(spec.kind)) == "rescaled";
    if (opts[0]->count()) spec.kind = parse_generator_kind(kind);
    if (rescaled) {
      if (!spec.base) spec.base = std::make_shared<GeneratorSpec>();
      inner = spec.base.get();
      if (opts[9]->count()) inner->kind = parse_generator_kind(base);
      if (opts[10]->count()) spec.factors = factors;
    }
    if (opts[1]->count()) inner->dim = d;
    if (opts[2]->count()) inner->T = T;
    if (opts[3]->count()) inner->seed = spec.seed = seed;
    if (opts[4]->count()) inner->gamma = gamma;
    if (opts[5]->count()) inner->sigma = sigma;
    if (opts[6]->count()) inner->k = k;
    if (opts[7]->count()) inner->exponent = exponent;
    if (opts[8]->count()) inner->classify = classify;
    if (rescaled) {
      spec.dim = inner->dim;
      spec.T = inner->T;
      if (spec.factors.empty()) spec.factors.assign(inner->dim, 1.0);
    }
    spec.validate();
  }
};

struct LearnerFlags {
  LearnerSpec s;
  std::vector<std::pair<CLI::Option*, std::function<void(LearnerSpec&)>>> opts;

  template <typename T>
  void opt(CLI::App* app, const std::string& flag, T LearnerSpec::*field, const std::string& help) {
    CLI::Option* o = app->add_option(flag, s.*field, help);
    opts.emplace_back(o, [this, field](LearnerSpec& out) { out.*field = s.*field; });
  }

  void add(CLI::App* app) {
    opt(app, "--learner", &LearnerSpec::name,
        "ogd | composite | first_order | perceptron | pnorm_perceptron | pa | second_order | vaw | adaptive_filter | "
        "scale_invariant");
    opt(app, "--eta", &LearnerSpec::eta, "Learning rate");
    opt(app, "--loss", &LearnerSpec::loss, "hinge | square | absolute");
    opt(app, "--schedule", &LearnerSpec::schedule, "ogd: constant | sqrt | linear; composite: constant | sqrt | none");
    opt(app, "--scale", &LearnerSpec::scale, "Quadratic scale c");
    opt(app, "--l1", &LearnerSpec::l1, "Composite l1 weight");
    opt(app, "--l2", &LearnerSpec::l2, "Composite l2 weight");
    opt(app, "--regularizer", &LearnerSpec::regularizer, "quadratic | pnorm | weighted_qnorm");
    opt(app, "--p", &LearnerSpec::p, "p of the p-norm regularizer");
    opt(app, "--q", &LearnerSpec::q, "q of the weighted q-norm");
    opt(app, "--eta-mode", &LearnerSpec::eta_mode, "conservative | pa_optimal | fixed");
    opt(app, "--variant", &LearnerSpec::variant, "full | diag");
    opt(app, "--trigger", &LearnerSpec::trigger, "omd_margin | arow_margin | conservative");
    opt(app, "--r", &LearnerSpec::r, "Second-order r");
    opt(app, "--a", &LearnerSpec::a, "VAW a");
    opt(app, "--L", &LearnerSpec::L, "Lipschitz constant");
    opt(app, "--kind", &LearnerSpec::kind, "pnorm | diag (scale-invariant)");
    CLI::Option* w = app->add_option("--weights", s.weights, "Weights of the weighted q-norm")->delimiter(',');
    opts.emplace_back(w, [this](LearnerSpec& out) { out.weights = s.weights; });
  }

  void apply(LearnerSpec& out) const {
    for (const auto& [o, set] : opts) {
      if (o->count() > 0) set(out);
    }
  }
};

struct RunFlags {
  std::string config;
  LearnerFlags learner;
  GenFlags gen;
  std::string data, format, label_column, trace, summary, reports;
  bool remap01 = false, no_audit = false, strict = false, compare = false;
  std::size_t dim = 0;
  std::vector<std::string> comparators;
  CLI::Option *data_opt, *format_opt, *label_opt, *remap_opt, *dim_opt, *cmp_opt;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Experiment config JSON; other flags override it");
    learner.add(app);
    gen.add(app);
    data_opt = app->add_option("--data", data, "Dataset file");
    format_opt = app->add_option("--format", format, "svmlight | csv");
    label_opt = app->add_option("--label-column", label_column, "CSV label column");
    remap_opt = app->add_flag("--remap01", remap01, "Map labels 0/1 to -1/+1");
    dim_opt = app->add_option("--dim", dim, "Declared dimension of a dataset file");
    cmp_opt = app->add_option("--comparator", comparators,
                              "zero | target | fixed:v,... | grid:R=2,n=41 | batch:iters=2000 (repeatable)");
    app->add_option("--trace", trace, "Trace output (JSON lines)");
    app->add_option("--summary", summary, "Summary output (JSON)");
    app->add_option("--reports", reports, "Bound reports output (JSON)");
    app->add_flag("--no-audit", no_audit, "Skip bound evaluation");
    app->add_flag("--strict-audit", strict, "Exit 3 when any bound report fails");
    app->add_flag("--compare-predictions", compare, "Also replay the base of a rescaled generator");
  }

  ExperimentConfig build() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    learner.apply(c.learner);
    if (data_opt->count()) {
      c.data.use_generator = false;
      c.data.path = data;
    }
    if (gen.any()) {
      if (data_opt->count()) throw std::invalid_argument("--data and generator flags are exclusive");
      if (!c.data.use_generator) c.data = DataSpec{};
      gen.apply(c.data.generator);
    }
    if (format_opt->count()) c.data.format = format;
    if (label_opt->count()) c.data.label_column = label_column;
    if (remap_opt->count()) c.data.remap01 = remap01;
    if (dim_opt->count()) c.data.dim = dim;
    if (cmp_opt->count()) c.comparators = comparators;
    for (const auto& s : c.comparators) parse_comparator_spec(s);
    if (no_audit) c.audit = false;
    if (strict) c.strict_audit = true;
    if (compare) c.compare_predictions = true;
    if (!trace.empty()) c.trace_path = trace;
    if (!summary.empty()) c.summary_path = summary;
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

void print_failures(const std::vector<BoundReport>& reports) {
  for (const auto& r : reports) {
    if (r.ok) continue;
    std::cerr << "bound violated: " << r.name << " measured=" << format_double(r.measured)
              << " bound=" << format_double(r.bound) << " slack=" << format_double(r.slack);
    for (const auto& key : r.required) {
      const auto it = r.flags.find(key);
      if (it == r.flags.end() || !it->second) std::cerr << " failed:" << key;
    }
    std::cerr << '\n';
  }
}

int cmd_gen(const GenFlags& g, const std::string& config, const std::string& out, const std::string& format,
            const std::string& target_out) {
  GeneratorSpec spec;
  if (!config.empty()) {
    const ExperimentConfig c = load_config(config);
    if (!c.data.use_generator) throw std::invalid_argument("config data source is not a generator");
    spec = c.data.generator;
  }
  g.apply(spec);
  const Dataset data = generate(spec);
  std::ostringstream os;
  if (parse_data_format(format) == DataFormat::svmlight) {
    write_svmlight(os, data);
  } else {
    write_csv(os, data);
  }
  write_text(out, os.str());
  if (!target_out.empty()) {
    if (!data.target) throw std::invalid_argument("generator has no target");
    write_text(target_out, dump_json(json(*data.target)) + "\n");
  }
  std::cout << "wrote " << data.examples.size() << " examples (d=" << data.dim << ") to " << out << '\n';
  return kOk;
}

int cmd_run(const RunFlags& f) {
  const ExperimentConfig c = f.build();
  const RunResult r = execute(c);
  if (!f.reports.empty()) write_text(f.reports, dump_json(reports_json(r.reports)) + "\n");
  if (c.summary_path.empty()) std::cout << dump_json(r.summary()) << '\n';
  print_failures(r.reports);
  if (c.strict_audit && !r.ok) return kStrict;
  return kOk;
}

int cmd_audit(const std::string& trace_path, const RunFlags& f, const std::string& out) {
  const ExperimentConfig c = f.build();
  const RunTrace trace = read_trace_file(trace_path);
  const auto reports = audit_trace(trace, c);
  const std::string text = dump_json(reports_json(reports)) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  print_failures(reports);
  bool ok = true;
  for (const auto& r : reports) ok = ok && r.ok;
  return (c.strict_audit && !ok) ? kStrict : kOk;
}

int cmd_compare(const RunFlags& f, const std::string& against, double tolerance, bool strict) {
  const ExperimentConfig a = f.build();
  const ExperimentConfig b = against.empty() ? base_of_rescaled(a) : load_config(against);
  const PredictionComparison cmp = against.empty() ? compare_predictions(b, a) : compare_predictions(a, b);
  json j;
  j["T"] = cmp.T;
  j["max_relative_deviation"] = cmp.max_relative_deviation;
  j["worst_round"] = cmp.worst_round;
  j["tolerance"] = tolerance;
  j["ok"] = cmp.max_relative_deviation <= tolerance;
  std::cout << dump_json(j) << '\n';
  return (strict && cmp.max_relative_deviation > tolerance) ? kStrict : kOk;
}

int cmd_batch(const std::string& file, unsigned threads) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open batch file '" + file + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("batch file: " + std::string(e.what()));
  }
  if (!j.is_array()) throw std::invalid_argument("batch file must hold a JSON array of configs");
  std::vector<ExperimentConfig> configs;
  for (const auto& c : j) configs.push_back(config_from_json(c));
  const auto outcomes = run_batch(configs, threads);
  int code = kOk;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    json line;
    line["index"] = i;
    line["exit_code"] = o.exit_code;
    if (o.error.empty()) {
      line["ok"] = o.ok;
      line["T"] = o.summary.at("T");
      line["learner"] = o.summary.at("learner");
    } else {
      line["error"] = o.error;
    }
    std::cout << dump_json(line) << '\n';
    code = std::max(code, o.exit_code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online mirror descent learners with regret-bound audits"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Write a synthetic stream to a dataset file");
  GenFlags gen_flags;
  gen_flags.add(gen);
  std::string gen_config, gen_out, gen_format = "svmlight", gen_target;
  gen->add_option("--config", gen_config, "Take the generator from a config's data section");
  gen->add_option("--out", gen_out, "Output file")->required();
  gen->add_option("--format", gen_format, "svmlight | csv");
  gen->add_option("--target-out", gen_target, "Write the embedded comparator as JSON");

  auto* run = app.add_subcommand("run", "Run a learner, write its trace and summary");
  RunFlags run_flags;
  run_flags.add(run);

  auto* audit = app.add_subcommand("audit", "Re-evaluate bounds on a stored trace");
  RunFlags audit_flags;
  audit_flags.add(audit);
  std::string audit_trace_path, audit_out;
  audit->add_option("--input", audit_trace_path, "Trace to audit")->required();
  audit->add_option("--out", audit_out, "Reports output (JSON); stdout when absent");

  auto* compare = app.add_subcommand("compare", "Max relative prediction deviation between two replays");
  RunFlags cmp_flags;
  cmp_flags.add(compare);
  std::string against;
  double tolerance = 1e-6;
  bool cmp_strict = false;
  compare->add_option("--against", against, "Second config; default is the base of a rescaled generator");
  compare->add_option("--tolerance", tolerance, "Deviation considered acceptable");
  compare->add_flag("--strict", cmp_strict, "Exit 3 when the deviation exceeds the tolerance");

  auto* batch = app.add_subcommand("batch", "Run a JSON array of configs concurrently");
  std::string batch_file;
  unsigned threads = 1;
  batch->add_option("--file", batch_file, "JSON array of configs")->required();
  batch->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_flags, gen_config, gen_out, gen_format, gen_target);
    if (*run) return cmd_run(run_flags);
    if (*audit) return cmd_audit(audit_trace_path, audit_flags, audit_out);
    if (*compare) return cmd_compare(cmp_flags, against, tolerance, cmp_strict);
    if (*batch) return cmd_batch(batch_file, threads);
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const TraceMismatch& e) {
    std::cerr << "trace mismatch: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

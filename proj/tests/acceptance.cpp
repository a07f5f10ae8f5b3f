// Property-based acceptance suite.  Prints one PASS/FAIL line per criterion
// and exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "omd/bounds.hpp"
#include "omd/experiment.hpp"
#include "omd/generators.hpp"
#include "omd/json_io.hpp"
#include "omd/learners.hpp"
#include "omd/linalg.hpp"
#include "omd/oracles.hpp"
#include "omd/prng.hpp"
#include "omd/trace.hpp"
#include "zoo.hpp"

using namespace omd;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  std::size_t checks = 0;
  std::string first_failure;

  void expect(bool cond, const std::string& what) {
    ++checks;
    if (!cond && ok) first_failure = what;
    ok = ok && cond;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Dataset stream(GeneratorKind kind, std::size_t d, std::size_t T, std::uint64_t seed) {
  GeneratorSpec s;
  s.kind = kind;
  s.dim = d;
  s.T = T;
  s.seed = seed;
  return generate(s);
}

std::vector<Comparator> comparators(const std::vector<std::string>& specs, const RunTrace& trace,
                                    const std::optional<RealVec>& target) {
  std::vector<Comparator> out;
  for (const auto& s : specs) {
    auto c = resolve_comparators(parse_comparator_spec(s), trace, target);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

struct Worst {
  double slack = INFINITY;
  bool ok = true;
  void add(const BoundReport& r) {
    slack = std::min(slack, r.slack);
    ok = ok && r.ok;
  }
};

Worst evaluate_all(const BoundEvaluator& eval, const std::string& name, const std::vector<Comparator>& comps) {
  Worst w;
  w.add(worst_case(eval, name, "all", comps));
  return w;
}

using LearnerFactory = std::function<LearnerPtr(std::size_t)>;

struct Family {
  std::string name;
  LearnerFactory make;
  bool classifier;
};

std::vector<Family> lemma1_families() {
  return {
      {"ogd", [](std::size_t d) { return make_ogd(d, 0.1, LossKind::square, QuadraticSchedule::sqrt_time); }, false},
      {"pnorm_perceptron",
       [](std::size_t d) {
         return std::make_unique<FirstOrderClassifier>(std::make_unique<PNorm>(d, 1.5), EtaMode::conservative);
       },
       true},
      {"pa",
       [](std::size_t d) {
         return std::make_unique<FirstOrderClassifier>(std::make_unique<FixedQuadratic>(d), EtaMode::pa_optimal);
       },
       true},
      {"second_order_full",
       [](std::size_t d) {
         return std::make_unique<SecondOrderClassifier>(d, SecondOrderVariant::full, UpdateTrigger::omd_margin, 1.0);
       },
       true},
      {"second_order_diag",
       [](std::size_t d) {
         return std::make_unique<SecondOrderClassifier>(d, SecondOrderVariant::diagonal, UpdateTrigger::omd_margin,
                                                        1.0);
       },
       true},
      {"vaw", [](std::size_t d) { return std::make_unique<VawRegressor>(d, 1.0); }, false},
      {"adaptive_filter",
       [](std::size_t d) { return std::make_unique<AdaptiveFilter>(std::make_unique<FixedQuadratic>(d)); }, false},
      {"scale_inv_pnorm",
       [](std::size_t d) { return make_scale_invariant(d, ScaleInvKind::pnorm, 1.0, 0.5, LossKind::absolute); },
       false},
      {"scale_inv_diag",
       [](std::size_t d) { return make_scale_invariant(d, ScaleInvKind::diag, 1.0, 0.5, LossKind::absolute); },
       false},
  };
}

Outcome lemma1_audit_criterion() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  double worst = INFINITY;
  std::size_t runs = 0;
  for (const auto& fam : lemma1_families()) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      for (std::size_t d : {std::size_t{10}, std::size_t{3}}) {
        const auto data = stream(fam.classifier ? GeneratorKind::separable_margin : GeneratorKind::noisy_linear, d,
                                 200, seed);
        auto learner = fam.make(d);
        const auto trace = record_trace(*learner, data.examples);
        const std::vector<std::string> specs =
            d == 10 ? std::vector<std::string>{"zero", "target", "fixed:0.5", "fixed:-1"}
                    : std::vector<std::string>{"grid:R=2,n=9", "target"};
        const auto w = evaluate_all(lemma1_audit(trace), "lemma1", comparators(specs, trace, data.target));
        worst = std::min(worst, w.slack);
        o.expect(w.slack >= -1e-9 && w.ok, fam.name + " seed " + std::to_string(seed) + " d " + std::to_string(d));
        ++runs;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  o.detail = std::to_string(runs) + " runs, min slack " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

Outcome cor1_criterion() {
  Outcome o;
  double worst = INFINITY;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto data = stream(GeneratorKind::noisy_linear, 2, 200, seed);
    CompositeQuadL1::Params sq;
    sq.eta = 0.3;
    sq.l1 = 0.05;
    CompositeQuadL1::Params lin;
    lin.schedule = QuadSchedule::none;
    lin.eta = 0.3;
    lin.l2 = 0.5;
    auto a = make_composite(2, sq, LossKind::absolute);
    auto b = make_composite(2, lin, LossKind::absolute);
    const auto ta = record_trace(*a, data.examples);
    const auto tb = record_trace(*b, data.examples);
    const auto ca = comparators({"grid:R=2,n=15", "target", "zero"}, ta, data.target);
    const auto cb = comparators({"grid:R=2,n=15", "target", "zero"}, tb, data.target);
    for (const auto& [w, what] :
         {std::pair{evaluate_all(cor1_bound(ta, Cor1Form::sqrt_time), "cor1", ca), "sqrt schedule, l1 penalty"},
          std::pair{evaluate_all(cor1_bound(ta, Cor1Form::general), "cor1", ca), "sqrt schedule, general form"},
          std::pair{evaluate_all(cor1_bound(tb, Cor1Form::linear_time), "cor1", cb), "linear schedule, l2 penalty"},
          std::pair{evaluate_all(cor1_bound(tb, Cor1Form::general), "cor1", cb), "linear schedule, general form"}}) {
      worst = std::min(worst, w.slack);
      o.expect(w.slack >= -1e-9 && w.ok, std::string(what) + " seed " + std::to_string(seed));
    }
  }
  o.detail = "200 runs, min slack " + fmt(worst);
  return o;
}

Outcome theorem3_criterion() {
  Outcome o;
  double worst = INFINITY, deviation = 0.0;
  Xoshiro256 rng(2024);
  for (auto kind : {ScaleInvKind::pnorm, ScaleInvKind::diag}) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const auto data = stream(GeneratorKind::noisy_linear, 3, 200, seed);
      auto l = make_scale_invariant(3, kind, 1.0, 0.5, LossKind::absolute);
      const auto t = record_trace(*l, data.examples);
      const auto w = evaluate_all(theorem3_bound(t), "theorem3", comparators({"grid:R=2,n=9", "target"}, t, data.target));
      worst = std::min(worst, w.slack);
      o.expect(w.slack >= -1e-6 && w.ok, std::string(to_string(kind)) + " bound seed " + std::to_string(seed));

      ExperimentConfig c;
      c.learner.name = "scale_invariant";
      c.learner.kind = std::string(to_string(kind));
      c.learner.loss = "absolute";
      c.learner.eta = 0.5;
      auto base = std::make_shared<GeneratorSpec>();
      base->kind = GeneratorKind::noisy_linear;
      base->dim = 5;
      base->T = 200;
      base->seed = seed;
      c.data.generator.kind = GeneratorKind::rescaled;
      c.data.generator.base = base;
      c.data.generator.dim = 5;
      c.data.generator.T = 200;
      c.data.generator.factors.clear();
      for (int i = 0; i < 5; ++i) c.data.generator.factors.push_back(std::exp(rng.uniform(std::log(1e-3), std::log(1e3))));
      const auto cmp = compare_predictions(base_of_rescaled(c), c);
      deviation = std::max(deviation, cmp.max_relative_deviation);
      o.expect(cmp.max_relative_deviation <= 1e-6 && cmp.T == 200,
               std::string(to_string(kind)) + " rescaling seed " + std::to_string(seed));
    }
  }
  o.detail = "min slack " + fmt(worst) + ", max relative prediction deviation " + fmt(deviation);
  return o;
}

Outcome cor3_criterion() {
  Outcome o;
  double max_d = -INFINITY, max_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GeneratorSpec s;
    s.kind = GeneratorKind::separable_margin;
    s.dim = 5;
    s.T = 300;
    s.gamma = 0.05;
    s.seed = seed;
    const auto heavy = generate(s);
    FirstOrderClassifier pa(std::make_unique<FixedQuadratic>(5), EtaMode::pa_optimal);
    const auto t = record_trace(pa, heavy.examples);
    const auto r = cor3_bound(t)(*heavy.target);
    max_d = std::max(max_d, r.terms.at("D"));
    o.expect(r.terms.at("U") > 0.0, "margin errors seed " + std::to_string(seed));
    o.expect(r.terms.at("D") < 0.0, "D negative seed " + std::to_string(seed));
    o.expect(r.bound < r.terms.at("perceptron_baseline"), "beats baseline seed " + std::to_string(seed));
    o.expect(r.ok, "cor3 ok seed " + std::to_string(seed));
  }
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    GeneratorSpec s;
    s.kind = GeneratorKind::separable_margin;
    s.dim = 6;
    s.T = 400;
    s.gamma = 0.2;
    s.seed = seed;
    const auto data = generate(s);
    FirstOrderClassifier p(std::make_unique<FixedQuadratic>(6), EtaMode::conservative);
    const auto t = record_trace(p, data.examples);
    std::vector<double> u = *data.target;
    for (double& v : u) v /= s.gamma;
    const auto r = cor3_bound(t)(u);
    const double X = r.terms.at("X_T");
    const double beta = p.regularizer().strong_convexity();
    const double limit = 2.0 / beta * p.regularizer().value(u) * X * X;
    o.expect(r.terms.at("L(u)") <= 1e-12, "zero hinge loss at u* seed " + std::to_string(seed));
    o.expect(r.measured <= limit, "M <= 2 f(u*) X^2 / beta seed " + std::to_string(seed));
    o.expect(r.ok, "separable cor3 ok seed " + std::to_string(seed));
    max_ratio = std::max(max_ratio, r.measured / limit);
  }
  o.detail = "largest D " + fmt(max_d) + ", largest M / (2 f(u*) X^2 / beta) " + fmt(max_ratio);
  return o;
}

Outcome second_order_criterion() {
  Outcome o;
  double worst = INFINITY;
  std::size_t verified = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    GeneratorSpec s;
    s.kind = GeneratorKind::noisy_linear;
    s.classify = true;
    s.sigma = 0.3;
    s.dim = 3;
    s.T = 200;
    s.seed = seed;
    const auto data = generate(s);
    for (auto trig : {UpdateTrigger::omd_margin, UpdateTrigger::arow_margin}) {
      SecondOrderClassifier full(3, SecondOrderVariant::full, trig, 0.7);
      const auto t = record_trace(full, data.examples);
      const auto comps = comparators({"grid:R=2,n=9", "target"}, t, data.target);
      const std::string tag = std::string(to_string(trig)) + " seed " + std::to_string(seed);
      const auto a = evaluate_all(second_order_bound(t), "second_order", comps);
      const auto b = evaluate_all(second_order_arow_bound(t), "second_order_arow", comps);
      worst = std::min({worst, a.slack, b.slack});
      o.expect(a.slack >= -1e-9 && a.ok, "full bound " + tag);
      o.expect(b.slack >= -1e-9 && b.ok, "arow bound " + tag);
      const auto r = second_order_bound(t)(*data.target);
      o.expect(r.terms.at("m_sum") <= r.terms.at("U"), "m_sum <= U " + tag);
    }
    SecondOrderClassifier dg(3, SecondOrderVariant::diagonal, UpdateTrigger::omd_margin, 0.7);
    const auto td = record_trace(dg, data.examples);
    const auto w = evaluate_all(diag_bound(td), "diag", comparators({"grid:R=2,n=9", "target"}, td, data.target));
    worst = std::min(worst, w.slack);
    o.expect(w.slack >= -1e-9 && w.ok, "diag bound seed " + std::to_string(seed));

    GeneratorSpec h;
    h.kind = GeneratorKind::heavy_tail_features;
    h.dim = 8;
    h.T = 300;
    h.exponent = 1.2;
    h.seed = seed;
    const auto heavy = generate(h);
    SecondOrderClassifier rare(8, SecondOrderVariant::diagonal, UpdateTrigger::conservative, 1.0);
    const auto tr = record_trace(rare, heavy.examples);
    const auto rep = diag_rare_feature_bound(tr)(*heavy.target);
    if (rep.flags.at("hypothesis")) {
      ++verified;
      const double a = rep.terms.at("a"), b = rep.terms.at("b"), L = rep.terms.at("L(u)");
      const double hi = 10.0 * rep.bound + 10.0;
      const double scan = oracle::implicit_scan(
          [&](double x) { return x <= std::sqrt(a * std::log1p(b * x)) + L; }, hi, hi * 1e-6);
      o.expect(scan <= rep.bound + 1e-12, "rare-feature bound vs scan seed " + std::to_string(seed));
      o.expect(rep.measured <= rep.bound && rep.ok, "rare-feature mistakes seed " + std::to_string(seed));
    }
  }
  o.expect(verified > 0, "no heavy-tail run verified the hypothesis");
  o.detail = "min slack " + fmt(worst) + ", rare-feature hypothesis verified on " + std::to_string(verified) + "/30";
  return o;
}

SparseVec random_sparse(Xoshiro256& rng, std::size_t d, double density) {
  std::vector<double> v(d, 0.0);
  for (auto& x : v) {
    if (rng.uniform() < density) x = rng.normal();
  }
  return SparseVec::from_dense(v);
}

Outcome linalg_criterion() {
  Outcome o;
  Xoshiro256 rng(7);
  const std::size_t d = 20;
  const double r = 1.7;
  RankOneInverse inv(d, r);
  std::vector<oracle::Vec> a(d, oracle::Vec(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) a[i][i] = 1.0;
  double identity = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const SparseVec x = random_sparse(rng, d, 0.6);
    const double chi = quad_form(inv, x);
    inv.update(x);
    identity = std::max(identity, std::abs(quad_form(inv, x) - chi * r / (r + chi)) / std::max(1.0, chi));
    const auto xd = x.to_dense();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] += xd[i] * xd[j] / r;
    }
  }
  const auto direct = oracle::direct_inverse(a);
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(direct.inverse[i][j] - inv.inverse()(i, j)));
  }
  const double logdet = std::abs(direct.logdet - inv.logdet());
  o.expect(worst <= 1e-8, "inverse deviation " + fmt(worst));
  o.expect(logdet <= 1e-8, "logdet deviation " + fmt(logdet));
  o.expect(identity <= 1e-12, "quad form identity " + fmt(identity));
  o.detail = "inverse " + fmt(worst) + ", logdet " + fmt(logdet) + ", chi r/(r+chi) " + fmt(identity);
  return o;
}

Outcome oracle_suite_criterion() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  zoo::OracleCheck worst;
  std::size_t families = 0;
  for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
    for (auto& m : zoo::members(d)) {
      const auto c = zoo::check_member(*m.reg, 99 + d, d <= 2, 4);
      const std::string tag = m.name + " d " + std::to_string(d);
      o.expect(c.biconjugate <= 1e-3, "biconjugation " + tag);
      o.expect(c.argmax <= tolerance::argmax, "argmax " + tag);
      o.expect(c.fenchel_young <= tolerance::algebraic, "Fenchel-Young " + tag);
      o.expect(c.strong_convexity >= -tolerance::algebraic, "strong convexity " + tag);
      o.expect(c.dual_norm <= tolerance::grid_oracle, "dual norm " + tag);
      worst.biconjugate = std::max(worst.biconjugate, c.biconjugate);
      worst.argmax = std::max(worst.argmax, c.argmax);
      worst.fenchel_young = std::max(worst.fenchel_young, c.fenchel_young);
      worst.strong_convexity = std::min(worst.strong_convexity, c.strong_convexity);
      worst.dual_norm = std::max(worst.dual_norm, c.dual_norm);
      ++families;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.expect(secs < 120.0, "runtime " + fmt(secs) + " s");
  o.detail = std::to_string(families) + " family instances; biconj " + fmt(worst.biconjugate) + ", argmax " +
             fmt(worst.argmax) + ", FY " + fmt(worst.fenchel_young) + ", sc " + fmt(worst.strong_convexity) +
             ", dual norm " + fmt(worst.dual_norm) + ", " + fmt(secs) + " s";
  return o;
}

Outcome appendix_criterion() {
  Outcome o;
  Xoshiro256 rng(31337);
  // The scan reports 0 when no positive x satisfies the implicit inequality;
  // any bound is then consistent, including a negative one.
  std::size_t infeasible = 0;
  const auto dominated = [&](const std::function<bool(double)>& pred, double bound) {
    const double hi = 2.0 * std::abs(bound) + 10.0;
    const double x = oracle::implicit_scan(pred, hi, hi * 1e-5);
    if (x == 0.0) {
      ++infeasible;
      return true;
    }
    return x <= bound + 1e-12;
  };
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 1 + rng.below(5), T = 1 + rng.below(100);
    const double r = 0.1 + 3.0 * rng.uniform();
    std::vector<SparseVec> xs;
    for (std::size_t t = 0; t < T; ++t) xs.push_back(random_sparse(rng, d, 0.5));
    o.expect(diag_log_lhs(xs, r) <= diag_log_rhs(xs, r) + 1e-12, "diag log lemma draw " + std::to_string(k));

    std::vector<double> a(1 + rng.below(30));
    for (auto& v : a) v = rng.uniform() < 0.2 ? 0.0 : std::exp(3.0 * rng.normal());
    o.expect(sqrt_sum_inequality_check(a), "sqrt-sum draw " + std::to_string(k));

    const double la = rng.uniform(std::numbers::e, 50.0), ln = rng.uniform(1.1, 10.0);
    const double b1 = lemma_log1(la, ln);
    o.expect(dominated([&](double x) { return x <= la * std::log(x); }, b1), "lemma_log1 draw " + std::to_string(k));

    const double ca = rng.uniform(0.1, 20.0), cb = rng.uniform(0.1, 5.0), cc = rng.uniform(0.0, 5.0),
                 cd = rng.uniform(0.0, 5.0), cn = rng.uniform(1.5, 5.0);
    const double b2 = cor_log1(ca, cb, cc, cd, cn);
    o.expect(dominated([&](double x) { return x <= ca * std::log(cb * x + cc) + cd; }, b2),
             "cor_log1 draw " + std::to_string(k));

    const double b3 = cor_log2(ca, cb, cc, cd);
    o.expect(dominated([&](double x) { return x <= std::sqrt(ca * std::log(cb * x + 1.0) + cc) + cd; }, b3),
             "cor_log2 draw " + std::to_string(k));
  }
  o.detail = std::to_string(o.checks) + " checks over 100 draws per inequality, " + std::to_string(infeasible) +
             " implicit draws without a positive solution";
  return o;
}

std::vector<ExperimentConfig> determinism_configs() {
  std::vector<ExperimentConfig> out;
  const auto add = [&](const std::string& learner, GeneratorKind kind, const std::function<void(LearnerSpec&)>& tweak) {
    ExperimentConfig c;
    c.learner.name = learner;
    tweak(c.learner);
    c.data.generator.kind = kind;
    c.data.generator.dim = 3;
    c.data.generator.T = 150;
    c.data.generator.seed = 11;
    c.comparators = {"zero", "target", "grid:R=1,n=5", "batch:iters=300"};
    out.push_back(c);
  };
  const auto none = [](LearnerSpec&) {};
  add("perceptron", GeneratorKind::separable_margin, none);
  add("pnorm_perceptron", GeneratorKind::separable_margin, [](LearnerSpec& s) { s.p = 1.5; });
  add("pa", GeneratorKind::separable_margin, none);
  add("second_order", GeneratorKind::separable_margin, none);
  add("second_order", GeneratorKind::heavy_tail_features, [](LearnerSpec& s) {
    s.variant = "diagonal";
    s.trigger = "conservative";
  });
  add("vaw", GeneratorKind::noisy_linear, none);
  add("adaptive_filter", GeneratorKind::noisy_linear, none);
  add("ogd", GeneratorKind::noisy_linear, [](LearnerSpec& s) { s.loss = "square"; });
  add("composite", GeneratorKind::sparse_target, [](LearnerSpec& s) {
    s.loss = "absolute";
    s.l1 = 0.1;
  });
  add("scale_invariant", GeneratorKind::noisy_linear, [](LearnerSpec& s) {
    s.kind = "diag";
    s.loss = "absolute";
  });
  return out;
}

Outcome determinism_criterion() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "omd_acceptance";
  std::filesystem::create_directories(dir);
  std::size_t reports = 0;
  int index = 0;
  for (auto c : determinism_configs()) {
    const std::string tag = c.learner.name + " #" + std::to_string(index);
    const auto path = dir / ("run" + std::to_string(index++) + ".jsonl");
    c.trace_path = path.string();
    const auto first = execute(c);
    const auto second = run_experiment(c);
    const std::string text = trace_to_string(first.trace);
    o.expect(text == trace_to_string(second.trace), "replayed trace differs " + tag);
    const auto stored = read_trace_file(c.trace_path);
    o.expect(trace_to_string(stored) == text, "stored trace differs " + tag);
    const auto audited = audit_trace(stored, c);
    o.expect(dump_json(reports_json(audited)) == dump_json(reports_json(first.reports)), "audit differs " + tag);
    reports += audited.size();
  }
  std::filesystem::remove_all(dir);
  o.detail = std::to_string(index) + " configs, " + std::to_string(reports) + " reports reproduced";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"lemma1 audit across nine learners", lemma1_audit_criterion},
      {"composite schedules", cor1_criterion},
      {"scale-invariant regret and rescaling", theorem3_criterion},
      {"first-order mistake bounds", cor3_criterion},
      {"second-order bounds", second_order_criterion},
      {"incremental inverse", linalg_criterion},
      {"convex-analysis oracle suite", oracle_suite_criterion},
      {"appendix inequalities", appendix_criterion},
      {"determinism and audit replay", determinism_criterion},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.first_failure = std::string("exception: ") + e.what();
    }
    std::printf("%s %d %s: %s", o.ok ? "PASS" : "FAIL", index++, name.c_str(), o.detail.c_str());
    if (!o.ok) std::printf(" [first failure: %s]", o.first_failure.c_str());
    std::printf("\n");
    std::fflush(stdout);
    failures += o.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

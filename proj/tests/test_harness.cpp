#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "omd/dataset.hpp"
#include "omd/experiment.hpp"
#include "omd/generators.hpp"
#include "omd/json_io.hpp"
#include "omd/prng.hpp"
#include "omd/trace.hpp"

using namespace omd;
using doctest::Approx;
using nlohmann::json;

namespace {

Dataset parse(const std::string& text, ParseOptions opts = {}) {
  std::istringstream in(text);
  return parse_dataset(in, opts, "mem");
}

std::size_t parse_error_line(const std::string& text, ParseOptions opts = {}) {
  try {
    parse(text, opts);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 9999;
}

ExperimentConfig gen_config(const std::string& learner, GeneratorKind kind, std::size_t d, std::size_t T,
                            std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.learner.name = learner;
  c.data.generator.kind = kind;
  c.data.generator.dim = d;
  c.data.generator.T = T;
  c.data.generator.seed = seed;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "omd_harness_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("svmlight examples") {
  const auto a = parse("+1 1:0.5 3:2\n");
  REQUIRE(a.examples.size() == 1);
  CHECK(a.examples[0].y == 1.0);
  CHECK(a.examples[0].x == SparseVec(3, {{0, 0.5}, {2, 2.0}}));
  const auto b = parse("-1\n");
  CHECK(b.examples[0].y == -1.0);
  CHECK(b.examples[0].x.empty());
  CHECK(parse_error_line("1 2:a\n") == 1);
  CHECK(parse_error_line("1 1:1\n1 3:1 2:1\n") == 2);
  CHECK(parse_error_line("1 1:1\n\n1 0:1\n") == 3);
  CHECK(parse_error_line("x 1:1\n") == 1);
  CHECK(parse_error_line("1 1-1\n") == 1);
  CHECK_THROWS_AS(parse(""), ParseError);
  const auto c = parse("# header comment\n1 2:1 # trailing\n\n-1 1:2\n");
  CHECK(c.examples.size() == 2);
  CHECK(c.dim == 2);
}

TEST_CASE("label handling") {
  ParseOptions o;
  o.classification = true;
  CHECK(parse_error_line("1 1:1\n0.5 1:1\n", o) == 2);
  o.remap01 = true;
  const auto d = parse("0 1:1\n1 1:1\n", o);
  CHECK(d.examples[0].y == -1.0);
  CHECK(d.examples[1].y == 1.0);
  CHECK(parse_error_line("2 1:1\n", o) == 1);
  ParseOptions fixed;
  fixed.dim = 2;
  CHECK(parse("1 1:1\n", fixed).dim == 2);
  CHECK_THROWS_AS(parse("1 3:1\n", fixed), ParseError);
}

TEST_CASE("csv parsing") {
  ParseOptions o;
  o.format = DataFormat::csv;
  const auto d = parse("f1,label,f2\n0.5,1,0\n0,-1,2\n", o);
  CHECK(d.dim == 2);
  CHECK(d.examples[0].x == SparseVec(2, {{0, 0.5}}));
  CHECK(d.examples[1].y == -1.0);
  CHECK(parse_error_line("a,label\n1,2\n3\n", o) == 3);
  CHECK(parse_error_line("a,b\n1,2\n", o) == 1);
  CHECK(parse_error_line("a,label\n1,zz\n", o) == 2);
  o.label_column = "y";
  CHECK(parse("y,a\n1,3\n", o).examples[0].x == SparseVec(1, {{0, 3.0}}));
  CHECK(parse_data_format("csv") == DataFormat::csv);
  CHECK_THROWS(parse_data_format("arff"));
}

TEST_CASE("generator export round trip") {
  for (auto kind : {GeneratorKind::separable_margin, GeneratorKind::noisy_linear, GeneratorKind::sparse_target,
                    GeneratorKind::heavy_tail_features}) {
    GeneratorSpec s;
    s.kind = kind;
    s.dim = 7;
    s.T = 60;
    s.k = 3;
    const auto data = generate(s);
    for (auto fmt : {DataFormat::svmlight, DataFormat::csv}) {
      std::ostringstream out;
      if (fmt == DataFormat::svmlight) {
        write_svmlight(out, data);
      } else {
        write_csv(out, data);
      }
      ParseOptions o;
      o.format = fmt;
      o.dim = data.dim;
      const auto back = parse(out.str(), o);
      CAPTURE(to_string(kind));
      CHECK(back.examples == data.examples);
    }
  }
}

TEST_CASE("generator examples") {
  GeneratorSpec s;
  s.kind = GeneratorKind::separable_margin;
  s.dim = 5;
  s.T = 500;
  s.gamma = 0.5;
  s.seed = 99;
  const auto a = generate(s), b = generate(s);
  CHECK(a.examples == b.examples);
  CHECK(a.target == b.target);
  std::ostringstream sa, sb;
  write_svmlight(sa, a);
  write_svmlight(sb, b);
  CHECK(sa.str() == sb.str());
  double min_margin = 1e9;
  for (const auto& ex : a.examples) {
    min_margin = std::min(min_margin, ex.y * ex.x.dot(*a.target));
    CHECK(ex.x.squared_norm() == Approx(1.0));
  }
  CHECK(min_margin >= 0.5);
  CHECK(squared_norm(*a.target) == Approx(1.0));

  GeneratorSpec r;
  r.kind = GeneratorKind::rescaled;
  r.base = std::make_shared<GeneratorSpec>(s);
  r.factors = {1000, 1, 1, 1, 1};
  const auto rs = generate(r);
  for (std::size_t t = 0; t < a.examples.size(); ++t) {
    const auto x0 = a.examples[t].x.to_dense(), x1 = rs.examples[t].x.to_dense();
    CHECK(x1[0] == x0[0] * 1000.0);
    for (std::size_t i = 1; i < 5; ++i) CHECK(x1[i] == x0[i]);
    CHECK(rs.examples[t].y == a.examples[t].y);
  }

  GeneratorSpec bad = s;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(generate(bad), InfeasibleSpec);
  bad = s;
  bad.dim = 1;
  CHECK_THROWS_AS(generate(bad), InfeasibleSpec);
  bad = s;
  bad.gamma = 0.0;
  CHECK_THROWS(generate(bad));
  r.factors = {1, 0, 1, 1, 1};
  CHECK_THROWS(generate(r));
  GeneratorSpec sp;
  sp.kind = GeneratorKind::sparse_target;
  sp.k = 20;
  CHECK_THROWS(generate(sp));
  sp.k = 2;
  sp.dim = 6;
  const auto sd = generate(sp);
  int nz = 0;
  for (double v : *sd.target) nz += v != 0.0;
  CHECK(nz == 2);
}

TEST_CASE("generator spec json round trip") {
  GeneratorSpec s;
  s.kind = GeneratorKind::rescaled;
  auto base = std::make_shared<GeneratorSpec>();
  base->kind = GeneratorKind::noisy_linear;
  base->dim = 3;
  base->sigma = 0.25;
  s.base = base;
  s.factors = {2, 3, 4};
  const auto back = generator_from_json(to_json(s));
  CHECK(dump_json(to_json(back)) == dump_json(to_json(s)));
  CHECK(generate(back).examples == generate(s).examples);
}

TEST_CASE("prng contract") {
  Xoshiro256 a(42), b(42), c(43);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next();
    CHECK(x == b.next());
    (void)c.next();
  }
  CHECK(Xoshiro256(42).next() != Xoshiro256(43).next());
  Xoshiro256 u(1);
  for (int k = 0; k < 1000; ++k) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.below(7) < 7);
    const double s = u.sign();
    CHECK((s == 1.0 || s == -1.0));
  }
}

TEST_CASE("json dump is canonical and exact") {
  json j;
  j["b"] = 0.1;
  j["a"] = std::vector<double>{1.0 / 3.0, 2.0};
  j["c"] = "x";
  const std::string s = dump_json(j);
  CHECK(s == R"({"a":[0.33333333333333331,2.0],"b":0.10000000000000001,"c":"x"})");
  CHECK(json::parse(s)["a"][0].get<double>() == 1.0 / 3.0);
  CHECK_THROWS(dump_json(json(std::nan(""))));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("learner specs") {
  LearnerSpec p;
  p.name = "perceptron";
  const auto c = p.canonical();
  CHECK(c.name == "first_order");
  CHECK(c.eta_mode == "conservative");
  LearnerSpec pp;
  pp.name = "pnorm_perceptron";
  pp.p = 1.5;
  CHECK(pp.canonical().regularizer == "pnorm");
  LearnerSpec pa;
  pa.name = "pa";
  CHECK(pa.canonical().eta_mode == "pa_optimal");
  CHECK(learner_spec_from_json(to_json(pp)).p == 1.5);
  CHECK_THROWS(learner_spec_from_json(json::parse(R"({"name":"ogd","etta":1})")));
  LearnerSpec neg;
  neg.eta = -1;
  CHECK_THROWS_AS(make_learner(neg, 3), std::invalid_argument);
  LearnerSpec unknown;
  unknown.name = "winnow";
  CHECK_THROWS_AS(make_learner(unknown, 3), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  ExperimentConfig c = gen_config("second_order", GeneratorKind::separable_margin, 4, 50);
  c.learner.r = 0.5;
  c.comparators = {"zero", "grid:R=1,n=5"};
  c.strict_audit = true;
  c.trace_path = "t.jsonl";
  const auto back = config_from_json(to_json(c));
  CHECK(dump_json(to_json(back)) == dump_json(to_json(c)));
  CHECK(dump_json(run_identity(back)).find("t.jsonl") == std::string::npos);
  CHECK_THROWS(config_from_json(json::parse(R"({"learner":{"name":"vaw"},"bogus":1})")));
}

TEST_CASE("empty dataset") {
  ExperimentConfig c = gen_config("perceptron", GeneratorKind::separable_margin, 3, 0);
  const auto r = run_experiment(c);
  CHECK(r.trace.records.empty());
  const auto s = r.summary();
  CHECK(s["T"] == 0);
  CHECK(s["mistakes"] == 0);
  CHECK(s["ok"] == true);

  const auto path = scratch("header_only.csv");
  std::ofstream(path) << "label,f1,f2\n";
  ExperimentConfig f;
  f.learner.name = "vaw";
  f.data.use_generator = false;
  f.data.path = path.string();
  f.data.format = "csv";
  CHECK(run_experiment(f).summary()["T"] == 0);
}

TEST_CASE("perceptron on separable data obeys the classical bound") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig c = gen_config("perceptron", GeneratorKind::separable_margin, 8, 2000, seed);
    c.data.generator.gamma = 0.15;
    c.comparators = {"target"};
    c.strict_audit = true;
    const auto r = run_experiment(c);
    CHECK(r.ok);
    const auto s = r.summary();
    CHECK(s["mistakes"].get<double>() <= 1.0 / (0.15 * 0.15));
  }
}

TEST_CASE("data errors") {
  ExperimentConfig c = gen_config("perceptron", GeneratorKind::noisy_linear, 3, 20);
  CHECK_THROWS_AS(run_experiment(c), DataError);
  c.learner.name = "ogd";
  c.learner.loss = "square";
  CHECK_NOTHROW(run_experiment(c));
  ExperimentConfig m;
  m.data.use_generator = false;
  m.data.path = scratch("does_not_exist.svm").string();
  CHECK_THROWS_AS(run_experiment(m), DataError);
  ExperimentConfig t = gen_config("vaw", GeneratorKind::noisy_linear, 3, 20);
  t.comparators = {"grid"};
  CHECK(run_experiment(t).ok);
  t.data.generator.dim = 5;
  CHECK_THROWS_AS(run_experiment(t), std::invalid_argument);
}

TEST_CASE("trace round trip and audit") {
  ExperimentConfig c = gen_config("second_order", GeneratorKind::separable_margin, 3, 80, 5);
  c.comparators = {"zero", "target", "grid:R=1,n=5"};
  const auto r = run_experiment(c);
  const std::string text = trace_to_string(r.trace);
  std::istringstream in(text);
  const auto back = read_trace(in);
  CHECK(trace_to_string(back) == text);
  CHECK(dump_json(reports_json(audit_trace(back, c))) == dump_json(reports_json(r.reports)));
  CHECK(run_experiment(c).trace.records.size() == 80);
  CHECK(trace_to_string(run_experiment(c).trace) == text);

  // Fingerprint mismatch.
  ExperimentConfig other = c;
  other.learner.r = 2.0;
  CHECK_THROWS_AS(audit_trace(back, other), TraceMismatch);
  other = c;
  other.learner.name = "vaw";
  CHECK_THROWS_AS(audit_trace(back, other), TraceMismatch);

  // Truncation and corruption name the bad line.
  std::vector<std::string> lines;
  std::istringstream split(text);
  for (std::string l; std::getline(split, l);) lines.push_back(l);
  auto join = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += lines[i] + "\n";
    return s;
  };
  auto error_line = [](const std::string& s) -> std::size_t {
    std::istringstream is(s);
    try {
      read_trace(is);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 9999;
  };
  CHECK(error_line(join(10)) == 11);
  CHECK(error_line(join(10) + lines[11] + "\n") == 11);
  CHECK(error_line(join(5) + "{not json\n") == 6);
  CHECK(error_line(join(lines.size()) + lines[1] + "\n") == lines.size() + 1);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trace(empty), ParseError);
}

TEST_CASE("prediction comparison across rescaling") {
  for (const char* kind : {"pnorm", "diag"}) {
    ExperimentConfig c;
    c.learner.name = "scale_invariant";
    c.learner.kind = kind;
    c.learner.loss = "absolute";
    c.learner.eta = 0.5;
    c.data.generator.kind = GeneratorKind::rescaled;
    auto base = std::make_shared<GeneratorSpec>();
    base->kind = GeneratorKind::noisy_linear;
    base->dim = 4;
    base->T = 200;
    c.data.generator.base = base;
    c.data.generator.factors = {1e3, 1e-3, 5, 0.2};
    c.data.generator.dim = 4;
    c.data.generator.T = 200;
    c.compare_predictions = true;
    const auto r = run_experiment(c);
    REQUIRE(r.comparison);
    CHECK(r.comparison->T == 200);
    CHECK(r.comparison->max_relative_deviation <= 1e-6);
    CHECK(r.summary().contains("prediction_deviation"));
    CAPTURE(kind);
  }
  ExperimentConfig plain = gen_config("vaw", GeneratorKind::noisy_linear, 3, 10);
  CHECK_THROWS(base_of_rescaled(plain));
}

TEST_CASE("execute writes outputs and batch runs configs") {
  ExperimentConfig c = gen_config("adaptive_filter", GeneratorKind::noisy_linear, 3, 40);
  c.trace_path = scratch("af.trace").string();
  c.summary_path = scratch("af.json").string();
  execute(c);
  CHECK(read_trace_file(c.trace_path).records.size() == 40);
  std::ifstream in(c.summary_path);
  CHECK(json::parse(in)["T"] == 40);

  std::vector<ExperimentConfig> batch;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) batch.push_back(gen_config("pa", GeneratorKind::separable_margin, 4, 50, seed));
  batch.push_back(gen_config("perceptron", GeneratorKind::noisy_linear, 3, 10));
  const auto out = run_batch(batch, 3);
  REQUIRE(out.size() == 7);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(out[i].ok);
    CHECK(out[i].exit_code == 0);
    CHECK(out[i].summary["T"] == 50);
  }
  CHECK(out[6].exit_code == 2);
  CHECK_FALSE(out[6].error.empty());
  const auto serial = run_batch(batch, 1);
  for (std::size_t i = 0; i < 6; ++i) CHECK(serial[i].summary["fingerprint"] == out[i].summary["fingerprint"]);
}

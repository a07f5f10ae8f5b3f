#include "omd/generators.hpp"

#include <cmath>

#include "omd/prng.hpp"

namespace omd {

using nlohmann::json;

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "separable_margin") return GeneratorKind::separable_margin;
  if (name == "noisy_linear") return GeneratorKind::noisy_linear;
  if (name == "sparse_target") return GeneratorKind::sparse_target;
  if (name == "heavy_tail_features") return GeneratorKind::heavy_tail_features;
  if (name == "rescaled") return GeneratorKind::rescaled;
  throw std::invalid_argument("unknown generator '" + name + "'");
}

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::separable_margin:
      return "separable_margin";
    case GeneratorKind::noisy_linear:
      return "noisy_linear";
    case GeneratorKind::sparse_target:
      return "sparse_target";
    case GeneratorKind::heavy_tail_features:
      return "heavy_tail_features";
    case GeneratorKind::rescaled:
      return "rescaled";
  }
  return "?";
}

void GeneratorSpec::validate() const {
  if (kind == GeneratorKind::rescaled) {
    if (!base) throw std::invalid_argument("rescaled generator needs a base spec");
    base->validate();
    if (factors.size() != base->dim) {
      throw std::invalid_argument("rescaled generator: expected " + std::to_string(base->dim) + " factors, got " +
                                  std::to_string(factors.size()));
    }
    for (double c : factors) {
      if (c == 0.0 || !std::isfinite(c)) throw std::invalid_argument("rescaled generator: factors must be finite and nonzero");
    }
    return;
  }
  if (dim == 0) throw std::invalid_argument("generator: dimension must be positive");
  switch (kind) {
    case GeneratorKind::separable_margin:
      if (!(gamma > 0.0)) throw std::invalid_argument("separable_margin: gamma must be positive");
      if (gamma > 1.0) throw InfeasibleSpec("separable_margin: gamma > 1 is impossible for unit-norm instances");
      if (dim == 1 && gamma < 1.0) {
        throw InfeasibleSpec("separable_margin: d = 1 admits only gamma = 1");
      }
      break;
    case GeneratorKind::noisy_linear:
    case GeneratorKind::sparse_target:
      if (!(sigma >= 0.0)) throw std::invalid_argument("generator: sigma must be nonnegative");
      if (kind == GeneratorKind::sparse_target && (k == 0 || k > dim)) {
        throw std::invalid_argument("sparse_target: need 1 <= k <= d");
      }
      if (target && target->size() != dim) throw std::invalid_argument("noisy_linear: target has the wrong dimension");
      break;
    case GeneratorKind::heavy_tail_features:
      if (!(exponent >= 0.0)) throw std::invalid_argument("heavy_tail_features: exponent must be nonnegative");
      break;
    case GeneratorKind::rescaled:
      break;
  }
}

json to_json(const GeneratorSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["seed"] = s.seed;
  if (s.kind == GeneratorKind::rescaled) {
    j["base"] = s.base ? to_json(*s.base) : json();
    j["factors"] = s.factors;
    return j;
  }
  j["dim"] = s.dim;
  j["T"] = s.T;
  switch (s.kind) {
    case GeneratorKind::separable_margin:
      j["gamma"] = s.gamma;
      break;
    case GeneratorKind::sparse_target:
      j["k"] = s.k;
      [[fallthrough]];
    case GeneratorKind::noisy_linear:
      j["sigma"] = s.sigma;
      j["classify"] = s.classify;
      if (s.target) j["target"] = *s.target;
      break;
    case GeneratorKind::heavy_tail_features:
      j["exponent"] = s.exponent;
      break;
    case GeneratorKind::rescaled:
      break;
  }
  return j;
}

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec s;
  s.kind = parse_generator_kind(j.at("kind").get<std::string>());
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (s.kind == GeneratorKind::rescaled) {
    s.base = std::make_shared<GeneratorSpec>(generator_from_json(j.at("base")));
    s.factors = j.at("factors").get<RealVec>();
    s.dim = s.base->dim;
    s.T = s.base->T;
    s.validate();
    return s;
  }
  if (j.contains("dim")) s.dim = j.at("dim").get<std::size_t>();
  if (j.contains("T")) s.T = j.at("T").get<std::size_t>();
  if (j.contains("gamma")) s.gamma = j.at("gamma").get<double>();
  if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
  if (j.contains("k")) s.k = j.at("k").get<std::size_t>();
  if (j.contains("exponent")) s.exponent = j.at("exponent").get<double>();
  if (j.contains("classify")) s.classify = j.at("classify").get<bool>();
  if (j.contains("target")) s.target = j.at("target").get<RealVec>();
  s.validate();
  return s;
}

namespace {

RealVec unit_normal(Xoshiro256& rng, std::size_t d) {
  RealVec u(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& v : u) {
      v = rng.normal();
      n2 += v * v;
    }
  } while (n2 == 0.0);
  const double n = std::sqrt(n2);
  for (double& v : u) v /= n;
  return u;
}

double sign_label(double v) { return v >= 0.0 ? 1.0 : -1.0; }

Dataset separable_margin(const GeneratorSpec& s, Xoshiro256& rng) {
  Dataset data;
  data.dim = s.dim;
  const RealVec u = unit_normal(rng, s.dim);
  data.target = u;
  for (std::size_t t = 0; t < s.T; ++t) {
    const double y = rng.sign();
    const double c = s.gamma >= 1.0 ? 1.0 : rng.uniform(s.gamma, 1.0);
    RealVec x(s.dim, 0.0);
    if (c < 1.0) {
      // A unit direction orthogonal to u.
      RealVec v;
      double vn2 = 0.0;
      do {
        v = unit_normal(rng, s.dim);
        const double proj = dot(v, u);
        for (std::size_t i = 0; i < s.dim; ++i) v[i] -= proj * u[i];
        vn2 = squared_norm(v);
      } while (vn2 < 1e-12);
      const double vn = std::sqrt(vn2);
      const double side = std::sqrt(1.0 - c * c);
      for (std::size_t i = 0; i < s.dim; ++i) x[i] = y * c * u[i] + side * v[i] / vn;
    } else {
      for (std::size_t i = 0; i < s.dim; ++i) x[i] = y * u[i];
    }
    data.examples.push_back({SparseVec::from_dense(x), y});
  }
  return data;
}

Dataset linear_stream(const GeneratorSpec& s, Xoshiro256& rng, RealVec u) {
  Dataset data;
  data.dim = s.dim;
  for (std::size_t t = 0; t < s.T; ++t) {
    RealVec x(s.dim);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    double y = dot(u, x);
    if (s.sigma > 0.0) y += s.sigma * rng.normal();
    if (s.classify) y = sign_label(y);
    data.examples.push_back({SparseVec::from_dense(x), y});
  }
  data.target = std::move(u);
  return data;
}

Dataset heavy_tail(const GeneratorSpec& s, Xoshiro256& rng) {
  Dataset data;
  data.dim = s.dim;
  RealVec u(s.dim);
  for (double& v : u) v = rng.normal();
  std::vector<double> prob(s.dim);
  for (std::size_t i = 0; i < s.dim; ++i) prob[i] = 0.5 / std::pow(static_cast<double>(i + 1), s.exponent);
  for (std::size_t t = 0; t < s.T; ++t) {
    std::vector<SparseVec::Entry> entries;
    for (std::size_t i = 0; i < s.dim; ++i) {
      if (rng.uniform() < prob[i]) entries.push_back({i, 1.0});
    }
    SparseVec x(s.dim, std::move(entries));
    const double y = sign_label(x.dot(u));
    data.examples.push_back({std::move(x), y});
  }
  data.target = std::move(u);
  return data;
}

}  // namespace

Dataset generate(const GeneratorSpec& s) {
  s.validate();
  if (s.kind == GeneratorKind::rescaled) {
    Dataset data = generate(*s.base);
    for (auto& ex : data.examples) {
      std::vector<SparseVec::Entry> entries(ex.x.entries().begin(), ex.x.entries().end());
      for (auto& e : entries) e.value *= s.factors[e.index];
      ex.x = SparseVec(data.dim, std::move(entries));
    }
    if (data.target) {
      for (std::size_t i = 0; i < data.dim; ++i) (*data.target)[i] /= s.factors[i];
    }
    return data;
  }
  Xoshiro256 rng(s.seed);
  switch (s.kind) {
    case GeneratorKind::separable_margin:
      return separable_margin(s, rng);
    case GeneratorKind::noisy_linear: {
      RealVec u = s.target ? *s.target : unit_normal(rng, s.dim);
      return linear_stream(s, rng, std::move(u));
    }
    case GeneratorKind::sparse_target: {
      RealVec u(s.dim, 0.0);
      std::vector<std::size_t> idx(s.dim);
      for (std::size_t i = 0; i < s.dim; ++i) idx[i] = i;
      for (std::size_t i = 0; i < s.k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(s.dim - i));
        std::swap(idx[i], idx[j]);
        u[idx[i]] = rng.normal();
      }
      return linear_stream(s, rng, std::move(u));
    }
    case GeneratorKind::heavy_tail_features:
      return heavy_tail(s, rng);
    case GeneratorKind::rescaled:
      break;
  }
  throw std::logic_error("generate: bad kind");
}

}  // namespace omd

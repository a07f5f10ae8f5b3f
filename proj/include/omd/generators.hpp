#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "omd/dataset.hpp"

namespace omd {

enum class GeneratorKind { separable_margin, noisy_linear, sparse_target, heavy_tail_features, rescaled };

GeneratorKind parse_generator_kind(const std::string& name);
std::string to_string(GeneratorKind k);

/// Thrown for specs no construction can satisfy.
class InfeasibleSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Seeded synthetic stream.  Fields not used by a kind are ignored.
///
///   separable_margin     unit u*, ||x|| = 1, y <u*, x> ~ U[gamma, 1]
///   noisy_linear         x ~ U[-1,1]^d, y = <u*, x> + sigma N(0,1)
///   sparse_target        as noisy_linear with a k-sparse u*
///   heavy_tail_features  binary x_i ~ Bernoulli(0.5 / (i+1)^exponent), y = sign <u*, x>
///   rescaled             base stream with x_i multiplied by factors[i]
///
/// `classify` turns the two linear kinds into sign labels (0 maps to +1).
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::separable_margin;
  std::size_t dim = 10;
  std::size_t T = 200;
  std::uint64_t seed = 1;
  double gamma = 0.1;
  double sigma = 0.1;
  std::size_t k = 1;
  double exponent = 1.0;
  bool classify = false;
  std::optional<RealVec> target;  // noisy_linear: use this u* instead of a random one
  std::shared_ptr<GeneratorSpec> base;
  RealVec factors;

  void validate() const;
};

nlohmann::json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_from_json(const nlohmann::json& j);

/// Deterministic given the GeneratorSpec; the comparator u* travels in Dataset::target.
Dataset generate(const GeneratorSpec& spec);

}  // namespace omd

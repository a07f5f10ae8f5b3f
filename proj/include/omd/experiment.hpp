#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "omd/bounds.hpp"
#include "omd/dataset.hpp"
#include "omd/generators.hpp"
#include "omd/learners.hpp"
#include "omd/trace.hpp"

namespace omd {

/// Input data cannot be used (bad file, wrong labels for the learner).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stored trace does not belong to the given config.
class TraceMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Algorithm plus every hyperparameter any learner takes; each learner reads
/// only its own fields.
struct LearnerSpec {
  std::string name = "ogd";
  double eta = 0.1;
  std::string loss = "hinge";
  std::string schedule = "sqrt";
  double scale = 1.0;
  double l1 = 0.0;
  double l2 = 0.0;
  std::string regularizer = "quadratic";  // quadratic | pnorm | weighted_qnorm
  double p = 2.0;
  double q = 2.0;
  RealVec weights;
  std::string eta_mode = "conservative";
  std::string variant = "full";
  std::string trigger = "omd_margin";
  double r = 1.0;
  double a = 1.0;
  double L = 1.0;
  std::string kind = "pnorm";

  /// Expands perceptron, pnorm_perceptron and pa into first_order settings.
  LearnerSpec canonical() const;
};

nlohmann::json to_json(const LearnerSpec& s);
LearnerSpec learner_spec_from_json(const nlohmann::json& j);
LearnerPtr make_learner(const LearnerSpec& spec, std::size_t dim);

struct DataSpec {
  bool use_generator = true;
  GeneratorSpec generator;
  std::string path;
  std::string format = "svmlight";
  std::string label_column = "label";
  bool remap01 = false;
  std::size_t dim = 0;  // 0 infers from the file
};

nlohmann::json to_json(const DataSpec& s);
DataSpec data_spec_from_json(const nlohmann::json& j);
/// Throws DataError for unreadable or malformed files.
Dataset load_data(const DataSpec& spec);

struct ExperimentConfig {
  LearnerSpec learner;
  DataSpec data;
  std::vector<std::string> comparators{"zero"};
  bool audit = true;
  bool strict_audit = false;
  bool compare_predictions = false;
  std::string trace_path;
  std::string summary_path;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// The part of the config that identifies a run; output paths and the strict
/// flag are left out so relocating outputs does not change the trace.
nlohmann::json run_identity(const ExperimentConfig& c);

struct PredictionComparison {
  std::size_t T = 0;
  double max_relative_deviation = 0.0;
  std::size_t worst_round = 0;
};

struct RunResult {
  RunTrace trace;
  std::vector<BoundReport> reports;
  std::optional<PredictionComparison> comparison;
  double wall_time_s = 0.0;
  bool ok = true;  // every report ok
  nlohmann::json summary() const;
};

/// Feeds the examples to a fresh learner and records every round.
RunTrace record_trace(Learner& learner, std::span<const Example> examples,
                      const nlohmann::json& identity = nlohmann::json::object());

/// Runs the online protocol, recording one trace row per example.
RunResult run_experiment(const ExperimentConfig& config);
/// Re-evaluates the config's bounds on a stored trace.  Throws TraceMismatch
/// when the trace's learner fingerprint differs from the config's.
std::vector<BoundReport> audit_trace(const RunTrace& trace, const ExperimentConfig& config);
nlohmann::json reports_json(const std::vector<BoundReport>& reports);

/// Replays two configs and measures how far their predictions drift apart:
/// |a - b| / max(|a|, |b|, sum_j |w_j x_j|) per round, 0 when all vanish.
PredictionComparison compare_predictions(const ExperimentConfig& a, const ExperimentConfig& b);
/// For a rescaled generator, the same config on the base stream.
ExperimentConfig base_of_rescaled(const ExperimentConfig& c);

/// Runs and writes the configured outputs; returns the result.
RunResult execute(const ExperimentConfig& config);

struct BatchOutcome {
  bool ok = false;
  int exit_code = 0;
  std::string error;
  nlohmann::json summary;
};
/// Independent configs on up to `threads` workers, one learner per worker.
std::vector<BatchOutcome> run_batch(const std::vector<ExperimentConfig>& configs, unsigned threads);

}  // namespace omd

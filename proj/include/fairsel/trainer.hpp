#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fairsel/batching.hpp"
#include "fairsel/dataset.hpp"
#include "fairsel/fairness.hpp"
#include "fairsel/metrics.hpp"
#include "fairsel/model.hpp"
#include "fairsel/selection.hpp"

namespace fairsel {

enum class Method {
  LR,                 // plain SGD on everything
  ITLM,               // per-epoch lowest-loss selection
  FB,                 // no selection, lambda-adapted batch sampling
  ITLMThenFB,         // ITLM, then FB sampling on the frozen final selection
  ITLMThenPenalty,    // ITLM, then covariance-penalty training on it
  Ours,               // greedy fair selection + weighted batches + lambda updates
  OursNoConstraints,  // lowest-loss selection + weighted batches (ablation)
  OursNoWeights,      // fair selection + plain stratified batches (ablation)
};

Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct TrainConfig {
  Method method = Method::Ours;
  double tau = 0.9;
  double alpha = 0.0005;
  double mu = 1.0;
  int epochs = 3000;
  int warm_start_epochs = 200;
  int phase2_epochs = -1;  // two-phase baselines; -1 means epochs - warm_start
  std::size_t batch_size = 100;
  double learning_rate = 0.0005;
  FairnessMetric metric = FairnessMetric::EqualizedOdds;
  std::uint64_t seed = 1;
  LambdaInit lambda_init = LambdaInit::Proportions;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::size_t selection_size = 0;
  LambdaValues lambdas{};
  std::array<double, kGroupCount> group_losses{};  // NaN when unavailable
  double val_accuracy, val_eo, val_dp;             // NaN when no validation set
};

struct RunLog {
  std::vector<EpochRecord> records;
  EvalReport test_report;
};

struct TrainResult {
  LinearModel model;
  RunLog log;
};

// Runs one full training per the configured method: warm start, then the
// method's per-epoch selection/batching/controller schedule, evaluated on the
// clean test set at the end. Deterministic under config.seed.
TrainResult train(const TrainConfig& config, const Dataset& train,
                  const Dataset& test, const Dataset* validation = nullptr);

EvalReport evaluate(const LinearModel& model, const Dataset& test);

// Optional preamble lines are written verbatim before the header (used to
// echo the resolved config into every result file).
void write_runlog_csv(const std::string& path, const RunLog& log,
                      const std::vector<std::string>& preamble = {});

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct MultiSeedResult {
  std::vector<SeedOutcome> runs;
  AggregateStat accuracy;
  AggregateStat eo_disparity;
  AggregateStat dp_disparity;
  std::vector<std::string> warnings;
};

struct SeedData {
  Dataset train;
  Dataset validation;  // may be empty
  Dataset test;
};

// Runs the config once per seed; the provider supplies each seed's data
// (generation, split, and corruption are seed-dependent). A run that throws
// is excluded from the aggregate and recorded as a warning.
MultiSeedResult multi_seed(const TrainConfig& base,
                           const std::vector<std::uint64_t>& seeds,
                           const std::function<SeedData(std::uint64_t)>& provider);

AggregateStat aggregate(const std::vector<double>& values);

}  // namespace fairsel

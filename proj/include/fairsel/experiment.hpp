#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsel/corruption.hpp"
#include "fairsel/dataset.hpp"
#include "fairsel/synthgen.hpp"
#include "fairsel/trainer.hpp"

namespace fairsel {

// One experiment: a data source, a corruption recipe, a method list, and a
// seed list. Every (method, seed, rate) cell trains once and is evaluated on
// the clean test split.
struct ExperimentSpec {
  bool synthetic = true;
  SynthSpec synth;  // per-run seed overrides synth.seed
  std::string csv_path;
  CsvSchema csv_schema;

  SplitSpec split{0.625, 0.0625, 0.3125, 0};
  bool append_sensitive = true;

  NoiseSpec noise;
  std::vector<double> noise_rates;  // more than one entry makes a rate sweep

  TrainConfig train;
  std::optional<double> tau_override;  // when unset, tau = 1 - noise rate
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;

  std::string output_dir = "out";
  int jobs = 1;
  bool save_models = false;

  void validate() const;
};

ExperimentSpec experiment_from_json(const nlohmann::json& j);
ExperimentSpec load_experiment_file(const std::string& path);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

struct CellResult {
  Method method{};
  std::uint64_t seed = 0;
  double rate = 0.0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::vector<std::string> written_files;
  bool all_ok = true;
};

// The per-cell data pipeline: generate/load -> split -> standardize with
// train stats -> optionally append the sensitive column -> corrupt the train
// labels (probe fit on the clean train split). Deterministic in (seed, rate).
SeedData build_cell_data(const ExperimentSpec& spec, std::uint64_t seed, double rate);

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Formats "mean±std" with three decimals, paper-table style.
std::string format_cell(const AggregateStat& stat);

}  // namespace fairsel

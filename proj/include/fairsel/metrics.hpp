#pragma once

#include <array>

#include "fairsel/dataset.hpp"
#include "fairsel/model.hpp"

namespace fairsel {

// Per-(y,z) prediction counts; enough to rebuild every rate the disparity
// metrics use.
struct StratumCounts {
  std::size_t total = 0;
  std::size_t predicted_positive = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double eo_disparity = 0.0;
  double dp_disparity = 0.0;
  std::array<StratumCounts, kGroupCount> strata{};
};

// Fraction of samples whose thresholded prediction (p >= 0.5) matches y.
double accuracy(const LinearModel& model, const Dataset& d);

// max over (y,z) of |Pr(yhat=1 | y,z) - Pr(yhat=1 | y)|.
// Throws std::runtime_error when any (y,z) cell is empty; the quantity is
// undefined there and zero would fake fairness.
double eo_disparity(const LinearModel& model, const Dataset& d);

// max over z of |Pr(yhat=1 | z) - Pr(yhat=1)|. Both z strata must be nonempty.
double dp_disparity(const LinearModel& model, const Dataset& d);

// All of the above in one pass, with the per-stratum counts.
EvalReport evaluate_model(const LinearModel& model, const Dataset& d);

}  // namespace fairsel

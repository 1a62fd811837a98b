#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "fairsel/dataset.hpp"
#include "fairsel/model.hpp"
#include "fairsel/selection.hpp"

namespace fairsel {

enum class FairnessMetric { EqualizedOdds, DemographicParity };

FairnessMetric metric_from_string(const std::string& s);
std::string to_string(FairnessMetric m);

// Adaptive per-group sampling caps. For each class y, lambda(y,0)+lambda(y,1)
// stays 1 and every component stays in [0,1]; updates move one component by
// at most step_size and restore the complement.
struct LambdaState {
  LambdaValues values{};
  double step_size = 0.0005;
  FairnessMetric metric = FairnessMetric::EqualizedOdds;

  double of(int y, int z) const { return values[group_slot(y, z)]; }
  void validate() const;  // throws when the simplex or bounds are broken
};

enum class LambdaInit { Proportions, Random };

// Default initialization puts lambda at the empirical group proportions
// |D_(y,z)| / |D_y|; Random draws a seeded point on each per-class simplex.
// All four groups must be nonempty.
LambdaState init_lambda(const Dataset& d, FairnessMetric metric, double step_size,
                        LambdaInit mode = LambdaInit::Proportions,
                        std::uint64_t seed = 0);

// Mean loss, positive-prediction rate and size per (y,z) cell, computed over
// the selected samples only. Empty cells carry NaN and are skipped by the
// controller.
struct GroupLossReport {
  std::array<double, kGroupCount> mean_loss{};
  std::array<double, kGroupCount> positive_rate{};
  std::array<std::size_t, kGroupCount> selected_size{};

  bool has(int y, int z) const { return selected_size[group_slot(y, z)] > 0; }
};

GroupLossReport group_report(const LinearModel& model, const SelectionResult& selection,
                             const Dataset& d);

// Signed-gradient step for equalized odds: within each class y the cap of the
// higher-loss group grows by step_size (sign(0) = 0 on ties); its complement
// shrinks to keep the simplex. Classes with an empty cell are skipped.
LambdaState update_eo(const LambdaState& state, const GroupLossReport& report);

// Signed-gradient step for demographic parity. With T_z =
// (|S_(1,z)| / |S_(z)|) * L_(1,z), the positive-class cap of the larger term's
// group grows while the corresponding negative-class cap shrinks, both by
// step_size, with clamping and per-class complements.
LambdaState update_dp(const LambdaState& state, const GroupLossReport& report);

LambdaState update_lambda(const LambdaState& state, const GroupLossReport& report);

}  // namespace fairsel

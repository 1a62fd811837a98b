#include "fairsel/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace fairsel {

namespace {

constexpr double kSimplexTol = 1e-9;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

FairnessMetric metric_from_string(const std::string& s) {
  if (s == "eo" || s == "EO") return FairnessMetric::EqualizedOdds;
  if (s == "dp" || s == "DP") return FairnessMetric::DemographicParity;
  throw std::invalid_argument("unknown fairness metric: " + s);
}

std::string to_string(FairnessMetric m) {
  return m == FairnessMetric::EqualizedOdds ? "eo" : "dp";
}

void LambdaState::validate() const {
  for (double v : values)
    if (v < -kSimplexTol || v > 1.0 + kSimplexTol)
      throw std::invalid_argument("lambda: component outside [0,1]");
  for (int y = 0; y < 2; ++y) {
    const double s = of(y, 0) + of(y, 1);
    if (std::abs(s - 1.0) > kSimplexTol)
      throw std::invalid_argument("lambda: class simplex does not sum to 1");
  }
  if (step_size < 0.0) throw std::invalid_argument("lambda: negative step size");
}

LambdaState init_lambda(const Dataset& d, FairnessMetric metric, double step_size,
                        LambdaInit mode, std::uint64_t seed) {
  const GroupIndex gi = group_index(d);
  for (int slot = 0; slot < kGroupCount; ++slot)
    if (gi.by_group[slot].empty())
      throw std::invalid_argument("init_lambda: empty group (y=" +
                                  std::to_string(slot / 2) +
                                  ",z=" + std::to_string(slot % 2) + ")");
  LambdaState st;
  st.step_size = step_size;
  st.metric = metric;
  if (mode == LambdaInit::Proportions) {
    for (int y = 0; y < 2; ++y) {
      const double cls = static_cast<double>(gi.class_size(y));
      const double l1 = static_cast<double>(gi.of(y, 1).size()) / cls;
      st.values[group_slot(y, 1)] = l1;
      st.values[group_slot(y, 0)] = 1.0 - l1;
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int y = 0; y < 2; ++y) {
      const double l1 = unif(rng);
      st.values[group_slot(y, 1)] = l1;
      st.values[group_slot(y, 0)] = 1.0 - l1;
    }
  }
  st.validate();
  return st;
}

GroupLossReport group_report(const LinearModel& model,
                             const SelectionResult& selection, const Dataset& d) {
  GroupLossReport rep;
  rep.mean_loss.fill(std::numeric_limits<double>::quiet_NaN());
  rep.positive_rate.fill(std::numeric_limits<double>::quiet_NaN());
  const auto losses = per_sample_loss(model, d);
  const auto probs = predict_proba(model, d.features);
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const auto& idx = selection.selected_by_group[slot];
    rep.selected_size[slot] = idx.size();
    if (idx.empty()) continue;
    double loss_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i : idx) {
      loss_sum += losses[i];
      if (probs[i] >= 0.5) ++pos;
    }
    rep.mean_loss[slot] = loss_sum / static_cast<double>(idx.size());
    rep.positive_rate[slot] =
        static_cast<double>(pos) / static_cast<double>(idx.size());
  }
  return rep;
}

LambdaState update_eo(const LambdaState& state, const GroupLossReport& report) {
  LambdaState next = state;
  const double a = state.step_size;
  for (int y = 0; y < 2; ++y) {
    if (!report.has(y, 0) || !report.has(y, 1)) continue;
    const double l0 = report.mean_loss[group_slot(y, 0)];
    const double l1 = report.mean_loss[group_slot(y, 1)];
    const double lam1 = clamp01(state.of(y, 1) - a * sign(l0 - l1));
    next.values[group_slot(y, 1)] = lam1;
    next.values[group_slot(y, 0)] = 1.0 - lam1;
  }
  next.validate();
  return next;
}

LambdaState update_dp(const LambdaState& state, const GroupLossReport& report) {
  LambdaState next = state;
  const double a = state.step_size;
  const std::size_t sz0 =
      report.selected_size[group_slot(0, 0)] + report.selected_size[group_slot(1, 0)];
  const std::size_t sz1 =
      report.selected_size[group_slot(0, 1)] + report.selected_size[group_slot(1, 1)];
  if (!report.has(1, 0) || !report.has(1, 1) || sz0 == 0 || sz1 == 0) return next;

  const double t0 = static_cast<double>(report.selected_size[group_slot(1, 0)]) /
                    static_cast<double>(sz0) * report.mean_loss[group_slot(1, 0)];
  const double t1 = static_cast<double>(report.selected_size[group_slot(1, 1)]) /
                    static_cast<double>(sz1) * report.mean_loss[group_slot(1, 1)];
  const double s = sign(t0 - t1);

  const double lam11 = clamp01(state.of(1, 1) - a * s);
  next.values[group_slot(1, 1)] = lam11;
  next.values[group_slot(1, 0)] = 1.0 - lam11;
  const double lam01 = clamp01(state.of(0, 1) + a * s);
  next.values[group_slot(0, 1)] = lam01;
  next.values[group_slot(0, 0)] = 1.0 - lam01;
  next.validate();
  return next;
}

LambdaState update_lambda(const LambdaState& state, const GroupLossReport& report) {
  return state.metric == FairnessMetric::EqualizedOdds ? update_eo(state, report)
                                                       : update_dp(state, report);
}

}  // namespace fairsel

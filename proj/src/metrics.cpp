#include "fairsel/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fairsel {

namespace {

std::array<StratumCounts, kGroupCount> count_strata(const LinearModel& model,
                                                    const Dataset& d) {
  const auto probs = predict_proba(model, d.features);
  std::array<StratumCounts, kGroupCount> strata{};
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto& s = strata[group_slot(d.labels[i], d.sensitive[i])];
    ++s.total;
    if (probs[i] >= 0.5) ++s.predicted_positive;
  }
  return strata;
}

double eo_from_counts(const std::array<StratumCounts, kGroupCount>& strata) {
  double disparity = 0.0;
  for (int y = 0; y < 2; ++y) {
    const auto& s0 = strata[group_slot(y, 0)];
    const auto& s1 = strata[group_slot(y, 1)];
    if (s0.total == 0 || s1.total == 0)
      throw std::runtime_error("eo_disparity: empty (y,z) stratum");
    const double class_rate =
        static_cast<double>(s0.predicted_positive + s1.predicted_positive) /
        static_cast<double>(s0.total + s1.total);
    for (const auto* s : {&s0, &s1}) {
      const double rate = static_cast<double>(s->predicted_positive) /
                          static_cast<double>(s->total);
      disparity = std::max(disparity, std::abs(rate - class_rate));
    }
  }
  return disparity;
}

double dp_from_counts(const std::array<StratumCounts, kGroupCount>& strata) {
  std::array<std::size_t, 2> tot{}, pos{};
  for (int slot = 0; slot < kGroupCount; ++slot) {
    tot[slot % 2] += strata[slot].total;
    pos[slot % 2] += strata[slot].predicted_positive;
  }
  if (tot[0] == 0 || tot[1] == 0)
    throw std::runtime_error("dp_disparity: empty z stratum");
  const double overall = static_cast<double>(pos[0] + pos[1]) /
                         static_cast<double>(tot[0] + tot[1]);
  double disparity = 0.0;
  for (int z = 0; z < 2; ++z) {
    const double rate = static_cast<double>(pos[z]) / static_cast<double>(tot[z]);
    disparity = std::max(disparity, std::abs(rate - overall));
  }
  return disparity;
}

}  // namespace

double accuracy(const LinearModel& model, const Dataset& d) {
  if (d.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  const auto probs = predict_proba(model, d.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int pred = probs[i] >= 0.5 ? 1 : 0;
    if (pred == d.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

double eo_disparity(const LinearModel& model, const Dataset& d) {
  return eo_from_counts(count_strata(model, d));
}

double dp_disparity(const LinearModel& model, const Dataset& d) {
  return dp_from_counts(count_strata(model, d));
}

EvalReport evaluate_model(const LinearModel& model, const Dataset& d) {
  if (d.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  EvalReport rep;
  rep.strata = count_strata(model, d);
  rep.accuracy = accuracy(model, d);
  rep.eo_disparity = eo_from_counts(rep.strata);
  rep.dp_disparity = dp_from_counts(rep.strata);
  return rep;
}

}  // namespace fairsel

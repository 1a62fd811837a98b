#include "fairsel/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fairsel {

namespace {

// Correct-classification margin: positive when the probe puts the sample on
// its label's side, larger means more confident.
std::vector<double> margins(const Dataset& d, const LinearModel& probe) {
  if (probe.dim() != d.features.cols)
    throw std::invalid_argument("corruption: probe dimension mismatch");
  std::vector<double> m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = probe.logit(d.features.row(i));
    m[i] = (d.labels[i] == 1 ? 1.0 : -1.0) * t;
  }
  return m;
}

FlipResult apply_flips(const Dataset& d, const std::vector<std::size_t>& positions) {
  FlipResult r;
  r.corrupted = d;
  r.flipped_ids.reserve(positions.size());
  for (std::size_t i : positions) {
    r.corrupted.labels[i] = 1 - r.corrupted.labels[i];
    r.flipped_ids.push_back(d.ids[i]);
  }
  std::sort(r.flipped_ids.begin(), r.flipped_ids.end());
  return r;
}

// Largest-margin-first positions among `candidates`, ties by ascending
// position.
std::vector<std::size_t> top_margin_positions(const std::vector<double>& margin,
                                              std::vector<std::size_t> candidates,
                                              std::size_t k) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

}  // namespace

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "random") return NoiseMode::Random;
  if (s == "adversarial") return NoiseMode::Adversarial;
  if (s == "group_targeted") return NoiseMode::GroupTargeted;
  throw std::invalid_argument("unknown noise mode: " + s);
}

std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::Random: return "random";
    case NoiseMode::Adversarial: return "adversarial";
    case NoiseMode::GroupTargeted: return "group_targeted";
  }
  return "?";
}

std::size_t NoiseSpec::flip_count(std::size_t n) const {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

void NoiseSpec::validate() const {
  if (rate < 0.0 || rate > 0.5)
    throw std::invalid_argument("noise: rate must be in [0, 0.5]");
}

FlipResult flip_random(const Dataset& d, const NoiseSpec& spec) {
  spec.validate();
  if (spec.mode != NoiseMode::Random)
    throw std::invalid_argument("flip_random: mode is not random");
  const std::size_t k = spec.flip_count(d.size());
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(k);
  return apply_flips(d, order);
}

FlipResult flip_adversarial(const Dataset& d, const NoiseSpec& spec,
                            const LinearModel& probe) {
  spec.validate();
  if (spec.mode != NoiseMode::Adversarial)
    throw std::invalid_argument("flip_adversarial: mode is not adversarial");
  const auto m = margins(d, probe);
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  return apply_flips(d, top_margin_positions(m, std::move(all), spec.flip_count(d.size())));
}

FlipResult flip_group_targeted(const Dataset& d, const NoiseSpec& spec,
                               const LinearModel& probe, const Dataset& holdout) {
  spec.validate();
  if (spec.mode != NoiseMode::GroupTargeted)
    throw std::invalid_argument("flip_group_targeted: mode is not group_targeted");
  const auto m = margins(d, probe);
  const GroupIndex gi = group_index(d);
  const std::size_t k = spec.flip_count(d.size());

  auto flip_in_group = [&](const GroupKey& g) -> FlipResult {
    const auto& members = gi.by_group[group_slot(g)];
    if (members.empty())
      throw std::invalid_argument("flip_group_targeted: target group is empty");
    auto positions = top_margin_positions(m, members, k);
    FlipResult r = apply_flips(d, positions);
    r.chosen_group = g;
    r.shortfall = members.size() < k;
    return r;
  };

  if (spec.target_group) return flip_in_group(*spec.target_group);

  // Auto: attack each group, refit, keep the most damaging one.
  double worst_acc = 2.0;
  std::optional<GroupKey> worst_group;
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const GroupKey g = group_from_slot(slot);
    if (gi.by_group[slot].empty()) continue;
    FlipResult cand = flip_in_group(g);
    const LinearModel refit = fit_logistic_fullbatch(cand.corrupted);
    std::size_t correct = 0;
    const auto probs = predict_proba(refit, holdout.features);
    for (std::size_t i = 0; i < holdout.size(); ++i)
      if ((probs[i] >= 0.5 ? 1 : 0) == holdout.labels[i]) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(holdout.size());
    if (acc < worst_acc) {
      worst_acc = acc;
      worst_group = g;
    }
  }
  if (!worst_group)
    throw std::invalid_argument("flip_group_targeted: all groups empty");
  return flip_in_group(*worst_group);
}

}  // namespace fairsel

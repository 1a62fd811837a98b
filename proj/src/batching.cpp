#include "fairsel/batching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fairsel {

BatchPlan plan_batch(const SelectionResult& selection, const LambdaValues& lambda,
                     std::size_t batch_size) {
  if (selection.selected.empty())
    throw std::invalid_argument("plan_batch: empty selection");
  if (batch_size < 4) throw std::invalid_argument("plan_batch: batch size must be >= 4");

  const double total = static_cast<double>(selection.selected.size());
  std::array<double, kGroupCount> raw{};
  double live_mass = 0.0, dead_mass = 0.0;
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const int y = slot / 2;
    raw[slot] = static_cast<double>(batch_size) * lambda[slot] *
                static_cast<double>(selection.class_counts[y]) / total;
    if (selection.group_counts[slot] == 0) {
      dead_mass += raw[slot];
      raw[slot] = 0.0;
    } else {
      live_mass += raw[slot];
    }
  }
  if (live_mass <= 0.0)
    throw std::invalid_argument("plan_batch: no positive mass on nonempty groups");
  if (dead_mass > 0.0) {
    for (int slot = 0; slot < kGroupCount; ++slot)
      if (selection.group_counts[slot] > 0)
        raw[slot] += dead_mass * raw[slot] / live_mass;
  }

  BatchPlan plan;
  plan.batch_size = batch_size;
  std::array<double, kGroupCount> frac{};
  std::size_t assigned = 0;
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const double fl = std::floor(raw[slot] + 1e-12);
    plan.group_counts[slot] = static_cast<std::size_t>(fl);
    frac[slot] = raw[slot] - fl;
    assigned += plan.group_counts[slot];
  }
  // Largest remainder; ties by group slot order.
  std::array<int, kGroupCount> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frac[a] > frac[b]; });
  std::size_t k = 0;
  while (assigned < batch_size) {
    const int slot = order[k % kGroupCount];
    if (selection.group_counts[slot] > 0) {
      ++plan.group_counts[slot];
      ++assigned;
    }
    ++k;
  }
  return plan;
}

std::vector<std::size_t> draw_batch(const BatchPlan& plan,
                                    const SelectionResult& selection,
                                    std::mt19937_64& rng) {
  std::vector<std::size_t> batch;
  batch.reserve(plan.batch_size);
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const std::size_t count = plan.group_counts[slot];
    if (count == 0) continue;
    const auto& pool = selection.selected_by_group[slot];
    if (pool.empty())
      throw std::invalid_argument("draw_batch: positive count on empty group");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t j = 0; j < count; ++j) batch.push_back(pool[pick(rng)]);
  }
  std::shuffle(batch.begin(), batch.end(), rng);
  return batch;
}

std::size_t batches_per_epoch(const SelectionResult& selection,
                              std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batches_per_epoch: zero batch size");
  return (selection.selected.size() + batch_size - 1) / batch_size;
}

}  // namespace fairsel

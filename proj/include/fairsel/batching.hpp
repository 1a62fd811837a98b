#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "fairsel/selection.hpp"

namespace fairsel {

// Integer per-group draw counts for one minibatch. Counts sum to the batch
// size; groups with no selected samples get 0 and their share is
// redistributed across the nonempty groups.
struct BatchPlan {
  std::size_t batch_size = 0;
  std::array<std::size_t, kGroupCount> group_counts{};
};

// Raw target for cell (y,z) is b * lambda_yz * |S_y| / |S|, integerized by
// largest-remainder rounding.
BatchPlan plan_batch(const SelectionResult& selection, const LambdaValues& lambda,
                     std::size_t batch_size);

// Draws each group's count uniformly with replacement from that group's
// selected indices, concatenates, and shuffles. Length is exactly the batch
// size.
std::vector<std::size_t> draw_batch(const BatchPlan& plan,
                                    const SelectionResult& selection,
                                    std::mt19937_64& rng);

// ceil(|S| / b)
std::size_t batches_per_epoch(const SelectionResult& selection, std::size_t batch_size);

}  // namespace fairsel

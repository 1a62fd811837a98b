#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairsel/dataset.hpp"
#include "fairsel/model.hpp"

namespace fairsel {

enum class NoiseMode { Random, Adversarial, GroupTargeted };

NoiseMode noise_mode_from_string(const std::string& s);
std::string to_string(NoiseMode m);

struct NoiseSpec {
  double rate = 0.1;  // fraction of training labels to flip, in [0, 0.5]
  NoiseMode mode = NoiseMode::Adversarial;
  std::optional<GroupKey> target_group;  // nullopt means "auto" search
  std::uint64_t seed = 0;

  std::size_t flip_count(std::size_t n) const;
  void validate() const;
};

struct FlipResult {
  Dataset corrupted;
  std::vector<std::int64_t> flipped_ids;
  std::optional<GroupKey> chosen_group;  // set by group-targeted flipping
  bool shortfall = false;  // flip count exceeded the target group size
};

// Uniformly flips floor(rate*n) distinct labels.
FlipResult flip_random(const Dataset& d, const NoiseSpec& spec);

// Flips the floor(rate*n) samples with the largest correct-classification
// margin under the probe (the most confidently correct ones), ties broken by
// ascending position. The probe should be fit on the clean data.
FlipResult flip_adversarial(const Dataset& d, const NoiseSpec& spec,
                            const LinearModel& probe);

// Flips within a single (y,z) group, largest-margin-first. When no target
// group is fixed, each of the four candidates is evaluated by applying the
// flip, refitting a fresh probe, and measuring accuracy on `holdout`; the
// group with the lowest resulting accuracy wins. If the flip count exceeds
// the group, the whole group is flipped and `shortfall` is set.
FlipResult flip_group_targeted(const Dataset& d, const NoiseSpec& spec,
                               const LinearModel& probe, const Dataset& holdout);

}  // namespace fairsel

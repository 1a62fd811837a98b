#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairsel {

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
};

// One of the four (label, sensitive) cells. Both values are in {0,1}.
struct GroupKey {
  int y = 0;
  int z = 0;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

inline constexpr int kGroupCount = 4;

// Flat index for a (y,z) cell: (0,0)->0, (0,1)->1, (1,0)->2, (1,1)->3.
inline constexpr int group_slot(int y, int z) { return y * 2 + z; }
inline constexpr int group_slot(const GroupKey& g) { return group_slot(g.y, g.z); }
inline constexpr GroupKey group_from_slot(int slot) {
  return GroupKey{slot / 2, slot % 2};
}

// Tabular dataset with a binary label and a binary sensitive attribute.
// All per-sample arrays share the same length and ordering.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> sensitive;
  std::vector<std::int64_t> ids;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return features.cols; }

  // Throws std::invalid_argument when the cross-array invariants are broken.
  void validate() const;

  // Row-subset copy, preserving ids.
  Dataset subset(std::span<const std::size_t> indices) const;
};

// Column means/stds used to z-score feature columns. Constant columns have
// std 0 and map to all-zeros.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitResult {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Column role assignment for CSV loading plus the value maps for the two
// binary columns.
struct CsvSchema {
  enum class Role { Feature, Label, Sensitive, Ignore };
  std::map<std::string, Role> roles;
  std::map<std::string, int> label_values;      // cell text -> {0,1}
  std::map<std::string, int> sensitive_values;  // cell text -> {0,1}
};

// Parses a comma-delimited UTF-8 file with a header row. Cells mapped by the
// schema; non-binary label/sensitive values and non-numeric feature cells are
// errors, not imputations.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Writes a dataset back out in the same CSV dialect. Feature columns are
// named per `feature_names` when given, else f0..f{m-1}; label column "y",
// sensitive column "z".
void write_csv(const std::string& path, const Dataset& d,
               const std::vector<std::string>& feature_names = {});

// Z-scores every feature column. When `stats` is given it is applied as-is
// (train stats reused for validation/test); otherwise stats are computed from
// `d`. Returns the dataset and the stats that were applied.
std::pair<Dataset, FeatureStats> standardize(
    const Dataset& d, const std::optional<FeatureStats>& stats = std::nullopt);

// Seed-deterministic shuffle followed by contiguous cuts.
SplitResult split(const Dataset& d, const SplitSpec& spec);

// Indices of each (y,z) cell, ascending within each cell.
struct GroupIndex {
  std::array<std::vector<std::size_t>, kGroupCount> by_group;

  const std::vector<std::size_t>& of(int y, int z) const {
    return by_group[group_slot(y, z)];
  }
  std::size_t class_size(int y) const {
    return by_group[group_slot(y, 0)].size() + by_group[group_slot(y, 1)].size();
  }
};

GroupIndex group_index(const Dataset& d);

// Copy of `d` with the sensitive attribute appended as one extra feature
// column, so the classifier can learn group-dependent offsets. The sensitive
// array itself is unchanged.
Dataset append_sensitive_feature(const Dataset& d);

}  // namespace fairsel

#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "fairsel/dataset.hpp"

namespace fairsel::test {

// Builds a dataset from row-wise features, labels and sensitive values.
inline Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels,
                            const std::vector<int>& sensitive) {
  Dataset d;
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows[0].size() : 0;
  d.features = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < m; ++c) d.features.at(i, c) = rows[i][c];
  d.labels = labels;
  d.sensitive = sensitive;
  for (std::size_t i = 0; i < n; ++i) d.ids.push_back(static_cast<std::int64_t>(i));
  return d;
}

}  // namespace fairsel::test

#include "fairsel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fairsel {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("dataset: empty (n must be >= 1)");
  if (sensitive.size() != n || ids.size() != n || features.rows != n)
    throw std::invalid_argument("dataset: per-sample arrays have mismatched lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument("dataset: label outside {0,1}");
    if (sensitive[i] != 0 && sensitive[i] != 1)
      throw std::invalid_argument("dataset: sensitive value outside {0,1}");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = Matrix(indices.size(), features.cols);
  out.labels.reserve(indices.size());
  out.sensitive.reserve(indices.size());
  out.ids.reserve(indices.size());
  std::size_t r = 0;
  for (std::size_t i : indices) {
    std::copy(features.row(i).begin(), features.row(i).end(),
              out.features.row(r).begin());
    out.labels.push_back(labels[i]);
    out.sensitive.push_back(sensitive[i]);
    out.ids.push_back(ids[i]);
    ++r;
  }
  return out;
}

void SplitSpec::validate() const {
  if (train_fraction < 0 || validation_fraction < 0 || test_fraction < 0)
    throw std::invalid_argument("split: negative fraction");
  const double sum = train_fraction + validation_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split: fractions must sum to 1");
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("load_csv: empty file: " + path);
  const auto header = split_line(header_line);

  int label_col = -1, sensitive_col = -1;
  std::vector<int> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    auto it = schema.roles.find(name);
    if (it == schema.roles.end()) continue;
    switch (it->second) {
      case CsvSchema::Role::Label:
        if (label_col >= 0) throw std::runtime_error("load_csv: two label columns");
        label_col = static_cast<int>(c);
        break;
      case CsvSchema::Role::Sensitive:
        if (sensitive_col >= 0)
          throw std::runtime_error("load_csv: two sensitive columns");
        sensitive_col = static_cast<int>(c);
        break;
      case CsvSchema::Role::Feature:
        feature_cols.push_back(static_cast<int>(c));
        feature_names.push_back(name);
        break;
      case CsvSchema::Role::Ignore:
        break;
    }
  }
  for (const auto& [name, role] : schema.roles) {
    if (role == CsvSchema::Role::Ignore) continue;
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw std::runtime_error("load_csv: schema names unknown column: " + name);
  }
  if (label_col < 0) throw std::runtime_error("load_csv: schema has no label column");
  if (sensitive_col < 0)
    throw std::runtime_error("load_csv: schema has no sensitive column");
  if (feature_cols.empty())
    throw std::runtime_error("load_csv: schema has no feature columns");

  auto map_binary = [](const std::map<std::string, int>& m, const std::string& v,
                       const char* what) {
    auto it = m.find(v);
    if (it == m.end())
      throw std::runtime_error(std::string("load_csv: non-binary ") + what +
                               " value: '" + v + "'");
    if (it->second != 0 && it->second != 1)
      throw std::runtime_error(std::string("load_csv: schema maps ") + what +
                               " value outside {0,1}");
    return it->second;
  };

  Dataset d;
  std::vector<double> feat_rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("load_csv: row " + std::to_string(row + 1) +
                               " has wrong cell count");
    d.labels.push_back(map_binary(schema.label_values, trim(cells[label_col]), "label"));
    d.sensitive.push_back(
        map_binary(schema.sensitive_values, trim(cells[sensitive_col]), "sensitive"));
    for (int c : feature_cols) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw std::runtime_error("load_csv: non-numeric feature cell '" + cell +
                                 "' at row " + std::to_string(row + 1));
      feat_rows.push_back(v);
    }
    d.ids.push_back(static_cast<std::int64_t>(row));
    ++row;
  }
  if (row == 0) throw std::runtime_error("load_csv: file has no data rows: " + path);

  d.features.rows = row;
  d.features.cols = feature_cols.size();
  d.features.data = std::move(feat_rows);
  d.validate();
  return d;
}

void write_csv(const std::string& path, const Dataset& d,
               const std::vector<std::string>& feature_names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open file: " + path);
  const std::size_t m = d.features.cols;
  for (std::size_t c = 0; c < m; ++c) {
    if (c < feature_names.size())
      out << feature_names[c];
    else
      out << "f" << c;
    out << ",";
  }
  out << "y,z\n";
  out.precision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t c = 0; c < m; ++c) out << d.features.at(i, c) << ",";
    out << d.labels[i] << "," << d.sensitive[i] << "\n";
  }
}

std::pair<Dataset, FeatureStats> standardize(
    const Dataset& d, const std::optional<FeatureStats>& stats) {
  const std::size_t n = d.size();
  const std::size_t m = d.features.cols;
  FeatureStats s;
  if (stats) {
    if (stats->mean.size() != m || stats->stddev.size() != m)
      throw std::invalid_argument("standardize: stats dimensionality mismatch");
    s = *stats;
  } else {
    s.mean.assign(m, 0.0);
    s.stddev.assign(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += d.features.at(i, c);
      s.mean[c] = sum / static_cast<double>(n);
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dv = d.features.at(i, c) - s.mean[c];
        sq += dv * dv;
      }
      s.stddev[c] = std::sqrt(sq / static_cast<double>(n));
    }
  }
  Dataset out = d;
  for (std::size_t c = 0; c < m; ++c) {
    const double sd = s.stddev[c];
    for (std::size_t i = 0; i < n; ++i) {
      double& v = out.features.at(i, c);
      v = sd > 1e-12 ? (v - s.mean[c]) / sd : 0.0;
    }
  }
  return {std::move(out), std::move(s)};
}

SplitResult split(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train =
      static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.validation_fraction * static_cast<double>(n)));
  if (n_train + n_val > n) throw std::invalid_argument("split: fractions overflow n");
  const std::size_t n_test = n - n_train - n_val;

  if (spec.train_fraction > 0 && n_train == 0)
    throw std::invalid_argument("split: train part rounds to zero rows");
  if (spec.validation_fraction > 0 && n_val == 0)
    throw std::invalid_argument("split: validation part rounds to zero rows");
  if (spec.test_fraction > 0 && n_test == 0)
    throw std::invalid_argument("split: test part rounds to zero rows");

  SplitResult r;
  r.train = d.subset({order.data(), n_train});
  r.validation = d.subset({order.data() + n_train, n_val});
  r.test = d.subset({order.data() + n_train + n_val, n_test});
  return r;
}

GroupIndex group_index(const Dataset& d) {
  GroupIndex gi;
  for (std::size_t i = 0; i < d.size(); ++i)
    gi.by_group[group_slot(d.labels[i], d.sensitive[i])].push_back(i);
  return gi;
}

Dataset append_sensitive_feature(const Dataset& d) {
  Dataset out;
  out.labels = d.labels;
  out.sensitive = d.sensitive;
  out.ids = d.ids;
  out.features = Matrix(d.size(), d.features.cols + 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::copy(d.features.row(i).begin(), d.features.row(i).end(),
              out.features.row(i).begin());
    out.features.at(i, d.features.cols) = static_cast<double>(d.sensitive[i]);
  }
  return out;
}

}  // namespace fairsel

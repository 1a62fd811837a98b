#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "fairsel/dataset.hpp"
#include "test_util.hpp"

using namespace fairsel;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("/tmp/fairsel_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

CsvSchema demo_schema() {
  CsvSchema s;
  s.roles["f1"] = CsvSchema::Role::Feature;
  s.roles["f2"] = CsvSchema::Role::Feature;
  s.roles["label"] = CsvSchema::Role::Label;
  s.roles["sex"] = CsvSchema::Role::Sensitive;
  s.label_values = {{"0", 0}, {"1", 1}};
  s.sensitive_values = {{"M", 0}, {"F", 1}};
  return s;
}

}  // namespace

TEST_CASE("load_csv parses a small file") {
  TempFile f("small.csv",
             "f1,f2,label,sex\n"
             "0.5,1.0,1,F\n"
             "1.5,2.0,0,M\n"
             "-1.0,0.0,1,M\n"
             "2.5,-3.5,0,F\n");
  const Dataset d = load_csv(f.path, demo_schema());
  CHECK(d.size() == 4);
  CHECK(d.feature_count() == 2);
  CHECK(d.labels == std::vector<int>{1, 0, 1, 0});
  CHECK(d.sensitive == std::vector<int>{1, 0, 0, 1});
  CHECK(d.features.at(3, 1) == doctest::Approx(-3.5));
}

TEST_CASE("load_csv error paths") {
  const CsvSchema schema = demo_schema();
  CHECK_THROWS(load_csv("/nonexistent/file.csv", schema));

  TempFile bad_label("bad_label.csv", "f1,f2,label,sex\n1,2,2,F\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_label.path, schema),
                       doctest::Contains("non-binary label"), std::runtime_error);

  TempFile bad_feature("bad_feature.csv", "f1,f2,label,sex\n1,abc,1,F\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_feature.path, schema),
                       doctest::Contains("non-numeric"), std::runtime_error);

  TempFile empty("empty.csv", "");
  CHECK_THROWS(load_csv(empty.path, schema));

  TempFile header_only("header_only.csv", "f1,f2,label,sex\n");
  CHECK_THROWS_WITH_AS(load_csv(header_only.path, schema),
                       doctest::Contains("no data rows"), std::runtime_error);

  CsvSchema unknown = schema;
  unknown.roles["missing_col"] = CsvSchema::Role::Feature;
  TempFile ok("ok.csv", "f1,f2,label,sex\n1,2,1,F\n");
  CHECK_THROWS_WITH_AS(load_csv(ok.path, unknown), doctest::Contains("unknown column"),
                       std::runtime_error);
}

TEST_CASE("standardize matches the analytic z-score") {
  const Dataset d = test::make_dataset({{1.0}, {2.0}, {3.0}}, {0, 1, 0}, {0, 1, 0});
  const auto [out, stats] = standardize(d);
  CHECK(out.features.at(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(out.features.at(1, 0) == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(out.features.at(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(stats.mean[0] == doctest::Approx(2.0));
}

TEST_CASE("standardize maps constant columns to zero") {
  const Dataset d = test::make_dataset({{5.0}, {5.0}, {5.0}}, {0, 1, 0}, {0, 1, 0});
  const auto [out, stats] = standardize(d);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.features.at(i, 0) == 0.0);
}

TEST_CASE("standardize applies precomputed stats as-is") {
  const Dataset d = test::make_dataset({{4.0}}, {1}, {0});
  FeatureStats stats;
  stats.mean = {0.0};
  stats.stddev = {2.0};
  const auto [out, used] = standardize(d, stats);
  CHECK(out.features.at(0, 0) == doctest::Approx(2.0));

  FeatureStats wrong;
  wrong.mean = {0.0, 0.0};
  wrong.stddev = {1.0, 1.0};
  CHECK_THROWS(standardize(d, wrong));
}

TEST_CASE("standardize is idempotent with its own stats") {
  Dataset d = test::make_dataset({{1.0, 9.0}, {2.0, -3.0}, {5.0, 0.0}, {7.0, 2.0}},
                                 {0, 1, 0, 1}, {0, 1, 1, 0});
  auto [once, stats] = standardize(d);
  auto [twice, stats2] = standardize(once);
  for (std::size_t i = 0; i < once.size(); ++i)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(std::abs(once.features.at(i, c) - twice.features.at(i, c)) <= 1e-9);
}

TEST_CASE("split produces the documented sizes and is deterministic") {
  Dataset d = test::make_dataset({}, {}, {});
  const std::size_t n = 3200;
  d.features = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    d.features.at(i, 0) = static_cast<double>(i);
    d.labels.push_back(static_cast<int>(i % 2));
    d.sensitive.push_back(static_cast<int>(i % 3 == 0));
    d.ids.push_back(static_cast<std::int64_t>(i));
  }
  SplitSpec spec{2000.0 / 3200, 200.0 / 3200, 1000.0 / 3200, 99};
  const SplitResult r1 = split(d, spec);
  CHECK(r1.train.size() == 2000);
  CHECK(r1.validation.size() == 200);
  CHECK(r1.test.size() == 1000);

  const SplitResult r2 = split(d, spec);
  CHECK(r1.train.ids == r2.train.ids);
  CHECK(r1.validation.ids == r2.validation.ids);
  CHECK(r1.test.ids == r2.test.ids);

  // Union of splits recovers the original id multiset.
  std::multiset<std::int64_t> all;
  for (const auto* part : {&r1.train, &r1.validation, &r1.test})
    all.insert(part->ids.begin(), part->ids.end());
  CHECK(all.size() == n);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    CHECK(all.count(i) == 1);
}

TEST_CASE("split with everything in train") {
  const Dataset d =
      test::make_dataset({{1.0}, {2.0}, {3.0}}, {0, 1, 0}, {1, 0, 1});
  const SplitResult r = split(d, SplitSpec{1.0, 0.0, 0.0, 5});
  CHECK(r.train.size() == 3);
  CHECK(r.validation.size() == 0);
  CHECK(r.test.size() == 0);
}

TEST_CASE("split rejects parts that round to zero") {
  const Dataset d = test::make_dataset({{1.0}, {2.0}}, {0, 1}, {1, 0});
  CHECK_THROWS(split(d, SplitSpec{0.9, 0.1, 0.0, 1}));
  CHECK_THROWS(SplitSpec{0.5, 0.2, 0.2, 1}.validate());
}

TEST_CASE("group_index partitions the dataset") {
  const Dataset d = test::make_dataset({{0.0}, {0.0}, {0.0}}, {1, 0, 1}, {1, 1, 0});
  const GroupIndex gi = group_index(d);
  CHECK(gi.of(1, 1) == std::vector<std::size_t>{0});
  CHECK(gi.of(0, 1) == std::vector<std::size_t>{1});
  CHECK(gi.of(1, 0) == std::vector<std::size_t>{2});
  CHECK(gi.of(0, 0).empty());

  std::size_t total = 0;
  for (const auto& g : gi.by_group) total += g.size();
  CHECK(total == d.size());
}

TEST_CASE("group_index on uniform random assignment stays near n/4") {
  std::mt19937_64 rng(1234);
  std::vector<int> labels, sensitive;
  std::vector<std::vector<double>> rows;
  const std::size_t n = 4000;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(rng() & 1));
    sensitive.push_back(static_cast<int>(rng() & 1));
    rows.push_back({0.0});
  }
  const GroupIndex gi = group_index(test::make_dataset(rows, labels, sensitive));
  // Binomial(4000, 1/4): mean 1000, sigma = sqrt(4000*0.25*0.75) ~= 27.4.
  for (const auto& g : gi.by_group) {
    CHECK(g.size() > 1000 - 3 * 27.4);
    CHECK(g.size() < 1000 + 3 * 27.4);
  }
}

TEST_CASE("append_sensitive_feature adds one column and keeps arrays") {
  const Dataset d = test::make_dataset({{1.0, 2.0}, {3.0, 4.0}}, {0, 1}, {1, 0});
  const Dataset a = append_sensitive_feature(d);
  CHECK(a.feature_count() == 3);
  CHECK(a.features.at(0, 2) == 1.0);
  CHECK(a.features.at(1, 2) == 0.0);
  CHECK(a.sensitive == d.sensitive);
  CHECK(a.features.at(1, 1) == 4.0);
}

TEST_CASE("dataset validate rejects broken invariants") {
  Dataset d = test::make_dataset({{1.0}}, {1}, {0});
  CHECK_NOTHROW(d.validate());
  d.labels[0] = 2;
  CHECK_THROWS(d.validate());
  d.labels[0] = 1;
  d.sensitive.push_back(0);
  CHECK_THROWS(d.validate());
  Dataset empty;
  CHECK_THROWS(empty.validate());
}

TEST_CASE("csv round-trip through write_csv") {
  const Dataset d = test::make_dataset({{0.25, -1.5}, {3.0, 2.0}}, {1, 0}, {0, 1});
  TempFile f("roundtrip.csv", "");
  write_csv(f.path, d, {"x1", "x2"});
  CsvSchema s;
  s.roles["x1"] = CsvSchema::Role::Feature;
  s.roles["x2"] = CsvSchema::Role::Feature;
  s.roles["y"] = CsvSchema::Role::Label;
  s.roles["z"] = CsvSchema::Role::Sensitive;
  s.label_values = {{"0", 0}, {"1", 1}};
  s.sensitive_values = {{"0", 0}, {"1", 1}};
  const Dataset back = load_csv(f.path, s);
  CHECK(back.size() == 2);
  CHECK(back.labels == d.labels);
  CHECK(back.sensitive == d.sensitive);
  CHECK(back.features.at(0, 1) == doctest::Approx(-1.5));
}

#include "fairsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fairsel {

namespace {

constexpr double kSlackTol = 1e-9;

double knapsack_weight(int sample_y, int sample_z, int cons_y, int cons_z,
                       const LambdaValues& lambda) {
  if (sample_y != cons_y) return 1.0;
  const double lam = lambda[group_slot(cons_y, cons_z)];
  if (sample_z != cons_z) return 1.0 - lam;
  return 2.0 - lam;
}

std::vector<std::size_t> loss_order(const SelectionProblem& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.losses[a] < p.losses[b];
  });
  return order;
}

SelectionResult make_result(const SelectionProblem& p,
                            std::vector<std::size_t> selected) {
  std::sort(selected.begin(), selected.end());
  SelectionResult r;
  r.selected = std::move(selected);
  for (std::size_t i : r.selected) {
    const int slot = p.slot_of(i);
    r.selected_by_group[slot].push_back(i);
    ++r.group_counts[slot];
    ++r.class_counts[p.labels[i]];
  }
  r.budget_used = r.selected.size();
  return r;
}

}  // namespace

std::size_t SelectionProblem::budget() const {
  return static_cast<std::size_t>(std::floor(tau * static_cast<double>(size()) + kSlackTol));
}

double SelectionProblem::capacity() const {
  return tau * static_cast<double>(size());
}

void SelectionProblem::validate() const {
  const std::size_t n = size();
  if (n == 0) throw std::invalid_argument("selection: empty problem");
  if (labels.size() != n || sensitive.size() != n)
    throw std::invalid_argument("selection: array length mismatch");
  if (tau <= 0.0 || tau > 1.0)
    throw std::invalid_argument("selection: tau must be in (0,1]");
  if (tau * static_cast<double>(n) < 1.0)
    throw std::invalid_argument("selection: tau*n must be >= 1");
  for (double l : losses)
    if (!std::isfinite(l) || l < 0.0)
      throw std::invalid_argument("selection: losses must be finite and nonnegative");
  for (double lam : lambda)
    if (lam < 0.0 || lam > 1.0)
      throw std::invalid_argument("selection: lambda outside [0,1]");
}

SelectionProblem SelectionProblem::from_dataset(const Dataset& d,
                                                std::vector<double> losses,
                                                double tau,
                                                const LambdaValues& lambda) {
  SelectionProblem p;
  p.losses = std::move(losses);
  p.labels = d.labels;
  p.sensitive = d.sensitive;
  p.tau = tau;
  p.lambda = lambda;
  return p;
}

KnapsackInstance to_knapsack(const SelectionProblem& problem) {
  problem.validate();
  const std::size_t n = problem.size();
  KnapsackInstance k;
  const double max_loss = *std::max_element(problem.losses.begin(), problem.losses.end());
  k.profits.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.profits[i] = max_loss - problem.losses[i];
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const GroupKey g = group_from_slot(slot);
    auto& w = k.constraint_weights[slot];
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = knapsack_weight(problem.labels[i], problem.sensitive[i], g.y, g.z,
                             problem.lambda);
    k.capacities[slot] = problem.capacity();
  }
  k.cardinality_capacity = problem.capacity();
  return k;
}

SelectionResult greedy_select(const SelectionProblem& problem) {
  problem.validate();
  const std::size_t budget = problem.budget();
  const double cap = problem.capacity();
  const auto order = loss_order(problem);

  std::array<double, kGroupCount> running{};
  std::vector<std::size_t> selected;
  selected.reserve(budget);

  for (std::size_t i : order) {
    if (selected.size() + 1 > budget) break;
    bool ok = true;
    std::array<double, kGroupCount> incr{};
    for (int slot = 0; slot < kGroupCount; ++slot) {
      const GroupKey g = group_from_slot(slot);
      incr[slot] = knapsack_weight(problem.labels[i], problem.sensitive[i], g.y, g.z,
                                   problem.lambda);
      if (running[slot] + incr[slot] > cap + kSlackTol) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (int slot = 0; slot < kGroupCount; ++slot) running[slot] += incr[slot];
    selected.push_back(i);
  }
  return make_result(problem, std::move(selected));
}

SelectionResult exact_select(const SelectionProblem& problem, std::size_t n_cap) {
  problem.validate();
  const std::size_t n = problem.size();
  if (n > n_cap)
    throw std::invalid_argument("exact_select: n exceeds cap of " +
                                std::to_string(n_cap));
  const auto k = to_knapsack(problem);
  const std::size_t budget = problem.budget();
  const double cap = problem.capacity();

  std::vector<std::size_t> best;
  double best_profit = -1.0;
  bool have = false;

  const std::uint64_t limit = std::uint64_t{1} << n;
  std::vector<std::size_t> cur;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    cur.clear();
    std::array<double, kGroupCount> sums{};
    double profit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      cur.push_back(i);
      profit += k.profits[i];
      for (int slot = 0; slot < kGroupCount; ++slot)
        sums[slot] += k.constraint_weights[slot][i];
    }
    if (cur.size() > budget) continue;
    bool ok = true;
    for (int slot = 0; slot < kGroupCount; ++slot)
      if (sums[slot] > cap + kSlackTol) {
        ok = false;
        break;
      }
    if (!ok) continue;
    if (!have || profit > best_profit + kSlackTol ||
        (std::abs(profit - best_profit) <= kSlackTol &&
         (cur.size() > best.size() ||
          (cur.size() == best.size() &&
           std::lexicographical_compare(cur.begin(), cur.end(), best.begin(),
                                        best.end()))))) {
      best = cur;
      best_profit = profit;
      have = true;
    }
  }
  return make_result(problem, std::move(best));
}

FeasibilityReport check_feasible(const SelectionResult& result,
                                 const SelectionProblem& problem) {
  const std::size_t n = problem.size();
  for (std::size_t i : result.selected)
    if (i >= n) throw std::invalid_argument("check_feasible: index out of range");

  FeasibilityReport rep;
  const double cap = problem.capacity();
  rep.budget_slack =
      static_cast<double>(problem.budget()) - static_cast<double>(result.selected.size());
  if (rep.budget_slack < 0) {
    rep.feasible = false;
    rep.violations.push_back("budget exceeded by " +
                             std::to_string(-rep.budget_slack) + " samples");
  }
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const GroupKey g = group_from_slot(slot);
    double sum = 0.0;
    for (std::size_t i : result.selected)
      sum += knapsack_weight(problem.labels[i], problem.sensitive[i], g.y, g.z,
                             problem.lambda);
    rep.constraint_slack[slot] = cap - sum;
    if (rep.constraint_slack[slot] < -kSlackTol) {
      rep.feasible = false;
      rep.violations.push_back("constraint (y=" + std::to_string(g.y) +
                               ",z=" + std::to_string(g.z) + ") over capacity, slack " +
                               std::to_string(rep.constraint_slack[slot]));
    }
  }
  return rep;
}

double selected_loss_sum(const SelectionProblem& problem, const SelectionResult& r) {
  double s = 0.0;
  for (std::size_t i : r.selected) s += problem.losses[i];
  return s;
}

double selected_profit_sum(const SelectionProblem& problem, const SelectionResult& r) {
  const double max_loss =
      *std::max_element(problem.losses.begin(), problem.losses.end());
  double s = 0.0;
  for (std::size_t i : r.selected) s += max_loss - problem.losses[i];
  return s;
}

std::string dump_selection_json(const SelectionProblem& problem,
                                const SelectionResult& result) {
  nlohmann::json j;
  j["n"] = problem.size();
  j["tau"] = problem.tau;
  j["lambda"] = problem.lambda;
  j["losses"] = problem.losses;
  j["labels"] = problem.labels;
  j["sensitive"] = problem.sensitive;
  j["selected"] = result.selected;
  j["group_counts"] = result.group_counts;
  j["class_counts"] = result.class_counts;
  return j.dump(2);
}

}  // namespace fairsel

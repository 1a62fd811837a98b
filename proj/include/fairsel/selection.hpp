#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fairsel/dataset.hpp"

namespace fairsel {

// Per-group sampling caps, indexed by group_slot(y,z). For each class y the
// two caps sum to 1.
using LambdaValues = std::array<double, kGroupCount>;

// One clean-and-fair selection instance: pick a low-loss subset whose
// composition respects the per-group caps and the clean-ratio budget.
struct SelectionProblem {
  std::vector<double> losses;
  std::vector<int> labels;
  std::vector<int> sensitive;
  double tau = 1.0;
  LambdaValues lambda{};

  std::size_t size() const { return losses.size(); }
  int slot_of(std::size_t i) const { return group_slot(labels[i], sensitive[i]); }
  // Selection budget: floor(tau * n).
  std::size_t budget() const;
  // Real-valued capacity of every knapsack constraint: tau * n.
  double capacity() const;
  void validate() const;

  static SelectionProblem from_dataset(const Dataset& d, std::vector<double> losses,
                                       double tau, const LambdaValues& lambda);
};

struct SelectionResult {
  std::vector<std::size_t> selected;  // ascending
  std::array<std::vector<std::size_t>, kGroupCount> selected_by_group;
  std::array<std::size_t, kGroupCount> group_counts{};
  std::array<std::size_t, 2> class_counts{};
  std::size_t budget_used = 0;
};

// The knapsack view of a SelectionProblem: maximize total profit subject to
// the cardinality budget and one weighted-sum constraint per (y,z) cell, all
// with capacity tau*n. Weight of sample i under constraint (y,z):
//   1              when y_i != y
//   1 - lambda_yz  when y_i == y, z_i != z
//   2 - lambda_yz  when (y_i,z_i) == (y,z)
struct KnapsackInstance {
  std::vector<double> profits;  // max(loss) - loss_i
  std::array<std::vector<double>, kGroupCount> constraint_weights;
  std::array<double, kGroupCount> capacities{};
  double cardinality_capacity = 0.0;
};

KnapsackInstance to_knapsack(const SelectionProblem& problem);

// Single-pass greedy: visit samples by ascending loss (descending profit),
// ties by ascending index, and keep a sample iff afterwards the running
// weighted sums of all four constraints stay within tau*n and the selection
// stays within the budget. No revisiting. O(n log n).
SelectionResult greedy_select(const SelectionProblem& problem);

// Exhaustive oracle over all 2^n subsets of the same constraint system,
// maximizing total profit; ties broken by larger cardinality, then
// lexicographically smaller index list. Test oracle only; n capped.
SelectionResult exact_select(const SelectionProblem& problem, std::size_t n_cap = 16);

struct FeasibilityReport {
  bool feasible = true;
  // capacity minus attained value; negative entries are violations.
  double budget_slack = 0.0;
  std::array<double, kGroupCount> constraint_slack{};
  std::vector<std::string> violations;
};

FeasibilityReport check_feasible(const SelectionResult& result,
                                 const SelectionProblem& problem);

double selected_loss_sum(const SelectionProblem& problem, const SelectionResult& r);
double selected_profit_sum(const SelectionProblem& problem, const SelectionResult& r);

// Debug dump of a problem/result pair as JSON text.
std::string dump_selection_json(const SelectionProblem& problem,
                                const SelectionResult& result);

}  // namespace fairsel

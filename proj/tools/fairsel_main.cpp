#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairsel/batching.hpp"
#include "fairsel/experiment.hpp"
#include "fairsel/metrics.hpp"
#include "fairsel/selection.hpp"
#include "fairsel/synthgen.hpp"
#include "fairsel/trainer.hpp"

namespace {

using namespace fairsel;

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return seeds;
}

std::vector<double> parse_rate_list(const std::string& s) {
  std::vector<double> rates;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!tok.empty()) rates.push_back(std::stod(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return rates;
}

// Random selection problems used by the selftest suites.
SelectionProblem random_problem(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  SelectionProblem p;
  p.losses.resize(n);
  p.labels.resize(n);
  p.sensitive.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.losses[i] = unif(rng) * 3.0;
    p.labels[i] = coin(rng);
    p.sensitive[i] = coin(rng);
  }
  p.tau = 0.3 + 0.7 * unif(rng);
  for (int y = 0; y < 2; ++y) {
    const double l1 = unif(rng);
    p.lambda[group_slot(y, 1)] = l1;
    p.lambda[group_slot(y, 0)] = 1.0 - l1;
  }
  if (p.tau * static_cast<double>(n) < 1.0) p.tau = 1.0;
  return p;
}

bool selftest_greedy_feasibility(std::ostream& os) {
  std::mt19937_64 rng(20240901);
  std::uniform_int_distribution<std::size_t> size_pick(4, 400);
  int failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const SelectionProblem p = random_problem(rng, size_pick(rng));
    const SelectionResult r = greedy_select(p);
    if (!check_feasible(r, p).feasible) ++failures;
  }
  os << (failures == 0 ? "PASS" : "FAIL") << "  greedy feasibility (1000 random problems, "
     << failures << " violations)\n";
  return failures == 0;
}

// The exact rearrangement of the per-group cap: sum_i v_i p_i <= 0 with
// v in {0, -lambda, 1-lambda} is equivalent to the original ratio form. The
// shifted weights w = v + 1 with capacity tau*n are a relaxation instead; the
// two systems coincide exactly on budget-saturated selections.
bool selftest_knapsack_conversion(std::ostream& os) {
  std::mt19937_64 rng(20240902);
  std::uniform_int_distribution<std::size_t> size_pick(2, 10);
  int vform_mismatch = 0, containment_fail = 0, saturated_mismatch = 0;
  for (int t = 0; t < 200; ++t) {
    const SelectionProblem p = random_problem(rng, size_pick(rng));
    const auto k = to_knapsack(p);
    const std::size_t n = p.size();
    const double cap = p.capacity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      std::size_t count = 0;
      std::array<double, kGroupCount> wsum{}, counts{}, cls{};
      for (std::size_t i = 0; i < n; ++i) {
        if (!(mask >> i & 1)) continue;
        ++count;
        for (int slot = 0; slot < kGroupCount; ++slot)
          wsum[slot] += k.constraint_weights[slot][i];
        counts[p.slot_of(i)] += 1.0;
        cls[p.labels[i]] += 1.0;
      }
      if (count > p.budget()) continue;
      bool ratio_ok = true, vform_ok = true, wform_ok = true;
      for (int slot = 0; slot < kGroupCount; ++slot) {
        const int y = slot / 2;
        const double gap = counts[slot] - p.lambda[slot] * cls[y];
        if (gap > 1e-9) ratio_ok = false;
        if (gap > 1e-9) vform_ok = false;  // v-form LHS equals the gap
        if (wsum[slot] > cap + 1e-9) wform_ok = false;
      }
      if (ratio_ok != vform_ok) ++vform_mismatch;
      if (ratio_ok && !wform_ok) ++containment_fail;
      if (std::abs(static_cast<double>(count) - cap) < 1e-9 && ratio_ok != wform_ok)
        ++saturated_mismatch;
    }
  }
  const bool ok = vform_mismatch == 0 && containment_fail == 0 && saturated_mismatch == 0;
  os << (ok ? "PASS" : "FAIL")
     << "  knapsack conversion (v-form equivalence, containment, saturated equality)\n";
  return ok;
}

bool selftest_gradient(std::ostream& os) {
  std::mt19937_64 rng(20240903);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 8, m = 3;
    Dataset d;
    d.features = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m; ++c) d.features.at(i, c) = normal(rng);
      d.labels.push_back(coin(rng));
      d.sensitive.push_back(coin(rng));
      d.ids.push_back(static_cast<std::int64_t>(i));
    }
    LinearModel model = LinearModel::zeros(m);
    for (auto& w : model.weights) w = normal(rng);
    model.bias = normal(rng);
    std::vector<std::size_t> batch(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = i;

    const Gradient g = gradient(model, d, batch);
    const double h = 1e-5;
    auto loss_at = [&](LinearModel mm) {
      double s = 0.0;
      const auto l = per_sample_loss(mm, d);
      for (double v : l) s += v;
      return s / static_cast<double>(n);
    };
    for (std::size_t c = 0; c <= m; ++c) {
      LinearModel up = model, dn = model;
      double analytic;
      if (c < m) {
        up.weights[c] += h;
        dn.weights[c] -= h;
        analytic = g.weights[c];
      } else {
        up.bias += h;
        dn.bias -= h;
        analytic = g.bias;
      }
      const double fd = (loss_at(up) - loss_at(dn)) / (2.0 * h);
      const double rel = std::abs(fd - analytic) / std::max(1e-8, std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  const bool ok = worst < 1e-5;
  os << (ok ? "PASS" : "FAIL") << "  gradient finite-difference check (max rel err "
     << worst << ")\n";
  return ok;
}

bool selftest_sampler(std::ostream& os) {
  // 40-sample instance with exact integral per-group targets.
  Dataset d;
  const std::size_t n = 40;
  d.features = Matrix(n, 2);
  std::mt19937_64 init_rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    d.features.at(i, 0) = normal(init_rng);
    d.features.at(i, 1) = normal(init_rng);
    d.labels.push_back(i < 20 ? 0 : 1);
    d.sensitive.push_back(i % 2);
    d.ids.push_back(static_cast<std::int64_t>(i));
  }
  SelectionProblem p = SelectionProblem::from_dataset(
      d, std::vector<double>(n, 0.1), 1.0, {0.5, 0.5, 0.25, 0.75});
  SelectionResult sel = greedy_select(p);
  const BatchPlan plan = plan_batch(sel, p.lambda, 20);

  // Group frequency check over 10,000 planned batches.
  std::array<double, kGroupCount> freq{};
  std::mt19937_64 rng(20240904);
  for (int b = 0; b < 10000; ++b) {
    const auto batch = draw_batch(plan, sel, rng);
    for (std::size_t i : batch) ++freq[group_slot(d.labels[i], d.sensitive[i])];
  }
  bool freq_ok = true;
  for (int slot = 0; slot < kGroupCount; ++slot) {
    const int y = slot / 2;
    const double target = p.lambda[slot] *
                          static_cast<double>(sel.class_counts[y]) /
                          static_cast<double>(sel.selected.size());
    const double got = freq[slot] / (10000.0 * 20.0);
    if (std::abs(got - target) > 0.01) freq_ok = false;
  }

  // Mean sampled-batch gradient vs closed-form weighted gradient.
  LinearModel model = LinearModel::zeros(2);
  model.weights = {0.3, -0.2};
  model.bias = 0.1;
  std::vector<double> weights(sel.selected.size());
  for (std::size_t k = 0; k < sel.selected.size(); ++k) {
    const std::size_t i = sel.selected[k];
    const int slot = group_slot(d.labels[i], d.sensitive[i]);
    weights[k] = p.lambda[slot] * static_cast<double>(sel.class_counts[d.labels[i]]) /
                 static_cast<double>(sel.group_counts[slot]);
  }
  const Gradient ref = gradient(model, d, sel.selected, weights);
  Gradient mean;
  mean.weights.assign(2, 0.0);
  const int reps = 50000;
  for (int r = 0; r < reps; ++r) {
    const auto batch = draw_batch(plan, sel, rng);
    const Gradient g = gradient(model, d, batch);
    for (std::size_t c = 0; c < 2; ++c) mean.weights[c] += g.weights[c];
    mean.bias += g.bias;
  }
  for (auto& v : mean.weights) v /= reps;
  mean.bias /= reps;
  double rel = std::abs(mean.bias - ref.bias) / std::max(1e-8, std::abs(ref.bias));
  for (std::size_t c = 0; c < 2; ++c)
    rel = std::max(rel, std::abs(mean.weights[c] - ref.weights[c]) /
                            std::max(1e-8, std::abs(ref.weights[c])));
  const bool grad_ok = rel < 0.01;
  os << (freq_ok ? "PASS" : "FAIL") << "  sampler group frequencies within 1%\n";
  os << (grad_ok ? "PASS" : "FAIL")
     << "  sampler unbiasedness vs weighted gradient (rel err " << rel << ")\n";
  return freq_ok && grad_ok;
}

int cmd_selftest() {
  bool ok = true;
  ok &= selftest_greedy_feasibility(std::cout);
  ok &= selftest_knapsack_conversion(std::cout);
  ok &= selftest_gradient(std::cout);
  ok &= selftest_sampler(std::cout);
  std::cout << (ok ? "selftest: all suites passed\n" : "selftest: FAILURES\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair and robust training via clean sample selection"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic dataset as CSV");
  std::size_t synth_n = 3200;
  std::uint64_t synth_seed = 1;
  double synth_balance = 0.5, synth_bias = 7.0;
  double synth_rotation = SynthSpec{}.rotation;
  std::string synth_out = "synthetic.csv";
  synth->add_option("--n", synth_n, "sample count");
  synth->add_option("--seed", synth_seed, "rng seed");
  synth->add_option("--balance", synth_balance, "probability of y=1");
  synth->add_option("--bias", synth_bias, "sensitive bias factor");
  synth->add_option("--rotation", synth_rotation, "rotation angle in radians");
  synth->add_option("--out", synth_out, "output CSV path");

  // run
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  std::string run_config, run_out, run_seeds, run_methods, run_metric, run_mode,
      run_target;
  double run_rate = -1.0;
  int run_jobs = 0;
  bool run_save_models = false;
  run->add_option("--config", run_config, "experiment config JSON")->required();
  run->add_option("--out", run_out, "output directory override");
  run->add_option("--seeds", run_seeds, "comma-separated seed list override");
  run->add_option("--noise-rate", run_rate, "noise rate override");
  run->add_option("--noise-mode", run_mode, "random|adversarial|group_targeted");
  run->add_option("--target-group", run_target, "auto|y0z0|y0z1|y1z0|y1z1");
  run->add_option("--metric", run_metric, "eo|dp");
  run->add_option("--method", run_methods, "comma-separated method list override");
  run->add_option("--jobs", run_jobs, "worker threads");
  run->add_flag("--save-models", run_save_models, "write model checkpoints");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run one config across noise rates");
  std::string sweep_config, sweep_rates, sweep_out;
  int sweep_jobs = 0;
  sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
  sweep->add_option("--rates", sweep_rates, "comma-separated noise rates")->required();
  sweep->add_option("--out", sweep_out, "output directory override");
  sweep->add_option("--jobs", sweep_jobs, "worker threads");

  // selftest
  app.add_subcommand("selftest", "run the built-in oracle suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      SynthSpec spec;
      spec.n_total = synth_n;
      spec.seed = synth_seed;
      spec.class_balance = synth_balance;
      spec.bias_factor = synth_bias;
      spec.rotation = synth_rotation;
      const Dataset d = generate(spec);
      write_csv(synth_out, d, {"x1", "x2"});
      std::cout << "wrote " << d.size() << " samples to " << synth_out << "\n";
      return 0;
    }
    if (run->parsed() || sweep->parsed()) {
      const bool is_sweep = sweep->parsed();
      ExperimentSpec spec =
          load_experiment_file(is_sweep ? sweep_config : run_config);
      if (is_sweep) {
        spec.noise_rates = parse_rate_list(sweep_rates);
        if (!sweep_out.empty()) spec.output_dir = sweep_out;
        if (sweep_jobs > 0) spec.jobs = sweep_jobs;
      } else {
        if (!run_out.empty()) spec.output_dir = run_out;
        if (!run_seeds.empty()) spec.seeds = parse_seed_list(run_seeds);
        if (run_rate >= 0.0) spec.noise_rates = {run_rate};
        if (!run_mode.empty()) spec.noise.mode = noise_mode_from_string(run_mode);
        if (!run_target.empty()) {
          if (run_target == "auto")
            spec.noise.target_group.reset();
          else if (run_target.size() == 4)
            spec.noise.target_group =
                GroupKey{run_target[1] - '0', run_target[3] - '0'};
          else
            throw std::invalid_argument("bad --target-group: " + run_target);
        }
        if (!run_metric.empty()) spec.train.metric = metric_from_string(run_metric);
        if (!run_methods.empty()) {
          spec.methods.clear();
          std::size_t pos = 0;
          while (pos < run_methods.size()) {
            const std::size_t comma = run_methods.find(',', pos);
            spec.methods.push_back(method_from_string(run_methods.substr(
                pos, comma == std::string::npos ? comma : comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
          }
        }
        if (run_jobs > 0) spec.jobs = run_jobs;
        if (run_save_models) spec.save_models = true;
      }
      const ExperimentResult result = run_experiment(spec);
      for (const auto& c : result.cells)
        if (!c.ok) std::cerr << "cell failed " << c.error << "\n";
      std::cout << "wrote " << result.written_files.size() << " files to "
                << spec.output_dir << "\n";
      std::ifstream table(spec.output_dir + "/table.txt");
      if (table) std::cout << table.rdbuf();
      return result.all_ok ? 0 : 1;
    }
    return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

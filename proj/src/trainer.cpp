#include "fairsel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fairsel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_itlm_family(Method m) {
  return m == Method::ITLM || m == Method::ITLMThenFB || m == Method::ITLMThenPenalty ||
         m == Method::OursNoConstraints;
}

bool uses_lambda(Method m) {
  return m == Method::FB || m == Method::Ours || m == Method::OursNoConstraints ||
         m == Method::OursNoWeights;
}

// Lowest-loss floor(tau*n) samples, ties by ascending position.
SelectionResult itlm_select(const SelectionProblem& p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p.losses[a] < p.losses[b];
  });
  order.resize(std::min(p.budget(), order.size()));
  std::sort(order.begin(), order.end());
  SelectionResult r;
  r.selected = std::move(order);
  for (std::size_t i : r.selected) {
    const int slot = p.slot_of(i);
    r.selected_by_group[slot].push_back(i);
    ++r.group_counts[slot];
    ++r.class_counts[p.labels[i]];
  }
  r.budget_used = r.selected.size();
  return r;
}

SelectionResult select_everything(const Dataset& d) {
  SelectionResult r;
  r.selected.resize(d.size());
  std::iota(r.selected.begin(), r.selected.end(), 0);
  for (std::size_t i : r.selected) {
    const int slot = group_slot(d.labels[i], d.sensitive[i]);
    r.selected_by_group[slot].push_back(i);
    ++r.group_counts[slot];
    ++r.class_counts[d.labels[i]];
  }
  r.budget_used = r.selected.size();
  return r;
}

LambdaValues selection_proportions(const SelectionResult& sel) {
  LambdaValues v{};
  for (int y = 0; y < 2; ++y) {
    const double cls = static_cast<double>(sel.class_counts[y]);
    if (cls > 0) {
      v[group_slot(y, 1)] =
          static_cast<double>(sel.group_counts[group_slot(y, 1)]) / cls;
      v[group_slot(y, 0)] = 1.0 - v[group_slot(y, 1)];
    } else {
      v[group_slot(y, 0)] = 0.5;
      v[group_slot(y, 1)] = 0.5;
    }
  }
  return v;
}

class TrainLoop {
 public:
  TrainLoop(const TrainConfig& cfg, const Dataset& train, const Dataset* validation)
      : cfg_(cfg),
        train_(train),
        validation_(validation),
        rng_(cfg.seed),
        model_(LinearModel::zeros(train.features.cols, cfg.learning_rate)) {
    all_.resize(train_.size());
    std::iota(all_.begin(), all_.end(), 0);
    if (uses_lambda(cfg_.method))
      lambda_ = init_lambda(train_, cfg_.metric, cfg_.alpha, cfg_.lambda_init,
                            cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
  }

  TrainResult run() {
    const Method m = cfg_.method;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      if (epoch < cfg_.warm_start_epochs || m == Method::LR) {
        plain_epoch(all_);
        log_epoch(epoch, train_.size(), nullptr);
        continue;
      }
      switch (m) {
        case Method::FB: {
          const SelectionResult sel = select_everything(train_);
          fair_epoch(sel, lambda_.values);
          adapt_lambda(sel);
          log_epoch(epoch, sel.selected.size(), &sel);
          break;
        }
        case Method::ITLM:
        case Method::ITLMThenFB:
        case Method::ITLMThenPenalty: {
          const SelectionResult sel = select_clean();
          plain_epoch(sel.selected);
          log_epoch(epoch, sel.selected.size(), &sel);
          break;
        }
        case Method::OursNoConstraints: {
          const SelectionResult sel = select_clean();
          fair_epoch(sel, lambda_.values);
          adapt_lambda(sel);
          log_epoch(epoch, sel.selected.size(), &sel);
          break;
        }
        case Method::OursNoWeights: {
          const SelectionResult sel = select_fair();
          fair_epoch(sel, selection_proportions(sel));
          adapt_lambda(sel);
          log_epoch(epoch, sel.selected.size(), &sel);
          break;
        }
        case Method::Ours: {
          const SelectionResult sel = select_fair();
          fair_epoch(sel, lambda_.values);
          adapt_lambda(sel);
          log_epoch(epoch, sel.selected.size(), &sel);
          break;
        }
        case Method::LR:
          break;  // handled above
      }
    }

    if (m == Method::ITLMThenFB || m == Method::ITLMThenPenalty) run_phase2();
    return {std::move(model_), std::move(log_)};
  }

 private:
  // One pass of shuffled minibatch SGD over the given indices.
  void plain_epoch(const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> order = indices;
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t len = std::min(cfg_.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      sgd_step(model_, gradient(model_, train_, batch));
    }
  }

  // ceil(|S|/b) batches drawn with replacement per the lambda-weighted plan.
  void fair_epoch(const SelectionResult& sel, const LambdaValues& weights) {
    const BatchPlan plan = plan_batch(sel, weights, cfg_.batch_size);
    const std::size_t batches = batches_per_epoch(sel, cfg_.batch_size);
    for (std::size_t k = 0; k < batches; ++k) {
      const auto batch = draw_batch(plan, sel, rng_);
      sgd_step(model_, gradient(model_, train_, batch));
    }
  }

  void penalty_epoch(const std::vector<std::size_t>& indices) {
    std::vector<std::size_t> order = indices;
    std::shuffle(order.begin(), order.end(), rng_);
    const PenaltyConfig pc{cfg_.mu};
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t len = std::min(cfg_.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      sgd_step(model_, penalty_gradient(model_, train_, batch, pc));
    }
  }

  SelectionResult select_clean() {
    const auto problem = SelectionProblem::from_dataset(
        train_, per_sample_loss(model_, train_), cfg_.tau, lambda_.values);
    SelectionResult sel = itlm_select(problem);
    if (sel.selected.empty())
      throw std::runtime_error("trainer: selection came back empty");
    return sel;
  }

  SelectionResult select_fair() {
    const auto problem = SelectionProblem::from_dataset(
        train_, per_sample_loss(model_, train_), cfg_.tau, lambda_.values);
    SelectionResult sel = greedy_select(problem);
    if (sel.selected.empty())
      throw std::runtime_error("trainer: greedy selection came back empty");
    const auto feas = check_feasible(sel, problem);
    if (!feas.feasible)
      throw std::runtime_error("trainer: infeasible selection: " +
                               feas.violations.front());
    return sel;
  }

  void adapt_lambda(const SelectionResult& sel) {
    last_report_ = group_report(model_, sel, train_);
    lambda_ = update_lambda(lambda_, *last_report_);
  }

  void log_epoch(int epoch, std::size_t selection_size, const SelectionResult* sel) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = mean_loss(model_, train_);
    if (!std::isfinite(rec.train_loss))
      throw std::runtime_error("trainer: non-finite training loss at epoch " +
                               std::to_string(epoch));
    rec.selection_size = selection_size;
    rec.lambdas = lambda_.values;
    if (sel && last_report_)
      rec.group_losses = last_report_->mean_loss;
    else
      rec.group_losses.fill(kNaN);
    rec.val_accuracy = rec.val_eo = rec.val_dp = kNaN;
    if (validation_ && validation_->size() > 0) {
      rec.val_accuracy = accuracy(model_, *validation_);
      try {
        rec.val_eo = eo_disparity(model_, *validation_);
        rec.val_dp = dp_disparity(model_, *validation_);
      } catch (const std::runtime_error&) {
        // empty stratum in a small validation split: leave NaN
      }
    }
    log_.records.push_back(rec);
  }

  // Two-phase tail: freeze the final clean selection, then run FB sampling or
  // penalty training on it.
  void run_phase2() {
    const SelectionResult frozen = select_clean();
    const int extra = cfg_.phase2_epochs >= 0
                          ? cfg_.phase2_epochs
                          : cfg_.epochs - cfg_.warm_start_epochs;
    if (cfg_.method == Method::ITLMThenFB) {
      lambda_.values = selection_proportions(frozen);
      lambda_.step_size = cfg_.alpha;
      lambda_.metric = cfg_.metric;
      for (int e = 0; e < extra; ++e) {
        fair_epoch(frozen, lambda_.values);
        adapt_lambda(frozen);
        log_epoch(cfg_.epochs + e, frozen.selected.size(), &frozen);
      }
    } else {
      for (int e = 0; e < extra; ++e) {
        penalty_epoch(frozen.selected);
        log_epoch(cfg_.epochs + e, frozen.selected.size(), &frozen);
      }
    }
  }

  const TrainConfig& cfg_;
  const Dataset& train_;
  const Dataset* validation_;
  std::mt19937_64 rng_;
  LinearModel model_;
  LambdaState lambda_{};
  std::optional<GroupLossReport> last_report_;
  std::vector<std::size_t> all_;
  RunLog log_;
};

}  // namespace

Method method_from_string(const std::string& s) {
  if (s == "LR") return Method::LR;
  if (s == "ITLM") return Method::ITLM;
  if (s == "FB") return Method::FB;
  if (s == "ITLM_then_FB") return Method::ITLMThenFB;
  if (s == "ITLM_then_Penalty") return Method::ITLMThenPenalty;
  if (s == "Ours") return Method::Ours;
  if (s == "Ours_no_constraints") return Method::OursNoConstraints;
  if (s == "Ours_no_weights") return Method::OursNoWeights;
  throw std::invalid_argument("unknown method: " + s);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::LR: return "LR";
    case Method::ITLM: return "ITLM";
    case Method::FB: return "FB";
    case Method::ITLMThenFB: return "ITLM_then_FB";
    case Method::ITLMThenPenalty: return "ITLM_then_Penalty";
    case Method::Ours: return "Ours";
    case Method::OursNoConstraints: return "Ours_no_constraints";
    case Method::OursNoWeights: return "Ours_no_weights";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("config: tau outside (0,1]");
  if (alpha < 0.0) throw std::invalid_argument("config: negative alpha");
  if (mu < 0.0) throw std::invalid_argument("config: negative mu");
  if (epochs <= 0) throw std::invalid_argument("config: epochs must be positive");
  if (warm_start_epochs < 0 || warm_start_epochs >= epochs)
    throw std::invalid_argument("config: warm_start_epochs must be in [0, epochs)");
  if (batch_size < 4) throw std::invalid_argument("config: batch size must be >= 4");
  if (learning_rate <= 0.0) throw std::invalid_argument("config: learning rate must be positive");
}

TrainResult train(const TrainConfig& config, const Dataset& train, const Dataset& test,
                  const Dataset* validation) {
  config.validate();
  train.validate();
  test.validate();
  TrainLoop loop(config, train, validation);
  TrainResult result = loop.run();
  result.log.test_report = evaluate_model(result.model, test);
  return result;
}

EvalReport evaluate(const LinearModel& model, const Dataset& test) {
  return evaluate_model(model, test);
}

void write_runlog_csv(const std::string& path, const RunLog& log,
                      const std::vector<std::string>& preamble) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_runlog_csv: cannot open " + path);
  for (const auto& line : preamble) out << line << '\n';
  out << "epoch,train_loss,selection_size,lambda_00,lambda_01,lambda_10,lambda_11,"
         "L_00,L_01,L_10,L_11,val_accuracy,val_eo,val_dp\n";
  out.precision(10);
  for (const auto& r : log.records) {
    out << r.epoch << ',' << r.train_loss << ',' << r.selection_size;
    for (double v : r.lambdas) out << ',' << v;
    for (double v : r.group_losses) out << ',' << v;
    out << ',' << r.val_accuracy << ',' << r.val_eo << ',' << r.val_dp << '\n';
  }
}

AggregateStat aggregate(const std::vector<double>& values) {
  AggregateStat s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

MultiSeedResult multi_seed(const TrainConfig& base,
                           const std::vector<std::uint64_t>& seeds,
                           const std::function<SeedData(std::uint64_t)>& provider) {
  if (seeds.empty()) throw std::invalid_argument("multi_seed: need at least one seed");
  MultiSeedResult out;
  std::vector<double> acc, eo, dp;
  for (std::uint64_t seed : seeds) {
    SeedOutcome run;
    run.seed = seed;
    try {
      const SeedData data = provider(seed);
      TrainConfig cfg = base;
      cfg.seed = seed;
      const Dataset* val = data.validation.size() > 0 ? &data.validation : nullptr;
      const TrainResult res = train(cfg, data.train, data.test, val);
      run.ok = true;
      run.report = res.log.test_report;
      acc.push_back(run.report.accuracy);
      eo.push_back(run.report.eo_disparity);
      dp.push_back(run.report.dp_disparity);
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
      out.warnings.push_back("seed " + std::to_string(seed) +
                             " excluded from aggregate: " + e.what());
    }
    out.runs.push_back(std::move(run));
  }
  out.accuracy = aggregate(acc);
  out.eo_disparity = aggregate(eo);
  out.dp_disparity = aggregate(dp);
  return out;
}

}  // namespace fairsel

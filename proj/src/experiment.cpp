#include "fairsel/experiment.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace fairsel {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentSpec::validate() const {
  if (methods.empty()) throw std::invalid_argument("experiment: no methods listed");
  if (seeds.empty()) throw std::invalid_argument("experiment: no seeds listed");
  if (noise_rates.empty())
    throw std::invalid_argument("experiment: no noise rates listed");
  if (jobs < 1) throw std::invalid_argument("experiment: jobs must be >= 1");
  if (!synthetic && csv_path.empty())
    throw std::invalid_argument("experiment: csv source needs a path");
}

namespace {

CsvSchema schema_from_json(const json& j) {
  CsvSchema s;
  for (const auto& [col, role] : j.at("columns").items()) {
    const std::string r = role.get<std::string>();
    if (r == "feature")
      s.roles[col] = CsvSchema::Role::Feature;
    else if (r == "label")
      s.roles[col] = CsvSchema::Role::Label;
    else if (r == "sensitive")
      s.roles[col] = CsvSchema::Role::Sensitive;
    else if (r == "ignore")
      s.roles[col] = CsvSchema::Role::Ignore;
    else
      throw std::invalid_argument("schema: unknown role '" + r + "'");
  }
  if (j.contains("label_values"))
    for (const auto& [v, b] : j.at("label_values").items())
      s.label_values[v] = b.get<int>();
  if (j.contains("sensitive_values"))
    for (const auto& [v, b] : j.at("sensitive_values").items())
      s.sensitive_values[v] = b.get<int>();
  return s;
}

json schema_to_json(const CsvSchema& s) {
  json j;
  for (const auto& [col, role] : s.roles) {
    switch (role) {
      case CsvSchema::Role::Feature: j["columns"][col] = "feature"; break;
      case CsvSchema::Role::Label: j["columns"][col] = "label"; break;
      case CsvSchema::Role::Sensitive: j["columns"][col] = "sensitive"; break;
      case CsvSchema::Role::Ignore: j["columns"][col] = "ignore"; break;
    }
  }
  for (const auto& [v, b] : s.label_values) j["label_values"][v] = b;
  for (const auto& [v, b] : s.sensitive_values) j["sensitive_values"][v] = b;
  return j;
}

std::optional<GroupKey> group_from_token(const std::string& t) {
  if (t == "auto") return std::nullopt;
  if (t.size() == 4 && t[0] == 'y' && t[2] == 'z')
    return GroupKey{t[1] - '0', t[3] - '0'};
  throw std::invalid_argument("unknown target group token: " + t);
}

std::string group_to_token(const std::optional<GroupKey>& g) {
  if (!g) return "auto";
  return "y" + std::to_string(g->y) + "z" + std::to_string(g->z);
}

}  // namespace

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec spec;
  const auto& data = j.at("dataset");
  const std::string type = data.at("type").get<std::string>();
  if (type == "synth") {
    spec.synthetic = true;
    spec.synth.n_total = data.value("n", spec.synth.n_total);
    spec.synth.class_balance = data.value("class_balance", spec.synth.class_balance);
    spec.synth.bias_factor = data.value("bias_factor", spec.synth.bias_factor);
    spec.synth.rotation = data.value("rotation", spec.synth.rotation);
  } else if (type == "csv") {
    spec.synthetic = false;
    spec.csv_path = data.at("path").get<std::string>();
    spec.csv_schema = schema_from_json(data.at("schema"));
  } else {
    throw std::invalid_argument("experiment: unknown dataset type '" + type + "'");
  }

  if (j.contains("split")) {
    const auto& sp = j.at("split");
    spec.split.train_fraction = sp.value("train", spec.split.train_fraction);
    spec.split.validation_fraction = sp.value("validation", spec.split.validation_fraction);
    spec.split.test_fraction = sp.value("test", spec.split.test_fraction);
  }
  spec.append_sensitive = j.value("append_sensitive_feature", true);

  if (j.contains("noise")) {
    const auto& no = j.at("noise");
    if (no.contains("rates"))
      spec.noise_rates = no.at("rates").get<std::vector<double>>();
    else
      spec.noise_rates = {no.value("rate", 0.1)};
    spec.noise.mode = noise_mode_from_string(no.value("mode", "adversarial"));
    spec.noise.target_group = group_from_token(no.value("target_group", "auto"));
  } else {
    spec.noise_rates = {0.1};
  }

  if (j.contains("train")) {
    const auto& tr = j.at("train");
    spec.train.epochs = tr.value("epochs", spec.train.epochs);
    spec.train.warm_start_epochs =
        tr.value("warm_start_epochs", spec.train.warm_start_epochs);
    spec.train.phase2_epochs = tr.value("phase2_epochs", spec.train.phase2_epochs);
    spec.train.batch_size = tr.value("batch_size", spec.train.batch_size);
    spec.train.learning_rate = tr.value("learning_rate", spec.train.learning_rate);
    spec.train.alpha = tr.value("alpha", spec.train.alpha);
    spec.train.mu = tr.value("mu", spec.train.mu);
    spec.train.metric = metric_from_string(tr.value("metric", "eo"));
    spec.train.lambda_init = tr.value("lambda_random_init", false)
                                 ? LambdaInit::Random
                                 : LambdaInit::Proportions;
    if (tr.contains("tau") && !tr.at("tau").is_null())
      spec.tau_override = tr.at("tau").get<double>();
  }

  for (const auto& m : j.at("methods"))
    spec.methods.push_back(method_from_string(m.get<std::string>()));
  spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  spec.output_dir = j.value("output_dir", spec.output_dir);
  spec.jobs = j.value("jobs", 1);
  spec.save_models = j.value("save_models", false);
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  return experiment_from_json(j);
}

json experiment_to_json(const ExperimentSpec& spec) {
  json j;
  if (spec.synthetic) {
    j["dataset"] = {{"type", "synth"},
                    {"n", spec.synth.n_total},
                    {"class_balance", spec.synth.class_balance},
                    {"bias_factor", spec.synth.bias_factor},
                    {"rotation", spec.synth.rotation}};
  } else {
    j["dataset"] = {{"type", "csv"},
                    {"path", spec.csv_path},
                    {"schema", schema_to_json(spec.csv_schema)}};
  }
  j["split"] = {{"train", spec.split.train_fraction},
                {"validation", spec.split.validation_fraction},
                {"test", spec.split.test_fraction}};
  j["append_sensitive_feature"] = spec.append_sensitive;
  j["noise"] = {{"rates", spec.noise_rates},
                {"mode", to_string(spec.noise.mode)},
                {"target_group", group_to_token(spec.noise.target_group)}};
  j["train"] = {{"epochs", spec.train.epochs},
                {"warm_start_epochs", spec.train.warm_start_epochs},
                {"phase2_epochs", spec.train.phase2_epochs},
                {"batch_size", spec.train.batch_size},
                {"learning_rate", spec.train.learning_rate},
                {"alpha", spec.train.alpha},
                {"mu", spec.train.mu},
                {"metric", to_string(spec.train.metric)},
                {"lambda_random_init", spec.train.lambda_init == LambdaInit::Random}};
  if (spec.tau_override) j["train"]["tau"] = *spec.tau_override;
  json methods = json::array();
  for (Method m : spec.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["seeds"] = spec.seeds;
  j["output_dir"] = spec.output_dir;
  j["jobs"] = spec.jobs;
  j["save_models"] = spec.save_models;
  return j;
}

SeedData build_cell_data(const ExperimentSpec& spec, std::uint64_t seed, double rate) {
  Dataset raw;
  if (spec.synthetic) {
    SynthSpec s = spec.synth;
    s.seed = seed;
    raw = generate(s);
  } else {
    raw = load_csv(spec.csv_path, spec.csv_schema);
  }
  SplitSpec sp = spec.split;
  sp.seed = seed;
  SplitResult parts = split(raw, sp);

  auto [train_std, stats] = standardize(parts.train);
  parts.train = std::move(train_std);
  if (parts.validation.size() > 0)
    parts.validation = standardize(parts.validation, stats).first;
  parts.test = standardize(parts.test, stats).first;

  if (spec.append_sensitive) {
    parts.train = append_sensitive_feature(parts.train);
    if (parts.validation.size() > 0)
      parts.validation = append_sensitive_feature(parts.validation);
    parts.test = append_sensitive_feature(parts.test);
  }

  NoiseSpec noise = spec.noise;
  noise.rate = rate;
  noise.seed = seed;
  if (noise.flip_count(parts.train.size()) > 0) {
    const LinearModel probe = fit_logistic_fullbatch(parts.train);
    FlipResult flipped;
    switch (noise.mode) {
      case NoiseMode::Random:
        flipped = flip_random(parts.train, noise);
        break;
      case NoiseMode::Adversarial:
        flipped = flip_adversarial(parts.train, noise, probe);
        break;
      case NoiseMode::GroupTargeted:
        flipped = flip_group_targeted(parts.train, noise, probe, parts.test);
        break;
    }
    parts.train = std::move(flipped.corrupted);
  }
  return {std::move(parts.train), std::move(parts.validation), std::move(parts.test)};
}

std::string format_cell(const AggregateStat& stat) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << stat.mean << "±" << stat.stddev;
  return os.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  fs::create_directories(spec.output_dir);
  ExperimentResult result;

  const json resolved = experiment_to_json(spec);
  const std::string resolved_line = resolved.dump();
  {
    const std::string path = (fs::path(spec.output_dir) / "config_resolved.json").string();
    std::ofstream out(path);
    out << resolved.dump(2) << "\n";
    result.written_files.push_back(path);
  }

  struct Cell {
    double rate;
    Method method;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double rate : spec.noise_rates)
    for (Method m : spec.methods)
      for (std::uint64_t seed : spec.seeds) cells.push_back({rate, m, seed});

  std::vector<CellResult> cell_results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;

  auto run_cell = [&](std::size_t idx) {
    const Cell& c = cells[idx];
    CellResult& out = cell_results[idx];
    out.method = c.method;
    out.seed = c.seed;
    out.rate = c.rate;
    try {
      const SeedData data = build_cell_data(spec, c.seed, c.rate);
      TrainConfig cfg = spec.train;
      cfg.method = c.method;
      cfg.seed = c.seed;
      cfg.tau = spec.tau_override ? *spec.tau_override : 1.0 - c.rate;
      const Dataset* val = data.validation.size() > 0 ? &data.validation : nullptr;
      TrainResult res = train(cfg, data.train, data.test, val);
      out.ok = true;
      out.report = res.log.test_report;

      std::ostringstream name;
      name << "run_" << to_string(c.method) << "_s" << c.seed;
      if (spec.noise_rates.size() > 1) name << "_r" << c.rate;
      const fs::path base = fs::path(spec.output_dir) / name.str();

      const std::vector<std::string> preamble = {
          "# config " + resolved_line,
          "# method " + to_string(c.method) + " seed " + std::to_string(c.seed) +
              " rate " + std::to_string(c.rate)};
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        const std::string log_path = base.string() + ".csv";
        write_runlog_csv(log_path, res.log, preamble);
        result.written_files.push_back(log_path);
        if (spec.save_models) {
          save_model_json(res.model, base.string() + ".model.json");
          save_model_binary(res.model, base.string() + ".model.bin");
          result.written_files.push_back(base.string() + ".model.json");
          result.written_files.push_back(base.string() + ".model.bin");
        }
      }
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = std::string("(") + to_string(c.method) + ", seed " +
                  std::to_string(c.seed) + "): " + e.what();
    }
  };

  const int workers = std::min<int>(spec.jobs, static_cast<int>(cells.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
          run_cell(i);
      });
    for (auto& t : pool) t.join();
  }
  result.cells = std::move(cell_results);
  for (const auto& c : result.cells)
    if (!c.ok) result.all_ok = false;

  // Machine-readable summary.
  {
    const std::string path = (fs::path(spec.output_dir) / "summary.csv").string();
    std::ofstream out(path);
    out << "# config " << resolved_line << "\n";
    out << "method,seed,rate,ok,accuracy,eo_disparity,dp_disparity,error\n";
    out << std::setprecision(10);
    for (const auto& c : result.cells) {
      out << to_string(c.method) << ',' << c.seed << ',' << c.rate << ','
          << (c.ok ? 1 : 0) << ',';
      if (c.ok)
        out << c.report.accuracy << ',' << c.report.eo_disparity << ','
            << c.report.dp_disparity << ',';
      else
        out << ",,,\"" << c.error << "\"";
      out << '\n';
    }
    result.written_files.push_back(path);
  }

  // Aggregate tables, one per rate.
  const bool is_eo = spec.train.metric == FairnessMetric::EqualizedOdds;
  std::ostringstream table_csv, table_txt, sweep_csv;
  table_csv << "# config " << resolved_line << "\n";
  table_csv << "rate,method,accuracy_mean,accuracy_std,disparity_mean,disparity_std\n";
  sweep_csv << "# config " << resolved_line << "\n";
  sweep_csv << "rate,method,accuracy_mean,accuracy_std,eo_mean,eo_std,dp_mean,dp_std\n";
  for (double rate : spec.noise_rates) {
    table_txt << "noise rate " << rate << "  (" << (is_eo ? "EO" : "DP")
              << " disparity)\n";
    table_txt << std::left << std::setw(22) << "Method" << std::setw(14) << "Acc."
              << std::setw(14) << (is_eo ? "EO Disp." : "DP Disp.") << "\n";
    for (Method m : spec.methods) {
      std::vector<double> acc, eo, dp;
      for (const auto& c : result.cells) {
        if (c.method != m || c.rate != rate || !c.ok) continue;
        acc.push_back(c.report.accuracy);
        eo.push_back(c.report.eo_disparity);
        dp.push_back(c.report.dp_disparity);
      }
      const AggregateStat a = aggregate(acc);
      const AggregateStat e = aggregate(eo);
      const AggregateStat d = aggregate(dp);
      const AggregateStat& disp = is_eo ? e : d;
      table_csv << rate << ',' << to_string(m) << ',' << a.mean << ',' << a.stddev
                << ',' << disp.mean << ',' << disp.stddev << '\n';
      sweep_csv << rate << ',' << to_string(m) << ',' << a.mean << ',' << a.stddev
                << ',' << e.mean << ',' << e.stddev << ',' << d.mean << ','
                << d.stddev << '\n';
      table_txt << std::left << std::setw(22) << to_string(m) << std::setw(14)
                << format_cell(a) << std::setw(14) << format_cell(disp) << "\n";
    }
    table_txt << "\n";
  }
  {
    const std::string path = (fs::path(spec.output_dir) / "table.csv").string();
    std::ofstream out(path);
    out << table_csv.str();
    result.written_files.push_back(path);
  }
  {
    const std::string path = (fs::path(spec.output_dir) / "table.txt").string();
    std::ofstream out(path);
    out << table_txt.str();
    result.written_files.push_back(path);
  }
  if (spec.noise_rates.size() > 1) {
    const std::string path = (fs::path(spec.output_dir) / "sweep.csv").string();
    std::ofstream out(path);
    out << sweep_csv.str();
    result.written_files.push_back(path);
  }
  return result;
}

}  // namespace fairsel

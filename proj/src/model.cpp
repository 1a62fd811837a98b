#include "fairsel/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fairsel {

namespace {

double stable_sigmoid(double t) {
  t = std::clamp(t, -500.0, 500.0);
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

constexpr double kProbClamp = 1e-12;

}  // namespace

LinearModel LinearModel::zeros(std::size_t m, double lr) {
  LinearModel model;
  model.weights.assign(m, 0.0);
  model.bias = 0.0;
  model.learning_rate = lr;
  return model;
}

double LinearModel::logit(std::span<const double> x) const {
  if (x.size() != weights.size())
    throw std::invalid_argument("model: feature dimension mismatch");
  double t = bias;
  for (std::size_t c = 0; c < x.size(); ++c) t += weights[c] * x[c];
  return t;
}

bool LinearModel::finite() const {
  if (!std::isfinite(bias) || !std::isfinite(learning_rate)) return false;
  return std::all_of(weights.begin(), weights.end(),
                     [](double w) { return std::isfinite(w); });
}

std::vector<double> predict_proba(const LinearModel& model, const Matrix& features) {
  if (features.cols != model.dim())
    throw std::invalid_argument("predict_proba: feature dimension mismatch");
  std::vector<double> out(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const double t = model.logit(features.row(i));
    if (!std::isfinite(t)) throw std::invalid_argument("predict_proba: non-finite input");
    out[i] = stable_sigmoid(t);
  }
  return out;
}

std::vector<double> per_sample_loss(const LinearModel& model, const Dataset& d) {
  auto p = predict_proba(model, d.features);
  std::vector<double> loss(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    loss[i] = d.labels[i] == 1 ? -std::log(pi) : -std::log(1.0 - pi);
  }
  return loss;
}

double mean_loss(const LinearModel& model, const Dataset& d) {
  const auto loss = per_sample_loss(model, d);
  double s = 0.0;
  for (double v : loss) s += v;
  return s / static_cast<double>(loss.size());
}

Gradient gradient(const LinearModel& model, const Dataset& d,
                  std::span<const std::size_t> batch,
                  std::span<const double> sample_weights) {
  if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
  if (!sample_weights.empty() && sample_weights.size() != batch.size())
    throw std::invalid_argument("gradient: weight/batch length mismatch");
  const std::size_t m = model.dim();
  Gradient g;
  g.weights.assign(m, 0.0);
  double wsum = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const std::size_t i = batch[k];
    const double wk = sample_weights.empty() ? 1.0 : sample_weights[k];
    if (wk < 0.0) throw std::invalid_argument("gradient: negative sample weight");
    const double p = stable_sigmoid(model.logit(d.features.row(i)));
    const double r = wk * (p - static_cast<double>(d.labels[i]));
    const auto x = d.features.row(i);
    for (std::size_t c = 0; c < m; ++c) g.weights[c] += r * x[c];
    g.bias += r;
    wsum += wk;
  }
  if (wsum <= 0.0) throw std::invalid_argument("gradient: zero total weight");
  for (double& v : g.weights) v /= wsum;
  g.bias /= wsum;
  return g;
}

double penalty_loss(const LinearModel& model, const Dataset& d,
                    std::span<const std::size_t> batch, const PenaltyConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("penalty_loss: empty batch");
  const double nb = static_cast<double>(batch.size());
  double loss_sum = 0.0, zp = 0.0, zm = 0.0, pm = 0.0;
  for (std::size_t i : batch) {
    const double p = stable_sigmoid(model.logit(d.features.row(i)));
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    loss_sum += d.labels[i] == 1 ? -std::log(pc) : -std::log(1.0 - pc);
    const double z = static_cast<double>(d.sensitive[i]);
    zp += z * p;
    zm += z;
    pm += p;
  }
  const double cov = zp / nb - (zm / nb) * (pm / nb);
  return loss_sum / nb + cfg.mu * std::abs(cov);
}

Gradient penalty_gradient(const LinearModel& model, const Dataset& d,
                          std::span<const std::size_t> batch,
                          const PenaltyConfig& cfg) {
  Gradient g = gradient(model, d, batch);
  if (cfg.mu == 0.0) return g;
  const std::size_t m = model.dim();
  const double nb = static_cast<double>(batch.size());

  double zmean = 0.0, pmean = 0.0, zp = 0.0;
  std::vector<double> probs(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double p = stable_sigmoid(model.logit(d.features.row(batch[k])));
    probs[k] = p;
    const double z = static_cast<double>(d.sensitive[batch[k]]);
    zmean += z;
    pmean += p;
    zp += z * p;
  }
  zmean /= nb;
  pmean /= nb;
  const double cov = zp / nb - zmean * pmean;
  const double sgn = cov > 0.0 ? 1.0 : (cov < 0.0 ? -1.0 : 0.0);

  // d|Cov|/dtheta = sign(Cov) * mean((z_i - zbar) * p_i (1-p_i) * x_i)
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const std::size_t i = batch[k];
    const double z = static_cast<double>(d.sensitive[i]);
    const double dp = probs[k] * (1.0 - probs[k]);
    const double r = cfg.mu * sgn * (z - zmean) * dp / nb;
    const auto x = d.features.row(i);
    for (std::size_t c = 0; c < m; ++c) g.weights[c] += r * x[c];
    g.bias += r;
  }
  return g;
}

void sgd_step(LinearModel& model, const Gradient& grad) {
  if (grad.weights.size() != model.dim())
    throw std::invalid_argument("sgd_step: gradient dimension mismatch");
  if (!std::isfinite(grad.bias) ||
      !std::all_of(grad.weights.begin(), grad.weights.end(),
                   [](double v) { return std::isfinite(v); }))
    throw std::runtime_error("sgd_step: non-finite gradient");
  for (std::size_t c = 0; c < model.dim(); ++c)
    model.weights[c] -= model.learning_rate * grad.weights[c];
  model.bias -= model.learning_rate * grad.bias;
}

LinearModel fit_logistic_fullbatch(const Dataset& d, int iterations, double lr) {
  LinearModel model = LinearModel::zeros(d.features.cols, lr);
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (int it = 0; it < iterations; ++it) {
    sgd_step(model, gradient(model, d, all));
  }
  return model;
}

namespace {
constexpr char kMagic[4] = {'F', 'S', 'L', 'M'};

void write_u64_le(std::ofstream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64_le(std::ifstream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64_le(std::ofstream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64_le(out, bits);
}

double read_f64_le(std::ifstream& in) {
  const std::uint64_t bits = read_u64_le(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}
}  // namespace

void save_model_binary(const LinearModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model_binary: cannot open " + path);
  out.write(kMagic, 4);
  write_u64_le(out, model.weights.size());
  write_f64_le(out, model.bias);
  write_f64_le(out, model.learning_rate);
  for (double w : model.weights) write_f64_le(out, w);
}

LinearModel load_model_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model_binary: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_model_binary: bad magic in " + path);
  LinearModel model;
  const std::uint64_t m = read_u64_le(in);
  model.bias = read_f64_le(in);
  model.learning_rate = read_f64_le(in);
  model.weights.resize(m);
  for (std::uint64_t c = 0; c < m; ++c) model.weights[c] = read_f64_le(in);
  if (!in) throw std::runtime_error("load_model_binary: truncated file " + path);
  return model;
}

void save_model_json(const LinearModel& model, const std::string& path) {
  nlohmann::json j;
  j["m"] = model.weights.size();
  j["bias"] = model.bias;
  j["learning_rate"] = model.learning_rate;
  j["weights"] = model.weights;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

LinearModel load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  LinearModel model;
  model.bias = j.at("bias").get<double>();
  model.learning_rate = j.at("learning_rate").get<double>();
  model.weights = j.at("weights").get<std::vector<double>>();
  if (j.at("m").get<std::size_t>() != model.weights.size())
    throw std::runtime_error("load_model_json: header m disagrees with weights");
  return model;
}

}  // namespace fairsel

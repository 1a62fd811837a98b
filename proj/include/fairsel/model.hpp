#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsel/dataset.hpp"

namespace fairsel {

// Logistic-regression classifier. Weights are over the dataset's feature
// columns; the learning rate rides along so checkpoints are self-contained.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double learning_rate = 0.0005;

  std::size_t dim() const { return weights.size(); }
  static LinearModel zeros(std::size_t m, double lr = 0.0005);

  double logit(std::span<const double> x) const;
  bool finite() const;
};

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

struct PenaltyConfig {
  double mu = 0.0;  // strength of the |Cov(z, yhat)| term
};

// sigmoid(w.x + b) per row; numerically stable for |logit| up to 500.
std::vector<double> predict_proba(const LinearModel& model, const Matrix& features);

// Per-sample binary cross-entropy, probabilities clamped at 1e-12.
std::vector<double> per_sample_loss(const LinearModel& model, const Dataset& d);

double mean_loss(const LinearModel& model, const Dataset& d);

// Gradient of the weighted mean cross-entropy over `batch`. Weights default
// to 1; the mean is normalized by the weight sum, so rescaling all weights
// leaves the gradient unchanged.
Gradient gradient(const LinearModel& model, const Dataset& d,
                  std::span<const std::size_t> batch,
                  std::span<const double> sample_weights = {});

// Mean loss over the batch plus mu * |Cov(z_i, p_i)| (population covariance).
double penalty_loss(const LinearModel& model, const Dataset& d,
                    std::span<const std::size_t> batch, const PenaltyConfig& cfg);

// Gradient of penalty_loss, used by the covariance-penalty training phase.
Gradient penalty_gradient(const LinearModel& model, const Dataset& d,
                          std::span<const std::size_t> batch,
                          const PenaltyConfig& cfg);

// In-place parameter update: theta -= learning_rate * grad.
// Throws std::runtime_error on a non-finite gradient.
void sgd_step(LinearModel& model, const Gradient& grad);

// Deterministic full-batch gradient-descent fit, used for attack probes and
// the group-targeting search. Starts from zeros.
LinearModel fit_logistic_fullbatch(const Dataset& d, int iterations = 500,
                                   double lr = 0.5);

// Checkpoint I/O. The two formats carry identical information and must agree
// bit-for-bit on round-trip: a little-endian binary layout
// (magic "FSLM", u64 m, f64 bias, f64 lr, m x f64 weights) and a JSON form.
void save_model_binary(const LinearModel& model, const std::string& path);
LinearModel load_model_binary(const std::string& path);
void save_model_json(const LinearModel& model, const std::string& path);
LinearModel load_model_json(const std::string& path);

}  // namespace fairsel

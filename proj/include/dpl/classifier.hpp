#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpl/data.hpp"
#include "dpl/inference.hpp"
#include "dpl/json_io.hpp"

namespace dpl {

// Discriminative models mapping features to a binary label distribution.
// logreg: params = [w(d), b]. mlp1: tanh hidden layer,
// params = [W1 row-major (h x d), b1(h), w2(h), b2].
struct Classifier {
  enum class Kind { logreg, mlp1 };
  Kind kind = Kind::logreg;
  int d = 0;
  int hidden = 0;
  std::vector<double> params;
  std::uint64_t seed = 0;
  int trained_epochs = 0;

  static Classifier logreg(int d);
  // Hidden weights uniform in [-1/sqrt(d), 1/sqrt(d)] from the run seed,
  // output layer zero so training starts at uniform predictions.
  static Classifier mlp1(int d, int hidden, std::uint64_t seed);

  double score(const std::vector<double>& x) const;
  // (p0, p1) with p0 + p1 = 1 by construction.
  std::array<double, 2> predict(const std::vector<double>& x) const;

  json to_json() const;
  static Classifier from_json(const json& j);
};

struct TrainOptions {
  int epochs = 10;
  double learning_rate = 0.01;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
};

// Mean distillation cross-entropy H(q_i, p(.|x_i)) over the dataset plus
// l2 * ||params||^2.
double distill_loss(const Classifier& c, const Dataset& ds, const MarginalTable& q,
                    double l2);

// Analytic gradient of the distillation loss over one batch (mean over the
// batch + regularizer). Exposed for finite-difference checks.
std::vector<double> gradient(const Classifier& c, const Dataset& ds,
                             const std::vector<int>& batch, const MarginalTable& q,
                             double l2);

struct TrainResult {
  Classifier classifier;
  double final_loss = 0.0;
};

// Mini-batch gradient descent on the distillation loss; deterministic for a
// fixed seed (seeded shuffle per epoch).
TrainResult train_distill(Classifier c, const Dataset& ds, const MarginalTable& q,
                          const TrainOptions& opts);

// Positive iff the normalized probability score reaches the threshold
// (inclusive).
int decide(double p1, double threshold = 0.5);

// Per-instance (log p0, log p1) snapshot for grounding.
PredictorLogProbs predict_log_probs(const Classifier& c, const Dataset& ds);

}  // namespace dpl

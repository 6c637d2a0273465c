#include "dpl/classifier.hpp"

#include <cmath>
#include <numeric>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

namespace {

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  double e = std::exp(s);
  return e / (1.0 + e);
}

// log(sigmoid(s)), stable on both tails.
double log_sigmoid(double s) {
  if (s >= 0.0) return -std::log1p(std::exp(-s));
  return s - std::log1p(std::exp(s));
}

void check_options(const TrainOptions& opts) {
  if (opts.epochs <= 0 || opts.batch_size <= 0 || !(opts.learning_rate > 0.0) ||
      !(opts.l2 >= 0.0))
    throw Error("train: options must be positive");
}

struct MlpView {
  const double* w1;
  const double* b1;
  const double* w2;
  double b2;
  int d, h;
};

MlpView mlp_view(const Classifier& c) {
  const double* p = c.params.data();
  return {p, p + c.hidden * c.d, p + c.hidden * c.d + c.hidden,
          c.params[static_cast<std::size_t>(c.hidden) * c.d + 2 * c.hidden], c.d, c.hidden};
}

}  // namespace

Classifier Classifier::logreg(int d) {
  Classifier c;
  c.kind = Kind::logreg;
  c.d = d;
  c.params.assign(static_cast<std::size_t>(d) + 1, 0.0);
  return c;
}

Classifier Classifier::mlp1(int d, int hidden, std::uint64_t seed) {
  if (hidden <= 0) throw Error("mlp1: hidden size must be positive");
  Classifier c;
  c.kind = Kind::mlp1;
  c.d = d;
  c.hidden = hidden;
  c.seed = seed;
  c.params.assign(static_cast<std::size_t>(hidden) * d + 2 * hidden + 1, 0.0);
  Rng rng(derive_seed(seed, seed_stream::kClassifierInit));
  double bound = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
  for (int i = 0; i < hidden * d; ++i) c.params[i] = rng.uniform(-bound, bound);
  return c;
}

double Classifier::score(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != d)
    throw Error(strfmt("predict: feature dimension %zu, model expects %d", x.size(), d));
  if (kind == Kind::logreg) {
    double s = params[d];
    for (int i = 0; i < d; ++i) s += params[i] * x[i];
    return s;
  }
  MlpView m = mlp_view(*this);
  double s = m.b2;
  for (int j = 0; j < m.h; ++j) {
    double z = m.b1[j];
    const double* row = m.w1 + static_cast<std::size_t>(j) * m.d;
    for (int i = 0; i < m.d; ++i) z += row[i] * x[i];
    s += m.w2[j] * std::tanh(z);
  }
  return s;
}

std::array<double, 2> Classifier::predict(const std::vector<double>& x) const {
  double p1 = sigmoid(score(x));
  return {1.0 - p1, p1};
}

json Classifier::to_json() const {
  json j{{"kind", kind == Kind::logreg ? "logreg" : "mlp1"},
         {"d", d},
         {"params", params},
         {"seed", seed},
         {"trainedEpochs", trained_epochs}};
  if (kind == Kind::mlp1) j["hidden"] = hidden;
  return j;
}

Classifier Classifier::from_json(const json& j) {
  Classifier c;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "logreg")
    c.kind = Kind::logreg;
  else if (kind == "mlp1")
    c.kind = Kind::mlp1;
  else
    throw ConfigError("model: unknown kind '" + kind + "'");
  c.d = j.at("d").get<int>();
  c.hidden = c.kind == Kind::mlp1 ? j.at("hidden").get<int>() : 0;
  c.params = j.at("params").get<std::vector<double>>();
  c.seed = j.value("seed", 0ULL);
  c.trained_epochs = j.value("trainedEpochs", 0);

  std::size_t expected = c.kind == Kind::logreg
                             ? static_cast<std::size_t>(c.d) + 1
                             : static_cast<std::size_t>(c.hidden) * c.d + 2 * c.hidden + 1;
  if (c.params.size() != expected)
    throw ConfigError(strfmt("model: %zu parameters, expected %zu", c.params.size(), expected));
  return c;
}

double distill_loss(const Classifier& c, const Dataset& ds, const MarginalTable& q,
                    double l2) {
  if (q.q.size() != ds.instances.size()) throw Error("distill: q does not cover the dataset");
  double total = 0.0;
  for (int i = 0; i < ds.size(); ++i) {
    double s = c.score(ds.instances[i].features);
    total += -(q.q[i][1] * log_sigmoid(s) + q.q[i][0] * log_sigmoid(-s));
  }
  double reg = 0.0;
  for (double p : c.params) reg += p * p;
  return (ds.size() > 0 ? total / ds.size() : 0.0) + l2 * reg;
}

std::vector<double> gradient(const Classifier& c, const Dataset& ds,
                             const std::vector<int>& batch, const MarginalTable& q,
                             double l2) {
  std::vector<double> g(c.params.size(), 0.0);
  for (int idx : batch) {
    const std::vector<double>& x = ds.instances[idx].features;
    if (c.kind == Classifier::Kind::logreg) {
      double delta = sigmoid(c.score(x)) - q.q[idx][1];
      for (int i = 0; i < c.d; ++i) g[i] += delta * x[i];
      g[c.d] += delta;
    } else {
      MlpView m = mlp_view(c);
      std::vector<double> h(m.h);
      double s = m.b2;
      for (int j = 0; j < m.h; ++j) {
        double z = m.b1[j];
        const double* row = m.w1 + static_cast<std::size_t>(j) * m.d;
        for (int i = 0; i < m.d; ++i) z += row[i] * x[i];
        h[j] = std::tanh(z);
        s += m.w2[j] * h[j];
      }
      double delta = sigmoid(s) - q.q[idx][1];
      double* gw1 = g.data();
      double* gb1 = g.data() + static_cast<std::size_t>(m.h) * m.d;
      double* gw2 = gb1 + m.h;
      double* gb2 = gw2 + m.h;
      for (int j = 0; j < m.h; ++j) {
        gw2[j] += delta * h[j];
        double dz = delta * m.w2[j] * (1.0 - h[j] * h[j]);
        gb1[j] += dz;
        double* row = gw1 + static_cast<std::size_t>(j) * m.d;
        for (int i = 0; i < m.d; ++i) row[i] += dz * x[i];
      }
      *gb2 += delta;
    }
  }
  double inv = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] * inv + 2.0 * l2 * c.params[i];
  return g;
}

TrainResult train_distill(Classifier c, const Dataset& ds, const MarginalTable& q,
                          const TrainOptions& opts) {
  check_options(opts);
  if (q.q.size() != ds.instances.size()) throw Error("distill: q does not cover the dataset");

  Rng rng(derive_seed(opts.seed, seed_stream::kTrainShuffle));
  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < ds.size(); start += opts.batch_size) {
      int end = std::min(start + opts.batch_size, ds.size());
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      std::vector<double> g = gradient(c, ds, batch, q, opts.l2);
      for (std::size_t i = 0; i < c.params.size(); ++i)
        c.params[i] -= opts.learning_rate * g[i];
    }
    ++c.trained_epochs;
  }
  double loss = distill_loss(c, ds, q, opts.l2);
  return {std::move(c), loss};
}

int decide(double p1, double threshold) { return p1 >= threshold ? 1 : 0; }

PredictorLogProbs predict_log_probs(const Classifier& c, const Dataset& ds) {
  PredictorLogProbs out;
  out.reserve(ds.instances.size());
  for (const Instance& inst : ds.instances) {
    double s = c.score(inst.features);
    out.push_back({log_sigmoid(-s), log_sigmoid(s)});
  }
  return out;
}

}  // namespace dpl

#include <cmath>

#include "doctest.h"
#include "dpl/driver.hpp"
#include "dpl/error.hpp"
#include "dpl/learning.hpp"
#include "dpl/synth.hpp"
#include "testutil.hpp"

using namespace dpl;
using namespace dpltest;

namespace {

// Dataset with one boolean field "f" per instance; d = 1 feature (constant)
// so classifiers have something to read.
Dataset flagged_dataset(const std::vector<bool>& flags) {
  Dataset ds;
  ds.schema.feature_dim = 1;
  ds.schema.fields["f"] = FieldType::boolean;
  ds.schema.fields["g"] = FieldType::key;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    Instance inst;
    inst.id = "i" + std::to_string(i);
    inst.features = {1.0};
    if (flags[i]) inst.fields["f"] = true;
    ds.instances.push_back(std::move(inst));
  }
  ds.reindex();
  return ds;
}

Program make_program(const Dataset& ds, const std::string& text) {
  return validate_program(parse_program_text(text), ds.schema);
}

MarginalTable fixed_q(const std::vector<double>& q1s) {
  MarginalTable q;
  for (double v : q1s) q.q.push_back({1.0 - v, v});
  return q;
}

}  // namespace

TEST_CASE("e-step with no rules returns classifier predictions") {
  Dataset ds = flagged_dataset({false, false, false});
  Program p = make_program(ds, "");
  Classifier c = Classifier::logreg(1);
  c.params = {1.1, -0.4};
  MarginalTable q = e_step(p, ds, c, {});
  for (int i = 0; i < ds.size(); ++i)
    CHECK(q.q1(i) == doctest::Approx(c.predict({1.0})[1]).epsilon(1e-9));
}

TEST_CASE("e-step: uniform classifier plus one vote") {
  Dataset ds = flagged_dataset({true});
  Program p = make_program(ds, "2.197224577336219: vote(+f)\n");  // ln 9
  MarginalTable q = e_step(p, ds, Classifier::logreg(1), {});
  CHECK(q.q1(0) == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("e-step: prior and vote combine by log-odds addition") {
  Dataset ds = flagged_dataset({true});
  Program p = make_program(ds, "2.197224577336219: vote(+f)\n");
  Classifier c = Classifier::logreg(1);
  c.params = {std::log(4.0), 0.0};  // predicts 0.8 on x = [1]
  MarginalTable q = e_step(p, ds, c, {});
  CHECK(q.q1(0) == doctest::Approx(36.0 / 37.0).epsilon(1e-9));

  FactorGraph g = ground(p, ds, predict_log_probs(c, ds));
  CHECK(brute_force_marginals(g).q1(0) == doctest::Approx(36.0 / 37.0).epsilon(1e-12));
}

TEST_CASE("weight gradient is zero at the model's own marginals") {
  Dataset ds = flagged_dataset({true, true, false, true});
  ds.instances[1].fields["g"] = std::string("a");
  ds.instances[2].fields["g"] = std::string("a");
  ds.instances[3].fields["g"] = std::string("a");
  ds.reindex();
  Program p = make_program(ds, "learn(0.7): vote(+f)\nlearn(0.4): at_least_one(g)\n");

  MarginalTable q = loopy_bp(ground(p, ds));
  WeightObjective obj = weight_objective(p, ds, q, {});
  for (double gr : obj.gradient) CHECK(std::abs(gr) <= 1e-6);

  EmOptions opts;
  opts.weight_steps = 5;
  Classifier c = Classifier::logreg(1);
  MStepResult res = m_step_weights(p, ds, q, c, opts);
  CHECK(std::abs(p.rules[0].weight.current - 0.7) <= 1e-5);
  CHECK(std::abs(p.rules[1].weight.current - 0.4) <= 1e-5);
  CHECK(res.steps_accepted + res.steps_skipped == 5);
}

TEST_CASE("single learnable vote recovers the posterior log-odds") {
  Dataset ds = flagged_dataset({true});
  Program p = make_program(ds, "learn(0.0): vote(+f)\n");
  MarginalTable q = fixed_q({0.9});

  EmOptions opts;
  opts.weight_steps = 50;
  opts.weight_learning_rate = 2.0;
  Classifier c = Classifier::logreg(1);
  MStepResult res = m_step_weights(p, ds, q, c, opts);

  CHECK(std::abs(p.rules[0].weight.current - std::log(9.0)) <= 0.05);
  for (std::size_t i = 1; i < res.objectives.size(); ++i)
    CHECK(res.objectives[i] >= res.objectives[i - 1] - 1e-9);
}

TEST_CASE("weight gradient matches finite differences of the exact objective") {
  Rng rng(55);
  for (int trial = 0; trial < 6; ++trial) {
    // Random 6-variable tree: vote rule on a random flag subset, a group
    // rule, plus a fixed nuisance vote.
    std::vector<bool> flags;
    for (int i = 0; i < 6; ++i) flags.push_back(rng.bernoulli(0.6));
    Dataset ds = flagged_dataset(flags);
    ds.instances[1].fields["g"] = std::string("a");
    ds.instances[3].fields["g"] = std::string("a");
    ds.instances[4].fields["g"] = std::string("a");
    ds.reindex();
    Program p = make_program(ds,
                             "learn(0.0): vote(+f)\n"
                             "learn(0.0): at_least_one(g)\n"
                             "0.8: vote(-f)\n");
    p.rules[0].weight.current = rng.uniform(-1.5, 1.5);
    p.rules[1].weight.current = rng.uniform(-1.5, 1.5);

    // Alternate the q source: handcrafted marginals (product-form
    // expectations) and a BP posterior with retained beliefs.
    MarginalTable q;
    if (trial % 2 == 0) {
      std::vector<double> q1s;
      for (int i = 0; i < 6; ++i) q1s.push_back(rng.uniform(0.05, 0.95));
      q = fixed_q(q1s);
    } else {
      Program other = make_program(ds, "1.3: vote(+f)\n-0.4: vote(-f)\nhard: at_least_one(g)\n");
      q = loopy_bp(ground(other, ds));
    }

    std::vector<double> eq = expected_counts_under_q(p, ds, q);
    WeightObjective obj = weight_objective(p, ds, eq, {});

    // Independent oracle: J(w) = sum_r w_r Eq_r - exact log Z by
    // enumeration, with the q-side expectations held fixed.
    auto exact_j = [&](double w0, double w1) {
      Program probe = p;
      probe.rules[0].weight.current = w0;
      probe.rules[1].weight.current = w1;
      return w0 * eq[0] + w1 * eq[1] - brute_force_log_z(ground(probe, ds));
    };
    double eps = 1e-5;
    double w0 = p.rules[0].weight.current, w1 = p.rules[1].weight.current;
    std::vector<double> fd = {
        (exact_j(w0 + eps, w1) - exact_j(w0 - eps, w1)) / (2 * eps),
        (exact_j(w0, w1 + eps) - exact_j(w0, w1 - eps)) / (2 * eps)};
    CHECK(rel_error(obj.gradient, fd) <= 1e-4);
  }
}

TEST_CASE("fit with only hard rules still trains the classifier") {
  Dataset ds = flagged_dataset({true, true, false, false});
  ds.instances[0].features = {2.0};
  ds.instances[1].features = {1.5};
  ds.instances[2].features = {-2.0};
  ds.instances[3].features = {-1.7};
  Program p = make_program(ds, "hard: vote(+f)\n");

  EmOptions opts;
  opts.em_iterations = 2;
  FitResult r = fit(p, ds, opts, 1);
  REQUIRE(r.trace.iterations.size() == 2);
  CHECK(r.trace.iterations[0].weight_values.empty());
  CHECK_FALSE(r.trace.iterations[0].surrogate_objective.has_value());
  // Hard-voted instances have q1 = 1; the classifier should have learned
  // the feature direction.
  CHECK(r.classifier.predict({2.0})[1] > r.classifier.predict({-2.0})[1]);
}

TEST_CASE("fit is deterministic per seed and varies across seeds") {
  SynthSpec spec;
  spec.n = 200;
  spec.d = 3;
  spec.kb_coverage = 0.6;
  spec.kb_noise = 0.1;
  spec.seed = 4;
  Dataset ds = generate(spec);
  Program p = validate_program(
      parse_program_text("learn(1.0): vote(+kb_match)\nlearn(0.5): vote(-kb_miss)\n"),
      ds.schema);

  EmOptions opts;
  opts.em_iterations = 2;
  opts.weight_steps = 3;
  FitResult a = fit(p, ds, opts, 42);
  FitResult b = fit(p, ds, opts, 42);
  CHECK(a.classifier.params == b.classifier.params);
  CHECK(canonical_dump(a.trace.to_json()) == canonical_dump(b.trace.to_json()));

  FitResult c = fit(p, ds, opts, 43);
  CHECK(a.classifier.params != c.classifier.params);
}

TEST_CASE("empty program: fit stays at the uniform fixed point") {
  Rng rng(77);
  std::vector<bool> flags(50, false);
  Dataset ds = flagged_dataset(flags);
  for (auto& inst : ds.instances) inst.features = {rng.gaussian()};
  Program p = make_program(ds, "");

  EmOptions opts;
  opts.em_iterations = 2;
  FitResult r = fit(p, ds, opts, 9);
  for (const auto& inst : ds.instances)
    CHECK(std::abs(r.classifier.predict(inst.features)[1] - 0.5) <= 0.02);
}

TEST_CASE("self-distillation is a fixed point for a warm classifier") {
  Rng rng(78);
  std::vector<std::vector<double>> xs;
  Dataset ds;
  ds.schema.feature_dim = 2;
  for (int i = 0; i < 200; ++i) {
    Instance inst;
    inst.id = "i" + std::to_string(i);
    inst.features = {rng.gaussian(), rng.gaussian()};
    ds.instances.push_back(std::move(inst));
  }
  Classifier teacher = Classifier::logreg(2);
  teacher.params = {1.3, -0.8, 0.2};

  MarginalTable own;
  for (const auto& inst : ds.instances) {
    double p1 = teacher.predict(inst.features)[1];
    own.q.push_back({1.0 - p1, p1});
  }
  TrainOptions topts;
  topts.seed = 5;
  topts.l2 = 0.0;
  TrainResult r = train_distill(teacher, ds, own, topts);
  for (const auto& inst : ds.instances)
    CHECK(std::abs(r.classifier.predict(inst.features)[1] -
                   teacher.predict(inst.features)[1]) <= 0.02);
}

TEST_CASE("sound at-least-one groups never hurt on average") {
  // Mean test F1 with the joint-inference rule >= without, over 10 seeds.
  double f1_with = 0.0, f1_without = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.n = 900;
    spec.d = 6;
    spec.kb_coverage = 0.4;
    spec.kb_noise = 0.1;
    spec.group_rate = 0.35;
    spec.mean_group_size = 3.0;
    spec.seed = 1000 + seed;
    Dataset full = generate(spec);
    auto [train, test] = split_dataset(full, 0.7, seed);

    EmOptions opts;
    opts.em_iterations = 2;
    opts.weight_steps = 0;
    std::string base =
        "2.0: vote(+kb_match)\n"
        "1.0: vote(-kb_miss)\n";
    Program without = validate_program(parse_program_text(base), train.schema);
    Program with = validate_program(
        parse_program_text(base + "hard: at_least_one(group_id)\n"), train.schema);

    auto gold = gold_labels(test);
    FitResult rw = fit(with, train, opts, seed);
    FitResult ro = fit(without, train, opts, seed);
    f1_with += evaluate(predict_labels(rw.classifier, test, 0.5), gold).f1;
    f1_without += evaluate(predict_labels(ro.classifier, test, 0.5), gold).f1;
  }
  CHECK(f1_with / 10.0 >= f1_without / 10.0);
}

TEST_CASE("trace serialization shape") {
  Dataset ds = flagged_dataset({true, false});
  Program p = make_program(ds, "learn(0.5): vote(+f)\n");
  EmOptions opts;
  opts.em_iterations = 3;
  opts.weight_steps = 2;
  FitResult r = fit(p, ds, opts, 7);
  json j = r.trace.to_json();
  REQUIRE(j["iterations"].size() == 3);
  for (const auto& rec : j["iterations"]) {
    CHECK(rec.contains("qSummary"));
    CHECK(rec.contains("distillLoss"));
    CHECK(rec.contains("weightValues"));
    CHECK(rec.contains("surrogateObjective"));
    CHECK(rec.contains("bpConverged"));
  }
  CHECK(j["iterations"][0]["weightValues"].contains("r1"));
}

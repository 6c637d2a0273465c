#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpl/classifier.hpp"
#include "dpl/data.hpp"
#include "dpl/inference.hpp"
#include "dpl/logic.hpp"

namespace dpl {

struct ClassifierSpec {
  Classifier::Kind kind = Classifier::Kind::logreg;
  int hidden = 16;
};

struct EmOptions {
  int em_iterations = 3;
  BpOptions bp;
  TrainOptions train;
  int weight_steps = 10;
  double weight_learning_rate = 0.1;
  bool line_search = true;
  ClassifierSpec classifier;
};

struct EmIterationRecord {
  int iteration = 0;
  double q_mean = 0.0, q_min = 0.0, q_max = 0.0;  // summary of q1
  double distill_loss = 0.0;
  std::map<std::string, double> weight_values;  // learnable rules only
  std::optional<double> surrogate_objective;
  bool bp_converged = false;
};

struct EmTrace {
  std::vector<EmIterationRecord> iterations;
  json to_json() const;
};

// E-step: posterior over latent labels from the joint graph of supervision
// factors and per-instance predictor priors.
MarginalTable e_step(const Program& program, const Dataset& ds, const Classifier& c,
                     const BpOptions& bp);

// Expected satisfied-grounding count per learnable rule under the posterior
// q, summed over groundings (tied weights). When q retains the messages of
// the BP run that produced it and that run's graph extends the supervision
// grounding (as E-step posteriors do), expectations come from q's factor
// beliefs; otherwise they fall back to products of per-variable marginals.
std::vector<double> expected_counts_under_q(const Program& program, const Dataset& ds,
                                            const MarginalTable& q);

struct WeightObjective {
  double objective = 0.0;         // sum_r w_r E_q[f_r] - log Z (Bethe; exact on trees)
  std::vector<double> gradient;   // d objective / d w_r per learnable rule
};

// Objective and gradient of the formula-weight refinement problem at the
// program's current weights. The partition function runs over the
// supervision graph only; the classifier's influence enters through q. The
// expectations `eq` are held fixed across weight probes.
WeightObjective weight_objective(const Program& program, const Dataset& ds,
                                 const std::vector<double>& eq, const BpOptions& bp);
// Convenience: eq computed from q at the current weights.
WeightObjective weight_objective(const Program& program, const Dataset& ds,
                                 const MarginalTable& q, const BpOptions& bp);

struct MStepResult {
  std::vector<double> objectives;  // accepted trajectory, starting value first
  std::map<std::string, double> weights;
  int steps_accepted = 0;
  int steps_skipped = 0;
};

// Gradient ascent on the formula weights with optional backtracking line
// search (halve up to 10 times, then skip). Mutates the program's learnable
// current values; no-op when there are none.
MStepResult m_step_weights(Program& program, const Dataset& ds, const MarginalTable& q,
                           const Classifier& c, const EmOptions& opts);

struct FitResult {
  Classifier classifier;
  Program program;  // refined learnable weights
  EmTrace trace;
};

// Variational EM: alternate posterior inference, classifier distillation on
// the soft labels, and formula-weight refinement, for a fixed number of
// iterations. Deterministic for a fixed seed.
FitResult fit(const Program& program, const Dataset& ds, const EmOptions& opts,
              std::uint64_t seed);

}  // namespace dpl

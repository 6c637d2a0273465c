#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpl/learning.hpp"
#include "dpl/metrics.hpp"

namespace dpl {

struct RunConfig {
  std::string program_path;
  std::string data_path;
  std::optional<std::string> test_path;
  // When no test file is given, > 0 holds out this fraction of --data as a
  // test split (group-respecting, seeded from the run seed).
  double split_fraction = 0.0;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  double threshold = 0.5;
  EmOptions em;
};

struct TrainOutput {
  FitResult result;
  std::optional<EvalReport> report;
};

// Runs learning on the configured program/data and writes model.json,
// trace.json and (when a test set exists) report.json under output_dir.
TrainOutput run_train(const RunConfig& config);

struct AblationRow {
  std::string subset;
  EvalReport report;
};

// Cumulative rule-tag ablation DS, DS+DP, DS+DP+JI with identical seeds;
// writes ablation.json under output_dir.
std::vector<AblationRow> run_ablate(const RunConfig& config);

// In-memory ablation used by both run_ablate and the acceptance harness.
std::vector<AblationRow> ablate(const Program& program, const Dataset& train,
                                const Dataset& test, const EmOptions& em,
                                std::uint64_t seed, double threshold);

// Generates a dataset file from a synthesis spec, plus a <out>.gold sidecar.
void run_synth(const std::string& spec_path, const std::string& out_path);

// Writes per-instance {"id", "p1", "label"} lines for the given model.
void run_infer(const std::string& model_path, const std::string& data_path,
               double threshold, const std::string& out_path);

// Loads and validates a rule program against a dataset schema.
Program load_program(const std::string& path, const Schema& schema);

// Classifier predictions -> hard labels at the threshold.
std::vector<int> predict_labels(const Classifier& c, const Dataset& ds, double threshold);

// Gold labels of a dataset; errors if any instance lacks one.
std::vector<int> gold_labels(const Dataset& ds);

}  // namespace dpl

#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "dpl/driver.hpp"
#include "dpl/error.hpp"

namespace {

struct CliArgs {
  dpl::RunConfig config;
  std::string classifier = "logreg";
  int hidden = 16;
  std::string test_path;
  std::string spec_path, out_path, model_path, data_path;
};

void add_run_options(CLI::App* cmd, CliArgs& a) {
  cmd->add_option("--program", a.config.program_path, "rule program file")->required();
  cmd->add_option("--data", a.config.data_path, "training dataset (JSONL)")->required();
  cmd->add_option("--test", a.test_path, "test dataset with gold labels");
  cmd->add_option("--split", a.config.split_fraction,
                  "hold out this fraction of --data as the test set");
  cmd->add_option("--out", a.config.output_dir, "output directory")->required();
  cmd->add_option("--seed", a.config.seed, "run seed (all randomness derives from it)")
      ->required();
  cmd->add_option("--em-iters", a.config.em.em_iterations, "EM iterations (default 3)");
  cmd->add_option("--epochs", a.config.em.train.epochs, "training epochs per M-step (default 10)");
  cmd->add_option("--lr", a.config.em.train.learning_rate, "classifier learning rate");
  cmd->add_option("--bp-iters", a.config.em.bp.max_iterations, "BP iteration cap (default 50)");
  cmd->add_option("--bp-tol", a.config.em.bp.tolerance, "BP residual tolerance (default 1e-6)");
  cmd->add_option("--damping", a.config.em.bp.damping, "BP damping in [0,1) (default 0.3)");
  cmd->add_option("--weight-steps", a.config.em.weight_steps,
                  "weight refinement steps per M-step (default 10)");
  cmd->add_option("--weight-lr", a.config.em.weight_learning_rate, "weight step size");
  cmd->add_option("--threshold", a.config.threshold, "decision threshold (default 0.5)");
  cmd->add_option("--classifier", a.classifier, "classifier kind: logreg or mlp1")
      ->check(CLI::IsMember({"logreg", "mlp1"}));
  cmd->add_option("--hidden", a.hidden, "mlp1 hidden units (default 16)");
}

void finalize_config(CliArgs& a) {
  if (!a.test_path.empty()) a.config.test_path = a.test_path;
  a.config.em.classifier.kind = a.classifier == "mlp1" ? dpl::Classifier::Kind::mlp1
                                                       : dpl::Classifier::Kind::logreg;
  a.config.em.classifier.hidden = a.hidden;
}

void print_ablation(const std::vector<dpl::AblationRow>& rows) {
  std::printf("%-10s %8s %8s %8s %8s\n", "subset", "acc", "f1", "prec", "rec");
  for (const auto& row : rows)
    std::printf("%-10s %8.4f %8.4f %8.4f %8.4f\n", row.subset.c_str(), row.report.accuracy,
                row.report.f1, row.report.precision, row.report.recall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep probabilistic logic trainer"};
  app.require_subcommand(1);
  CliArgs args;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic weak-supervision dataset");
  synth->add_option("--spec", args.spec_path, "synthesis spec (JSON)")->required();
  synth->add_option("--out", args.out_path, "output dataset path")->required();

  CLI::App* train = app.add_subcommand("train", "run variational EM and write the model");
  add_run_options(train, args);

  CLI::App* ablate = app.add_subcommand("ablate", "cumulative DS / DS+DP / DS+DP+JI ablation");
  add_run_options(ablate, args);

  CLI::App* infer = app.add_subcommand("infer", "score a dataset with a trained model");
  infer->add_option("--model", args.model_path, "model JSON")->required();
  infer->add_option("--data", args.data_path, "dataset to score")->required();
  infer->add_option("--out", args.out_path, "predictions file")->required();
  double threshold = 0.5;
  infer->add_option("--threshold", threshold, "decision threshold (default 0.5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      dpl::run_synth(args.spec_path, args.out_path);
    } else if (train->parsed()) {
      finalize_config(args);
      dpl::run_train(args.config);
    } else if (ablate->parsed()) {
      finalize_config(args);
      print_ablation(dpl::run_ablate(args.config));
    } else if (infer->parsed()) {
      dpl::run_infer(args.model_path, args.data_path, threshold, args.out_path);
    }
  } catch (const dpl::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

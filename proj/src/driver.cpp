#include "dpl/driver.hpp"

#include <filesystem>

#include "dpl/error.hpp"
#include "dpl/log.hpp"
#include "dpl/synth.hpp"

namespace dpl {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

struct TrainTestPair {
  Dataset train;
  Dataset test;
  bool has_test = false;
};

TrainTestPair load_train_test(const RunConfig& config) {
  TrainTestPair out;
  Dataset full = load_dataset(config.data_path);
  if (config.test_path) {
    out.train = std::move(full);
    out.test = load_dataset(*config.test_path);
    out.has_test = true;
  } else if (config.split_fraction > 0.0) {
    auto [train, test] = split_dataset(full, 1.0 - config.split_fraction, config.seed);
    out.train = std::move(train);
    out.test = std::move(test);
    out.has_test = true;
  } else {
    out.train = std::move(full);
  }
  return out;
}

}  // namespace

Program load_program(const std::string& path, const Schema& schema) {
  if (!fs::exists(path)) throw ConfigError("program not found: " + path);
  std::string text = read_text_file(path);
  try {
    return validate_program(parse_program_text(text), schema);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<int> predict_labels(const Classifier& c, const Dataset& ds, double threshold) {
  std::vector<int> labels;
  labels.reserve(ds.instances.size());
  for (const Instance& inst : ds.instances)
    labels.push_back(decide(c.predict(inst.features)[1], threshold));
  return labels;
}

std::vector<int> gold_labels(const Dataset& ds) {
  std::vector<int> gold;
  gold.reserve(ds.instances.size());
  for (const Instance& inst : ds.instances) {
    if (!inst.gold) throw ConfigError("instance " + inst.id + " has no gold label");
    gold.push_back(*inst.gold);
  }
  return gold;
}

TrainOutput run_train(const RunConfig& config) {
  TrainTestPair data = load_train_test(config);
  Program program = load_program(config.program_path, data.train.schema);

  log_info(strfmt("train: %d instances, %zu rules, seed %llu", data.train.size(),
                  program.rules.size(),
                  static_cast<unsigned long long>(config.seed)));

  TrainOutput out;
  out.result = fit(program, data.train, config.em, config.seed);

  ensure_dir(config.output_dir);
  write_text_file(join(config.output_dir, "model.json"),
                  canonical_dump(out.result.classifier.to_json(), 2) + "\n");
  write_text_file(join(config.output_dir, "trace.json"),
                  canonical_dump(out.result.trace.to_json(), 2) + "\n");

  if (data.has_test) {
    out.report = evaluate(predict_labels(out.result.classifier, data.test, config.threshold),
                          gold_labels(data.test));
    write_text_file(join(config.output_dir, "report.json"),
                    canonical_dump(out.report->to_json(), 2) + "\n");
  }
  return out;
}

std::vector<AblationRow> ablate(const Program& program, const Dataset& train,
                                const Dataset& test, const EmOptions& em,
                                std::uint64_t seed, double threshold) {
  const std::vector<std::vector<std::string>> subsets = {
      {"DS"}, {"DS", "DP"}, {"DS", "DP", "JI"}};
  const std::vector<std::string> labels = {"DS", "DS+DP", "DS+DP+JI"};

  std::vector<AblationRow> rows;
  std::vector<int> gold = gold_labels(test);
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    Program subset = program.restricted_to_tags(subsets[s]);
    FitResult result = fit(subset, train, em, seed);
    rows.push_back({labels[s], evaluate(predict_labels(result.classifier, test, threshold),
                                        gold)});
    log_info(strfmt("ablate %s: f1 %.4f", labels[s].c_str(), rows.back().report.f1));
  }
  return rows;
}

std::vector<AblationRow> run_ablate(const RunConfig& config) {
  TrainTestPair data = load_train_test(config);
  if (!data.has_test)
    throw ConfigError("ablate needs a test set: pass --test or --split");
  Program program = load_program(config.program_path, data.train.schema);

  auto rows = ablate(program, data.train, data.test, config.em, config.seed,
                     config.threshold);

  json out = json::array();
  for (const auto& row : rows) {
    json r = row.report.to_json();
    r["subset"] = row.subset;
    out.push_back(std::move(r));
  }
  ensure_dir(config.output_dir);
  write_text_file(join(config.output_dir, "ablation.json"),
                  canonical_dump(json{{"rows", out}}, 2) + "\n");
  return rows;
}

void run_synth(const std::string& spec_path, const std::string& out_path) {
  SynthSpec spec = SynthSpec::from_json(read_json_file(spec_path));
  Dataset ds = generate(spec);
  write_text_file(out_path, serialize_dataset(ds, /*include_gold=*/true));

  std::string gold;
  for (const Instance& inst : ds.instances)
    gold += canonical_dump(json{{"id", inst.id}, {"gold", inst.gold ? *inst.gold : 0}}) + "\n";
  write_text_file(out_path + ".gold", gold);
  log_info(strfmt("synth: wrote %d instances to %s", ds.size(), out_path.c_str()));
}

void run_infer(const std::string& model_path, const std::string& data_path,
               double threshold, const std::string& out_path) {
  Classifier model = Classifier::from_json(read_json_file(model_path));
  Dataset ds = load_dataset(data_path);
  if (ds.schema.feature_dim != model.d)
    throw ConfigError(strfmt("data dimension %d does not match model dimension %d",
                             ds.schema.feature_dim, model.d));

  std::string out;
  for (const Instance& inst : ds.instances) {
    double p1 = model.predict(inst.features)[1];
    out += canonical_dump(
               json{{"id", inst.id}, {"p1", p1}, {"label", decide(p1, threshold)}}) +
           "\n";
  }
  write_text_file(out_path, out);
}

}  // namespace dpl

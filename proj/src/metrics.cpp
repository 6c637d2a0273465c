#include "dpl/metrics.hpp"

#include <numeric>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

json EvalReport::to_json() const {
  json j{{"accuracy", accuracy},
         {"precision", precision},
         {"recall", recall},
         {"f1", f1},
         {"counts", {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}}};
  if (sample_precision) j["samplePrecision"] = *sample_precision;
  if (absolute_recall) j["absoluteRecall"] = *absolute_recall;
  return j;
}

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& gold) {
  if (predictions.size() != gold.size())
    throw Error(strfmt("evaluate: %zu predictions against %zu gold labels", predictions.size(),
                       gold.size()));
  EvalReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == 1)
      gold[i] == 1 ? ++r.tp : ++r.fp;
    else
      gold[i] == 1 ? ++r.fn : ++r.tn;
  }
  int n = r.tp + r.fp + r.tn + r.fn;
  r.accuracy = n > 0 ? static_cast<double>(r.tp + r.tn) / n : 0.0;
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / (r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

SamplePrecisionResult sample_precision(const std::vector<int>& positives,
                                       const std::function<bool(int)>& is_correct,
                                       int sample_size, std::uint64_t seed) {
  if (positives.empty()) throw Error("sample precision: no positive outputs to sample");
  if (sample_size <= 0 || sample_size > static_cast<int>(positives.size()))
    throw Error(strfmt("sample precision: sample size %d out of range (1..%zu)", sample_size,
                       positives.size()));

  // Partial Fisher-Yates: the first sample_size slots form a uniform sample
  // without replacement.
  std::vector<int> pool = positives;
  Rng rng(derive_seed(seed, seed_stream::kSamplePrecision));
  for (int i = 0; i < sample_size; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }

  SamplePrecisionResult out;
  out.sampled.assign(pool.begin(), pool.begin() + sample_size);
  int correct = 0;
  for (int idx : out.sampled)
    if (is_correct(idx)) ++correct;
  out.sample_precision = static_cast<double>(correct) / sample_size;
  out.absolute_recall = out.sample_precision * static_cast<double>(positives.size());
  return out;
}

}  // namespace dpl

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dpl/json_io.hpp"

namespace dpl {

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> sample_precision;
  std::optional<double> absolute_recall;

  json to_json() const;
};

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& gold);

struct SamplePrecisionResult {
  double sample_precision = 0.0;
  double absolute_recall = 0.0;  // sample_precision * |positives|
  std::vector<int> sampled;      // the audited subset, for reporting
};

// Estimates precision from a seeded uniform sample (without replacement) of
// the system's positive outputs, judged by `is_correct`; absolute recall is
// that estimate scaled by the number of positives.
SamplePrecisionResult sample_precision(const std::vector<int>& positives,
                                       const std::function<bool(int)>& is_correct,
                                       int sample_size, std::uint64_t seed);

}  // namespace dpl

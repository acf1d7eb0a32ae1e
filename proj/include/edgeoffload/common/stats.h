#pragma once

#include <cstddef>
#include <vector>

namespace edgeoffload {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance (n - 1); 0 for fewer than two samples
  double p95 = 0.0;       // nearest rank
  double min = 0.0;
  double max = 0.0;
};

SampleSummary summarize(std::vector<double> samples);

}  // namespace edgeoffload

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imgbk/graph.hpp"

namespace imgbk {

// Stochastic block model with per-class within-class edge probability and a
// single cross-class probability. Features are Gaussian noise around
// orthogonal per-class means.
struct SbmSpec {
  std::vector<std::int64_t> class_sizes;
  std::vector<double> p_in;   // one per class
  double p_out = 0.0;
  std::int64_t feature_dim = 16;
  double class_mean_separation = 1.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  std::string name = "sbm";

  void validate() const;
};

// Seeded generation; bundle includes a 60/20/20 random split.
DatasetBundle sbm_generate(const SbmSpec& spec);

// E[same-label edges] / E[edges].
double expected_homophily(const SbmSpec& spec);

}  // namespace imgbk

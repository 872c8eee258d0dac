#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "elimpcl/curriculum.hpp"
#include "elimpcl/data.hpp"
#include "elimpcl/model.hpp"

namespace elimpcl {

/// What the adaptation loop exposes after each epoch. Contains no ground
/// truth; label-dependent metrics are supplied by an external probe.
struct EpochView {
  int epoch = 0;
  double beta_n = 0.0;
  const PseudoLabelSet& pseudo;   // labels generated by theta_{n-1}
  const SubsetSplit& split;
  const ModelParams& student;     // theta_c after this epoch's training
  const ModelParams& source_prev; // theta_{n-1}
  const ModelParams& fused;       // theta_n
};

/// Ground-truth-dependent readings for one epoch; NaN where unavailable.
struct ProbeResult {
  double target_accuracy;
  double noise_rate;
  double tt_noise_rate;
  std::vector<double> class_noise_rate;  // indexed by true class

  ProbeResult();
};

using EpochProbe = std::function<ProbeResult(const EpochView&)>;

/// Standard probe over the hidden target labels: accuracy of theta_n,
/// pseudo-label noise rate overall / within the trustworthy subset / per
/// true class. This is the evaluation side of the label seam.
EpochProbe make_ground_truth_probe(const Dataset& labeled_target);

struct MetricsRow {
  int epoch = 0;
  double r = 0.0;
  double target_accuracy;
  double noise_rate;
  double tt_noise_rate;
  std::vector<double> class_noise_rate;
  double mean_l_std;
  double mean_l_mix;
  double lambda_mean_intra;
  double lambda_mean_inter;
  int degenerate_prototypes = 0;
  bool empty_tt = false;

  MetricsRow();
};

struct MetricsLog {
  std::uint64_t seed = 0;
  std::string prng;  // generator identifier, for auditability
  int class_count = 0;
  std::vector<MetricsRow> rows;
};

/// CSV with `# prng:` / `# seed:` header comments and one row per epoch.
void write_metrics_csv(const MetricsLog& log, const std::string& path);

}  // namespace elimpcl

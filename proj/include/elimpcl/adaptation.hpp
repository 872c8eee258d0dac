#pragma once

#include <cstdint>

#include "elimpcl/curriculum.hpp"
#include "elimpcl/data.hpp"
#include "elimpcl/metrics.hpp"
#include "elimpcl/mixup.hpp"
#include "elimpcl/model.hpp"

namespace elimpcl {

struct AdaptationConfig {
  int n_epochs = 15;   // N
  int k_sub = 5;       // student sub-epochs per epoch
  int k_mix = 5;       // mixup sub-epochs per epoch
  double gamma = 0.3;  // cross-entropy weight in the student loss
  double mu = 1.0;     // mixup weight in the total loss
  double tau_norm = 0.5;
  double alpha_intra = 1.0;
  double alpha_inter = 2.0;
  double beta0 = 0.3;
  double betaN = 0.8;
  double lr = 5e-3;
  int batch_size = 64;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  // Ablation axes.
  bool enable_filtering = true;
  bool enable_mixup = true;
  bool enable_colearning = true;

  // With co-learning on, take the student classifier from theta_{n-1}
  // instead of the original source classifier.
  bool student_classifier_from_latest = false;
  // Untrustworthy parents contribute refined instead of raw pseudo-labels.
  bool inter_labels_refined = false;
  // Keep theta_{n-1} instead of fusing an untrained student when the
  // trustworthy subset comes up empty.
  bool skip_fusion_on_empty_tt = false;

  void validate() const;
};

struct AdaptationState {
  int epoch = 0;              // last completed epoch
  ModelParams source_original;  // theta_s, the classifier re-init donor
  ModelParams source_params;    // theta_{epoch}
  ModelParams student_params;   // theta_c after the last epoch
  BetaSchedule schedule;
  SubsetSplit split;            // split used in the last epoch
  MetricsLog metrics;
};

struct AdaptationResult {
  ModelParams model;
  MetricsLog log;
};

/// K_sub sub-epochs of mini-batch SGD on the student loss
/// gamma * CE(trustworthy pseudo-labels) + prediction entropy, touching
/// only split.trustworthy rows. Returns the mean batch loss through
/// *mean_loss when given.
ModelParams student_phase(const ModelParams& student, const TargetView& target,
                          const PseudoLabelSet& pl, const SubsetSplit& split,
                          const AdaptationConfig& cfg, MomentumState& momentum,
                          RandomSource& rng, double* mean_loss = nullptr);

struct MixupPhaseStats {
  double mean_l_std;
  double mean_l_mix;
  double lambda_mean_intra;
  double lambda_mean_inter;

  MixupPhaseStats();
};

/// K_mix sub-epochs minimizing L_std(trustworthy batch)
/// + mu * (L_mix(intra) + L_mix(inter)); inter mixing uses
/// alpha_inter * r^2 with this epoch's r. Draws nothing from rng when it
/// has no work to do (mu == 0 skips batch construction entirely).
ModelParams mixup_phase(const ModelParams& student, const TargetView& target,
                        const PseudoLabelSet& pl, const SubsetSplit& split,
                        const AdaptationConfig& cfg, MomentumState& momentum,
                        RandomSource& rng, MixupPhaseStats* stats = nullptr);

/// One Algorithm-1 epoch: re-init the student, split with theta_{n-1},
/// train, mix, fuse with beta_n, append metrics.
void run_epoch(AdaptationState& state, const TargetView& target,
               const ModelParams& universal, const AdaptationConfig& cfg,
               RandomSource& rng, const EpochProbe& probe = {});

/// Full adaptation loop; deterministic given (inputs, cfg.seed).
AdaptationResult adapt(const ModelParams& source, const ModelParams& universal,
                       const TargetView& target, const AdaptationConfig& cfg,
                       const EpochProbe& probe = {});

/// Naive self-training: every epoch pseudo-labels the whole target set
/// with the current model and trains on all of it. No filtering, mixup,
/// fusion or re-initialization.
AdaptationResult adapt_baseline(const ModelParams& source,
                                const TargetView& target,
                                const AdaptationConfig& cfg,
                                const EpochProbe& probe = {});

}  // namespace elimpcl

#include "elimpcl/adaptation.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "elimpcl/errors.hpp"

namespace elimpcl {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx, int start,
                   int len) {
  Matrix out(len, m.cols());
  for (int r = 0; r < len; ++r)
    out.row(r) = m.row(idx[static_cast<std::size_t>(start + r)]);
  return out;
}

Matrix one_hot_targets(const PseudoLabelSet& pl, const std::vector<int>& idx,
                       int start, int len, int k_classes) {
  Matrix t = Matrix::Zero(len, k_classes);
  for (int r = 0; r < len; ++r)
    t(r, pl.hard(idx[static_cast<std::size_t>(start + r)])) = 1.0;
  return t;
}

SubsetSplit all_trustworthy(Eigen::Index n) {
  SubsetSplit split;
  split.trustworthy.resize(static_cast<std::size_t>(n));
  std::iota(split.trustworthy.begin(), split.trustworthy.end(), 0);
  split.r = 1.0;
  return split;
}

void check_adapt_shapes(const ModelParams& source, const TargetView& target) {
  if (target.inputs.rows() == 0) throw UsageError("adapt: empty target set");
  if (source.input_dim() != static_cast<int>(target.inputs.cols()))
    throw UsageError("adapt: model input dim != target input dim");
  if (source.class_count() != target.class_count)
    throw UsageError("adapt: model class count != target class count");
}

MetricsLog fresh_log(const AdaptationConfig& cfg, int class_count) {
  MetricsLog log;
  log.seed = cfg.seed;
  log.prng = RandomSource::kAlgorithmId;
  log.class_count = class_count;
  return log;
}

}  // namespace

MixupPhaseStats::MixupPhaseStats()
    : mean_l_std(kNaN),
      mean_l_mix(kNaN),
      lambda_mean_intra(kNaN),
      lambda_mean_inter(kNaN) {}

void AdaptationConfig::validate() const {
  if (n_epochs < 1) throw UsageError("AdaptationConfig: N must be >= 1");
  if (k_sub < 1) throw UsageError("AdaptationConfig: K_sub must be >= 1");
  if (k_mix < 0) throw UsageError("AdaptationConfig: K_mix must be >= 0");
  if (gamma < 0.0) throw UsageError("AdaptationConfig: gamma must be >= 0");
  if (mu < 0.0) throw UsageError("AdaptationConfig: mu must be >= 0");
  if (!(tau_norm > 0.0 && tau_norm <= 1.0))
    throw UsageError("AdaptationConfig: tau_norm must be in (0, 1]");
  if (!(alpha_intra > 0.0) || !(alpha_inter > 0.0))
    throw UsageError("AdaptationConfig: alphas must be > 0");
  if (!(0.0 <= beta0 && beta0 <= betaN && betaN <= 1.0))
    throw UsageError("AdaptationConfig: need 0 <= beta0 <= betaN <= 1");
  if (!(lr > 0.0)) throw UsageError("AdaptationConfig: lr must be > 0");
  if (batch_size < 1) throw UsageError("AdaptationConfig: batch_size must be >= 1");
  if (weight_decay < 0.0)
    throw UsageError("AdaptationConfig: weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw UsageError("AdaptationConfig: momentum must be in [0, 1)");
}

ModelParams student_phase(const ModelParams& student, const TargetView& target,
                          const PseudoLabelSet& pl, const SubsetSplit& split,
                          const AdaptationConfig& cfg, MomentumState& momentum,
                          RandomSource& rng, double* mean_loss) {
  if (mean_loss) *mean_loss = kNaN;
  if (split.trustworthy.empty()) return student;

  const SgdOptions sgd{cfg.lr, cfg.momentum, cfg.weight_decay};
  const int k_classes = student.class_count();
  ModelParams params = student;
  double loss_sum = 0.0;
  int steps = 0;
  std::vector<int> order = split.trustworthy;
  const int n = static_cast<int>(order.size());
  for (int sub = 0; sub < cfg.k_sub; ++sub) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n - start);
      LossSpec spec{cfg.gamma, 1.0,
                    one_hot_targets(pl, order, start, len, k_classes)};
      const LossResult res = loss_and_gradients(
          params, gather_rows(target.inputs, order, start, len), spec);
      params = sgd_step(params, res.grads, sgd, momentum);
      loss_sum += res.loss;
      ++steps;
    }
  }
  if (mean_loss && steps > 0) *mean_loss = loss_sum / steps;
  return params;
}

ModelParams mixup_phase(const ModelParams& student, const TargetView& target,
                        const PseudoLabelSet& pl, const SubsetSplit& split,
                        const AdaptationConfig& cfg, MomentumState& momentum,
                        RandomSource& rng, MixupPhaseStats* stats) {
  if (stats) *stats = MixupPhaseStats{};
  if (!cfg.enable_mixup || cfg.k_mix == 0 || split.trustworthy.empty())
    return student;

  const SgdOptions sgd{cfg.lr, cfg.momentum, cfg.weight_decay};
  const int k_classes = student.class_count();
  const auto& ut = split.untrustworthy;
  const RestrictedAlpha alpha_inter = restricted_alpha(cfg.alpha_inter, split.r);

  ModelParams params = student;
  std::vector<int> order = split.trustworthy;
  const int n_tt = static_cast<int>(order.size());

  // Untrustworthy stream, re-shuffled whenever exhausted.
  std::vector<int> ut_order = ut;
  std::size_t ut_pos = ut_order.size();
  auto next_ut = [&](int len) {
    std::vector<int> out(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
      if (ut_pos == ut_order.size()) {
        rng.shuffle(ut_order);
        ut_pos = 0;
      }
      out[static_cast<std::size_t>(i)] = ut_order[ut_pos++];
    }
    return out;
  };

  auto ut_label = [&](int idx) {
    if (cfg.inter_labels_refined && pl.refined(idx) >= 0) return pl.refined(idx);
    return pl.hard(idx);
  };

  double l_std_sum = 0.0, l_mix_sum = 0.0;
  double lam_intra_sum = 0.0, lam_inter_sum = 0.0;
  int steps = 0, mix_steps = 0;
  Eigen::Index lam_intra_n = 0, lam_inter_n = 0;

  for (int sub = 0; sub < cfg.k_mix; ++sub) {
    rng.shuffle(order);
    for (int start = 0; start < n_tt; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n_tt - start);
      const Matrix bx = gather_rows(target.inputs, order, start, len);
      LossSpec spec{cfg.gamma, 1.0,
                    one_hot_targets(pl, order, start, len, k_classes)};
      const LossResult res_std = loss_and_gradients(params, bx, spec);
      Gradients total = res_std.grads;
      l_std_sum += res_std.loss;

      double l_mix_step = 0.0;
      bool any_mix = false;
      if (cfg.mu != 0.0) {
        const ForwardRecord fwd_tt = forward(params, bx);
        IntVector labels_tt(len);
        for (int r = 0; r < len; ++r)
          labels_tt(r) = pl.hard(order[static_cast<std::size_t>(start + r)]);

        if (len >= 2) {
          const MixedBatch mb = intra_mix(fwd_tt.features, labels_tt,
                                          cfg.alpha_intra, k_classes, rng);
          const MixLossResult r_intra = mix_loss(params, mb, fwd_tt, fwd_tt);
          total.add_scaled(r_intra.grads, cfg.mu);
          l_mix_step += r_intra.loss;
          any_mix = true;
          lam_intra_sum += mb.lambdas.sum();
          lam_intra_n += mb.size();
        }
        if (!ut.empty()) {
          const std::vector<int> ut_batch = next_ut(len);
          Matrix ux(len, target.inputs.cols());
          IntVector labels_ut(len);
          for (int r = 0; r < len; ++r) {
            ux.row(r) = target.inputs.row(ut_batch[static_cast<std::size_t>(r)]);
            labels_ut(r) = ut_label(ut_batch[static_cast<std::size_t>(r)]);
          }
          const ForwardRecord fwd_ut = forward(params, ux);
          const MixedBatch mb =
              inter_mix(fwd_tt.features, labels_tt, fwd_ut.features, labels_ut,
                        alpha_inter, k_classes, rng);
          const MixLossResult r_inter = mix_loss(params, mb, fwd_tt, fwd_ut);
          total.add_scaled(r_inter.grads, cfg.mu);
          l_mix_step += r_inter.loss;
          any_mix = true;
          lam_inter_sum += mb.lambdas.sum();
          lam_inter_n += mb.size();
        }
      }
      params = sgd_step(params, total, sgd, momentum);
      ++steps;
      if (any_mix) {
        l_mix_sum += l_mix_step;
        ++mix_steps;
      }
    }
  }

  if (stats) {
    if (steps > 0) stats->mean_l_std = l_std_sum / steps;
    if (mix_steps > 0) stats->mean_l_mix = l_mix_sum / mix_steps;
    if (lam_intra_n > 0)
      stats->lambda_mean_intra = lam_intra_sum / static_cast<double>(lam_intra_n);
    if (lam_inter_n > 0)
      stats->lambda_mean_inter = lam_inter_sum / static_cast<double>(lam_inter_n);
  }
  return params;
}

void run_epoch(AdaptationState& state, const TargetView& target,
               const ModelParams& universal, const AdaptationConfig& cfg,
               RandomSource& rng, const EpochProbe& probe) {
  const int n = state.epoch + 1;
  const ModelParams src_prev = state.source_params;

  // Algorithm line 3: re-initialize the student. Without co-learning the
  // student simply continues from the current source model.
  ModelParams student;
  if (cfg.enable_colearning) {
    const ModelParams& classifier_donor = cfg.student_classifier_from_latest
                                              ? src_prev
                                              : state.source_original;
    student = init_student(universal, classifier_donor);
  } else {
    student = src_prev;
  }

  // Line 4: split the target domain with theta_{n-1}.
  PseudoLabelSet pl = pseudo_label(src_prev, target);
  int degenerate = 0;
  SubsetSplit split;
  if (cfg.enable_filtering) {
    const PrototypeSet protos = compute_prototypes(src_prev, target);
    degenerate = protos.degenerate_count();
    const ForwardRecord rec = forward(src_prev, target.inputs);
    pl.refined = refine_labels(rec.features, protos);
    pl.has_refined = true;
    split = split_trustworthy(pl, cfg.tau_norm);
  } else {
    pl.refined = pl.hard;
    pl.has_refined = true;
    split = all_trustworthy(pl.size());
  }

  const bool empty_tt = split.trustworthy.empty();
  MomentumState momentum;
  double mean_l_std = kNaN;
  MixupPhaseStats mix_stats;
  if (!empty_tt) {
    student = student_phase(student, target, pl, split, cfg, momentum, rng,
                            &mean_l_std);
    student = mixup_phase(student, target, pl, split, cfg, momentum, rng,
                          &mix_stats);
  }

  const double beta_n = state.schedule.at(n);
  ModelParams fused = (empty_tt && cfg.skip_fusion_on_empty_tt)
                          ? src_prev
                          : fuse_parameters(student, src_prev, beta_n);

  MetricsRow row;
  row.epoch = n;
  row.r = split.r;
  row.mean_l_std = mean_l_std;
  row.mean_l_mix = mix_stats.mean_l_mix;
  row.lambda_mean_intra = mix_stats.lambda_mean_intra;
  row.lambda_mean_inter = mix_stats.lambda_mean_inter;
  row.degenerate_prototypes = degenerate;
  row.empty_tt = empty_tt;
  if (probe) {
    const ProbeResult pr =
        probe(EpochView{n, beta_n, pl, split, student, src_prev, fused});
    row.target_accuracy = pr.target_accuracy;
    row.noise_rate = pr.noise_rate;
    row.tt_noise_rate = pr.tt_noise_rate;
    row.class_noise_rate = pr.class_noise_rate;
  }
  state.metrics.rows.push_back(std::move(row));

  state.epoch = n;
  state.student_params = std::move(student);
  state.split = std::move(split);
  state.source_params = std::move(fused);
}

AdaptationResult adapt(const ModelParams& source, const ModelParams& universal,
                       const TargetView& target, const AdaptationConfig& cfg,
                       const EpochProbe& probe) {
  if (cfg.n_epochs == 0)
    return {source, fresh_log(cfg, target.class_count)};
  cfg.validate();
  check_adapt_shapes(source, target);
  if (cfg.enable_colearning) {
    if (universal.input_dim() != source.input_dim() ||
        universal.feature_dim() != source.feature_dim())
      throw UsageError("adapt: universal extractor shape incompatible with source");
  }

  AdaptationState state;
  state.source_original = source;
  state.source_params = source;
  state.student_params = source;
  state.schedule = make_beta_schedule(cfg.beta0, cfg.betaN, cfg.n_epochs);
  state.metrics = fresh_log(cfg, source.class_count());

  RandomSource rng(cfg.seed);
  for (int n = 1; n <= cfg.n_epochs; ++n)
    run_epoch(state, target, universal, cfg, rng, probe);
  return {std::move(state.source_params), std::move(state.metrics)};
}

AdaptationResult adapt_baseline(const ModelParams& source,
                                const TargetView& target,
                                const AdaptationConfig& cfg,
                                const EpochProbe& probe) {
  if (cfg.n_epochs == 0)
    return {source, fresh_log(cfg, target.class_count)};
  cfg.validate();
  check_adapt_shapes(source, target);

  ModelParams model = source;
  MetricsLog log = fresh_log(cfg, source.class_count());
  RandomSource rng(cfg.seed);

  for (int n = 1; n <= cfg.n_epochs; ++n) {
    PseudoLabelSet pl = pseudo_label(model, target);
    pl.refined = pl.hard;
    pl.has_refined = true;
    const SubsetSplit split = all_trustworthy(pl.size());

    const ModelParams prev = model;
    MomentumState momentum;
    double mean_l_std = kNaN;
    model = student_phase(model, target, pl, split, cfg, momentum, rng,
                          &mean_l_std);

    MetricsRow row;
    row.epoch = n;
    row.r = split.r;
    row.mean_l_std = mean_l_std;
    if (probe) {
      const ProbeResult pr = probe(EpochView{n, 1.0, pl, split, model, prev, model});
      row.target_accuracy = pr.target_accuracy;
      row.noise_rate = pr.noise_rate;
      row.tt_noise_rate = pr.tt_noise_rate;
      row.class_noise_rate = pr.class_noise_rate;
    }
    log.rows.push_back(std::move(row));
  }
  return {std::move(model), std::move(log)};
}

}  // namespace elimpcl

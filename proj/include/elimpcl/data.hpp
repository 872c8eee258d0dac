#pragma once

#include <string>
#include <utility>
#include <vector>

#include "elimpcl/model.hpp"
#include "elimpcl/numerics.hpp"
#include "elimpcl/random.hpp"

namespace elimpcl {

enum class DomainTag { kSource, kTarget, kUniversal };

std::string domain_tag_name(DomainTag tag);
DomainTag domain_tag_from_name(const std::string& name);

struct Dataset {
  Matrix inputs;     // n x D_in
  IntVector labels;  // n, values in [0, K)
  DomainTag tag = DomainTag::kSource;
  int class_count = 0;

  Eigen::Index size() const { return inputs.rows(); }
};

/// Label-stripped view of a target dataset. Adaptation code paths accept
/// only this type, so target labels stay behind the evaluation seam.
struct TargetView {
  Matrix inputs;
  int class_count = 0;

  static TargetView of(const Dataset& data) {
    return TargetView{data.inputs, data.class_count};
  }
};

/// Synthetic domain-shift recipe: Gaussian class clusters; the target
/// domain sees a rotation of the first two coordinates, a translation,
/// inflated noise, and an extra shift for designated hard classes.
struct ShiftConfig {
  int class_count = 4;
  int input_dim = 8;
  Matrix class_means;  // K x D_in; defaults filled by default_means()
  double cluster_sigma = 1.0;
  double rotation_deg = 30.0;
  Vector translation;  // D_in; zero-extended when shorter
  double noise_scale = 1.3;
  std::vector<int> hard_class_indices{3};
  double hard_shift_sigma = 2.5;  // extra shift, in units of cluster_sigma
  int universal_components = 8;   // mixture size M for the universal set

  void validate() const;

  /// Means on a ring in coordinates (0,1) with one distinguishing axis
  /// per class, so the rotation genuinely mixes neighboring classes.
  static Matrix default_means(int class_count, int input_dim);

  static ShiftConfig defaults();
};

std::string shift_config_to_json(const ShiftConfig& cfg);
ShiftConfig shift_config_from_json(const std::string& text);

std::pair<Dataset, Dataset> generate_benchmark(const ShiftConfig& cfg,
                                               int n_source, int n_target,
                                               RandomSource& rng);

Dataset generate_universal(const ShiftConfig& cfg, int n, RandomSource& rng);

struct PretrainConfig {
  std::vector<int> hidden_dims{32};
  int feature_dim = 16;
  int batch_size = 64;
  SgdOptions sgd{};  // lr 5e-3, momentum 0.9, weight decay 1e-4
};

struct PretrainResult {
  ModelParams params;
  double train_accuracy = 0.0;
  bool low_accuracy_warning = false;  // train accuracy below 0.8
};

/// Mini-batch SGD on cross-entropy. epochs == 0 returns the fresh
/// initialization untouched. When warm_extractor is given, its extractor
/// layers seed the model (classifier still freshly initialized), the way
/// a source model starts from broadly pretrained weights.
PretrainResult pretrain(const Dataset& data, const PretrainConfig& cfg,
                        int epochs, RandomSource& rng,
                        const ModelParams* warm_extractor = nullptr);

/// CSV with header f0,...,f{D-1},label,domain; lossless round-trip.
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);
Dataset load_dataset(const std::string& path, int expected_class_count);

}  // namespace elimpcl

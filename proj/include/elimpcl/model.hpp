#pragma once

#include <vector>

#include "elimpcl/numerics.hpp"
#include "elimpcl/random.hpp"

namespace elimpcl {

enum class Activation { kTanh, kIdentity };  // kIdentity is a test hook

struct LayerParams {
  Matrix w;  // out x in
  Vector b;  // out
};

/// Full parameter set theta = {extractor g, classifier h}. Immutable
/// snapshot semantics: training steps return new values.
struct ModelParams {
  std::vector<LayerParams> extractor;
  LayerParams classifier;
  std::vector<int> layer_dims;  // input, hidden..., feature dim, class count
  Activation activation = Activation::kTanh;

  int input_dim() const { return layer_dims.front(); }
  int feature_dim() const { return layer_dims[layer_dims.size() - 2]; }
  int class_count() const { return layer_dims.back(); }
  bool same_shape(const ModelParams& other) const {
    return layer_dims == other.layer_dims;
  }
};

/// Gradient (or velocity) with the same shape as the ModelParams it was
/// taken against.
struct Gradients {
  std::vector<LayerParams> extractor;
  LayerParams classifier;

  static Gradients zeros_like(const ModelParams& params);
  Gradients& add_scaled(const Gradients& other, double scale);
};

struct ForwardRecord {
  Matrix features;  // batch x d, extractor output
  Matrix logits;    // batch x K
  Matrix probs;     // batch x K, row-softmax of logits
  std::vector<Matrix> layer_inputs;    // input to each extractor layer
  std::vector<Matrix> activations;     // post-activation per extractor layer
};

ForwardRecord forward(const ModelParams& params, const Matrix& inputs);

/// Composite loss: ce_weight * mean cross-entropy to soft targets
/// + entropy_weight * mean prediction entropy.
struct LossSpec {
  double ce_weight = 0.0;
  double entropy_weight = 0.0;
  Matrix targets;  // batch x K soft label rows; ignored when ce_weight == 0
};

struct LossResult {
  double loss = 0.0;
  double ce_part = 0.0;       // mean cross-entropy (unweighted)
  double entropy_part = 0.0;  // mean prediction entropy (unweighted)
  Gradients grads;
};

LossResult loss_and_gradients(const ModelParams& params, const Matrix& inputs,
                              const LossSpec& spec);

/// Backprop a gradient given at the feature layer down through the
/// extractor of `record`. Classifier gradients are left at zero.
Gradients backprop_from_features(const ModelParams& params,
                                 const ForwardRecord& record,
                                 const Matrix& d_features);

struct SgdOptions {
  double lr = 5e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// Velocity buffers for SGD with momentum, one per parameter block.
struct MomentumState {
  Gradients velocity;
  bool initialized = false;
};

/// v <- momentum * v + (g + weight_decay * theta); theta' = theta - lr * v.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads,
                     const SgdOptions& opts, MomentumState& state);

/// Linearly increasing smoothing coefficients beta_1..beta_N with
/// delta = (betaN - beta0) / N.
struct BetaSchedule {
  double beta0 = 0.0;
  double betaN = 0.0;
  double delta = 0.0;
  int n_epochs = 0;
  std::vector<double> values;  // values[n-1] = beta_n

  double at(int n) const;  // n in 1..N
};

BetaSchedule make_beta_schedule(double beta0, double betaN, int n_epochs);

/// Element-wise convex fusion beta * student + (1 - beta) * source_prev.
/// beta 0 and 1 return exact copies of the respective argument.
ModelParams fuse_parameters(const ModelParams& student,
                            const ModelParams& source_prev, double beta);

/// Deep-copied student {g from extractor_donor, h from classifier_donor}.
ModelParams init_student(const ModelParams& extractor_donor,
                         const ModelParams& classifier_donor);

/// Glorot-scaled random initialization.
ModelParams init_params(const std::vector<int>& layer_dims, RandomSource& rng,
                        Activation activation = Activation::kTanh);

Vector flatten(const ModelParams& params);
Vector flatten(const Gradients& grads);
ModelParams unflatten_like(const ModelParams& proto, const Vector& flat);

IntVector predict(const ModelParams& params, const Matrix& inputs);
double accuracy(const ModelParams& params, const Matrix& inputs,
                const IntVector& labels);

}  // namespace elimpcl

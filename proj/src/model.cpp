#include "elimpcl/model.hpp"

#include <cmath>
#include <string>

#include "elimpcl/errors.hpp"

namespace elimpcl {
namespace {

Matrix activate(const Matrix& z, Activation act) {
  if (act == Activation::kIdentity) return z;
  return z.array().tanh();
}

// Derivative of the activation as a function of the activated value.
Matrix activate_grad(const Matrix& a, Activation act) {
  if (act == Activation::kIdentity) return Matrix::Ones(a.rows(), a.cols());
  return 1.0 - a.array().square();
}

void check_same_shape(const ModelParams& a, const ModelParams& b,
                      const char* where) {
  if (!a.same_shape(b))
    throw UsageError(std::string(where) + ": layer_dims mismatch");
}

}  // namespace

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.extractor.reserve(params.extractor.size());
  for (const auto& layer : params.extractor)
    g.extractor.push_back({Matrix::Zero(layer.w.rows(), layer.w.cols()),
                           Vector::Zero(layer.b.size())});
  g.classifier = {
      Matrix::Zero(params.classifier.w.rows(), params.classifier.w.cols()),
      Vector::Zero(params.classifier.b.size())};
  return g;
}

Gradients& Gradients::add_scaled(const Gradients& other, double scale) {
  for (std::size_t l = 0; l < extractor.size(); ++l) {
    extractor[l].w += scale * other.extractor[l].w;
    extractor[l].b += scale * other.extractor[l].b;
  }
  classifier.w += scale * other.classifier.w;
  classifier.b += scale * other.classifier.b;
  return *this;
}

ForwardRecord forward(const ModelParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.input_dim())
    throw UsageError("forward: input dim " + std::to_string(inputs.cols()) +
                     " != model input dim " +
                     std::to_string(params.input_dim()));
  ForwardRecord rec;
  rec.layer_inputs.reserve(params.extractor.size());
  rec.activations.reserve(params.extractor.size());
  Matrix a = inputs;
  for (const auto& layer : params.extractor) {
    rec.layer_inputs.push_back(a);
    Matrix z = (a * layer.w.transpose()).rowwise() + layer.b.transpose();
    a = activate(z, params.activation);
    rec.activations.push_back(a);
  }
  rec.features = a;
  rec.logits = (a * params.classifier.w.transpose()).rowwise() +
               params.classifier.b.transpose();
  rec.probs = softmax_rows(rec.logits);
  return rec;
}

Gradients backprop_from_features(const ModelParams& params,
                                 const ForwardRecord& record,
                                 const Matrix& d_features) {
  Gradients grads = Gradients::zeros_like(params);
  Matrix da = d_features;
  for (std::size_t l = params.extractor.size(); l-- > 0;) {
    Matrix dz =
        da.array() * activate_grad(record.activations[l], params.activation).array();
    grads.extractor[l].w = dz.transpose() * record.layer_inputs[l];
    grads.extractor[l].b = dz.colwise().sum();
    if (l > 0) da = dz * params.extractor[l].w;
  }
  return grads;
}

LossResult loss_and_gradients(const ModelParams& params, const Matrix& inputs,
                              const LossSpec& spec) {
  if (inputs.rows() == 0) throw UsageError("loss_and_gradients: empty batch");
  const bool with_ce = spec.ce_weight != 0.0;
  if (with_ce && (spec.targets.rows() != inputs.rows() ||
                  spec.targets.cols() != params.class_count()))
    throw UsageError("loss_and_gradients: target shape mismatch");

  const ForwardRecord rec = forward(params, inputs);
  const Matrix& p = rec.probs;
  const auto batch = static_cast<double>(inputs.rows());

  LossResult out;
  // d(loss)/d(logits), accumulated per term.
  Matrix dlogits = Matrix::Zero(p.rows(), p.cols());

  if (with_ce) {
    double ce = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      ce += cross_entropy_row(p.row(i), spec.targets.row(i));
    out.ce_part = ce / batch;
    // softmax-CE gradient; the 1e-12 clamp only guards the loss value.
    dlogits += (spec.ce_weight / batch) * (p - spec.targets);
  }

  if (spec.entropy_weight != 0.0) {
    double ent = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double h = entropy_row(p.row(i));
      ent += h;
      for (Eigen::Index k = 0; k < p.cols(); ++k) {
        const double pk = p(i, k);
        if (pk > 0.0)
          dlogits(i, k) -=
              (spec.entropy_weight / batch) * pk * (std::log(pk) + h);
      }
    }
    out.entropy_part = ent / batch;
  }

  out.loss = spec.ce_weight * out.ce_part + spec.entropy_weight * out.entropy_part;

  out.grads = backprop_from_features(params, rec, dlogits * params.classifier.w);
  out.grads.classifier.w = dlogits.transpose() * rec.features;
  out.grads.classifier.b = dlogits.colwise().sum();
  return out;
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads,
                     const SgdOptions& opts, MomentumState& state) {
  if (!(opts.lr > 0.0)) throw UsageError("sgd_step: lr must be > 0");
  if (opts.weight_decay < 0.0)
    throw UsageError("sgd_step: weight_decay must be >= 0");
  if (!state.initialized) {
    state.velocity = Gradients::zeros_like(params);
    state.initialized = true;
  }
  ModelParams next = params;
  auto update = [&](Matrix& v, Matrix& theta, const Matrix& g) {
    v = opts.momentum * v + (g + opts.weight_decay * theta);
    theta -= opts.lr * v;
  };
  auto update_vec = [&](Vector& v, Vector& theta, const Vector& g) {
    v = opts.momentum * v + (g + opts.weight_decay * theta);
    theta -= opts.lr * v;
  };
  for (std::size_t l = 0; l < params.extractor.size(); ++l) {
    update(state.velocity.extractor[l].w, next.extractor[l].w,
           grads.extractor[l].w);
    update_vec(state.velocity.extractor[l].b, next.extractor[l].b,
               grads.extractor[l].b);
  }
  update(state.velocity.classifier.w, next.classifier.w, grads.classifier.w);
  update_vec(state.velocity.classifier.b, next.classifier.b,
             grads.classifier.b);
  return next;
}

double BetaSchedule::at(int n) const {
  if (n < 1 || n > n_epochs) throw UsageError("BetaSchedule::at: n out of range");
  return values[static_cast<std::size_t>(n - 1)];
}

BetaSchedule make_beta_schedule(double beta0, double betaN, int n_epochs) {
  if (!(0.0 <= beta0 && beta0 <= betaN && betaN <= 1.0))
    throw UsageError("make_beta_schedule: need 0 <= beta0 <= betaN <= 1");
  if (n_epochs < 1) throw UsageError("make_beta_schedule: N must be >= 1");
  BetaSchedule s;
  s.beta0 = beta0;
  s.betaN = betaN;
  s.n_epochs = n_epochs;
  s.delta = (betaN - beta0) / n_epochs;
  s.values.resize(static_cast<std::size_t>(n_epochs));
  double beta = beta0;
  for (int n = 1; n <= n_epochs; ++n) {
    beta += s.delta;
    s.values[static_cast<std::size_t>(n - 1)] = beta;
  }
  return s;
}

ModelParams fuse_parameters(const ModelParams& student,
                            const ModelParams& source_prev, double beta) {
  check_same_shape(student, source_prev, "fuse_parameters");
  if (!(0.0 <= beta && beta <= 1.0))
    throw UsageError("fuse_parameters: beta outside [0,1]");
  if (beta == 0.0) return source_prev;
  if (beta == 1.0) return student;
  ModelParams fused = student;
  for (std::size_t l = 0; l < fused.extractor.size(); ++l) {
    fused.extractor[l].w =
        beta * student.extractor[l].w + (1.0 - beta) * source_prev.extractor[l].w;
    fused.extractor[l].b =
        beta * student.extractor[l].b + (1.0 - beta) * source_prev.extractor[l].b;
  }
  fused.classifier.w =
      beta * student.classifier.w + (1.0 - beta) * source_prev.classifier.w;
  fused.classifier.b =
      beta * student.classifier.b + (1.0 - beta) * source_prev.classifier.b;
  return fused;
}

ModelParams init_student(const ModelParams& extractor_donor,
                         const ModelParams& classifier_donor) {
  if (extractor_donor.feature_dim() !=
      static_cast<int>(classifier_donor.classifier.w.cols()))
    throw UsageError("init_student: extractor feature dim " +
                     std::to_string(extractor_donor.feature_dim()) +
                     " != classifier input dim " +
                     std::to_string(classifier_donor.classifier.w.cols()));
  ModelParams student;
  student.extractor = extractor_donor.extractor;
  student.classifier = classifier_donor.classifier;
  student.activation = extractor_donor.activation;
  student.layer_dims.assign(extractor_donor.layer_dims.begin(),
                            extractor_donor.layer_dims.end() - 1);
  student.layer_dims.push_back(classifier_donor.class_count());
  return student;
}

ModelParams init_params(const std::vector<int>& layer_dims, RandomSource& rng,
                        Activation activation) {
  if (layer_dims.size() < 3)
    throw UsageError("init_params: need at least input, feature and class dims");
  for (int d : layer_dims)
    if (d < 1) throw UsageError("init_params: all dims must be >= 1");
  ModelParams params;
  params.layer_dims = layer_dims;
  params.activation = activation;
  auto glorot_layer = [&](int in, int out) {
    const double scale = std::sqrt(2.0 / (in + out));
    LayerParams layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
        layer.w(i, j) = scale * rng.normal();
    return layer;
  };
  for (std::size_t l = 0; l + 2 < layer_dims.size(); ++l)
    params.extractor.push_back(
        glorot_layer(layer_dims[l], layer_dims[l + 1]));
  params.classifier = glorot_layer(layer_dims[layer_dims.size() - 2],
                                   layer_dims[layer_dims.size() - 1]);
  return params;
}

namespace {

template <typename Blocks>
Eigen::Index total_size(const Blocks& extractor, const LayerParams& classifier) {
  Eigen::Index n = classifier.w.size() + classifier.b.size();
  for (const auto& layer : extractor) n += layer.w.size() + layer.b.size();
  return n;
}

void write_layer(const LayerParams& layer, Vector& flat, Eigen::Index& pos) {
  for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j) flat(pos++) = layer.w(i, j);
  for (Eigen::Index i = 0; i < layer.b.size(); ++i) flat(pos++) = layer.b(i);
}

void read_layer(LayerParams& layer, const Vector& flat, Eigen::Index& pos) {
  for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j) layer.w(i, j) = flat(pos++);
  for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = flat(pos++);
}

}  // namespace

Vector flatten(const ModelParams& params) {
  Vector flat(total_size(params.extractor, params.classifier));
  Eigen::Index pos = 0;
  for (const auto& layer : params.extractor) write_layer(layer, flat, pos);
  write_layer(params.classifier, flat, pos);
  return flat;
}

Vector flatten(const Gradients& grads) {
  Vector flat(total_size(grads.extractor, grads.classifier));
  Eigen::Index pos = 0;
  for (const auto& layer : grads.extractor) write_layer(layer, flat, pos);
  write_layer(grads.classifier, flat, pos);
  return flat;
}

ModelParams unflatten_like(const ModelParams& proto, const Vector& flat) {
  if (flat.size() != total_size(proto.extractor, proto.classifier))
    throw UsageError("unflatten_like: size mismatch");
  ModelParams params = proto;
  Eigen::Index pos = 0;
  for (auto& layer : params.extractor) read_layer(layer, flat, pos);
  read_layer(params.classifier, flat, pos);
  return params;
}

IntVector predict(const ModelParams& params, const Matrix& inputs) {
  const ForwardRecord rec = forward(params, inputs);
  IntVector labels(inputs.rows());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i)
    labels(i) = static_cast<int>(argmax_row(rec.logits.row(i)));
  return labels;
}

double accuracy(const ModelParams& params, const Matrix& inputs,
                const IntVector& labels) {
  if (inputs.rows() != labels.size())
    throw UsageError("accuracy: label count mismatch");
  if (inputs.rows() == 0) throw UsageError("accuracy: empty dataset");
  const IntVector pred = predict(params, inputs);
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (pred(i) == labels(i)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace elimpcl

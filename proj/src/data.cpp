#include "elimpcl/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "elimpcl/errors.hpp"

namespace elimpcl {
namespace {

using nlohmann::json;

Vector gaussian_vector(int dim, RandomSource& rng) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v;
}

void rotate_first_two(Vector& x, double cos_t, double sin_t) {
  const double x0 = x(0);
  const double x1 = x(1);
  x(0) = cos_t * x0 - sin_t * x1;
  x(1) = sin_t * x0 + cos_t * x1;
}

// Unit direction from a hard class toward its angular neighbor.
Vector hard_shift_direction(const ShiftConfig& cfg, int k) {
  const int next = (k + 1) % cfg.class_count;
  Vector d = cfg.class_means.row(next) - cfg.class_means.row(k);
  const double n = d.norm();
  if (n <= kNormEps) return Vector::Unit(cfg.input_dim, 0);
  return d / n;
}

bool is_hard_class(const ShiftConfig& cfg, int k) {
  for (int h : cfg.hard_class_indices)
    if (h == k) return true;
  return false;
}

// One affine component of the source->target interpolation; u = 0 is the
// source distribution, u = 1 the full target transform.
struct DomainTransform {
  double cos_t = 1.0;
  double sin_t = 0.0;
  Vector translation;
  double noise_mult = 1.0;
  double hard_shift_frac = 0.0;

  static DomainTransform at(const ShiftConfig& cfg, double u) {
    const double theta = u * cfg.rotation_deg * std::numbers::pi / 180.0;
    return DomainTransform{std::cos(theta), std::sin(theta),
                           u * cfg.translation, 1.0 + u * (cfg.noise_scale - 1.0),
                           u};
  }

  Vector sample(const ShiftConfig& cfg, int k, RandomSource& rng) const {
    Vector x = cfg.class_means.row(k).transpose() +
               noise_mult * cfg.cluster_sigma * gaussian_vector(cfg.input_dim, rng);
    rotate_first_two(x, cos_t, sin_t);
    x += translation;
    if (hard_shift_frac != 0.0 && is_hard_class(cfg, k))
      x += hard_shift_frac * cfg.hard_shift_sigma * cfg.cluster_sigma *
           hard_shift_direction(cfg, k);
    return x;
  }
};

void format_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

std::string domain_tag_name(DomainTag tag) {
  switch (tag) {
    case DomainTag::kSource: return "source";
    case DomainTag::kTarget: return "target";
    case DomainTag::kUniversal: return "universal";
  }
  throw UsageError("domain_tag_name: bad tag");
}

DomainTag domain_tag_from_name(const std::string& name) {
  if (name == "source") return DomainTag::kSource;
  if (name == "target") return DomainTag::kTarget;
  if (name == "universal") return DomainTag::kUniversal;
  throw UsageError("unknown domain tag '" + name + "'");
}

void ShiftConfig::validate() const {
  if (class_count < 2) throw UsageError("ShiftConfig: class_count must be >= 2");
  if (input_dim < 2) throw UsageError("ShiftConfig: input_dim must be >= 2");
  if (class_means.rows() != class_count || class_means.cols() != input_dim)
    throw UsageError("ShiftConfig: class_means must be class_count x input_dim");
  if (!(cluster_sigma > 0.0)) throw UsageError("ShiftConfig: cluster_sigma must be > 0");
  if (!(noise_scale > 0.0)) throw UsageError("ShiftConfig: noise_scale must be > 0");
  if (translation.size() != input_dim)
    throw UsageError("ShiftConfig: translation must have input_dim entries");
  for (int h : hard_class_indices)
    if (h < 0 || h >= class_count)
      throw UsageError("ShiftConfig: hard_class_indices entry out of [0, class_count)");
  if (universal_components < 1)
    throw UsageError("ShiftConfig: universal_components must be >= 1");
  if (!class_means.allFinite() || !translation.allFinite())
    throw UsageError("ShiftConfig: non-finite entries");
}

Matrix ShiftConfig::default_means(int class_count, int input_dim) {
  if (class_count < 2 || input_dim < 2)
    throw UsageError("default_means: need class_count >= 2 and input_dim >= 2");
  constexpr double ring_radius = 3.0;
  constexpr double axis_lift = 1.5;
  Matrix means = Matrix::Zero(class_count, input_dim);
  for (int k = 0; k < class_count; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / class_count;
    means(k, 0) = ring_radius * std::cos(phi);
    means(k, 1) = ring_radius * std::sin(phi);
    if (input_dim > 2) means(k, 2 + k % (input_dim - 2)) = axis_lift;
  }
  return means;
}

ShiftConfig ShiftConfig::defaults() {
  ShiftConfig cfg;
  cfg.class_means = default_means(cfg.class_count, cfg.input_dim);
  cfg.translation = Vector::Zero(cfg.input_dim);
  cfg.translation(2) = 0.75;
  cfg.translation(3) = -0.75;
  return cfg;
}

std::string shift_config_to_json(const ShiftConfig& cfg) {
  json j;
  j["class_count"] = cfg.class_count;
  j["input_dim"] = cfg.input_dim;
  std::vector<std::vector<double>> means;
  for (Eigen::Index k = 0; k < cfg.class_means.rows(); ++k)
    means.emplace_back(cfg.class_means.row(k).begin(),
                       cfg.class_means.row(k).end());
  j["class_means"] = means;
  j["cluster_sigma"] = cfg.cluster_sigma;
  j["rotation_deg"] = cfg.rotation_deg;
  j["translation"] =
      std::vector<double>(cfg.translation.begin(), cfg.translation.end());
  j["noise_scale"] = cfg.noise_scale;
  j["hard_class_indices"] = cfg.hard_class_indices;
  j["hard_shift_sigma"] = cfg.hard_shift_sigma;
  j["universal_components"] = cfg.universal_components;
  return j.dump(2);
}

ShiftConfig shift_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("shift config: ") + e.what());
  }
  ShiftConfig cfg;
  try {
    cfg.class_count = j.value("class_count", cfg.class_count);
    cfg.input_dim = j.value("input_dim", cfg.input_dim);
    if (cfg.class_count < 2)
      throw UsageError("shift config: class_count must be >= 2");
    if (cfg.input_dim < 2)
      throw UsageError("shift config: input_dim must be >= 2");
    if (j.contains("class_means")) {
      const auto rows = j["class_means"].get<std::vector<std::vector<double>>>();
      if (static_cast<int>(rows.size()) != cfg.class_count)
        throw UsageError("shift config: class_means row count != class_count");
      cfg.class_means = Matrix(cfg.class_count, cfg.input_dim);
      for (int k = 0; k < cfg.class_count; ++k) {
        if (static_cast<int>(rows[k].size()) != cfg.input_dim)
          throw UsageError("shift config: class_means row length != input_dim");
        for (int d = 0; d < cfg.input_dim; ++d) cfg.class_means(k, d) = rows[k][d];
      }
    } else {
      cfg.class_means = ShiftConfig::default_means(cfg.class_count, cfg.input_dim);
    }
    cfg.cluster_sigma = j.value("cluster_sigma", cfg.cluster_sigma);
    cfg.rotation_deg = j.value("rotation_deg", cfg.rotation_deg);
    if (j.contains("translation")) {
      const auto t = j["translation"].get<std::vector<double>>();
      if (static_cast<int>(t.size()) != cfg.input_dim)
        throw UsageError("shift config: translation length != input_dim");
      cfg.translation = Eigen::Map<const Vector>(t.data(), cfg.input_dim);
    } else {
      cfg.translation = ShiftConfig::defaults().translation.head(cfg.input_dim);
      if (cfg.input_dim != 8) cfg.translation = Vector::Zero(cfg.input_dim);
    }
    cfg.noise_scale = j.value("noise_scale", cfg.noise_scale);
    cfg.hard_class_indices =
        j.value("hard_class_indices", cfg.hard_class_indices);
    cfg.hard_shift_sigma = j.value("hard_shift_sigma", cfg.hard_shift_sigma);
    cfg.universal_components =
        j.value("universal_components", cfg.universal_components);
  } catch (const json::exception& e) {
    throw ParseError(std::string("shift config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::pair<Dataset, Dataset> generate_benchmark(const ShiftConfig& cfg,
                                               int n_source, int n_target,
                                               RandomSource& rng) {
  cfg.validate();
  if (n_source < cfg.class_count || n_target < cfg.class_count)
    throw UsageError("generate_benchmark: need at least K samples per domain");

  const auto source_tf = DomainTransform::at(cfg, 0.0);
  const auto target_tf = DomainTransform::at(cfg, 1.0);

  Dataset source{Matrix(n_source, cfg.input_dim), IntVector(n_source),
                 DomainTag::kSource, cfg.class_count};
  for (int i = 0; i < n_source; ++i) {
    const int k = static_cast<int>(rng.below(cfg.class_count));
    source.labels(i) = k;
    source.inputs.row(i) = source_tf.sample(cfg, k, rng).transpose();
  }

  Dataset target{Matrix(n_target, cfg.input_dim), IntVector(n_target),
                 DomainTag::kTarget, cfg.class_count};
  for (int i = 0; i < n_target; ++i) {
    const int k = static_cast<int>(rng.below(cfg.class_count));
    target.labels(i) = k;
    target.inputs.row(i) = target_tf.sample(cfg, k, rng).transpose();
  }
  return {std::move(source), std::move(target)};
}

Dataset generate_universal(const ShiftConfig& cfg, int n, RandomSource& rng) {
  cfg.validate();
  if (n < cfg.class_count)
    throw UsageError("generate_universal: need at least K samples");

  // Components interpolate source-like (u=0) to target-like (u=1), with
  // jitter growing away from the source end so u=0 stays exact.
  const int m = cfg.universal_components;
  std::vector<DomainTransform> components;
  components.reserve(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) {
    const double u = (m == 1) ? 0.0 : static_cast<double>(c) / (m - 1);
    DomainTransform tf = DomainTransform::at(cfg, u);
    const double jitter = 0.35 * u;
    const double extra =
        jitter * cfg.rotation_deg * std::numbers::pi / 180.0 * rng.normal();
    const double cos_e = std::cos(extra);
    const double sin_e = std::sin(extra);
    const double c0 = tf.cos_t * cos_e - tf.sin_t * sin_e;
    const double s0 = tf.sin_t * cos_e + tf.cos_t * sin_e;
    tf.cos_t = c0;
    tf.sin_t = s0;
    tf.translation += jitter * cfg.cluster_sigma * gaussian_vector(cfg.input_dim, rng);
    components.push_back(std::move(tf));
  }

  Dataset data{Matrix(n, cfg.input_dim), IntVector(n), DomainTag::kUniversal,
               cfg.class_count};
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    const int k = static_cast<int>(rng.below(cfg.class_count));
    data.labels(i) = k;
    data.inputs.row(i) = components[static_cast<std::size_t>(c)]
                             .sample(cfg, k, rng)
                             .transpose();
  }
  return data;
}

PretrainResult pretrain(const Dataset& data, const PretrainConfig& cfg,
                        int epochs, RandomSource& rng,
                        const ModelParams* warm_extractor) {
  if (data.size() == 0) throw UsageError("pretrain: empty dataset");
  if (epochs < 0) throw UsageError("pretrain: epochs must be >= 0");
  if (cfg.batch_size < 1) throw UsageError("pretrain: batch_size must be >= 1");

  std::vector<int> dims;
  dims.push_back(static_cast<int>(data.inputs.cols()));
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.feature_dim);
  dims.push_back(data.class_count);

  PretrainResult result;
  result.params = init_params(dims, rng);
  if (warm_extractor) {
    if (!std::equal(dims.begin(), dims.end() - 1,
                    warm_extractor->layer_dims.begin(),
                    warm_extractor->layer_dims.end() - 1))
      throw UsageError("pretrain: warm-start extractor dims incompatible");
    result.params.extractor = warm_extractor->extractor;
  }
  if (epochs == 0) {
    result.train_accuracy = accuracy(result.params, data.inputs, data.labels);
    result.low_accuracy_warning = result.train_accuracy < 0.8;
    return result;
  }

  Matrix targets(data.size(), data.class_count);
  for (Eigen::Index i = 0; i < data.size(); ++i)
    targets.row(i) = one_hot(data.labels(i), data.class_count);

  const int n = static_cast<int>(data.size());
  MomentumState momentum;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<int> order = rng.permutation(n);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n - start);
      Matrix bx(len, data.inputs.cols());
      Matrix bt(len, data.class_count);
      for (int r = 0; r < len; ++r) {
        bx.row(r) = data.inputs.row(order[static_cast<std::size_t>(start + r)]);
        bt.row(r) = targets.row(order[static_cast<std::size_t>(start + r)]);
      }
      LossSpec spec{1.0, 0.0, std::move(bt)};
      const LossResult res = loss_and_gradients(result.params, bx, spec);
      result.params = sgd_step(result.params, res.grads, cfg.sgd, momentum);
    }
  }
  result.train_accuracy = accuracy(result.params, data.inputs, data.labels);
  result.low_accuracy_warning = result.train_accuracy < 0.8;
  return result;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("save_dataset: cannot write " + path);
  const Eigen::Index dims = data.inputs.cols();
  for (Eigen::Index d = 0; d < dims; ++d) out << "f" << d << ",";
  out << "label,domain\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index d = 0; d < dims; ++d) {
      format_double(out, data.inputs(i, d));
      out << ",";
    }
    out << data.labels(i) << "," << domain_tag_name(data.tag) << "\n";
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

Dataset load_dataset_impl(const std::string& path, int expected_k) {
  std::ifstream in(path);
  if (!in) throw UsageError("load_dataset: cannot read " + path);

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty dataset file", 1);
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "label" ||
      header.back() != "domain")
    throw ParseError("expected header f0,...,label,domain", line_no);
  const int dims = static_cast<int>(header.size()) - 2;
  for (int d = 0; d < dims; ++d)
    if (header[static_cast<std::size_t>(d)] != "f" + std::to_string(d))
      throw ParseError("unexpected feature column name '" +
                           header[static_cast<std::size_t>(d)] + "'",
                       line_no);

  std::vector<Vector> rows;
  std::vector<int> labels;
  DomainTag tag = DomainTag::kSource;
  bool tag_set = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != dims + 2)
      throw ParseError("expected " + std::to_string(dims + 2) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    Vector x(dims);
    for (int d = 0; d < dims; ++d) {
      try {
        std::size_t used = 0;
        x(d) = std::stod(fields[static_cast<std::size_t>(d)], &used);
        if (used != fields[static_cast<std::size_t>(d)].size())
          throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw ParseError("bad numeric value '" +
                             fields[static_cast<std::size_t>(d)] + "'",
                         line_no);
      }
      if (!std::isfinite(x(d)))
        throw ParseError("non-finite feature value", line_no);
    }
    int label = 0;
    try {
      label = std::stoi(fields[static_cast<std::size_t>(dims)]);
    } catch (const std::exception&) {
      throw ParseError("bad label '" + fields[static_cast<std::size_t>(dims)] + "'",
                       line_no);
    }
    if (label < 0) throw ParseError("negative label", line_no);
    if (expected_k > 0 && label >= expected_k)
      throw ParseError("label " + std::to_string(label) + " >= class count " +
                           std::to_string(expected_k),
                       line_no);
    DomainTag row_tag;
    try {
      row_tag = domain_tag_from_name(fields.back());
    } catch (const UsageError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!tag_set) {
      tag = row_tag;
      tag_set = true;
    } else if (row_tag != tag) {
      throw ParseError("mixed domain tags in one file", line_no);
    }
    rows.push_back(std::move(x));
    labels.push_back(label);
  }
  if (rows.empty()) throw ParseError("dataset file has no data rows", line_no);

  Dataset data;
  data.inputs = Matrix(static_cast<Eigen::Index>(rows.size()), dims);
  data.labels = IntVector(static_cast<Eigen::Index>(rows.size()));
  int max_label = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.inputs.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    data.labels(static_cast<Eigen::Index>(i)) = labels[i];
    max_label = std::max(max_label, labels[i]);
  }
  data.tag = tag;
  data.class_count = expected_k > 0 ? expected_k : max_label + 1;
  return data;
}

}  // namespace

Dataset load_dataset(const std::string& path) { return load_dataset_impl(path, 0); }

Dataset load_dataset(const std::string& path, int expected_class_count) {
  if (expected_class_count < 1)
    throw UsageError("load_dataset: expected_class_count must be >= 1");
  return load_dataset_impl(path, expected_class_count);
}

}  // namespace elimpcl

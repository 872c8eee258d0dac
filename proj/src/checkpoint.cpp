#include "elimpcl/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "elimpcl/errors.hpp"

namespace elimpcl {
namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json layer_to_json(const LayerParams& layer) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(layer.w.size()));
  for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j) w.push_back(layer.w(i, j));
  std::vector<double> b(layer.b.data(), layer.b.data() + layer.b.size());
  return json{{"w", w}, {"b", b}};
}

LayerParams layer_from_json(const json& j, int out, int in) {
  const auto& w = j.at("w");
  const auto& b = j.at("b");
  if (static_cast<int>(w.size()) != out * in ||
      static_cast<int>(b.size()) != out)
    throw ParseError("checkpoint: layer size does not match layer_dims");
  LayerParams layer{Matrix(out, in), Vector(out)};
  std::size_t pos = 0;
  for (int i = 0; i < out; ++i)
    for (int jcol = 0; jcol < in; ++jcol)
      layer.w(i, jcol) = w[pos++].get<double>();
  for (int i = 0; i < out; ++i) layer.b(i) = b[static_cast<std::size_t>(i)].get<double>();
  return layer;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  json j;
  j["format"] = "elimpcl-checkpoint";
  j["version"] = kCheckpointVersion;
  j["activation"] =
      params.activation == Activation::kTanh ? "tanh" : "identity";
  j["layer_dims"] = params.layer_dims;
  j["extractor"] = json::array();
  for (const auto& layer : params.extractor)
    j["extractor"].push_back(layer_to_json(layer));
  j["classifier"] = layer_to_json(params.classifier);
  std::ofstream out(path);
  if (!out) throw UsageError("save_checkpoint: cannot write " + path);
  out << j.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("load_checkpoint: cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "elimpcl-checkpoint")
      throw ParseError("checkpoint: unrecognized format field");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ParseError("checkpoint: unsupported version");
    ModelParams params;
    params.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    if (params.layer_dims.size() < 3)
      throw ParseError("checkpoint: layer_dims needs >= 3 entries");
    const auto act = j.at("activation").get<std::string>();
    if (act == "tanh")
      params.activation = Activation::kTanh;
    else if (act == "identity")
      params.activation = Activation::kIdentity;
    else
      throw ParseError("checkpoint: unknown activation '" + act + "'");
    const auto& ext = j.at("extractor");
    if (ext.size() + 2 != params.layer_dims.size())
      throw ParseError("checkpoint: extractor layer count mismatch");
    for (std::size_t l = 0; l < ext.size(); ++l)
      params.extractor.push_back(layer_from_json(
          ext[l], params.layer_dims[l + 1], params.layer_dims[l]));
    const auto n = params.layer_dims.size();
    params.classifier = layer_from_json(
        j.at("classifier"), params.layer_dims[n - 1], params.layer_dims[n - 2]);
    return params;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace elimpcl

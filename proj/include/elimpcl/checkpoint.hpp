#pragma once

#include <string>

#include "elimpcl/model.hpp"

namespace elimpcl {

/// Versioned JSON checkpoint: layer_dims, activation and flat row-major
/// parameter arrays. Stable within a minor version of the tool.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace elimpcl

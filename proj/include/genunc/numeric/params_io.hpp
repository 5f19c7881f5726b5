#pragma once

#include <filesystem>

#include "genunc/numeric/container.hpp"
#include "genunc/numeric/mlp.hpp"
#include "genunc/numeric/param_vector.hpp"

namespace genunc::numeric {

/// Stores config, layout and values of `params` under `prefix` in `c`.
void put_params(Container& c, const std::string& prefix, const MlpConfig& cfg,
                const ParamVector& params);
ParamVector get_params(const Container& c, const std::string& prefix);

nlohmann::json layout_to_json(const std::vector<LayerSlot>& layout);
std::vector<LayerSlot> layout_from_json(const nlohmann::json& j);

void save_params(const std::filesystem::path& path, const MlpConfig& cfg, const ParamVector& params);
std::pair<MlpConfig, ParamVector> load_params(const std::filesystem::path& path);

}  // namespace genunc::numeric

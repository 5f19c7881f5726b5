#include "genunc/numeric/params_io.hpp"

#include "genunc/error.hpp"

namespace genunc::numeric {

nlohmann::json layout_to_json(const std::vector<LayerSlot>& layout) {
  auto j = nlohmann::json::array();
  for (const auto& s : layout)
    j.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"offset", s.offset}});
  return j;
}

std::vector<LayerSlot> layout_from_json(const nlohmann::json& j) {
  std::vector<LayerSlot> out;
  for (const auto& e : j)
    out.push_back(LayerSlot{e.at("name").get<std::string>(), e.at("rows").get<std::size_t>(),
                            e.at("cols").get<std::size_t>(), e.at("offset").get<std::size_t>()});
  return out;
}

void put_params(Container& c, const std::string& prefix, const MlpConfig& cfg, const ParamVector& params) {
  c.meta[prefix] = {{"mlp", cfg.to_json()}, {"layout", layout_to_json(params.layout())}};
  c.add(prefix, std::vector<double>(params.values().data(), params.values().data() + params.size()));
}

ParamVector get_params(const Container& c, const std::string& prefix) {
  if (!c.meta.contains(prefix)) throw IoError("container: no parameter block '" + prefix + "'");
  auto layout = layout_from_json(c.meta.at(prefix).at("layout"));
  const auto& raw = c.array(prefix);
  Vector v = Eigen::Map<const Vector>(raw.data(), static_cast<Eigen::Index>(raw.size()));
  return ParamVector(std::move(layout), std::move(v));
}

void save_params(const std::filesystem::path& path, const MlpConfig& cfg, const ParamVector& params) {
  Container c;
  c.kind = "params";
  put_params(c, "params", cfg, params);
  c.save(path);
}

std::pair<MlpConfig, ParamVector> load_params(const std::filesystem::path& path) {
  Container c = Container::load(path, "params");
  auto cfg = MlpConfig::from_json(c.meta.at("params").at("mlp"));
  auto p = get_params(c, "params");
  if (p.layout() != Mlp(cfg).layout()) throw IoError(path.string() + ": layout does not match the stored network config");
  return {cfg, std::move(p)};
}

}  // namespace genunc::numeric

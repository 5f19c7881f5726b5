#include "genunc/diffusion/checkpoint.hpp"

#include "genunc/error.hpp"
#include "genunc/numeric/container.hpp"
#include "genunc/numeric/hash.hpp"
#include "genunc/numeric/params_io.hpp"

namespace genunc::diffusion {

std::string to_string(Objective o) {
  return o == Objective::epsilon_prediction ? "epsilon-prediction" : "flow-velocity";
}

Objective objective_from_string(const std::string& name) {
  if (name == "epsilon-prediction") return Objective::epsilon_prediction;
  if (name == "flow-velocity") return Objective::flow_velocity;
  throw ConfigError("unknown training objective '" + name + "'");
}

namespace {

numeric::Container to_container(const Checkpoint& ck) {
  numeric::Container c;
  c.kind = "checkpoint";
  c.meta["objective"] = to_string(ck.objective);
  c.meta["seed"] = ck.seed;
  c.meta["train_steps"] = ck.train_steps;
  c.meta["last_layer"] = numeric::Mlp(ck.net).last_layer_names();
  numeric::put_params(c, "params", ck.net, ck.params);
  numeric::put_params(c, "ema", ck.net, ck.ema);
  c.add("schedule.betas", ck.schedule.betas());
  c.add("schedule.alpha_bars", ck.schedule.alpha_bars());
  return c;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const { to_container(*this).save(path); }

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  auto c = numeric::Container::load(path, "checkpoint");
  Checkpoint ck;
  ck.net = numeric::MlpConfig::from_json(c.meta.at("params").at("mlp"));
  ck.objective = objective_from_string(c.meta.at("objective").get<std::string>());
  ck.seed = c.meta.at("seed").get<std::uint64_t>();
  ck.train_steps = c.meta.at("train_steps").get<std::uint64_t>();
  ck.schedule = NoiseSchedule::from_betas(c.array("schedule.betas"));
  ck.params = numeric::get_params(c, "params");
  ck.ema = numeric::get_params(c, "ema");
  const auto layout = numeric::Mlp(ck.net).layout();
  if (ck.params.layout() != layout || ck.ema.layout() != layout)
    throw IoError(path.string() + ": parameter layout does not match the stored network config");
  return ck;
}

std::string Checkpoint::hash() const { return numeric::to_hex(numeric::fnv1a(to_container(*this).to_bytes())); }

}  // namespace genunc::diffusion

#include "nnsos/sysdef.hpp"

#include <filesystem>
#include <set>

#include "nnsos/polyparse.hpp"
#include "nnsos/sha256.hpp"
#include "nnsos/toml.hpp"

namespace nnsos {

namespace {

MultiplierSupport parse_support(const std::string& s) {
  if (s == "full") return MultiplierSupport::Full;
  if (s == "states") return MultiplierSupport::States;
  throw Error("options.multiplier_support must be \"full\" or \"states\", got \"" +
              s + "\"");
}

AuxKind parse_aux_kind(const std::string& s) {
  if (s == "x_minus_sin") return AuxKind::XMinusSin;
  throw Error("recast.kind entries must be \"x_minus_sin\", got \"" + s + "\"");
}

}  // namespace

SystemDefinition load_system_definition(const std::string& path) {
  TomlTable t = TomlTable::parse_file(path);
  SystemDefinition def;
  def.definition_path = path;
  def.definition_sha256 = sha256_file(path);
  def.name = t.get_string_or("name", std::filesystem::path(path).stem().string());

  def.spec.space = std::make_shared<VariableSpace>();
  VariableSpace& sp = *def.spec.space;

  auto states = t.get_string_array("states");
  if (states.empty()) throw Error("definition needs at least one state");
  std::set<std::string> seen;
  for (auto& s : states) {
    if (!seen.insert(s).second)
      throw Error("duplicate state variable '" + s + "'");
    def.spec.state_vars.push_back(sp.add(s));
  }
  auto inputs = t.get_string_array("inputs");
  for (auto& s : inputs) {
    if (!seen.insert(s).second)
      throw Error("duplicate variable name '" + s + "'");
    def.spec.input_vars.push_back(sp.add(s));
  }
  if (t.has("recast.vars")) {
    auto vars = t.get_string_array("recast.vars");
    auto kinds = t.get_string_array("recast.kind");
    auto drivers = t.get_string_array("recast.driver");
    if (vars.size() != kinds.size() || vars.size() != drivers.size())
      throw Error("recast.vars, recast.kind and recast.driver must align");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (!seen.insert(vars[i]).second)
        throw Error("duplicate variable name '" + vars[i] + "'");
      AuxRule rule;
      rule.kind = parse_aux_kind(kinds[i]);
      rule.var = sp.add(vars[i]);
      auto drv = sp.find(drivers[i]);
      if (!drv) throw Error("recast driver '" + drivers[i] + "' is not a state");
      rule.driver = *drv;
      def.spec.aux_rules.push_back(rule);
    }
  }
  if (t.has("robustness.var")) {
    std::string dname = t.get_string("robustness.var");
    if (!seen.insert(dname).second)
      throw Error("duplicate variable name '" + dname + "'");
    def.spec.delta_var = sp.add(dname);
    auto iv = t.get_number_array("robustness.interval");
    if (iv.size() != 2 || !(iv[0] < iv[1]))
      throw Error("robustness.interval must be [lo, hi] with lo < hi");
    def.spec.delta_interval = {iv[0], iv[1]};
  }

  auto dyn = t.get_string_array("dynamics");
  if (dyn.size() != states.size())
    throw Error("dynamics entries (" + std::to_string(dyn.size()) +
                ") must match states (" + std::to_string(states.size()) + ")");
  for (auto& d : dyn)
    def.spec.dynamics.push_back(parse_polynomial(d, sp, false));

  std::string netfile = t.get_string("network");
  std::filesystem::path nf(netfile);
  if (nf.is_relative())
    nf = std::filesystem::path(path).parent_path() / nf;
  def.network_path = nf.string();
  def.network_sha256 = sha256_file(def.network_path);
  def.spec.nn = std::make_shared<NeuralNetwork>(
      NeuralNetwork::load_json_file(def.network_path));

  def.spec.region.lower = t.get_number_array("region.lower");
  def.spec.region.upper = t.get_number_array("region.upper");
  if (t.has("region.custom"))
    for (auto& c : t.get_string_array("region.custom"))
      def.spec.custom_region.push_back(parse_polynomial(c, sp, false));

  if (t.has("saturation.u_max")) def.spec.u_max = t.get_number("saturation.u_max");

  CertOptions& o = def.spec.opts;
  o.v_degree = static_cast<int>(t.get_number_or("degrees.v", 4));
  if (o.v_degree < 2 || o.v_degree % 2 != 0)
    throw Error("degrees.v must be an even integer >= 2");
  o.mult_degree = static_cast<int>(t.get_number_or("degrees.multiplier", -1));
  o.eq_degree = static_cast<int>(t.get_number_or("degrees.equality", -1));
  o.roa_k = static_cast<int>(t.get_number_or("degrees.roa_k", 1));
  if (o.roa_k < 1) throw Error("degrees.roa_k must be >= 1");
  o.epsilon = t.get_number_or("options.epsilon", 1e-4);
  if (!(o.epsilon > 0)) throw Error("options.epsilon must be positive");
  o.use_slope = t.get_bool_or("options.use_slope", true);
  o.all_pairs_slope = t.get_bool_or("options.all_pairs_slope", false);
  o.support = parse_support(t.get_string_or("options.multiplier_support", "full"));
  o.shrink_factor = t.get_number_or("options.shrink_factor", 0.75);
  if (!(o.shrink_factor > 0 && o.shrink_factor < 1))
    throw Error("options.shrink_factor must lie in (0, 1)");
  o.max_shrink_iters = static_cast<int>(t.get_number_or("options.max_shrink", 10));
  o.sim_step = t.get_number_or("options.sim_step", 0.01);
  o.sim_horizon = t.get_number_or("options.sim_horizon", 30.0);
  o.soundness_samples =
      static_cast<int>(t.get_number_or("options.soundness_samples", 10000));
  o.solver.max_iter =
      static_cast<int>(t.get_number_or("options.solver_max_iter", 200));
  o.epsilon = t.get_number_or("options.epsilon", 1e-4);

  def.spec.check();
  return def;
}

}  // namespace nnsos

#include "fraccond/config.hpp"

#include "fraccond/error.hpp"
#include "fraccond/output.hpp"

namespace fraccond {

namespace {

using nlohmann::json;

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(std::string("section '") + name + "' must be an object");
  return s;
}

Point read_center(const json& j, int dim) {
  Point p{0.0, 0.0};
  if (j.is_number()) {
    if (dim != 1) throw ConfigError("center needs 2 coordinates");
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim) throw ConfigError("center has the wrong dimension");
  for (int k = 0; k < dim; ++k) p[k] = j.at(k).get<double>();
  return p;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  c.hash = fnv1a_hex(text);
  try {
    if (!root.contains("domain")) throw ConfigError("config lacks the 'domain' section");
    json dom = section(root, "domain");
    for (const auto& [key, value] : section(root, "windows").items()) dom[key] = value;
    c.domain = domain_config_from_json(dom);
    const int dim = c.domain.dim;

    const json& op = section(root, "operator");
    c.op.s = op.value("s", c.op.s);
    c.op.kernel = kernel_model_from_string(op.value("kernel", std::string("truncated")));
    const std::string sign = op.value("q_sign", std::string("negative"));
    if (sign == "negative")
      c.op.q_sign = PotentialSign::negative;
    else if (sign == "positive")
      c.op.q_sign = PotentialSign::positive;
    else
      throw ConfigError("q_sign must be 'negative' or 'positive'");
    c.op.max_nodes = op.value("max_nodes", c.op.max_nodes);
    c.sweep.bounds.gamma0 = op.value("gamma0", c.sweep.bounds.gamma0);
    c.sweep.bounds.regularity_excess = op.value("eps_reg", c.sweep.bounds.regularity_excess);
    c.sweep.bounds.regularity_bound = op.value("C1", c.sweep.bounds.regularity_bound);
    require_fractional_order(dim, c.op.s);
    if (!(c.sweep.bounds.gamma0 > 0.0 && c.sweep.bounds.gamma0 < 1.0))
      throw ConfigError("operator.gamma0 must lie in (0, 1)");
    c.sweep.kernel = c.op.kernel;

    const json& cond = section(root, "conductivities");
    c.sweep.base = cond.contains("base") ? field_spec_from_json(cond.at("base"), dim) : FieldSpec{1.0, {}};
    if (cond.contains("profile")) c.sweep.profile = field_spec_from_json(cond.at("profile"), dim);

    const json& sw = section(root, "sweep");
    if (sw.contains("ladder")) {
      for (const auto& v : sw.at("ladder")) c.sweep.ladder.push_back(v.get<double>());
    } else if (sw.contains("dyadic")) {
      const auto& d = sw.at("dyadic");
      const int from = d.at("from").get<int>(), to = d.at("to").get<int>();
      for (int k = from; k <= to; ++k) c.sweep.ladder.push_back(std::ldexp(1.0, -k));
    }
    c.sweep.theta0 = sw.value("theta0", c.sweep.theta0);
    c.sweep.p = sw.value("p", c.sweep.p);
    c.sweep.s_prime = sw.value("s_prime", c.sweep.s_prime);
    if (sw.contains("model")) c.model = modulus_model_from_string(sw.at("model").get<std::string>());

    const json& rc = section(root, "reconstruct");
    c.reconstruct.alpha = rc.value("alpha", c.reconstruct.alpha);
    c.reconstruct.max_iterations = rc.value("max_iterations", c.reconstruct.max_iterations);
    c.reconstruct.tolerance = rc.value("tolerance", c.reconstruct.tolerance);
    if (rc.contains("initial")) c.reconstruct.initial = field_spec_from_json(rc.at("initial"), dim);
    if (rc.contains("truth")) c.reconstruct.truth = field_spec_from_json(rc.at("truth"), dim);
    if (!(c.reconstruct.alpha > 0.0)) throw ConfigError("reconstruct.alpha must be positive");
    if (c.reconstruct.max_iterations < 0) throw ConfigError("reconstruct.max_iterations must be >= 0");

    const json& vf = section(root, "verify");
    c.verify.trials = vf.value("trials", c.verify.trials);
    c.verify.tolerance = vf.value("tolerance", c.verify.tolerance);
    if (c.verify.trials < 1) throw ConfigError("verify.trials must be >= 1");

    const json& ucp = section(root, "ucp");
    for (const auto& ctr : ucp.value("centers", json::array())) c.ucp.centers.push_back(read_center(ctr, dim));
    c.ucp.radius = ucp.value("radius", c.ucp.radius);
    c.ucp.height = ucp.value("height", c.ucp.height);
    c.ucp.s_prime = ucp.value("s_prime", c.sweep.s_prime);
    c.ucp.energy = ucp.value("energy", c.ucp.energy);

    const json& dn = section(root, "dnmap");
    c.dnmap.eps = dn.value("eps", c.dnmap.eps);
    const std::string eq = dn.value("equation", std::string("conductivity"));
    if (eq == "conductivity")
      c.dnmap.equation = Equation::conductivity;
    else if (eq == "schroedinger" || eq == "schrodinger")
      c.dnmap.equation = Equation::schroedinger;
    else
      throw ConfigError("dnmap.equation must be 'conductivity' or 'schroedinger'");

    if (root.contains("seed")) {
      const auto& s = root.at("seed");
      if (!s.is_number_integer() || s.get<long long>() < 0) throw ConfigError("seed must be a nonnegative integer");
      c.seed = s.get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_text(path)); }

}  // namespace fraccond

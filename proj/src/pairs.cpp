#include <cmath>
#include <sstream>

#include "fraccond/error.hpp"
#include "fraccond/stability.hpp"

namespace fraccond {

VectorXd FieldSpec::evaluate(const GridDomain& domain) const {
  VectorXd out = VectorXd::Constant(domain.size(), constant);
  for (const Bump& b : bumps) {
    if (!(b.radius > 0.0)) throw ConfigError("bump radius must be positive");
    for (Index i = 0; i < domain.size(); ++i) {
      const Point x = domain.coordinate(i);
      double r2 = 0.0;
      for (int k = 0; k < domain.dim(); ++k) r2 += (x[k] - b.center[k]) * (x[k] - b.center[k]);
      const double t = r2 / (b.radius * b.radius);
      if (t < 1.0) out[i] += b.height * std::exp(1.0 - 1.0 / (1.0 - t));
    }
  }
  return out;
}

FieldSpec field_spec_from_json(const nlohmann::json& j, int dim) {
  FieldSpec spec;
  try {
    if (j.is_number()) {
      spec.constant = j.get<double>();
      return spec;
    }
    spec.constant = j.value("constant", 0.0);
    for (const auto& b : j.value("bumps", nlohmann::json::array())) {
      Bump bump;
      const auto& c = b.at("center");
      if (c.is_number()) {
        bump.center[0] = c.get<double>();
      } else {
        if (static_cast<int>(c.size()) != dim) throw ConfigError("bump center has the wrong dimension");
        for (int k = 0; k < dim; ++k) bump.center[k] = c.at(k).get<double>();
      }
      bump.radius = b.at("radius").get<double>();
      bump.height = b.value("height", 1.0);
      if (!(bump.radius > 0.0)) throw ConfigError("bump radius must be positive");
      spec.bumps.push_back(bump);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid field specification: ") + e.what());
  }
  return spec;
}

nlohmann::json to_json(const FieldSpec& spec, int dim) {
  nlohmann::json bumps = nlohmann::json::array();
  for (const Bump& b : spec.bumps) {
    nlohmann::json c = dim == 1 ? nlohmann::json(b.center[0]) : nlohmann::json({b.center[0], b.center[1]});
    bumps.push_back({{"center", c}, {"radius", b.radius}, {"height", b.height}});
  }
  return {{"constant", spec.constant}, {"bumps", bumps}};
}

nlohmann::json AssumptionFlags::to_json() const {
  return {{"i", support},
          {"ii", ellipticity},
          {"iii", regularity},
          {"measured_gamma0", measured_gamma0},
          {"measured_c1", measured_c1},
          {"detail", detail}};
}

ConductivityPair gen_pair(const std::shared_ptr<const KernelWeights>& weights, const ConductivityField& gamma1,
                          const VectorXd& profile, double eps, GeometryMode mode, const PairBounds& bounds,
                          const PairOptions& options) {
  const GridDomain& dom = weights->domain();
  if (profile.size() != dom.size() || gamma1.size() != dom.size())
    throw ShapeError("field length does not match node count");
  if (!(bounds.gamma0 > 0.0 && bounds.gamma0 < 1.0)) throw ConfigError("gamma0 must lie in (0, 1)");

  AssumptionFlags flags;
  std::ostringstream detail;

  std::vector<bool> allowed(static_cast<size_t>(dom.size()), false);
  const NodeSet& support_set = mode == GeometryMode::exterior_agreement ? dom.omega() : dom.sigma();
  for (Index i : support_set) allowed[static_cast<size_t>(i)] = true;
  if (eps != 0.0) {
    for (Index i = 0; i < dom.size(); ++i) {
      if (profile[i] != 0.0 && !allowed[static_cast<size_t>(i)]) {
        flags.support = false;
        detail << (mode == GeometryMode::exterior_agreement
                       ? "(i) gamma_1 = gamma_2 in the exterior violated"
                       : "(i) supp(gamma_1 - gamma_2) in Sigma violated")
               << " at node " << i << "; ";
        break;
      }
    }
  }

  const VectorXd g2 = gamma1.values() + eps * profile;
  if (g2.minCoeff() <= 0.0 || !g2.allFinite()) {
    throw AssumptionError("(ii) violated: gamma_2 is not positive (min " + std::to_string(g2.minCoeff()) + ")");
  }
  ConductivityPair pair{gamma1, ConductivityField(g2), {}};

  flags.measured_gamma0 = std::min(pair.gamma1.ellipticity(), pair.gamma2.ellipticity());
  flags.ellipticity = pair.gamma1.satisfies_bounds(bounds.gamma0) && pair.gamma2.satisfies_bounds(bounds.gamma0);
  if (!flags.ellipticity)
    detail << "(ii) gamma_0 <= gamma <= 1/gamma_0 violated (measured " << flags.measured_gamma0 << " < "
           << bounds.gamma0 << "); ";

  const double s = weights->order();
  const int n = dom.dim();
  const double order = 2.0 * s + bounds.regularity_excess;
  const double p = n / s;
  flags.measured_c1 = std::max(bessel_norm(dom, pair.gamma1.deviation(), order, p),
                               bessel_norm(dom, pair.gamma2.deviation(), order, p));
  flags.regularity = flags.measured_c1 <= bounds.regularity_bound;
  if (!flags.regularity)
    detail << "(iii) ||m||_{H^{2s+e,n/s}} <= C1 violated (" << flags.measured_c1 << " > " << bounds.regularity_bound
           << "); ";
  flags.detail = detail.str();

  if (options.strict && !flags.all()) throw AssumptionError("inadmissible pair: " + flags.detail);
  pair.flags = flags;
  return pair;
}

}  // namespace fraccond

#include <cmath>
#include <limits>
#include <numbers>

#include "fraccond/error.hpp"
#include "fraccond/stability.hpp"

namespace fraccond {

UcpRecord ucp_probe(const std::shared_ptr<const KernelWeights>& weights, const VectorXd& v,
                    const NodeSet& window, double s_prime, double energy) {
  const GridDomain& dom = weights->domain();
  const double s = weights->order();
  if (v.size() != dom.size()) throw ShapeError("field length does not match node count");
  if (window.empty()) throw ShapeError("UCP window is empty");
  if (!(s_prime < s)) throw DomainError("s' must be smaller than s");

  NodeSet support;
  for (Index i = 0; i < dom.size(); ++i)
    if (v[i] != 0.0) support.push_back(i);
  for (Index i : window)
    if (v[i] != 0.0) throw ShapeError("field support meets the UCP window");

  UcpRecord rec;
  rec.energy = energy;
  rec.distance = support.empty() ? std::numeric_limits<double>::infinity()
                                 : node_set_distance(dom, support, window);
  const double hs = bessel_norm(dom, v, s, 2.0);
  if (hs > energy * (1.0 + 1e-12)) throw AssumptionError("||v||_{H^s} = " + std::to_string(hs) + " exceeds E");
  if (support.empty()) return rec;

  rec.lhs = bessel_norm(dom, v, s_prime, 2.0);
  const VectorXd lv = weights->apply(v);
  const SobolevMetric metric = gram_matrix(dom, window, s);
  VectorXd functional(static_cast<Index>(window.size()));
  for (size_t k = 0; k < window.size(); ++k) functional[static_cast<Index>(k)] = dom.cell_volume() * lv[window[k]];
  rec.residual = metric.dual_norm(functional);
  return rec;
}

UcpEnvelope fit_ucp_envelope(const std::vector<UcpRecord>& records) {
  UcpEnvelope env;
  double ratio = 0.0;
  for (const auto& r : records) {
    if (!(r.energy > 0.0)) continue;
    ratio = std::max(ratio, std::max(r.lhs, r.residual) / r.energy);
  }
  if (!(ratio > 0.0)) return env;
  // C E / residual >= e for every record, so the logarithm is at least 1.
  env.c = std::numbers::e * ratio;
  double sigma = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (!(r.energy > 0.0) || r.lhs <= 0.0) continue;
    if (r.residual <= 0.0) continue;
    const double x = std::log(env.c * r.energy / r.residual);
    const double y = r.lhs / (env.c * r.energy);
    if (x <= 1.0) continue;  // log x = 0 and y < 1: any sigma works
    sigma = std::min(sigma, std::log(1.0 / y) / std::log(x));
  }
  env.sigma = std::isfinite(sigma) ? sigma : 1.0;
  env.covers = true;
  for (const auto& r : records) {
    if (!(r.energy > 0.0) || r.lhs <= 0.0) continue;
    if (r.residual <= 0.0) {
      env.covers = false;
      continue;
    }
    const double bound = env.c * r.energy * std::pow(std::log(env.c * r.energy / r.residual), -env.sigma);
    if (r.lhs > bound * (1.0 + 1e-12)) env.covers = false;
  }
  return env;
}

}  // namespace fraccond

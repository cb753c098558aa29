#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "fraccond/error.hpp"
#include "fraccond/stability.hpp"

namespace fraccond {

namespace {

struct Metrics {
  std::optional<SobolevMetric> w1, w2, w, ucp;
};

VectorXd restrict_to(const GridDomain& dom, const VectorXd& u, const NodeSet& nodes) {
  VectorXd out = VectorXd::Zero(dom.size());
  for (Index i : nodes) out[i] = u[i];
  return out;
}

VectorXd functional_on(const GridDomain& dom, const VectorXd& u, const NodeSet& nodes) {
  VectorXd out(static_cast<Index>(nodes.size()));
  for (size_t k = 0; k < nodes.size(); ++k) out[static_cast<Index>(k)] = dom.cell_volume() * u[nodes[k]];
  return out;
}

double block_gap_norm(const NonlocalForm& a, const NonlocalForm& b, const NodeSet& from, const NodeSet& to,
                      const SobolevMetric& g_from, const SobolevMetric& g_to) {
  const MatrixXd diff = dn_block(a, from, to) - dn_block(b, from, to);
  return dn_operator_norm(diff, g_from, g_to);
}

PartialReduction partial_reduction(const std::shared_ptr<const KernelWeights>& weights,
                                   const ConductivityField& gamma1, const ConductivityField& gamma2,
                                   const NonlocalForm& c1, const NonlocalForm& c2, double theta0,
                                   const Metrics& m) {
  const GridDomain& dom = weights->domain();
  const auto q1 = assemble_schrodinger_form(weights, liouville_potential(*weights, gamma1));
  const auto q2 = assemble_schrodinger_form(weights, liouville_potential(*weights, gamma2));
  PartialReduction out;
  out.lhs = block_gap_norm(q1, q2, dom.w1(), dom.w2(), *m.w1, *m.w2);
  out.delta_w = block_gap_norm(c1, c2, dom.w(), dom.w(), *m.w, *m.w);
  out.rhs = out.delta_w + std::pow(out.delta_w, 0.5 * (1.0 - theta0));
  return out;
}

void require_partial_geometry(const GridDomain& dom, double s, double theta0) {
  if (dom.w().empty()) throw ShapeError("partial-data reduction needs an enclosing window W");
  if (!is_subset(dom.w1(), dom.w()) || !is_subset(dom.w2(), dom.w()))
    throw ShapeError("partial-data reduction needs W1 and W2 inside W");
  const double lo = s / dom.dim();
  if (!(theta0 > lo && theta0 < 1.0))
    throw DomainError("theta0 must lie in (s/n, 1) = (" + std::to_string(lo) + ", 1)");
}

StabilityRecord sweep_one(const std::shared_ptr<const KernelWeights>& weights, const SweepConfig& cfg,
                          const ConductivityField& base, const VectorXd& profile, double eps, const Metrics& m) {
  const GridDomain& dom = weights->domain();
  const GeometryMode mode = dom.config().mode;
  const double s = weights->order();
  StabilityRecord rec;
  rec.eps = eps;
  try {
    const auto pair = gen_pair(weights, base, profile, eps, mode, cfg.bounds, {.strict = false});
    rec.flags = pair.flags;
    if (!pair.flags.all()) {
      rec.status = "assumption";
      rec.message = pair.flags.detail;
    }
    const auto c1 = assemble_conductivity_form(weights, pair.gamma1);
    const auto c2 = assemble_conductivity_form(weights, pair.gamma2);

    if (mode == GeometryMode::exterior_agreement)
      rec.delta = block_gap_norm(c1, c2, dom.w1(), dom.w2(), *m.w1, *m.w2);
    else
      rec.delta = block_gap_norm(c1, c2, dom.w(), dom.w(), *m.w, *m.w);

    const VectorXd diff = pair.gamma1.values() - pair.gamma2.values();
    const VectorXd sqrt_diff = pair.gamma1.sqrt_values() - pair.gamma2.sqrt_values();
    rec.d_hs = bessel_norm(dom, diff, s, 2.0);
    rec.d_lp = lattice_lp_norm(dom, diff, cfg.p);
    rec.d_sqrt_hs = bessel_norm(dom, sqrt_diff, s, 2.0);

    if (mode == GeometryMode::exterior_agreement) {
      const VectorXd dq = liouville_potential(*weights, pair.gamma1) - liouville_potential(*weights, pair.gamma2);
      rec.eta = lattice_lp_norm(dom, restrict_to(dom, dq, dom.omega()), dom.dim() / (2.0 * s));
    } else {
      const VectorXd lv = weights->apply(sqrt_diff);
      rec.eta = m.ucp->dual_norm(functional_on(dom, lv, m.ucp->nodes()));
      rec.ucp_lhs = bessel_norm(dom, sqrt_diff, cfg.s_prime, 2.0);
    }

    if (m.w) {
      const auto pr = partial_reduction(weights, pair.gamma1, pair.gamma2, c1, c2, cfg.theta0, m);
      rec.partial_lhs = pr.lhs;
      rec.partial_rhs = pr.rhs;
    }
  } catch (const Error& e) {
    rec.status = "failed";
    rec.message = e.what();
  }
  return rec;
}

}  // namespace

std::vector<StabilityRecord> stability_sweep(const std::shared_ptr<const KernelWeights>& weights,
                                             const SweepConfig& config) {
  if (config.ladder.empty()) throw UsageError("empty amplitude ladder: nothing to do");
  const GridDomain& dom = weights->domain();
  const GeometryMode mode = dom.config().mode;
  const double s = weights->order();
  const int n = dom.dim();
  if (!(config.p >= 1.0 && (n <= 2.0 * s || config.p < 2.0 * n / (n - 2.0 * s))))
    throw DomainError("p must satisfy 1 <= p < 2n/(n-2s)");
  if (!(config.s_prime < s)) throw DomainError("s' must be smaller than s");

  const AuditReport audit = validate_geometry(dom, mode);
  if (!audit.passed()) throw ShapeError("geometry audit failed for mode " + to_string(mode));

  Metrics m;
  if (mode == GeometryMode::exterior_agreement) {
    m.w1 = gram_matrix(dom, dom.w1(), s);
    m.w2 = gram_matrix(dom, dom.w2(), s);
  } else {
    if (dom.w().empty()) throw ShapeError("compact-difference sweeps need a window W");
    m.w = gram_matrix(dom, dom.w(), s);
    m.ucp = gram_matrix(dom, set_union(dom.w1(), dom.w2()), s);
  }
  if (!dom.w().empty()) {
    require_partial_geometry(dom, s, config.theta0);
    if (!m.w1) m.w1 = gram_matrix(dom, dom.w1(), s);
    if (!m.w2) m.w2 = gram_matrix(dom, dom.w2(), s);
    if (!m.w) m.w = gram_matrix(dom, dom.w(), s);
  }

  const ConductivityField base(config.base.evaluate(dom));
  const VectorXd profile = config.profile.evaluate(dom);

  std::vector<double> ladder = config.ladder;
  std::sort(ladder.begin(), ladder.end());
  std::vector<StabilityRecord> records(ladder.size());

  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(ladder.size())));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k = next++; k < ladder.size(); k = next++)
      records[k] = sweep_one(weights, config, base, profile, ladder[k], m);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

PartialReduction check_partial_reduction(const std::shared_ptr<const KernelWeights>& weights,
                                         const ConductivityField& gamma1, const ConductivityField& gamma2,
                                         double theta0) {
  const GridDomain& dom = weights->domain();
  const double s = weights->order();
  require_partial_geometry(dom, s, theta0);
  Metrics m;
  m.w1 = gram_matrix(dom, dom.w1(), s);
  m.w2 = gram_matrix(dom, dom.w2(), s);
  m.w = gram_matrix(dom, dom.w(), s);
  const auto c1 = assemble_conductivity_form(weights, gamma1);
  const auto c2 = assemble_conductivity_form(weights, gamma2);
  return partial_reduction(weights, gamma1, gamma2, c1, c2, theta0, m);
}

double envelope_constant(const std::vector<std::pair<double, double>>& lhs_rhs) {
  double c = 0.0;
  for (const auto& [lhs, rhs] : lhs_rhs) {
    if (lhs <= 0.0) continue;
    if (rhs <= 0.0) return std::numeric_limits<double>::infinity();
    c = std::max(c, lhs / rhs);
  }
  return c;
}

}  // namespace fraccond

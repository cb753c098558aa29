#include "fraccond/dnmap.hpp"

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "fraccond/error.hpp"

namespace fraccond {

namespace {

std::vector<Index> exterior_positions(const GridDomain& dom, const NodeSet& nodes, const char* what) {
  std::vector<Index> pos;
  pos.reserve(nodes.size());
  for (Index node : nodes) {
    if (node < 0 || node >= dom.size() || dom.exterior_position(node) < 0)
      throw ShapeError(std::string(what) + " window contains a node outside the exterior");
    pos.push_back(dom.exterior_position(node));
  }
  return pos;
}

void check_nodes(const GridDomain& dom, const NodeSet& nodes, const char* what) {
  exterior_positions(dom, nodes, what);
}

VectorXd scatter(Index size, const NodeSet& nodes, const VectorXd& coefficients) {
  if (coefficients.size() != static_cast<Index>(nodes.size()))
    throw ShapeError("coefficient length does not match window size");
  VectorXd out = VectorXd::Zero(size);
  for (size_t k = 0; k < nodes.size(); ++k) out[nodes[k]] = coefficients[static_cast<Index>(k)];
  return out;
}

double relative_gap(double lhs, double rhs, double scale) {
  if (!(scale > 0.0)) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

}  // namespace

nlohmann::json DnProvenance::to_json() const {
  nlohmann::json j = {{"equation", to_string(equation)}, {"n", dim},          {"s", order},
                      {"h", spacing},                    {"R", half_width},   {"kernel", to_string(kernel)},
                      {"geometry_hash", geometry_hash}};
  j["gamma0"] = gamma0 ? nlohmann::json(*gamma0) : nlohmann::json(nullptr);
  return j;
}

DnMap::DnMap(NodeSet nodes, MatrixXd matrix, DnProvenance provenance)
    : nodes_(std::move(nodes)), matrix_(std::move(matrix)), provenance_(std::move(provenance)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() != static_cast<Index>(nodes_.size()))
    throw ShapeError("DN matrix does not match its node set");
}

DnMap dn_map(const NonlocalForm& form) {
  const GridDomain& dom = form.domain();
  const NodeSet& omega = dom.omega();
  const NodeSet& ext = dom.exterior();
  const auto& fac = form.interior();
  const MatrixXd a_oe = form.matrix()(omega, ext);
  const MatrixXd x = fac.ldlt.solve(a_oe);
  MatrixXd lambda = form.matrix()(ext, ext);
  lambda.noalias() -= a_oe.transpose() * x;

  DnProvenance prov;
  prov.equation = form.equation();
  prov.dim = dom.dim();
  prov.order = form.weights()->order();
  prov.spacing = dom.spacing();
  prov.half_width = dom.half_width();
  prov.kernel = form.weights()->model();
  prov.geometry_hash = dom.geometry_hash();
  return DnMap(ext, std::move(lambda), std::move(prov));
}

MatrixXd restrict_dn(const DnMap& map, const NodeSet& from, const NodeSet& to) {
  auto positions = [&](const NodeSet& set) {
    std::vector<Index> out;
    for (Index node : set) {
      auto it = std::lower_bound(map.nodes().begin(), map.nodes().end(), node);
      if (it == map.nodes().end() || *it != node)
        throw ShapeError("window node " + std::to_string(node) + " is not an exterior node of the DN map");
      out.push_back(static_cast<Index>(it - map.nodes().begin()));
    }
    return out;
  };
  return map.matrix()(positions(to), positions(from));
}

MatrixXd dn_block(const NonlocalForm& form, const NodeSet& from, const NodeSet& to) {
  const GridDomain& dom = form.domain();
  check_nodes(dom, from, "source");
  check_nodes(dom, to, "target");
  MatrixXd data = MatrixXd::Zero(dom.size(), static_cast<Index>(from.size()));
  for (size_t b = 0; b < from.size(); ++b) data(from[b], static_cast<Index>(b)) = 1.0;
  const MatrixXd u = solve_exterior_problem(form, data);
  return form.matrix()(to, Eigen::all) * u;
}

double dn_operator_norm(const MatrixXd& block, const SobolevMetric& from, const SobolevMetric& to) {
  if (block.rows() != to.size() || block.cols() != from.size())
    throw ShapeError("DN block dimensions do not match the window metrics");
  if (block.size() == 0) return 0.0;
  const MatrixXd l_from = from.cholesky_lower();
  const MatrixXd l_to = to.cholesky_lower();
  const MatrixXd x = l_to.triangularView<Eigen::Lower>().solve(block);
  const MatrixXd mt = l_from.triangularView<Eigen::Lower>().solve(x.transpose());
  Eigen::JacobiSVD<MatrixXd> svd(mt);
  return svd.singularValues()[0];
}

double max_asymmetry(const MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw ShapeError("asymmetry of a non-square matrix");
  const double top = matrix.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return 0.0;
  return (matrix - matrix.transpose()).cwiseAbs().maxCoeff() / top;
}

double max_asymmetry(const DnMap& map) { return max_asymmetry(map.matrix()); }

double dn_pairing(const NonlocalForm& form, const VectorXd& f, const VectorXd& g) {
  return form(solve_exterior_problem(form, f), g);
}

double gauge_residual(const NonlocalForm& form, const VectorXd& f, const VectorXd& g, const VectorXd& shift_f,
                      const VectorXd& shift_g) {
  const GridDomain& dom = form.domain();
  if (shift_f.size() != dom.size() || shift_g.size() != dom.size())
    throw ShapeError("gauge shift length does not match node count");
  VectorXd f2 = f, g2 = g;
  for (Index i : dom.omega()) {
    f2[i] += shift_f[i];
    g2[i] += shift_g[i];
  }
  const double base = dn_pairing(form, f, g);
  const double shifted = dn_pairing(form, f2, g2);
  return relative_gap(base, shifted, std::max(std::abs(base), std::abs(shifted)));
}

IdentityCheck verify_dn_reduction(const std::shared_ptr<const KernelWeights>& weights,
                                  const ConductivityField& gamma1, const ConductivityField& gamma2,
                                  const VectorXd& f, const VectorXd& g, const DnWindows& windows,
                                  const DnReductionOptions& options) {
  const GridDomain& dom = weights->domain();
  check_nodes(dom, windows.from, "source");
  check_nodes(dom, windows.to, "target");
  if (gamma1.size() != dom.size() || gamma2.size() != dom.size())
    throw ShapeError("conductivity length does not match node count");

  if (options.enforce_exterior_agreement) {
    double gap = 0.0;
    for (Index i : dom.exterior()) gap = std::max(gap, std::abs(gamma1.values()[i] - gamma2.values()[i]));
    const double scale = std::max(gamma1.max(), gamma2.max());
    if (gap > options.agreement_tolerance * scale)
      throw AssumptionError("assumption (i) violated: gamma_1 != gamma_2 in the exterior (max gap " +
                            std::to_string(gap) + ")");
  }

  const VectorXd fv = scatter(dom.size(), windows.from, f);
  const VectorXd gv = scatter(dom.size(), windows.to, g);

  const auto q1 = assemble_schrodinger_form(weights, liouville_potential(*weights, gamma1));
  const auto q2 = assemble_schrodinger_form(weights, liouville_potential(*weights, gamma2));
  const double lhs = dn_pairing(q1, fv, gv) - dn_pairing(q2, fv, gv);

  const VectorXd f_scaled = fv.cwiseQuotient(gamma1.sqrt_values());
  const VectorXd g_scaled = gv.cwiseQuotient(gamma2.sqrt_values());
  const auto c1 = assemble_conductivity_form(weights, gamma1);
  const auto c2 = assemble_conductivity_form(weights, gamma2);
  const double rhs = dn_pairing(c1, f_scaled, g_scaled) - dn_pairing(c2, f_scaled, g_scaled);

  IdentityCheck out{lhs, rhs, 0.0};
  out.residual = relative_gap(lhs, rhs, std::max(std::abs(lhs), std::abs(rhs)));
  return out;
}

AlessandriniGap alessandrini_gap(const std::shared_ptr<const KernelWeights>& weights, const VectorXd& q1,
                                 const VectorXd& q2, const VectorXd& f1, const VectorXd& f2,
                                 const NodeSet& window) {
  const GridDomain& dom = weights->domain();
  check_nodes(dom, window, "measurement");
  const VectorXd f1v = scatter(dom.size(), window, f1);
  const VectorXd f2v = scatter(dom.size(), window, f2);
  const auto form1 = assemble_schrodinger_form(weights, q1);
  const auto form2 = assemble_schrodinger_form(weights, q2);
  const VectorXd u1 = solve_exterior_problem(form1, f1v);
  const VectorXd u2 = solve_exterior_problem(form2, f2v);
  const double mass = dom.cell_volume();

  AlessandriniGap out;
  for (size_t k = 0; k < window.size(); ++k) {
    const Index i = window[k];
    out.lhs += mass * (q1[i] - q2[i]) * f1v[i] * f2v[i];
  }
  out.dn_term = form1(u1, f2v) - form2(solve_exterior_problem(form2, f1v), f2v);
  for (Index i : dom.omega()) out.interior_term += mass * (q1[i] - q2[i]) * u1[i] * u2[i];
  out.rhs = out.dn_term - out.interior_term;
  const double scale = std::max({std::abs(out.lhs), std::abs(out.dn_term), std::abs(out.interior_term)});
  out.residual = relative_gap(out.lhs, out.rhs, scale);
  return out;
}

MultiplierNorm multiplier_norm(const GridDomain& domain, const VectorXd& qdiff, const SobolevMetric& metric,
                               const MultiplierOptions& options) {
  if (qdiff.size() != domain.size()) throw ShapeError("potential length does not match node count");
  if (options.starts < 1) throw UsageError("multiplier_norm needs at least one start");
  const Index k = metric.size();
  VectorXd d(k);
  for (Index a = 0; a < k; ++a) d[a] = domain.cell_volume() * qdiff[metric.nodes()[static_cast<size_t>(a)]];

  MultiplierNorm best;
  best.starts = options.starts;
  best.u1 = VectorXd::Zero(k);
  best.u2 = VectorXd::Zero(k);
  if (d.cwiseAbs().maxCoeff() == 0.0) return best;

  auto normalize = [&](VectorXd v) {
    const double nv = metric.norm(v);
    return nv > 0.0 ? VectorXd(v / nv) : v;
  };
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  for (int start = 0; start < options.starts; ++start) {
    VectorXd b(k);
    for (Index i = 0; i < k; ++i) b[i] = normal(rng);
    b = normalize(b);
    VectorXd a = normalize(metric.solve(d.cwiseProduct(b)));
    double value = std::abs(a.dot(d.cwiseProduct(b)));
    for (int it = 0; it < options.max_iterations; ++it) {
      b = normalize(metric.solve(d.cwiseProduct(a)));
      a = normalize(metric.solve(d.cwiseProduct(b)));
      const double next = std::abs(a.dot(d.cwiseProduct(b)));
      const bool done = std::abs(next - value) <= options.tolerance * std::max(next, 1e-300);
      value = next;
      if (done) break;
    }
    if (value > best.value) {
      best.value = value;
      best.u1 = a;
      best.u2 = b;
    }
  }
  return best;
}

}  // namespace fraccond

#include <cmath>
#include <limits>

#include "fraccond/error.hpp"
#include "fraccond/stability.hpp"

namespace fraccond {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 50;

MatrixXd unit_data(Index size, const NodeSet& nodes) {
  MatrixXd data = MatrixXd::Zero(size, static_cast<Index>(nodes.size()));
  for (size_t k = 0; k < nodes.size(); ++k) data(nodes[k], static_cast<Index>(k)) = 1.0;
  return data;
}

}  // namespace

ReconstructionObjective::ReconstructionObjective(std::shared_ptr<const KernelWeights> weights, MatrixXd measured,
                                                 ReconstructionConfig config, VectorXd initial_deviation)
    : weights_(std::move(weights)),
      measured_(std::move(measured)),
      config_(std::move(config)),
      initial_(std::move(initial_deviation)),
      metric_from_(gram_matrix(weights_->domain(), config_.from, weights_->order())),
      metric_to_(gram_matrix(weights_->domain(), config_.to, weights_->order())) {
  const GridDomain& dom = weights_->domain();
  if (!(config_.alpha > 0.0)) throw ConfigError("regularization alpha must be positive");
  if (!(config_.gamma0 > 0.0 && config_.gamma0 < 1.0)) throw ConfigError("gamma0 must lie in (0, 1)");
  if (config_.support.empty()) throw ConfigError("reconstruction support is empty");
  if (initial_.size() != dom.size()) throw ShapeError("initial deviation length does not match node count");
  if (measured_.rows() != static_cast<Index>(config_.to.size()) ||
      measured_.cols() != static_cast<Index>(config_.from.size()))
    throw ShapeError("measured DN block is " + std::to_string(measured_.rows()) + "x" +
                     std::to_string(measured_.cols()) + ", windows require " + std::to_string(config_.to.size()) +
                     "x" + std::to_string(config_.from.size()));
  for (Index i : config_.support)
    if (i < 0 || i >= dom.size()) throw ShapeError("support node out of range");
  theta0_ = parameters_of(initial_);
  for (Index k = 0; k < theta0_.size(); ++k)
    if (theta0_[k] < lower_bound() - 1e-14 || theta0_[k] > upper_bound() + 1e-14)
      throw AssumptionError("(ii) violated by the initial deviation");
}

double ReconstructionObjective::lower_bound() const { return std::sqrt(config_.gamma0) - 1.0; }
double ReconstructionObjective::upper_bound() const { return 1.0 / std::sqrt(config_.gamma0) - 1.0; }

VectorXd ReconstructionObjective::parameters_of(const VectorXd& deviation) const {
  VectorXd theta(parameters());
  for (Index k = 0; k < theta.size(); ++k) theta[k] = deviation[config_.support[static_cast<size_t>(k)]];
  return theta;
}

VectorXd ReconstructionObjective::deviation_of(const VectorXd& theta) const {
  if (theta.size() != parameters()) throw ShapeError("parameter length does not match support");
  VectorXd m = initial_;
  for (Index k = 0; k < theta.size(); ++k) m[config_.support[static_cast<size_t>(k)]] = theta[k];
  return m;
}

MatrixXd ReconstructionObjective::block(const NonlocalForm& form) const {
  return dn_block(form, config_.from, config_.to);
}

ReconstructionObjective::Value ReconstructionObjective::evaluate(const VectorXd& theta) const {
  return compute(theta, nullptr);
}

ReconstructionObjective::Value ReconstructionObjective::evaluate(const VectorXd& theta, VectorXd& gradient) const {
  return compute(theta, &gradient);
}

ReconstructionObjective::Value ReconstructionObjective::compute(const VectorXd& theta, VectorXd* gradient) const {
  const GridDomain& dom = weights_->domain();
  const VectorXd m = deviation_of(theta);
  const ConductivityField gamma = ConductivityField::from_deviation(m);
  const NonlocalForm form = assemble_conductivity_form(weights_, gamma);

  const MatrixXd u1 = solve_exterior_problem(form, unit_data(dom.size(), config_.from));
  const MatrixXd residual = form.matrix()(config_.to, Eigen::all) * u1 - measured_;

  const MatrixXd l_from = metric_from_.cholesky_lower();
  const MatrixXd l_to = metric_to_.cholesky_lower();
  // Y = L_to^{-1} R L_from^{-T}
  const MatrixXd x = l_to.triangularView<Eigen::Lower>().solve(residual);
  const MatrixXd y = l_from.triangularView<Eigen::Lower>().solve(x.transpose()).transpose();

  Value v;
  v.misfit = 0.5 * y.squaredNorm();
  const VectorXd dtheta = theta - theta0_;
  v.regularization = config_.alpha * dom.cell_volume() * dtheta.squaredNorm();
  v.objective = v.misfit + v.regularization;

  if (gradient == nullptr) return v;

  // P = G_to^{-1} R G_from^{-1} = L_to^{-T} Y L_from^{-1}
  const MatrixXd pa = l_to.transpose().triangularView<Eigen::Upper>().solve(y);
  const MatrixXd p = l_from.transpose().triangularView<Eigen::Upper>().solve(pa.transpose()).transpose();
  const MatrixXd u2 = solve_exterior_problem(form, unit_data(dom.size(), config_.to));
  const MatrixXd s = u2 * p * u1.transpose();

  const MatrixXd& w = weights_->matrix();
  const VectorXd& g = gamma.sqrt_values();
  const VectorXd sd = s.diagonal();
  gradient->resize(theta.size());
  for (Index k = 0; k < theta.size(); ++k) {
    const Index node = config_.support[static_cast<size_t>(k)];
    double acc = 0.0;
    for (Index j = 0; j < dom.size(); ++j) {
      if (j == node) continue;
      acc += w(j, node) * g[j] * (sd[node] - s(node, j) - s(j, node) + sd[j]);
    }
    (*gradient)[k] = acc + 2.0 * config_.alpha * dom.cell_volume() * dtheta[k];
  }
  return v;
}

ReconstructionResult reconstruct(const std::shared_ptr<const KernelWeights>& weights, const MatrixXd& measured,
                                 const ReconstructionConfig& config, const VectorXd& initial_deviation) {
  const ReconstructionObjective objective(weights, measured, config, initial_deviation);
  const double lo = objective.lower_bound(), hi = objective.upper_bound();
  auto project = [&](VectorXd t) { return VectorXd(t.cwiseMax(lo).cwiseMin(hi)); };

  ReconstructionResult out;
  VectorXd theta = project(objective.parameters_of(initial_deviation));
  VectorXd grad;
  auto value = objective.evaluate(theta, grad);
  double first_pg = -1.0;
  double step = 0.0;
  VectorXd prev_theta, prev_grad;

  for (int it = 0;; ++it) {
    const double pg = (theta - project(theta - grad)).norm();
    if (first_pg < 0.0) first_pg = pg;
    out.history.push_back({it, value.objective, value.misfit, value.regularization, pg, step});
    if (pg == 0.0 || pg <= config.tolerance * first_pg) {
      out.converged = true;
      out.message = "projected gradient below tolerance";
      break;
    }
    if (it >= config.max_iterations) {
      out.message = "iteration limit reached";
      break;
    }

    double trial = 0.0;
    if (prev_theta.size() == theta.size()) {
      const VectorXd ds = theta - prev_theta, dg = grad - prev_grad;
      const double sy = ds.dot(dg);
      if (sy > 0.0) trial = ds.squaredNorm() / sy;
    }
    if (!(trial > 0.0) || !std::isfinite(trial)) trial = 0.1 * (hi - lo) / std::max(grad.cwiseAbs().maxCoeff(), 1e-300);

    bool accepted = false;
    VectorXd next;
    ReconstructionObjective::Value next_value;
    for (int bt = 0; bt < kMaxBacktracks; ++bt, trial *= 0.5) {
      next = project(theta - trial * grad);
      const double decrease = grad.dot(theta - next);
      if (decrease <= 0.0) break;
      next_value = objective.evaluate(next);
      if (next_value.objective <= value.objective - kArmijo * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.line_search_failed = true;
      out.message = "line search failed; returning best iterate";
      break;
    }
    prev_theta = theta;
    prev_grad = grad;
    theta = next;
    step = trial;
    value = objective.evaluate(theta, grad);
  }

  out.deviation = objective.deviation_of(theta);
  out.gamma = (VectorXd::Ones(out.deviation.size()) + out.deviation).array().square().matrix();
  out.objective = value.objective;
  return out;
}

double relative_l2_error(const VectorXd& estimate, const VectorXd& truth) {
  if (estimate.size() != truth.size()) throw ShapeError("field lengths differ");
  const double denom = truth.norm();
  if (!(denom > 0.0)) return (estimate - truth).norm();
  return (estimate - truth).norm() / denom;
}

}  // namespace fraccond

#include "fraccond/forms.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "fraccond/error.hpp"

namespace fraccond {

ConductivityField::ConductivityField(VectorXd values) : values_(std::move(values)) {
  for (Index i = 0; i < values_.size(); ++i)
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
      throw AssumptionError("conductivity must be positive and finite at every node (node " +
                            std::to_string(i) + ")");
  sqrt_ = values_.cwiseSqrt();
}

ConductivityField ConductivityField::constant(Index size, double value) {
  return ConductivityField(VectorXd::Constant(size, value));
}

ConductivityField ConductivityField::from_deviation(const VectorXd& deviation) {
  return ConductivityField((VectorXd::Ones(deviation.size()) + deviation).array().square().matrix());
}

VectorXd ConductivityField::deviation() const { return sqrt_ - VectorXd::Ones(sqrt_.size()); }

double ConductivityField::ellipticity() const { return std::min({1.0, min(), 1.0 / max()}); }

bool ConductivityField::satisfies_bounds(double gamma0) const {
  return min() >= gamma0 && max() <= 1.0 / gamma0;
}

std::string to_string(Equation eq) { return eq == Equation::conductivity ? "conductivity" : "schroedinger"; }

struct NonlocalForm::Cache {
  std::once_flag once;
  InteriorFactorization factorization;
  std::exception_ptr failure;
};

NonlocalForm::NonlocalForm(Equation equation, std::shared_ptr<const KernelWeights> weights, MatrixXd matrix,
                           std::optional<VectorXd> potential)
    : equation_(equation),
      weights_(std::move(weights)),
      matrix_(std::move(matrix)),
      potential_(std::move(potential)),
      cache_(std::make_shared<Cache>()) {
  if (!weights_) throw UsageError("form requires kernel weights");
  if (matrix_.rows() != weights_->size() || matrix_.cols() != weights_->size())
    throw ShapeError("form matrix does not match node count");
}

double NonlocalForm::operator()(const VectorXd& u, const VectorXd& v) const {
  if (u.size() != size() || v.size() != size()) throw ShapeError("field length does not match node count");
  return u.dot(matrix_ * v);
}

MatrixXd NonlocalForm::block(const NodeSet& rows, const NodeSet& cols) const { return matrix_(rows, cols); }

const InteriorFactorization& NonlocalForm::interior() const {
  std::call_once(cache_->once, [this] {
    try {
      const NodeSet& omega = domain().omega();
      const MatrixXd a = matrix_(omega, omega);
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
      const VectorXd abs_eval = eig.eigenvalues().cwiseAbs();
      InteriorFactorization& f = cache_->factorization;
      f.min_singular = abs_eval.minCoeff();
      f.max_singular = abs_eval.maxCoeff();
      if (f.relative_margin() < kDirichletThreshold)
        throw DirichletEigenvalueError("zero is (numerically) a Dirichlet eigenvalue: interior block has "
                                       "sigma_min/sigma_max = " + std::to_string(f.relative_margin()),
                                       f.relative_margin());
      f.ldlt.compute(a);
      if (f.ldlt.info() != Eigen::Success)
        throw DirichletEigenvalueError("interior factorization failed", f.relative_margin());
    } catch (...) {
      cache_->failure = std::current_exception();
    }
  });
  if (cache_->failure) std::rethrow_exception(cache_->failure);
  return cache_->factorization;
}

NonlocalForm assemble_conductivity_form(std::shared_ptr<const KernelWeights> weights,
                                        const ConductivityField& gamma) {
  if (!weights) throw UsageError("null kernel weights");
  if (gamma.size() != weights->size()) throw ShapeError("conductivity length does not match node count");
  const VectorXd& g = gamma.sqrt_values();
  const MatrixXd& w = weights->matrix();
  MatrixXd a = -(w.array() * (g * g.transpose()).array()).matrix();
  a.diagonal() = g.cwiseProduct(w * g);
  return NonlocalForm(Equation::conductivity, std::move(weights), std::move(a), std::nullopt);
}

VectorXd liouville_potential(const KernelWeights& weights, const ConductivityField& gamma, PotentialSign sign) {
  if (gamma.size() != weights.size()) throw ShapeError("conductivity length does not match node count");
  const VectorXd lm = weights.apply(gamma.deviation());
  const double sgn = sign == PotentialSign::negative ? -1.0 : 1.0;
  return sgn * lm.cwiseQuotient(gamma.sqrt_values());
}

NonlocalForm assemble_schrodinger_form(std::shared_ptr<const KernelWeights> weights, const VectorXd& q) {
  if (!weights) throw UsageError("null kernel weights");
  if (q.size() != weights->size()) throw ShapeError("potential length does not match node count");
  if (!q.allFinite()) throw AssumptionError("potential must be finite");
  MatrixXd a = weights->form_matrix();
  a.diagonal() += weights->domain().cell_volume() * q;
  return NonlocalForm(Equation::schroedinger, std::move(weights), std::move(a), q);
}

double verify_liouville_identity(const NonlocalForm& conductivity, const NonlocalForm& schroedinger,
                                 const ConductivityField& gamma, const VectorXd& u, const VectorXd& phi) {
  if (conductivity.equation() != Equation::conductivity || schroedinger.equation() != Equation::schroedinger)
    throw UsageError("Liouville check needs a conductivity form and a Schroedinger form");
  if (conductivity.weights() != schroedinger.weights())
    throw UsageError("conductivity and Schroedinger forms were built from different kernel weights");
  const VectorXd& g = gamma.sqrt_values();
  const double lhs = conductivity(u, phi);
  const double rhs = schroedinger(g.cwiseProduct(u), g.cwiseProduct(phi));
  double scale = std::sqrt(std::abs(conductivity(u, u)) * std::abs(conductivity(phi, phi)));
  if (!(scale > 0.0)) scale = std::max(std::abs(lhs), std::abs(rhs));
  if (!(scale > 0.0)) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

double verify_liouville_identity(const std::shared_ptr<const KernelWeights>& weights,
                                 const ConductivityField& gamma, const VectorXd& u, const VectorXd& phi,
                                 PotentialSign sign) {
  const auto cond = assemble_conductivity_form(weights, gamma);
  const auto schr = assemble_schrodinger_form(weights, liouville_potential(*weights, gamma, sign));
  return verify_liouville_identity(cond, schr, gamma, u, phi);
}

MatrixXd solve_exterior_problem(const NonlocalForm& form, const MatrixXd& data) {
  if (data.rows() != form.size()) throw ShapeError("exterior data length does not match node count");
  const GridDomain& dom = form.domain();
  const NodeSet& omega = dom.omega();
  const NodeSet& ext = dom.exterior();
  const auto& fac = form.interior();

  MatrixXd u = data;
  const MatrixXd rhs = -(form.matrix()(omega, ext) * data(ext, Eigen::all));
  const MatrixXd interior_values = fac.ldlt.solve(rhs);
  u(omega, Eigen::all) = interior_values;
  return u;
}

VectorXd solve_exterior_problem(const NonlocalForm& form, const VectorXd& f) {
  const MatrixXd data = f;
  return solve_exterior_problem(form, data).col(0);
}

double check_dirichlet_eigenvalue(const NonlocalForm& form) {
  const NodeSet& omega = form.domain().omega();
  const MatrixXd a = form.matrix()(omega, omega);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().minCoeff() / form.domain().cell_volume();
}

double smallest_interior_eigenvalue(const NonlocalForm& form) {
  const NodeSet& omega = form.domain().omega();
  const MatrixXd a = form.matrix()(omega, omega);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() / form.domain().cell_volume();
}

}  // namespace fraccond

#pragma once

#include <memory>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fraccond/fracops.hpp"

namespace fraccond {

/// Nodal conductivity gamma > 0 together with its background deviation
/// m = gamma^{1/2} - 1.
class ConductivityField {
 public:
  /// Throws AssumptionError for nonpositive or non-finite values.
  explicit ConductivityField(VectorXd values);

  static ConductivityField constant(Index size, double value);
  /// gamma = (1 + m)^2
  static ConductivityField from_deviation(const VectorXd& deviation);

  Index size() const { return values_.size(); }
  const VectorXd& values() const { return values_; }
  const VectorXd& sqrt_values() const { return sqrt_; }
  VectorXd deviation() const;

  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }
  /// Largest gamma_0 in (0, 1] with gamma_0 <= gamma <= 1/gamma_0.
  double ellipticity() const;
  bool satisfies_bounds(double gamma0) const;

 private:
  VectorXd values_;
  VectorXd sqrt_;
};

enum class Equation { conductivity, schroedinger };

std::string to_string(Equation eq);

/// Sign convention of the Liouville potential q = sign * (L m) / gamma^{1/2}.
enum class PotentialSign { negative, positive };

/// Factorization of the interior block A_{Omega,Omega}, computed once per form.
struct InteriorFactorization {
  Eigen::LDLT<MatrixXd> ldlt;
  double min_singular = 0.0;
  double max_singular = 0.0;
  double relative_margin() const { return max_singular > 0.0 ? min_singular / max_singular : 0.0; }
};

/// Symmetric matrix of a nonlocal bilinear form over all box nodes.
///
/// Forms are immutable after assembly. The interior factorization is created
/// on first use and shared between copies; concurrent solves are safe.
class NonlocalForm {
 public:
  NonlocalForm(Equation equation, std::shared_ptr<const KernelWeights> weights, MatrixXd matrix,
               std::optional<VectorXd> potential);

  Equation equation() const { return equation_; }
  const std::shared_ptr<const KernelWeights>& weights() const { return weights_; }
  const GridDomain& domain() const { return weights_->domain(); }
  const MatrixXd& matrix() const { return matrix_; }
  const std::optional<VectorXd>& potential() const { return potential_; }
  Index size() const { return matrix_.rows(); }

  /// B(u, v) = u^T A v
  double operator()(const VectorXd& u, const VectorXd& v) const;

  MatrixXd block(const NodeSet& rows, const NodeSet& cols) const;

  /// Throws DirichletEigenvalueError when the interior block is near-singular.
  const InteriorFactorization& interior() const;

 private:
  struct Cache;
  Equation equation_;
  std::shared_ptr<const KernelWeights> weights_;
  MatrixXd matrix_;
  std::optional<VectorXd> potential_;
  std::shared_ptr<Cache> cache_;
};

/// Relative threshold on sigma_min / sigma_max of the interior block.
inline constexpr double kDirichletThreshold = 1e-10;

NonlocalForm assemble_conductivity_form(std::shared_ptr<const KernelWeights> weights,
                                        const ConductivityField& gamma);

VectorXd liouville_potential(const KernelWeights& weights, const ConductivityField& gamma,
                             PotentialSign sign = PotentialSign::negative);

NonlocalForm assemble_schrodinger_form(std::shared_ptr<const KernelWeights> weights, const VectorXd& q);

/// |B_gamma(u, phi) - B_q(gamma^{1/2} u, gamma^{1/2} phi)| / sqrt(B_gamma(u,u) B_gamma(phi,phi)).
/// Both forms must share one KernelWeights object (UsageError otherwise).
double verify_liouville_identity(const NonlocalForm& conductivity, const NonlocalForm& schroedinger,
                                 const ConductivityField& gamma, const VectorXd& u, const VectorXd& phi);

/// Convenience overload: assembles both forms from the same weights.
double verify_liouville_identity(const std::shared_ptr<const KernelWeights>& weights,
                                 const ConductivityField& gamma, const VectorXd& u, const VectorXd& phi,
                                 PotentialSign sign = PotentialSign::negative);

/// Solution agreeing with f on the exterior nodes and solving the interior
/// equations. Only the exterior entries of f are read.
VectorXd solve_exterior_problem(const NonlocalForm& form, const VectorXd& f);

/// Solutions for many exterior data at once; columns of `data` are full nodal vectors.
MatrixXd solve_exterior_problem(const NonlocalForm& form, const MatrixXd& data);

/// Smallest singular value of A_{Omega,Omega} divided by h^n. Never throws for
/// singular blocks; returns 0 instead.
double check_dirichlet_eigenvalue(const NonlocalForm& form);

/// Smallest eigenvalue (signed) of A_{Omega,Omega} / h^n.
double smallest_interior_eigenvalue(const NonlocalForm& form);

}  // namespace fraccond

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fraccond/forms.hpp"

namespace fraccond {

struct DnProvenance {
  Equation equation = Equation::conductivity;
  int dim = 1;
  double order = 0.0;
  double spacing = 0.0;
  double half_width = 0.0;
  KernelModel kernel = KernelModel::truncated;
  std::string geometry_hash;
  std::optional<double> gamma0;

  nlohmann::json to_json() const;
};

/// Exterior Dirichlet-to-Neumann map in the exterior nodal basis.
///
/// Entry (a, b) is B(u_b, e_a) where u_b solves the exterior problem with
/// data e_b. Rows and columns follow GridDomain::exterior().
class DnMap {
 public:
  DnMap(NodeSet nodes, MatrixXd matrix, DnProvenance provenance);

  Equation equation() const { return provenance_.equation; }
  const NodeSet& nodes() const { return nodes_; }
  const MatrixXd& matrix() const { return matrix_; }
  const DnProvenance& provenance() const { return provenance_; }
  Index size() const { return matrix_.rows(); }

 private:
  NodeSet nodes_;
  MatrixXd matrix_;
  DnProvenance provenance_;
};

/// Schur complement A_EE - A_EO A_OO^{-1} A_OE. Throws DirichletEigenvalueError.
DnMap dn_map(const NonlocalForm& form);

/// Block with rows `to` and columns `from` (global node indices, each in the
/// exterior). Throws ShapeError otherwise.
MatrixXd restrict_dn(const DnMap& map, const NodeSet& from, const NodeSet& to);

/// Same block computed from |from| solves instead of the full map.
MatrixXd dn_block(const NonlocalForm& form, const NodeSet& from, const NodeSet& to);

/// Largest singular value of L_to^{-1} B L_from^{-T}, i.e. the sup of
/// |b^T B a| over coefficient vectors with unit metric norms.
double dn_operator_norm(const MatrixXd& block, const SobolevMetric& from, const SobolevMetric& to);

/// max |A - A^T| / max |A| (0 for the zero matrix).
double max_asymmetry(const MatrixXd& matrix);
double max_asymmetry(const DnMap& map);

/// B(u_f, g): f supplies the exterior data, g is any full nodal vector.
double dn_pairing(const NonlocalForm& form, const VectorXd& f, const VectorXd& g);

/// Relative change of B(u_f, g) when f and g are shifted by fields supported in
/// Omega. `shift_f` and `shift_g` are full nodal vectors; their exterior
/// entries are ignored.
double gauge_residual(const NonlocalForm& form, const VectorXd& f, const VectorXd& g, const VectorXd& shift_f,
                      const VectorXd& shift_g);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs - rhs| / scale
};

struct DnWindows {
  NodeSet from;  // support of f
  NodeSet to;    // support of g
};

struct DnReductionOptions {
  bool enforce_exterior_agreement = true;
  double agreement_tolerance = 1e-13;
};

/// <(L_q1 - L_q2) f, g> against <(L_g1 - L_g2)(gamma_1^{-1/2} f), gamma_2^{-1/2} g>,
/// each pairing computed from separate exterior solves. f and g are
/// coefficient vectors on windows.from and windows.to.
/// Throws AssumptionError when enforcement is on and gamma_1 != gamma_2 on the exterior.
IdentityCheck verify_dn_reduction(const std::shared_ptr<const KernelWeights>& weights,
                                  const ConductivityField& gamma1, const ConductivityField& gamma2,
                                  const VectorXd& f, const VectorXd& g, const DnWindows& windows,
                                  const DnReductionOptions& options = {});

struct AlessandriniGap {
  double lhs = 0.0;            // h^n sum_W (q1 - q2) f1 f2
  double dn_term = 0.0;        // <(L_q1 - L_q2) f1, f2>
  double interior_term = 0.0;  // h^n sum_Omega (q1 - q2) u1 u2
  double rhs = 0.0;            // dn_term - interior_term
  double residual = 0.0;
};

/// f1, f2 are coefficient vectors on `window` (exterior nodes); q1, q2 are
/// full nodal potentials.
AlessandriniGap alessandrini_gap(const std::shared_ptr<const KernelWeights>& weights, const VectorXd& q1,
                                 const VectorXd& q2, const VectorXd& f1, const VectorXd& f2,
                                 const NodeSet& window);

struct MultiplierOptions {
  int starts = 20;
  int max_iterations = 500;
  double tolerance = 1e-13;
  std::uint64_t seed = 0;
};

struct MultiplierNorm {
  double value = 0.0;
  VectorXd u1;  // maximizing pair, unit metric norm, on metric.nodes()
  VectorXd u2;
  int starts = 0;
};

/// Multi-start alternating maximization of |u1^T h^n diag(qdiff) u2| over
/// metric-unit u1, u2 supported on metric.nodes(). qdiff is a full nodal
/// vector. The result is a lower bound of the sup.
MultiplierNorm multiplier_norm(const GridDomain& domain, const VectorXd& qdiff, const SobolevMetric& metric,
                               const MultiplierOptions& options = {});

}  // namespace fraccond

#pragma once

#include <memory>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fraccond/geometry.hpp"

namespace fraccond {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Normalization constant C_{n,s} of the singular kernel, chosen so that the
/// nonlocal form (C/2) * int int (u(x)-u(y))^2 / |x-y|^{n+2s} equals the
/// Fourier form int |xi|^{2s} |u^|^2. Evaluated through log-Gamma.
/// Throws DomainError unless 0 < s < min(1, n/2).
double cns_constant(int n, double s);

/// Same constant evaluated with std::tgamma directly.
double cns_constant_direct(int n, double s);

/// Range check shared by every operator taking the fractional order.
void require_fractional_order(int n, double s);

enum class KernelModel {
  truncated,  // pair kernel on the box, nothing outside
  periodic,   // kernel summed over periodic images of the box (period M*h)
};

std::string to_string(KernelModel model);
KernelModel kernel_model_from_string(const std::string& name);

struct WeightOptions {
  KernelModel model = KernelModel::truncated;
  Index max_nodes = 6000;  // dense N x N cap
};

/// Symmetric singular-kernel quadrature weights over all node pairs.
///
/// w_ij = C_{n,s} h^{2n} K(x_i - x_j) with K(d) = |d|^{-n-2s} (or its periodic
/// image sum) and w_ii = 0. The induced graph operator is
/// (L u)_i = sum_j w_ij (u_i - u_j) / h^n, and the energy form is
/// E(u, v) = 1/2 sum_ij w_ij (u_i - u_j)(v_i - v_j) = h^n <L u, v>.
class KernelWeights {
 public:
  const GridDomain& domain() const { return domain_; }
  double order() const { return order_; }
  double constant() const { return constant_; }
  KernelModel model() const { return model_; }
  Index size() const { return weights_.rows(); }

  const MatrixXd& matrix() const { return weights_; }
  /// Row sums of the weight matrix.
  const VectorXd& degree() const { return degree_; }

  /// Matrix of the energy form: diag(degree) - w.
  MatrixXd form_matrix() const;
  double energy(const VectorXd& u, const VectorXd& v) const;

  /// Graph fractional Laplacian. Constants map to exactly zero.
  VectorXd apply(const VectorXd& u) const;

  friend std::shared_ptr<const KernelWeights> assemble_weights(const GridDomain&, double,
                                                               const WeightOptions&);

 private:
  GridDomain domain_;
  double order_ = 0.0;
  double constant_ = 0.0;
  KernelModel model_ = KernelModel::truncated;
  MatrixXd weights_;
  VectorXd degree_;
};

std::shared_ptr<const KernelWeights> assemble_weights(const GridDomain& domain, double s,
                                                      const WeightOptions& options = {});

/// Throws ShapeError if the field length differs from the node count.
VectorXd apply_graph_laplacian(const KernelWeights& weights, const VectorXd& u);

// ---------------------------------------------------------------------------
// Spectral side: periodic box surrogate of period 2R.
//
// The FFT lattice keeps P = M - 1 nodes per axis (the node at x = +R is the
// periodic copy of x = -R). Fields are restricted to it on input and extended
// back by periodicity on output.

/// (-Delta)^t through the lattice multiplier |xi|^{2t}; the zero frequency is
/// dropped for t < 0. Real output for real input.
VectorXd apply_spectral_laplacian(const GridDomain& domain, double t, const VectorXd& u);

/// Applies (1 + |xi|^2)^{t/2} on the periodic lattice (box-node field in and out).
VectorXd apply_bessel_potential(const GridDomain& domain, double t, const VectorXd& u);

/// || F^{-1} (1+|xi|^2)^{t/2} F u ||_{L^p} with lattice weight h^n. Requires p >= 1.
double bessel_norm(const GridDomain& domain, const VectorXd& u, double t, double p);

/// Lattice L^p norm over the periodic nodes, (h^n sum |u_i|^p)^{1/p}.
double lattice_lp_norm(const GridDomain& domain, const VectorXd& u, double p);

/// Gram matrix of the H^t inner product for the nodal basis of a node subset.
class SobolevMetric {
 public:
  SobolevMetric(double order, NodeSet nodes, MatrixXd gram);

  double order() const { return order_; }
  const NodeSet& nodes() const { return nodes_; }
  Index size() const { return gram_.rows(); }
  const MatrixXd& gram() const { return gram_; }
  /// Lower Cholesky factor L with G = L L^T.
  MatrixXd cholesky_lower() const;

  /// sqrt(x^T G x)
  double norm(const VectorXd& coefficients) const;
  /// sqrt(p^T G^{-1} p)
  double dual_norm(const VectorXd& functional) const;
  /// G^{-1} p
  VectorXd solve(const VectorXd& rhs) const;

  /// Metric restricted to a subset of its own nodes.
  SobolevMetric restricted(const NodeSet& subset) const;

 private:
  double order_;
  NodeSet nodes_;
  MatrixXd gram_;
  Eigen::LLT<MatrixXd> llt_;
};

/// Throws AssemblyError if the result is not numerically SPD, ShapeError on an
/// empty subset.
SobolevMetric gram_matrix(const GridDomain& domain, const NodeSet& subset, double t);

/// sqrt(p^T G^{-1} p) for a covector given by its pairings with the basis.
double dual_norm(const VectorXd& functional, const SobolevMetric& metric);

}  // namespace fraccond

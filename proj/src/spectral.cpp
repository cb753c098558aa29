#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "fraccond/error.hpp"
#include "fraccond/fracops.hpp"

namespace fraccond {

namespace {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

using Complex = std::complex<double>;

class PeriodicLattice {
 public:
  explicit PeriodicLattice(const GridDomain& domain)
      : domain_(domain), dim_(domain.dim()), per_axis_(domain.nodes_per_axis() - 1) {
    if (per_axis_ < 1) throw ShapeError("periodic lattice needs at least two nodes per axis");
    size_ = dim_ == 1 ? per_axis_ : per_axis_ * per_axis_;
  }

  Index size() const { return size_; }
  Index per_axis() const { return per_axis_; }

  std::vector<Complex> restrict_field(const VectorXd& u) const {
    if (u.size() != domain_.size()) throw ShapeError("field length does not match node count");
    std::vector<Complex> out(static_cast<size_t>(size_));
    const Index m = domain_.nodes_per_axis();
    for (Index p = 0; p < size_; ++p) {
      const Index px = p % per_axis_, py = dim_ == 1 ? 0 : p / per_axis_;
      out[static_cast<size_t>(p)] = u[py * m + px];
    }
    return out;
  }

  VectorXd extend_field(const std::vector<Complex>& v) const {
    VectorXd out(domain_.size());
    for (Index i = 0; i < domain_.size(); ++i) {
      const auto li = domain_.lattice_index(i);
      const Index px = li[0] % per_axis_, py = dim_ == 1 ? 0 : li[1] % per_axis_;
      out[i] = v[static_cast<size_t>(py * per_axis_ + px)].real();
    }
    return out;
  }

  /// |xi|^2 for every lattice frequency in FFT order.
  std::vector<double> frequency_sq() const {
    const double base = 2.0 * std::numbers::pi / (2.0 * domain_.half_width());
    std::vector<double> out(static_cast<size_t>(size_));
    for (Index p = 0; p < size_; ++p) {
      const Index kx = p % per_axis_, ky = dim_ == 1 ? 0 : p / per_axis_;
      const double fx = base * static_cast<double>(kx <= per_axis_ / 2 ? kx : kx - per_axis_);
      const double fy = base * static_cast<double>(ky <= per_axis_ / 2 ? ky : ky - per_axis_);
      out[static_cast<size_t>(p)] = fx * fx + fy * fy;
    }
    return out;
  }

  void transform(std::vector<Complex>& data, int sign) const {
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
      std::lock_guard lock(planner_mutex());
      const int np = static_cast<int>(per_axis_);
      plan = dim_ == 1 ? fftw_plan_dft_1d(np, buf, buf, sign, FFTW_ESTIMATE)
                       : fftw_plan_dft_2d(np, np, buf, buf, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }

  /// F^{-1} (multiplier(|xi|^2) F u) on the periodic lattice.
  std::vector<Complex> apply(const VectorXd& u, const std::function<double(double)>& multiplier) const {
    auto v = restrict_field(u);
    transform(v, FFTW_FORWARD);
    const auto xi2 = frequency_sq();
    const double inv = 1.0 / static_cast<double>(size_);
    for (size_t k = 0; k < v.size(); ++k) v[k] *= multiplier(xi2[k]) * inv;
    transform(v, FFTW_BACKWARD);
    return v;
  }

 private:
  const GridDomain& domain_;
  int dim_;
  Index per_axis_;
  Index size_ = 0;
};

}  // namespace

VectorXd apply_spectral_laplacian(const GridDomain& domain, double t, const VectorXd& u) {
  const PeriodicLattice lattice(domain);
  auto v = lattice.apply(u, [t](double xi2) {
    if (xi2 == 0.0) return t == 0.0 ? 1.0 : 0.0;
    return std::pow(xi2, t);
  });
  return lattice.extend_field(v);
}

VectorXd apply_bessel_potential(const GridDomain& domain, double t, const VectorXd& u) {
  const PeriodicLattice lattice(domain);
  return lattice.extend_field(lattice.apply(u, [t](double xi2) { return std::pow(1.0 + xi2, 0.5 * t); }));
}

double lattice_lp_norm(const GridDomain& domain, const VectorXd& u, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p exponent must be >= 1");
  if (u.size() != domain.size()) throw ShapeError("field length does not match node count");
  const Index per_axis = domain.nodes_per_axis() - 1;
  double acc = 0.0;
  for (Index i = 0; i < domain.size(); ++i) {
    const auto li = domain.lattice_index(i);
    if (li[0] >= per_axis || li[1] >= per_axis) continue;  // periodic copy of x = -R
    acc += std::pow(std::abs(u[i]), p);
  }
  return std::pow(domain.cell_volume() * acc, 1.0 / p);
}

double bessel_norm(const GridDomain& domain, const VectorXd& u, double t, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p exponent must be >= 1");
  if (t == 0.0) return lattice_lp_norm(domain, u, p);
  return lattice_lp_norm(domain, apply_bessel_potential(domain, t, u), p);
}

SobolevMetric::SobolevMetric(double order, NodeSet nodes, MatrixXd gram)
    : order_(order), nodes_(std::move(nodes)), gram_(std::move(gram)) {
  if (gram_.rows() != gram_.cols() || gram_.rows() != static_cast<Index>(nodes_.size()))
    throw ShapeError("Gram matrix size does not match node subset");
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success) throw AssemblyError("Gram matrix is not positive definite; grid too coarse");
  if (llt_.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw AssemblyError("Gram matrix is not positive definite; grid too coarse");
}

MatrixXd SobolevMetric::cholesky_lower() const { return llt_.matrixL(); }

double SobolevMetric::norm(const VectorXd& x) const {
  if (x.size() != size()) throw ShapeError("coefficient length does not match metric");
  return std::sqrt(std::max(0.0, x.dot(gram_ * x)));
}

VectorXd SobolevMetric::solve(const VectorXd& rhs) const {
  if (rhs.size() != size()) throw ShapeError("functional length does not match metric");
  return llt_.solve(rhs);
}

double SobolevMetric::dual_norm(const VectorXd& p) const {
  if (p.size() != size()) throw ShapeError("functional length does not match metric");
  // |L^{-1} p|_2 avoids forming G^{-1}.
  const VectorXd y = llt_.matrixL().solve(p);
  return y.norm();
}

SobolevMetric SobolevMetric::restricted(const NodeSet& subset) const {
  std::vector<Index> pos;
  pos.reserve(subset.size());
  for (Index node : subset) {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
    if (it == nodes_.end() || *it != node) throw ShapeError("restriction subset is not contained in the metric");
    pos.push_back(static_cast<Index>(it - nodes_.begin()));
  }
  MatrixXd g(pos.size(), pos.size());
  for (size_t a = 0; a < pos.size(); ++a)
    for (size_t b = 0; b < pos.size(); ++b) g(a, b) = gram_(pos[a], pos[b]);
  return SobolevMetric(order_, subset, std::move(g));
}

SobolevMetric gram_matrix(const GridDomain& domain, const NodeSet& subset, double t) {
  if (subset.empty()) throw ShapeError("Gram matrix requested for an empty subset");
  const PeriodicLattice lattice(domain);
  const Index p = lattice.per_axis();

  // Translation-invariant kernel g(d) = <delta_0, delta_d>_{H^t}.
  VectorXd delta = VectorXd::Zero(domain.size());
  delta[0] = 1.0;
  const auto kernel = lattice.apply(delta, [t](double xi2) { return std::pow(1.0 + xi2, t); });
  const double mass = domain.cell_volume();

  const size_t k = subset.size();
  MatrixXd g(k, k);
  for (size_t a = 0; a < k; ++a) {
    const auto la = domain.lattice_index(subset[a]);
    for (size_t b = 0; b < k; ++b) {
      const auto lb = domain.lattice_index(subset[b]);
      const Index ox = (((la[0] - lb[0]) % p) + p) % p;
      const Index oy = domain.dim() == 1 ? 0 : (((la[1] - lb[1]) % p) + p) % p;
      g(a, b) = mass * kernel[static_cast<size_t>(oy * p + ox)].real();
    }
  }
  // Exact symmetry; the transform leaves rounding-level asymmetry.
  g = 0.5 * (g + g.transpose()).eval();
  return SobolevMetric(t, subset, std::move(g));
}

double dual_norm(const VectorXd& functional, const SobolevMetric& metric) { return metric.dual_norm(functional); }

}  // namespace fraccond

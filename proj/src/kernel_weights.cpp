#include <cmath>
#include <numbers>
#include <vector>

#include "fraccond/error.hpp"
#include "fraccond/fracops.hpp"

namespace fraccond {

namespace {

constexpr int kImageShells1d = 256;
constexpr int kImageShells2d = 24;

// int_0^{pi/4} cos(theta)^{2s} d theta, composite Simpson.
double square_tail_angle_integral(double s) {
  constexpr int kPanels = 512;
  const double a = 0.0, b = std::numbers::pi / 4.0;
  const double step = (b - a) / kPanels;
  double acc = 0.0;
  for (int k = 0; k <= kPanels; ++k) {
    const double w = (k == 0 || k == kPanels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * std::pow(std::cos(a + k * step), 2.0 * s);
  }
  return acc * step / 3.0;
}

// sum_m |d + m L|^{-1-2s} over all integers m, d in (0, L).
double periodic_kernel_1d(double d, double period, double s) {
  const double expo = 1.0 + 2.0 * s;
  double acc = 0.0;
  for (int m = -kImageShells1d; m <= kImageShells1d; ++m) acc += std::pow(std::abs(d + m * period), -expo);
  // Midpoint-rule tail for |m| > K on both sides.
  const double edge = (kImageShells1d + 0.5) * period;
  acc += (std::pow(edge + d, 1.0 - expo) + std::pow(edge - d, 1.0 - expo)) / ((expo - 1.0) * period);
  return acc;
}

// sum over m in Z^2 of |d + m L|^{-2-2s}; tail outside the square of images
// replaced by its integral.
double periodic_kernel_2d(double dx, double dy, double period, double s, double tail_angle) {
  const double expo = 2.0 + 2.0 * s;
  double acc = 0.0;
  for (int mx = -kImageShells2d; mx <= kImageShells2d; ++mx) {
    const double x = dx + mx * period;
    for (int my = -kImageShells2d; my <= kImageShells2d; ++my) {
      const double y = dy + my * period;
      acc += std::pow(x * x + y * y, -0.5 * expo);
    }
  }
  const double edge = (kImageShells2d + 0.5) * period;
  acc += 8.0 * tail_angle * std::pow(edge, -2.0 * s) / (2.0 * s * period * period);
  return acc;
}

}  // namespace

void require_fractional_order(int n, double s) {
  if (n != 1 && n != 2) throw DomainError("dimension must be 1 or 2");
  const double upper = std::min(1.0, 0.5 * n);
  if (!(s > 0.0 && s < upper))
    throw DomainError("fractional order s=" + std::to_string(s) + " outside (0, min(1, n/2))");
}

double cns_constant(int n, double s) {
  require_fractional_order(n, s);
  const double log_c = s * std::log(4.0) + std::lgamma(0.5 * n + s) + std::log(s) -
                       0.5 * n * std::log(std::numbers::pi) - std::lgamma(1.0 - s);
  return std::exp(log_c);
}

double cns_constant_direct(int n, double s) {
  require_fractional_order(n, s);
  return std::pow(4.0, s) * std::tgamma(0.5 * n + s) * s /
         (std::pow(std::numbers::pi, 0.5 * n) * std::tgamma(1.0 - s));
}

std::string to_string(KernelModel model) { return model == KernelModel::truncated ? "truncated" : "periodic"; }

KernelModel kernel_model_from_string(const std::string& name) {
  if (name == "truncated") return KernelModel::truncated;
  if (name == "periodic") return KernelModel::periodic;
  throw ConfigError("unknown kernel model '" + name + "'");
}

MatrixXd KernelWeights::form_matrix() const {
  MatrixXd k = -weights_;
  k.diagonal() = degree_;
  return k;
}

double KernelWeights::energy(const VectorXd& u, const VectorXd& v) const {
  if (u.size() != size() || v.size() != size()) throw ShapeError("field length does not match node count");
  double acc = 0.0;
  for (Index j = 0; j < size(); ++j)
    for (Index i = 0; i < size(); ++i) acc += weights_(i, j) * (u[i] - u[j]) * (v[i] - v[j]);
  return 0.5 * acc;
}

VectorXd KernelWeights::apply(const VectorXd& u) const {
  if (u.size() != size()) throw ShapeError("field length does not match node count");
  const Index n = size();
  VectorXd out(n);
  const double inv_mass = 1.0 / domain_.cell_volume();
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    const double ui = u[i];
    // Column i equals row i by symmetry; column access is contiguous.
    for (Index j = 0; j < n; ++j) acc += weights_(j, i) * (ui - u[j]);
    out[i] = acc * inv_mass;
  }
  return out;
}

std::shared_ptr<const KernelWeights> assemble_weights(const GridDomain& domain, double s,
                                                      const WeightOptions& options) {
  const int dim = domain.dim();
  require_fractional_order(dim, s);
  const Index n = domain.size();
  if (n > options.max_nodes)
    throw CapacityError("node count " + std::to_string(n) + " exceeds dense cap " +
                        std::to_string(options.max_nodes));

  auto kw = std::make_shared<KernelWeights>();
  kw->domain_ = domain;
  kw->order_ = s;
  kw->constant_ = cns_constant(dim, s);
  kw->model_ = options.model;

  const double h = domain.spacing();
  const double scale = kw->constant_ * std::pow(h, 2.0 * dim);
  const double expo = dim + 2.0 * s;
  const Index m = domain.nodes_per_axis();

  // Kernel depends only on the lattice displacement; tabulate it once.
  // Truncated: displacement (|dx|, |dy|) in [0, M)^n. Periodic: offset mod M.
  std::vector<double> table(static_cast<size_t>(dim == 1 ? m : m * m), 0.0);
  const double period = static_cast<double>(m) * h;
  const double tail_angle = dim == 2 ? square_tail_angle_integral(s) : 0.0;
  for (Index ky = 0; ky < (dim == 1 ? 1 : m); ++ky) {
    for (Index kx = 0; kx < m; ++kx) {
      if (kx == 0 && ky == 0) continue;
      const double dx = static_cast<double>(kx) * h, dy = static_cast<double>(ky) * h;
      double k;
      if (options.model == KernelModel::truncated)
        k = std::pow(std::sqrt(dx * dx + dy * dy), -expo);
      else
        k = dim == 1 ? periodic_kernel_1d(dx, period, s) : periodic_kernel_2d(dx, dy, period, s, tail_angle);
      table[static_cast<size_t>(ky * m + kx)] = scale * k;
    }
  }

  kw->weights_.setZero(n, n);
  for (Index j = 0; j < n; ++j) {
    const auto lj = domain.lattice_index(j);
    for (Index i = j + 1; i < n; ++i) {
      const auto li = domain.lattice_index(i);
      Index ox = li[0] - lj[0], oy = li[1] - lj[1];
      if (options.model == KernelModel::truncated) {
        ox = std::abs(ox);
        oy = std::abs(oy);
      } else {
        ox = ((ox % m) + m) % m;
        oy = ((oy % m) + m) % m;
      }
      kw->weights_(i, j) = table[static_cast<size_t>(oy * m + ox)];
      kw->weights_(j, i) = kw->weights_(i, j);
    }
  }
  kw->degree_ = kw->weights_.rowwise().sum();
  return kw;
}

VectorXd apply_graph_laplacian(const KernelWeights& weights, const VectorXd& u) { return weights.apply(u); }

}  // namespace fraccond

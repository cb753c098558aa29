#pragma once

#include <cmath>
#include <optional>
#include <random>

#include "fraccond/forms.hpp"

namespace fraccond::test {

inline Shape interval(double a, double b) { return Shape::box({a, 0.0}, {b, 0.0}); }
inline Shape square(double a, double b) { return Shape::box({a, a}, {b, b}); }

inline DomainConfig line_config(double R, double h, Shape omega, std::optional<Shape> w1 = std::nullopt,
                                std::optional<Shape> w2 = std::nullopt) {
  DomainConfig c;
  c.dim = 1;
  c.half_width = R;
  c.spacing = h;
  c.omega = omega;
  c.w1 = w1;
  c.w2 = w2;
  return c;
}

// 1D box with N intervals on [-2, 2], Omega = (-0.5, 0.5), windows on either side.
inline GridDomain small_line(int intervals = 64) {
  return build_grid(line_config(2.0, 4.0 / intervals, interval(-0.5, 0.5), interval(0.75, 1.5),
                                interval(-1.5, -0.75)));
}

// 2D box with N x N intervals on [-2, 2]^2.
inline GridDomain small_square(int intervals = 24) {
  DomainConfig c;
  c.dim = 2;
  c.half_width = 2.0;
  c.spacing = 4.0 / intervals;
  c.omega = square(-0.6, 0.6);
  c.w1 = Shape::box({1.0, -0.5}, {1.8, 0.5});
  c.w2 = Shape::box({-1.8, -0.5}, {-1.0, 0.5});
  return build_grid(c);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  VectorXd uniform(Index n, double a, double b) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }
  VectorXd normal(Index n) {
    std::normal_distribution<double> nd;
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = nd(gen_);
    return v;
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Full nodal vector with the given values on a node subset and zero elsewhere.
inline VectorXd scatter(Index n, const NodeSet& nodes, const VectorXd& values) {
  VectorXd out = VectorXd::Zero(n);
  for (size_t k = 0; k < nodes.size(); ++k) out[nodes[k]] = values[static_cast<Index>(k)];
  return out;
}

// Random-search sup of |objective(x)| over nonzero x: a batch of uniform
// random directions, then Gaussian perturbations of the incumbent with a
// shrinking step. Uses exactly `samples` evaluations; the result is a lower
// bound of the sup.
template <class F>
double random_search_sup(Index dim, F objective, int samples, Rng& rng) {
  const int batch = samples / 4;
  VectorXd best = rng.normal(dim);
  double best_value = std::abs(objective(best));
  for (int k = 1; k < batch; ++k) {
    const VectorXd x = rng.normal(dim);
    const double v = std::abs(objective(x));
    if (v > best_value) {
      best_value = v;
      best = x;
    }
  }
  double step = 0.3;
  int misses = 0;
  for (int k = batch; k < samples; ++k) {
    const VectorXd x = best / best.norm() + step * rng.normal(dim) / std::sqrt(static_cast<double>(dim));
    const double v = std::abs(objective(x));
    if (v > best_value) {
      best_value = v;
      best = x;
      misses = 0;
    } else if (++misses == 50) {
      step *= 0.5;
      misses = 0;
    }
  }
  return best_value;
}

}  // namespace fraccond::test

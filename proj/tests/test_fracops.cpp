#include <gtest/gtest.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <complex>
#include <numbers>

#include "fraccond/error.hpp"
#include "support.hpp"

using namespace fraccond;
using fraccond::test::interval;
using fraccond::test::line_config;
using fraccond::test::relative;
using fraccond::test::Rng;

namespace {

using Complex = std::complex<double>;

struct Params {
  double a;
};

double gsl_integrate(double (*f)(double, void*), void* params, double a, double b) {
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  gsl_function F{f, params};
  double result = 0.0, err = 0.0;
  if (std::isinf(b))
    gsl_integration_qagiu(&F, a, 0.0, 1e-12, 2000, ws, &result, &err);
  else
    gsl_integration_qags(&F, a, b, 0.0, 1e-12, 2000, ws, &result, &err);
  gsl_integration_workspace_free(ws);
  return result;
}

// int_R (1 - cos z) |z|^{-1-a} dz, a = 2s in (0, 2).
double one_minus_cos_integral(double a) {
  Params p{a};
  auto near = [](double z, void* v) {
    const double e = static_cast<Params*>(v)->a;
    return (1.0 - std::cos(z)) * std::pow(z, -1.0 - e);
  };
  auto tail_cos = [](double z, void* v) { return std::pow(z, -1.0 - static_cast<Params*>(v)->a); };
  const double head = gsl_integrate(near, &p, 0.0, 1.0);
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  gsl_integration_workspace* cyc = gsl_integration_workspace_alloc(2000);
  gsl_integration_qawo_table* tab = gsl_integration_qawo_table_alloc(1.0, 1.0, GSL_INTEG_COSINE, 50);
  gsl_function F{+tail_cos, &p};
  double osc = 0.0, err = 0.0;
  gsl_integration_qawf(&F, 1.0, 1e-12, 2000, ws, cyc, tab, &osc, &err);
  gsl_integration_qawo_table_free(tab);
  gsl_integration_workspace_free(cyc);
  gsl_integration_workspace_free(ws);
  return 2.0 * (head + 1.0 / a - osc);
}

// int_R (1 + t^2)^{-1-s} dt
double transverse_integral(double s) {
  Params p{s};
  auto f = [](double t, void* v) { return std::pow(1.0 + t * t, -1.0 - static_cast<Params*>(v)->a); };
  return 2.0 * gsl_integrate(f, &p, 0.0, HUGE_VAL);
}

// C_{n,s}^{-1} = int_{R^n} (1 - cos zeta_1) / |zeta|^{n+2s}; for n = 2 the zeta_2
// integral factors out after the substitution zeta_2 = |zeta_1| t.
double quadrature_cns(int n, double s) {
  if (n == 1) return 1.0 / one_minus_cos_integral(2.0 * s);
  return 1.0 / (one_minus_cos_integral(2.0 * s) * transverse_integral(s));
}

// Periodic lattice samples (drops the node at x = +R).
std::vector<double> periodic_samples(const GridDomain& d, const VectorXd& u) {
  std::vector<double> out;
  for (Index i = 0; i + 1 < d.size(); ++i) out.push_back(u[i]);
  return out;
}

std::vector<Complex> naive_dft(const std::vector<double>& u) {
  const size_t p = u.size();
  std::vector<Complex> out(p);
  for (size_t k = 0; k < p; ++k) {
    Complex acc = 0.0;
    for (size_t j = 0; j < p; ++j)
      acc += u[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j % p) / static_cast<double>(p));
    out[k] = acc;
  }
  return out;
}

double lattice_frequency(size_t k, size_t p, double R) {
  const double kk = k <= p / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(p);
  return std::numbers::pi * kk / R;
}

}  // namespace

TEST(CnsConstant, MatchesQuadratureOneDimension) {
  gsl_set_error_handler_off();
  EXPECT_LT(relative(cns_constant(1, 0.25), quadrature_cns(1, 0.25)), 1e-6);
  EXPECT_LT(relative(cns_constant(1, 0.4), quadrature_cns(1, 0.4)), 1e-6);
}

TEST(CnsConstant, MatchesQuadratureTwoDimensions) {
  gsl_set_error_handler_off();
  EXPECT_LT(relative(cns_constant(2, 0.5), quadrature_cns(2, 0.5)), 1e-6);
  EXPECT_LT(relative(cns_constant(2, 0.25), quadrature_cns(2, 0.25)), 1e-6);
}

TEST(CnsConstant, LogGammaAgreesWithDirectGamma) {
  for (int n : {1, 2})
    for (double s : {0.05, 0.1, 0.25, 0.4, 0.45})
      if (s < 0.5 * n) EXPECT_LT(relative(cns_constant(n, s), cns_constant_direct(n, s)), 1e-12) << n << " " << s;
  EXPECT_LT(relative(cns_constant(2, 0.9), cns_constant_direct(2, 0.9)), 1e-12);
}

TEST(CnsConstant, RejectsOrderOutsideRange) {
  EXPECT_THROW(cns_constant(1, 0.5), DomainError);
  EXPECT_THROW(cns_constant(1, 0.0), DomainError);
  EXPECT_THROW(cns_constant(2, 1.0), DomainError);
  EXPECT_NO_THROW(cns_constant(2, 0.75));
}

TEST(KernelWeights, ConstantsMapToZero) {
  const GridDomain d = fraccond::test::small_line(64);
  const auto w = assemble_weights(d, 0.25);
  const VectorXd lu = w->apply(VectorXd::Constant(d.size(), 3.7));
  EXPECT_EQ(lu.cwiseAbs().maxCoeff(), 0.0);
}

TEST(KernelWeights, SinglePairFormula) {
  const GridDomain d = build_grid(line_config(1.0, 0.5, interval(-0.75, 0.75)));
  const double s = 0.25, h = 0.5;
  const auto w = assemble_weights(d, s);
  for (Index i = 0; i < d.size(); ++i)
    for (Index j = 0; j < d.size(); ++j) {
      if (i == j) {
        EXPECT_EQ(w->matrix()(i, j), 0.0);
        continue;
      }
      const double dist = std::abs(d.coordinate(i)[0] - d.coordinate(j)[0]);
      EXPECT_LT(relative(w->matrix()(i, j), cns_constant(1, s) * h * h * std::pow(dist, -1.0 - 2.0 * s)), 1e-14);
    }
}

TEST(KernelWeights, IndicatorImage) {
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.3);
  VectorXd e = VectorXd::Zero(d.size());
  const Index k = 11;
  e[k] = 1.0;
  const VectorXd le = apply_graph_laplacian(*w, e);
  EXPECT_GT(le[k], 0.0);
  for (Index i = 0; i < d.size(); ++i)
    if (i != k) EXPECT_LT(le[i], 0.0);
  EXPECT_LT(std::abs(d.cell_volume() * le.sum()), 1e-13 * d.cell_volume() * le[k]);
}

TEST(KernelWeights, SymmetricOperator) {
  Rng rng(1);
  for (const GridDomain& d : {fraccond::test::small_line(64), fraccond::test::small_square(12)}) {
    const auto w = assemble_weights(d, 0.25);
    for (int t = 0; t < 5; ++t) {
      const VectorXd u = rng.normal(d.size()), v = rng.normal(d.size());
      EXPECT_LT(relative(w->apply(u).dot(v), u.dot(w->apply(v))), 1e-12);
    }
  }
}

TEST(KernelWeights, EnergyMatchesOperator) {
  Rng rng(2);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const VectorXd u = rng.normal(d.size()), v = rng.normal(d.size());
  EXPECT_LT(relative(w->energy(u, v), d.cell_volume() * w->apply(u).dot(v)), 1e-12);
  EXPECT_LT(relative(w->energy(u, v), u.dot(w->form_matrix() * v)), 1e-12);
}

TEST(KernelWeights, PeriodicModelKeepsInvariants) {
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25, {.model = KernelModel::periodic});
  EXPECT_EQ(w->model(), KernelModel::periodic);
  EXPECT_EQ((w->matrix() - w->matrix().transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(w->matrix().minCoeff() + 1.0, 0.0);
  EXPECT_EQ(w->apply(VectorXd::Ones(d.size())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(KernelWeights, CapacityAndShapeErrors) {
  const GridDomain d = fraccond::test::small_line(64);
  EXPECT_THROW(assemble_weights(d, 0.25, {.max_nodes = 10}), CapacityError);
  const auto w = assemble_weights(d, 0.25);
  EXPECT_THROW(apply_graph_laplacian(*w, VectorXd::Zero(3)), ShapeError);
}

TEST(SpectralLaplacian, ZeroOrderIsIdentity) {
  Rng rng(3);
  const GridDomain d = fraccond::test::small_line(64);
  VectorXd u = rng.normal(d.size());
  u[d.size() - 1] = u[0];
  EXPECT_LT((apply_spectral_laplacian(d, 0.0, u) - u).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SpectralLaplacian, SineIsEigenfunction) {
  const GridDomain d = fraccond::test::small_line(64);
  const double R = d.half_width();
  VectorXd u(d.size());
  for (Index i = 0; i < d.size(); ++i) u[i] = std::sin(std::numbers::pi * d.coordinate(i)[0] / R);
  const double lambda = std::pow(std::numbers::pi / R, 2.0);
  EXPECT_LT((apply_spectral_laplacian(d, 1.0, u) - lambda * u).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SpectralLaplacian, PositiveThenNegativeOrderRecoversMeanZeroField) {
  Rng rng(4);
  for (const GridDomain& d : {fraccond::test::small_line(64), fraccond::test::small_square(16)}) {
    VectorXd u = rng.normal(d.size());
    const Index m = d.nodes_per_axis();
    double mean = 0.0;
    Index count = 0;
    for (Index i = 0; i < d.size(); ++i) {
      const auto li = d.lattice_index(i);
      if (li[0] < m - 1 && (d.dim() == 1 || li[1] < m - 1)) {
        mean += u[i];
        ++count;
      }
    }
    u.array() -= mean / static_cast<double>(count);
    // Periodic copies on the x = +R (and y = +R) faces.
    for (Index i = 0; i < d.size(); ++i) {
      auto li = d.lattice_index(i);
      const Index sx = li[0] == m - 1 ? 0 : li[0];
      const Index sy = d.dim() == 2 && li[1] == m - 1 ? 0 : li[1];
      u[i] = u[sy * m + sx];
    }
    const VectorXd back = apply_spectral_laplacian(d, -0.25, apply_spectral_laplacian(d, 0.25, u));
    EXPECT_LT((back - u).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(BesselNorm, ZeroFieldAndUnitMultiplier) {
  Rng rng(5);
  const GridDomain d = fraccond::test::small_line(64);
  EXPECT_EQ(bessel_norm(d, VectorXd::Zero(d.size()), 0.6, 3.0), 0.0);
  const VectorXd u = rng.normal(d.size());
  double acc = 0.0;
  for (Index i = 0; i + 1 < d.size(); ++i) acc += u[i] * u[i];
  EXPECT_LT(relative(bessel_norm(d, u, 0.0, 2.0), std::sqrt(d.cell_volume() * acc)), 1e-14);
  EXPECT_THROW(bessel_norm(d, u, 0.5, 0.5), DomainError);
}

TEST(BesselNorm, GaussianMatchesZeroPaddedRefinement) {
  const GridDomain d = fraccond::test::small_line(64);
  const double t = 0.6, p = 4.0;
  VectorXd u(d.size());
  for (Index i = 0; i < d.size(); ++i) u[i] = std::exp(-4.0 * d.coordinate(i)[0] * d.coordinate(i)[0]);

  // Oracle: naive DFT, multiply, zero-pad to 4x, naive inverse on the fine lattice.
  const auto coarse = periodic_samples(d, u);
  const size_t P = coarse.size(), Q = 4 * P;
  const auto hat = naive_dft(coarse);
  std::vector<Complex> fine_hat(Q, 0.0);
  for (size_t k = 0; k < P; ++k) {
    const double xi = lattice_frequency(k, P, d.half_width());
    const size_t slot = k <= P / 2 ? k : Q - (P - k);
    fine_hat[slot] = hat[k] * std::pow(1.0 + xi * xi, 0.5 * t);
  }
  double acc = 0.0;
  for (size_t j = 0; j < Q; ++j) {
    Complex v = 0.0;
    for (size_t k = 0; k < Q; ++k)
      v += fine_hat[k] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k * j % Q) / static_cast<double>(Q));
    acc += std::pow(std::abs(v.real() / static_cast<double>(P)), p);
  }
  const double oracle = std::pow(d.spacing() / 4.0 * acc, 1.0 / p);
  EXPECT_LT(relative(bessel_norm(d, u, t, p), oracle), 0.02);
}

TEST(GramMatrix, ZeroOrderIsScaledIdentity) {
  const GridDomain d = fraccond::test::small_square(12);
  const SobolevMetric g = gram_matrix(d, d.w1(), 0.0);
  const MatrixXd expect = d.cell_volume() * MatrixXd::Identity(g.size(), g.size());
  EXPECT_LT((g.gram() - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GramMatrix, SingletonIsPositiveBasisNorm) {
  const GridDomain d = fraccond::test::small_line(64);
  const SobolevMetric g = gram_matrix(d, {d.w1().front()}, 0.25);
  ASSERT_EQ(g.size(), 1);
  VectorXd e = VectorXd::Zero(d.size());
  e[d.w1().front()] = 1.0;
  EXPECT_GT(g.gram()(0, 0), 0.0);
  EXPECT_LT(relative(g.gram()(0, 0), std::pow(bessel_norm(d, e, 0.25, 2.0), 2.0)), 1e-12);
}

TEST(GramMatrix, QuadraticFormMatchesDirectSpectralNorm) {
  Rng rng(6);
  const GridDomain d = fraccond::test::small_line(64);
  const double s = 0.25;
  const NodeSet nodes = set_union(d.w1(), d.w2());
  const SobolevMetric g = gram_matrix(d, nodes, s);
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x = rng.normal(g.size());
    const VectorXd u = fraccond::test::scatter(d.size(), nodes, x);
    const auto samples = periodic_samples(d, u);
    const auto hat = naive_dft(samples);
    const size_t P = samples.size();
    double direct = 0.0;
    for (size_t k = 0; k < P; ++k) {
      const double xi = lattice_frequency(k, P, d.half_width());
      direct += std::pow(1.0 + xi * xi, s) * std::norm(hat[k]);
    }
    direct *= d.spacing() / static_cast<double>(P);
    EXPECT_LT(relative(x.dot(g.gram() * x), direct), 1e-10);
  }
}

TEST(GramMatrix, RestrictionAndErrors) {
  const GridDomain d = fraccond::test::small_line(64);
  const NodeSet nodes = set_union(d.w1(), d.w2());
  const SobolevMetric g = gram_matrix(d, nodes, 0.25);
  const SobolevMetric r = g.restricted(d.w1());
  EXPECT_LT((r.gram() - gram_matrix(d, d.w1(), 0.25).gram()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(g.restricted(d.omega()), ShapeError);
  EXPECT_THROW(gram_matrix(d, {}, 0.25), ShapeError);
}

TEST(DualNorm, ZeroAndIdentity) {
  Rng rng(7);
  const SobolevMetric id(0.0, {0, 1, 2}, MatrixXd::Identity(3, 3));
  EXPECT_EQ(dual_norm(VectorXd::Zero(3), id), 0.0);
  const VectorXd p = rng.normal(3);
  EXPECT_LT(relative(dual_norm(p, id), p.norm()), 1e-15);
}

TEST(DualNorm, RandomSearchApproachesFromBelow) {
  Rng rng(8);
  const GridDomain d = fraccond::test::small_line(32);
  NodeSet nodes(d.w1().begin(), d.w1().begin() + 4);
  const SobolevMetric g = gram_matrix(d, nodes, 0.25);
  const VectorXd p = rng.normal(g.size());
  const double exact = dual_norm(p, g);
  double best = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const VectorXd v = rng.normal(g.size());
    best = std::max(best, std::abs(p.dot(v)) / g.norm(v));
  }
  EXPECT_LE(best, exact * (1.0 + 1e-12));
  EXPECT_GT(best, 0.98 * exact);
}

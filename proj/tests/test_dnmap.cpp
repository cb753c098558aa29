#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "fraccond/dnmap.hpp"
#include "fraccond/error.hpp"
#include "support.hpp"

using namespace fraccond;
using fraccond::test::random_search_sup;
using fraccond::test::relative;
using fraccond::test::Rng;

namespace {

ConductivityField random_gamma(Rng& rng, Index n) { return ConductivityField(rng.uniform(n, 0.5, 2.0)); }

// Schur complement through a plain LU factorization.
MatrixXd schur_oracle(const NonlocalForm& form) {
  const GridDomain& d = form.domain();
  const MatrixXd& a = form.matrix();
  const MatrixXd a_oo = a(d.omega(), d.omega());
  const MatrixXd a_oe = a(d.omega(), d.exterior());
  return a(d.exterior(), d.exterior()) - a_oe.transpose() * a_oo.partialPivLu().solve(a_oe);
}

ConductivityField interior_perturbation(Rng& rng, const GridDomain& d, const ConductivityField& base) {
  VectorXd g = base.values();
  for (Index i : d.omega()) g[i] = rng.uniform(0.5, 2.0);
  return ConductivityField(g);
}

double bilinear_sup(const MatrixXd& block, const SobolevMetric& from, const SobolevMetric& to, int samples, Rng& rng) {
  const Index nf = from.size(), nt = to.size();
  auto objective = [&](const VectorXd& x) {
    const VectorXd a = x.head(nf), b = x.tail(nt);
    return b.dot(block * a) / (from.norm(a) * to.norm(b));
  };
  return random_search_sup(nf + nt, objective, samples, rng);
}

}  // namespace

TEST(DnMap, MatchesSchurComplement) {
  Rng rng(20);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const auto form = assemble_conductivity_form(w, random_gamma(rng, d.size()));
  const DnMap map = dn_map(form);
  const MatrixXd oracle = schur_oracle(form);
  EXPECT_LT((map.matrix() - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(map.nodes(), d.exterior());
  EXPECT_EQ(map.provenance().geometry_hash, d.geometry_hash());
}

TEST(DnMap, UnitConductivityEqualsZeroPotential) {
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const DnMap a = dn_map(assemble_conductivity_form(w, ConductivityField::constant(d.size(), 1.0)));
  const DnMap b = dn_map(assemble_schrodinger_form(w, VectorXd::Zero(d.size())));
  EXPECT_LT((a.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-14 * a.matrix().cwiseAbs().maxCoeff());
}

TEST(DnMap, SymmetricForRandomConductivity) {
  Rng rng(21);
  for (const GridDomain& d : {fraccond::test::small_line(64), fraccond::test::small_square(12)}) {
    const auto w = assemble_weights(d, 0.25);
    const DnMap map = dn_map(assemble_conductivity_form(w, random_gamma(rng, d.size())));
    const MatrixXd& m = map.matrix();
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12 * m.cwiseAbs().maxCoeff());
    EXPECT_LT(max_asymmetry(map), 1e-12);
  }
}

TEST(DnMap, EnergyIsNonnegative) {
  Rng rng(22);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const auto gamma = random_gamma(rng, d.size());
  const auto form = assemble_conductivity_form(w, gamma);
  const DnMap map = dn_map(form);
  for (int t = 0; t < 100; ++t) {
    const VectorXd f = rng.normal(map.size());
    const double quad = f.dot(map.matrix() * f);
    EXPECT_GE(quad, -1e-12 * map.matrix().norm() * f.squaredNorm());
  }
  // The quadratic form equals the energy of the solution.
  const VectorXd f = rng.normal(map.size());
  const VectorXd fv = fraccond::test::scatter(d.size(), d.exterior(), f);
  const VectorXd u = solve_exterior_problem(form, fv);
  EXPECT_LT(relative(f.dot(map.matrix() * f), form(u, u)), 1e-10);
}

TEST(DnMap, SingularInteriorThrows) {
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const double lambda = smallest_interior_eigenvalue(assemble_schrodinger_form(w, VectorXd::Zero(d.size())));
  const auto form = assemble_schrodinger_form(w, VectorXd::Constant(d.size(), -lambda));
  EXPECT_THROW(dn_map(form), DirichletEigenvalueError);
}

TEST(RestrictDn, WholeMatrixSingletonAndTranspose) {
  Rng rng(23);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const DnMap map = dn_map(assemble_conductivity_form(w, random_gamma(rng, d.size())));
  EXPECT_EQ((restrict_dn(map, d.exterior(), d.exterior()) - map.matrix()).cwiseAbs().maxCoeff(), 0.0);

  const Index a = d.w1().front(), b = d.w2().back();
  const MatrixXd one = restrict_dn(map, {a}, {b});
  ASSERT_EQ(one.rows(), 1);
  EXPECT_EQ(one(0, 0), map.matrix()(d.exterior_position(b), d.exterior_position(a)));

  const MatrixXd fwd = restrict_dn(map, d.w1(), d.w2());
  const MatrixXd back = restrict_dn(map, d.w2(), d.w1());
  EXPECT_LT((fwd.transpose() - back).cwiseAbs().maxCoeff(), 1e-12 * fwd.cwiseAbs().maxCoeff());
  EXPECT_THROW(restrict_dn(map, d.omega(), d.w2()), ShapeError);
}

TEST(RestrictDn, BlockSolveAgreesWithFullMap) {
  Rng rng(24);
  const GridDomain d = fraccond::test::small_square(12);
  const auto w = assemble_weights(d, 0.25);
  const auto form = assemble_conductivity_form(w, random_gamma(rng, d.size()));
  const MatrixXd full = restrict_dn(dn_map(form), d.w1(), d.w2());
  const MatrixXd direct = dn_block(form, d.w1(), d.w2());
  EXPECT_LT((full - direct).cwiseAbs().maxCoeff(), 1e-11 * full.cwiseAbs().maxCoeff());
}

TEST(DnOperatorNorm, ZeroAndOneByOne) {
  const SobolevMetric g1(0.25, {0}, MatrixXd::Constant(1, 1, 4.0));
  const SobolevMetric g2(0.25, {1}, MatrixXd::Constant(1, 1, 9.0));
  EXPECT_EQ(dn_operator_norm(MatrixXd::Zero(1, 1), g1, g2), 0.0);
  EXPECT_DOUBLE_EQ(dn_operator_norm(MatrixXd::Constant(1, 1, -3.0), g1, g2), 3.0 / 6.0);
  EXPECT_THROW(dn_operator_norm(MatrixXd::Zero(2, 1), g1, g2), ShapeError);
}

TEST(DnOperatorNorm, RandomSearchOracle) {
  Rng rng(25);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const auto form = assemble_conductivity_form(w, random_gamma(rng, d.size()));
  const NodeSet from(d.w1().begin(), d.w1().begin() + std::min<size_t>(4, d.w1().size()));
  const NodeSet to(d.w2().begin(), d.w2().begin() + std::min<size_t>(4, d.w2().size()));
  const SobolevMetric gf = gram_matrix(d, from, 0.25), gt = gram_matrix(d, to, 0.25);
  const MatrixXd block = dn_block(form, from, to);
  const double norm = dn_operator_norm(block, gf, gt);
  const double sup = bilinear_sup(block, gf, gt, 10000, rng);
  EXPECT_LE(sup, norm * (1.0 + 1e-12));
  EXPECT_GT(sup, 0.98 * norm);
}

TEST(DnReduction, EqualConductivitiesGiveZero) {
  Rng rng(26);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const auto gamma = random_gamma(rng, d.size());
  const auto chk = verify_dn_reduction(w, gamma, gamma, rng.normal(static_cast<Index>(d.w1().size())),
                                       rng.normal(static_cast<Index>(d.w2().size())), {d.w1(), d.w2()});
  EXPECT_EQ(chk.lhs, 0.0);
  EXPECT_EQ(chk.rhs, 0.0);
  EXPECT_EQ(chk.residual, 0.0);
}

TEST(DnReduction, InteriorDifferenceHoldsAndScales) {
  Rng rng(27);
  for (const GridDomain& d : {fraccond::test::small_line(32), fraccond::test::small_square(12)}) {
    const auto w = assemble_weights(d, 0.25);
    for (int t = 0; t < 5; ++t) {
      const auto g1 = random_gamma(rng, d.size());
      const auto g2 = interior_perturbation(rng, d, g1);
      const VectorXd f = rng.normal(static_cast<Index>(d.w1().size()));
      const VectorXd g = rng.normal(static_cast<Index>(d.w2().size()));
      const auto chk = verify_dn_reduction(w, g1, g2, f, g, {d.w1(), d.w2()});
      EXPECT_LT(chk.residual, 1e-10);
      EXPECT_GT(std::abs(chk.lhs), 0.0);
      const auto scaled = verify_dn_reduction(w, g1, g2, 3.0 * f, g, {d.w1(), d.w2()});
      EXPECT_LT(relative(scaled.lhs, 3.0 * chk.lhs), 1e-10);
      EXPECT_LT(relative(scaled.rhs, 3.0 * chk.rhs), 1e-10);
      EXPECT_LT(scaled.residual, 1e-10);
    }
  }
}

TEST(DnReduction, ExteriorDisagreement) {
  Rng rng(28);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const auto g1 = random_gamma(rng, d.size());
  VectorXd v = interior_perturbation(rng, d, g1).values();
  for (Index i : set_union(d.w1(), d.w2())) v[i] *= 1.5;
  const ConductivityField g2(v);
  const VectorXd f = rng.normal(static_cast<Index>(d.w1().size()));
  const VectorXd g = rng.normal(static_cast<Index>(d.w2().size()));
  EXPECT_THROW(verify_dn_reduction(w, g1, g2, f, g, {d.w1(), d.w2()}), AssumptionError);
  const auto chk = verify_dn_reduction(w, g1, g2, f, g, {d.w1(), d.w2()}, {.enforce_exterior_agreement = false});
  EXPECT_GT(chk.residual, 1e-3);
}

TEST(Alessandrini, EqualPotentials) {
  Rng rng(29);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const VectorXd q = rng.uniform(d.size(), 0.0, 1.0);
  const NodeSet win = set_union(d.w1(), d.w2());
  const auto gap = alessandrini_gap(w, q, q, rng.normal(static_cast<Index>(win.size())),
                                    rng.normal(static_cast<Index>(win.size())), win);
  EXPECT_EQ(gap.lhs, 0.0);
  EXPECT_EQ(gap.rhs, 0.0);
}

TEST(Alessandrini, InteriorDifferenceBalancesDnTerm) {
  Rng rng(30);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const VectorXd q1 = rng.uniform(d.size(), 0.0, 1.0);
  VectorXd q2 = q1;
  for (Index i : d.omega()) q2[i] = rng.uniform(0.0, 1.0);
  const NodeSet win = set_union(d.w1(), d.w2());
  const auto gap = alessandrini_gap(w, q1, q2, rng.normal(static_cast<Index>(win.size())),
                                    rng.normal(static_cast<Index>(win.size())), win);
  EXPECT_EQ(gap.lhs, 0.0);
  EXPECT_LT(std::abs(gap.dn_term - gap.interior_term), 1e-10 * std::abs(gap.dn_term));
}

TEST(Alessandrini, RandomInputsAgainstBruteForce) {
  Rng rng(31);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const NodeSet win = set_union(d.w1(), d.w2());
  const double mass = d.cell_volume();
  for (int t = 0; t < 10; ++t) {
    const VectorXd q1 = rng.uniform(d.size(), 0.0, 1.0), q2 = rng.uniform(d.size(), 0.0, 1.0);
    const VectorXd f1 = rng.normal(static_cast<Index>(win.size())), f2 = rng.normal(static_cast<Index>(win.size()));
    const auto gap = alessandrini_gap(w, q1, q2, f1, f2, win);
    EXPECT_LT(gap.residual, 1e-10);

    // Independent evaluation through LU Schur complements and solves.
    const auto a1 = assemble_schrodinger_form(w, q1), a2 = assemble_schrodinger_form(w, q2);
    const MatrixXd l1 = schur_oracle(a1), l2 = schur_oracle(a2);
    const VectorXd f1e = fraccond::test::scatter(d.size(), win, f1)(d.exterior());
    const VectorXd f2e = fraccond::test::scatter(d.size(), win, f2)(d.exterior());
    const double dn = f2e.dot((l1 - l2) * f1e);
    auto solve = [&](const NonlocalForm& f, const VectorXd& ext) {
      const MatrixXd& a = f.matrix();
      return VectorXd(-a(d.omega(), d.omega()).partialPivLu().solve(a(d.omega(), d.exterior()) * ext));
    };
    const VectorXd u1 = solve(a1, f1e), u2 = solve(a2, f2e);
    double interior = 0.0, window = 0.0;
    for (size_t k = 0; k < d.omega().size(); ++k) {
      const Index i = d.omega()[k];
      interior += mass * (q1[i] - q2[i]) * u1[static_cast<Index>(k)] * u2[static_cast<Index>(k)];
    }
    for (size_t k = 0; k < win.size(); ++k) {
      const Index i = win[k];
      window += mass * (q1[i] - q2[i]) * f1[static_cast<Index>(k)] * f2[static_cast<Index>(k)];
    }
    EXPECT_LT(relative(gap.dn_term, dn), 1e-10);
    EXPECT_LT(relative(gap.interior_term, interior), 1e-10);
    EXPECT_LT(relative(gap.lhs, window), 1e-12);
  }
}

TEST(Gauge, InteriorShiftsLeavePairingUnchanged) {
  Rng rng(32);
  const GridDomain d = fraccond::test::small_line(32);
  const auto w = assemble_weights(d, 0.25);
  const auto form = assemble_conductivity_form(w, random_gamma(rng, d.size()));
  const VectorXd f = fraccond::test::scatter(d.size(), d.exterior(), rng.normal(static_cast<Index>(d.exterior().size())));
  const VectorXd g = fraccond::test::scatter(d.size(), d.exterior(), rng.normal(static_cast<Index>(d.exterior().size())));
  EXPECT_LT(gauge_residual(form, f, g, rng.normal(d.size()), rng.normal(d.size())), 1e-10);
  EXPECT_THROW(gauge_residual(form, f, g, VectorXd::Zero(2), VectorXd::Zero(2)), ShapeError);
}

TEST(MultiplierNorm, ZeroOnWindow) {
  const GridDomain d = fraccond::test::small_line(32);
  const SobolevMetric g = gram_matrix(d, d.w1(), 0.25);
  VectorXd q = VectorXd::Zero(d.size());
  for (Index i : d.omega()) q[i] = 1.0;
  EXPECT_EQ(multiplier_norm(d, q, g).value, 0.0);
}

TEST(MultiplierNorm, SingleNodeClosedForm) {
  const GridDomain d = fraccond::test::small_line(32);
  const Index node = d.w1().front();
  const SobolevMetric g = gram_matrix(d, {node}, 0.25);
  VectorXd q = VectorXd::Zero(d.size());
  q[node] = -2.5;
  const double expect = d.cell_volume() * 2.5 / g.gram()(0, 0);
  EXPECT_LT(relative(multiplier_norm(d, q, g).value, expect), 1e-12);
}

TEST(MultiplierNorm, AgreesWithRandomSearchAndGeneralizedEigenvalue) {
  Rng rng(33);
  const GridDomain d = fraccond::test::small_line(32);
  const NodeSet nodes(d.w1().begin(), d.w1().begin() + std::min<size_t>(6, d.w1().size()));
  const SobolevMetric g = gram_matrix(d, nodes, 0.25);
  const VectorXd q = rng.normal(d.size());
  const auto result = multiplier_norm(d, q, g, {.starts = 20, .seed = 4});
  EXPECT_EQ(result.starts, 20);
  EXPECT_LT(relative(g.norm(result.u1), 1.0), 1e-12);

  VectorXd diag(g.size());
  for (Index a = 0; a < g.size(); ++a) diag[a] = d.cell_volume() * q[nodes[static_cast<size_t>(a)]];
  const MatrixXd dm = diag.asDiagonal();
  const double sup = bilinear_sup(dm, g, g, 1000000, rng);
  EXPECT_LE(sup, result.value * (1.0 + 1e-10));
  EXPECT_GT(sup, 0.98 * result.value);

  // Exact value: largest |generalized eigenvalue| of (D, G).
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(dm, g.gram());
  EXPECT_LT(relative(result.value, ges.eigenvalues().cwiseAbs().maxCoeff()), 1e-8);
}

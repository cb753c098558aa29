#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fraccond/dnmap.hpp"

namespace fraccond {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Fields

/// Smooth bump a * exp(1 - 1 / (1 - |x - c|^2 / r^2)) inside the ball, 0 outside.
struct Bump {
  Point center{0.0, 0.0};
  double radius = 1.0;
  double height = 1.0;
};

/// constant + sum of bumps, evaluated at grid nodes.
struct FieldSpec {
  double constant = 0.0;
  std::vector<Bump> bumps;

  VectorXd evaluate(const GridDomain& domain) const;
};

FieldSpec field_spec_from_json(const nlohmann::json& j, int dim);
nlohmann::json to_json(const FieldSpec& spec, int dim);

// ---------------------------------------------------------------------------
// Admissible pairs

/// Hypothesis constants of the stability theorems.
struct PairBounds {
  double gamma0 = 0.5;             // gamma_0 <= gamma <= 1 / gamma_0
  double regularity_bound = 10.0;  // C_1
  double regularity_excess = 0.1;  // epsilon in H^{2s + epsilon, n/s}
};

struct AssumptionFlags {
  bool support = true;     // (i): exterior agreement, or difference supported in Sigma
  bool ellipticity = true; // (ii)
  bool regularity = true;  // (iii)
  double measured_gamma0 = 1.0;
  double measured_c1 = 0.0;
  std::string detail;

  bool all() const { return support && ellipticity && regularity; }
  nlohmann::json to_json() const;
};

struct ConductivityPair {
  ConductivityField gamma1;
  ConductivityField gamma2;
  AssumptionFlags flags;
};

struct PairOptions {
  bool strict = true;  // throw AssumptionError on any violated hypothesis
};

/// gamma_2 = gamma_1 + eps * profile. The profile must vanish on the exterior
/// (exterior agreement) or outside Sigma (compact difference).
ConductivityPair gen_pair(const std::shared_ptr<const KernelWeights>& weights, const ConductivityField& gamma1,
                          const VectorXd& profile, double eps, GeometryMode mode, const PairBounds& bounds,
                          const PairOptions& options = {});

// ---------------------------------------------------------------------------
// Sweeps

struct StabilityRecord {
  double eps = 0.0;
  double delta = kNaN;      // DN difference norm over the windows
  double d_hs = kNaN;       // ||gamma_1 - gamma_2||_{H^s}
  double d_lp = kNaN;       // ||gamma_1 - gamma_2||_{L^p}
  double d_sqrt_hs = kNaN;  // ||gamma_1^{1/2} - gamma_2^{1/2}||_{H^s}
  double eta = kNaN;        // intermediate quantity of the log-log chain
  double partial_lhs = kNaN;  // ||L_q1 - L_q2||_{W1,W2}
  double partial_rhs = kNaN;  // t + t^{(1 - theta0)/2}, t = ||L_g1 - L_g2||_W
  double ucp_lhs = kNaN;      // ||v||_{H^{s'}}
  AssumptionFlags flags;
  std::string status = "ok";  // ok | assumption | failed
  std::string message;

  bool usable() const { return status != "failed"; }
};

struct SweepConfig {
  std::vector<double> ladder;
  FieldSpec base;     // gamma_1
  FieldSpec profile;  // rho
  PairBounds bounds;
  double theta0 = 0.75;
  double p = 2.0;
  double s_prime = 0.2;
  KernelModel kernel = KernelModel::truncated;
  int threads = 1;
};

/// One record per amplitude, sorted by amplitude. Solver failures are
/// recorded per record; the sweep continues.
std::vector<StabilityRecord> stability_sweep(const std::shared_ptr<const KernelWeights>& weights,
                                             const SweepConfig& config);

// ---------------------------------------------------------------------------
// Moduli

enum class ModulusModel { log, loglog };

std::string to_string(ModulusModel model);
ModulusModel modulus_model_from_string(const std::string& name);

struct ModulusFit {
  ModulusModel model = ModulusModel::log;
  // log:    d <= C |log t|^{-sigma}
  // loglog: d <= C1 |log(C0 |log t|^{-sigma0})|^{-sigma1}
  double c = kNaN, sigma = kNaN;
  double c0 = kNaN, sigma0 = kNaN, c1 = kNaN, sigma1 = kNaN;
  double ls_c = kNaN, ls_c0 = kNaN, ls_c1 = kNaN;  // least-squares intercepts
  double lambda = kNaN;
  double residual = kNaN;  // RMS of the transformed least-squares fit
  int used = 0;
  int excluded = 0;
  bool conforming = false;
  std::vector<std::string> warnings;

  /// Envelope value at t (0 at t = 0).
  double omega(double t) const;
  nlohmann::json to_json() const;
};

/// Which distance the fit bounds.
enum class DistanceKind { hs, lp };

/// Fits the log model on (delta, d) or the log-log model through eta.
/// Records with delta >= 1 or nonpositive values are excluded with a warning.
/// Throws UsageError when no record is usable.
ModulusFit fit_modulus(const std::vector<StabilityRecord>& records, ModulusModel model,
                       DistanceKind distance = DistanceKind::hs);

struct ProbeEntry {
  double eps = 0.0;
  double delta = 0.0;
  double d = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - d
  bool passed = true;
};

struct InequalityReport {
  bool passed = true;
  bool hypotheses_hold = true;
  double chain_constant = kNaN;  // envelope of d_hs / d_sqrt_hs
  bool chain_passed = true;
  std::vector<ProbeEntry> entries;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

InequalityReport theorem_inequality_probe(const std::vector<StabilityRecord>& records, const ModulusFit& fit,
                                          DistanceKind distance = DistanceKind::hs);

// ---------------------------------------------------------------------------
// Partial-data reduction

struct PartialReduction {
  double lhs = 0.0;
  double rhs = 0.0;
  double delta_w = 0.0;
};

/// Both sides of the partial-data reduction inequality with unit constant.
/// Throws ShapeError unless W1 and W2 are contained in W, DomainError unless
/// s/n < theta0 < 1.
PartialReduction check_partial_reduction(const std::shared_ptr<const KernelWeights>& weights,
                                         const ConductivityField& gamma1, const ConductivityField& gamma2,
                                         double theta0);

/// Smallest C with lhs <= C rhs for every sample (infinity when some rhs = 0 < lhs).
double envelope_constant(const std::vector<std::pair<double, double>>& lhs_rhs);

// ---------------------------------------------------------------------------
// Quantitative unique continuation

struct UcpRecord {
  double lhs = 0.0;       // ||v||_{H^{s'}}
  double residual = 0.0;  // ||(-Delta)^s v||_{H^{-s}(W')}
  double energy = 0.0;    // E
  double distance = 0.0;  // distance between supp v and W'
};

/// Throws ShapeError when v is nonzero on W', AssumptionError when
/// ||v||_{H^s} exceeds E.
UcpRecord ucp_probe(const std::shared_ptr<const KernelWeights>& weights, const VectorXd& v,
                    const NodeSet& window, double s_prime, double energy);

struct UcpEnvelope {
  double c = kNaN;
  double sigma = kNaN;
  bool covers = false;
};

/// C and sigma with lhs <= C E log(C E / residual)^{-sigma} for all records.
UcpEnvelope fit_ucp_envelope(const std::vector<UcpRecord>& records);

// ---------------------------------------------------------------------------
// Reconstruction

struct ReconstructionConfig {
  double alpha = 1e-4;
  int max_iterations = 200;
  double tolerance = 1e-10;  // on the projected-gradient norm, relative to the first one
  double gamma0 = 0.5;
  NodeSet support;           // nodes carrying the unknown deviation
  NodeSet from;              // W1
  NodeSet to;                // W2
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double misfit = 0.0;
  double regularization = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct ReconstructionResult {
  VectorXd deviation;  // full nodal m
  VectorXd gamma;      // (1 + m)^2
  std::vector<IterationRecord> history;
  double objective = 0.0;
  bool converged = false;
  bool line_search_failed = false;
  std::string message;
};

/// Objective of the reconstruction with its adjoint-state gradient over
/// config.support.
class ReconstructionObjective {
 public:
  ReconstructionObjective(std::shared_ptr<const KernelWeights> weights, MatrixXd measured,
                          ReconstructionConfig config, VectorXd initial_deviation);

  Index parameters() const { return static_cast<Index>(config_.support.size()); }
  VectorXd parameters_of(const VectorXd& deviation) const;
  VectorXd deviation_of(const VectorXd& theta) const;

  struct Value {
    double objective = 0.0;
    double misfit = 0.0;
    double regularization = 0.0;
  };
  Value evaluate(const VectorXd& theta) const;
  Value evaluate(const VectorXd& theta, VectorXd& gradient) const;

  double lower_bound() const;
  double upper_bound() const;
  const ReconstructionConfig& config() const { return config_; }

 private:
  MatrixXd block(const NonlocalForm& form) const;
  Value compute(const VectorXd& theta, VectorXd* gradient) const;

  std::shared_ptr<const KernelWeights> weights_;
  MatrixXd measured_;
  ReconstructionConfig config_;
  VectorXd initial_;
  VectorXd theta0_;
  SobolevMetric metric_from_;
  SobolevMetric metric_to_;
};

ReconstructionResult reconstruct(const std::shared_ptr<const KernelWeights>& weights, const MatrixXd& measured,
                                 const ReconstructionConfig& config, const VectorXd& initial_deviation);

/// Relative L2 distance ||a - b|| / ||b|| over all nodes.
double relative_l2_error(const VectorXd& estimate, const VectorXd& truth);

}  // namespace fraccond

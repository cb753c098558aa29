#include <algorithm>
#include <cmath>
#include <limits>

#include "fraccond/error.hpp"
#include "fraccond/stability.hpp"

namespace fraccond {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinSigma = 1e-8;

struct LogFit {
  double c = kNaN, sigma = kNaN, ls_c = kNaN, residual = kNaN;
};

// d <= C (-log t)^{-sigma}: least squares of log d against log(-log t) for the
// slope, then the smallest C covering every sample.
LogFit fit_log_pairs(const std::vector<double>& t, const std::vector<double>& d) {
  const size_t k = t.size();
  std::vector<double> x(k), y(k);
  for (size_t i = 0; i < k; ++i) {
    x[i] = std::log(-std::log(t[i]));
    y[i] = std::log(d[i]);
  }
  LogFit out;
  double intercept;
  if (k == 1) {
    out.sigma = 0.0;
    intercept = y[0];
  } else {
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < k; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < k; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.sigma = -slope;
    intercept = my - slope * mx;
  }
  double ss = 0.0, envelope = -kInf;
  for (size_t i = 0; i < k; ++i) {
    const double r = y[i] - (intercept - out.sigma * x[i]);
    ss += r * r;
    envelope = std::max(envelope, y[i] + out.sigma * x[i]);
  }
  out.ls_c = std::exp(intercept);
  out.c = std::exp(envelope);
  out.residual = std::sqrt(ss / static_cast<double>(k));
  return out;
}

double distance_of(const StabilityRecord& r, DistanceKind kind) { return kind == DistanceKind::hs ? r.d_hs : r.d_lp; }

}  // namespace

std::string to_string(ModulusModel model) { return model == ModulusModel::log ? "log" : "loglog"; }

ModulusModel modulus_model_from_string(const std::string& name) {
  if (name == "log") return ModulusModel::log;
  if (name == "loglog" || name == "log-log") return ModulusModel::loglog;
  throw ConfigError("unknown modulus model '" + name + "'");
}

double ModulusFit::omega(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return kInf;
  const double l = -std::log(t);
  if (model == ModulusModel::log) return c * std::pow(l, -sigma);
  const double inner = c0 * std::pow(l, -sigma0);
  if (inner >= 1.0) return kInf;
  return c1 * std::pow(-std::log(inner), -sigma1);
}

nlohmann::json ModulusFit::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"model", to_string(model)}, {"lambda", num(lambda)}, {"residual", num(residual)},
                      {"used", used},              {"excluded", excluded},  {"conforming", conforming},
                      {"warnings", warnings}};
  if (model == ModulusModel::log) {
    j["C"] = num(c);
    j["sigma"] = num(sigma);
    j["C_least_squares"] = num(ls_c);
  } else {
    j["C0"] = num(c0);
    j["sigma0"] = num(sigma0);
    j["C1"] = num(c1);
    j["sigma1"] = num(sigma1);
    j["C0_least_squares"] = num(ls_c0);
    j["C1_least_squares"] = num(ls_c1);
  }
  return j;
}

ModulusFit fit_modulus(const std::vector<StabilityRecord>& records, ModulusModel model, DistanceKind distance) {
  ModulusFit fit;
  fit.model = model;
  std::vector<double> t, d, eta;
  int excluded_large = 0, excluded_other = 0;
  for (const auto& r : records) {
    const double dv = distance_of(r, distance);
    if (!r.usable() || !std::isfinite(r.delta) || !std::isfinite(dv)) {
      ++excluded_other;
      continue;
    }
    if (r.delta >= 1.0) {
      ++excluded_large;
      continue;
    }
    if (r.delta <= 0.0 || dv <= 0.0) {
      ++excluded_other;
      continue;
    }
    if (model == ModulusModel::loglog && !(std::isfinite(r.eta) && r.eta > 0.0)) {
      ++excluded_other;
      continue;
    }
    t.push_back(r.delta);
    d.push_back(dv);
    eta.push_back(r.eta);
  }
  if (excluded_large > 0)
    fit.warnings.push_back(std::to_string(excluded_large) + " record(s) with delta >= 1 excluded");
  if (excluded_other > 0)
    fit.warnings.push_back(std::to_string(excluded_other) + " record(s) with zero, missing or failed values excluded");
  if (t.empty()) throw UsageError("no record usable for a modulus fit");
  if (t.size() < 4) fit.warnings.push_back("fewer than 4 usable records");

  fit.lambda = *std::max_element(t.begin(), t.end());
  if (model == ModulusModel::log) {
    const LogFit lf = fit_log_pairs(t, d);
    fit.c = lf.c;
    fit.sigma = lf.sigma;
    fit.ls_c = lf.ls_c;
    fit.residual = lf.residual;
    fit.used = static_cast<int>(t.size());
    fit.conforming = fit.sigma > kMinSigma && fit.c > 0.0;
  } else {
    const LogFit inner = fit_log_pairs(t, eta);
    fit.c0 = inner.c;
    fit.sigma0 = inner.sigma;
    fit.ls_c0 = inner.ls_c;
    std::vector<double> t2, d2;
    double lambda2 = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
      const double bound = fit.c0 * std::pow(-std::log(t[i]), -fit.sigma0);
      if (bound >= 1.0) continue;
      t2.push_back(bound);
      d2.push_back(d[i]);
      lambda2 = std::max(lambda2, t[i]);
    }
    if (t2.size() < t.size())
      fit.warnings.push_back(std::to_string(t.size() - t2.size()) +
                             " record(s) with inner envelope >= 1 excluded from the outer fit");
    if (t2.empty()) throw UsageError("inner envelope is >= 1 for every record; log-log fit impossible");
    const LogFit outer = fit_log_pairs(t2, d2);
    fit.c1 = outer.c;
    fit.sigma1 = outer.sigma;
    fit.ls_c1 = outer.ls_c;
    fit.residual = std::hypot(inner.residual, outer.residual);
    fit.lambda = lambda2;
    fit.used = static_cast<int>(t2.size());
    fit.conforming = fit.sigma0 > kMinSigma && fit.sigma1 > kMinSigma;
  }
  fit.excluded = static_cast<int>(records.size()) - fit.used;
  if (!fit.conforming) fit.warnings.push_back("non-conforming fit: fitted exponent is not positive");
  return fit;
}

nlohmann::json InequalityReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries)
    rows.push_back({{"eps", e.eps}, {"delta", e.delta}, {"d", e.d}, {"bound", e.bound}, {"slack", e.slack},
                    {"passed", e.passed}});
  return {{"passed", passed},
          {"hypotheses_hold", hypotheses_hold},
          {"chain_constant", std::isfinite(chain_constant) ? nlohmann::json(chain_constant) : nlohmann::json(nullptr)},
          {"chain_passed", chain_passed},
          {"entries", rows},
          {"notes", notes}};
}

InequalityReport theorem_inequality_probe(const std::vector<StabilityRecord>& records, const ModulusFit& fit,
                                          DistanceKind distance) {
  InequalityReport rep;
  double chain = 0.0;
  for (const auto& r : records) {
    if (!r.usable()) continue;
    if (!r.flags.all()) rep.hypotheses_hold = false;
    const double dv = distance_of(r, distance);
    if (std::isfinite(r.d_hs) && std::isfinite(r.d_sqrt_hs) && r.d_hs > 0.0) {
      if (r.d_sqrt_hs <= 0.0)
        chain = kInf;
      else
        chain = std::max(chain, r.d_hs / r.d_sqrt_hs);
    }
    if (!(r.delta <= fit.lambda)) continue;
    ProbeEntry e;
    e.eps = r.eps;
    e.delta = r.delta;
    e.d = dv;
    e.bound = fit.omega(r.delta);
    e.slack = e.bound - e.d;
    // Envelope constants are max-based; allow rounding in the evaluation of omega.
    e.passed = e.d <= e.bound * (1.0 + 1e-12) + 1e-300;
    rep.passed = rep.passed && e.passed;
    rep.entries.push_back(e);
  }
  rep.chain_constant = chain;
  rep.chain_passed = std::isfinite(chain);
  for (const auto& r : records) {
    if (!r.usable() || !(r.d_hs > 0.0)) continue;
    if (r.d_hs > chain * r.d_sqrt_hs * (1.0 + 1e-12)) rep.chain_passed = false;
  }
  rep.passed = rep.passed && rep.chain_passed;
  if (!rep.hypotheses_hold)
    rep.notes.push_back("theorem hypotheses fail for at least one record; result is informational only");
  if (rep.entries.empty()) rep.notes.push_back("no record with delta <= lambda");
  return rep;
}

}  // namespace fraccond

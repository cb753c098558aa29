#include "fraccond/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <random>
#include <thread>

#include "fraccond/config.hpp"
#include "fraccond/error.hpp"
#include "fraccond/output.hpp"

namespace fraccond {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Setup {
  RunConfig config;
  GridDomain domain;
  std::shared_ptr<const KernelWeights> weights;
};

Setup setup(const CommandOptions& opts) {
  if (opts.config.empty()) throw UsageError("--config is required");
  Setup st;
  st.config = load_config(opts.config);
  if (opts.seed) st.config.seed = *opts.seed;
  st.domain = build_grid(st.config.domain);
  WeightOptions wo;
  wo.model = st.config.op.kernel;
  wo.max_nodes = st.config.op.max_nodes;
  st.weights = assemble_weights(st.domain, st.config.op.s, wo);
  return st;
}

class OutputDir {
 public:
  OutputDir(const std::string& dir, const std::string& command) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_ + ": " + ec.message());
    manifest_.command = command;
    manifest_.tool_version = kToolVersion;
    manifest_.created = timestamp_utc();
  }

  RunManifest& manifest() { return manifest_; }

  void describe(const Setup& st) {
    manifest_.config_hash = st.config.hash;
    manifest_.dim = st.domain.dim();
    manifest_.s = st.config.op.s;
    manifest_.h = st.domain.spacing();
    manifest_.R = st.domain.half_width();
    manifest_.mode = to_string(st.config.domain.mode);
  }

  void text(const std::string& name, const std::string& content) {
    write_text((fs::path(dir_) / name).string(), content);
    manifest_.files.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  void finish() {
    manifest_.files.push_back("manifest.json");
    write_json((fs::path(dir_) / "manifest.json").string(), manifest_.to_json());
  }

 private:
  std::string dir_;
  RunManifest manifest_;
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json provenance_json(const Setup& st, Equation eq) {
  json p = {{"equation", to_string(eq)},
            {"n", st.domain.dim()},
            {"s", st.config.op.s},
            {"h", st.domain.spacing()},
            {"R", st.domain.half_width()},
            {"gamma0", st.config.sweep.bounds.gamma0},
            {"kernel", to_string(st.config.op.kernel)},
            {"geometry_hash", st.domain.geometry_hash()}};
  return p;
}

NodeSet source_window(const GridDomain& d) { return d.w1().empty() ? d.exterior() : d.w1(); }
NodeSet target_window(const GridDomain& d) { return d.w2().empty() ? d.exterior() : d.w2(); }

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  VectorXd normal(Index n) {
    std::normal_distribution<double> nd;
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = nd(rng_);
    return v;
  }
  VectorXd uniform_vec(Index n, double a, double b) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

struct Tally {
  double max = 0.0;
  void add(double v) { max = std::isnan(v) ? v : std::max(max, v); }
  bool below(double tol) const { return max < tol; }
};

}  // namespace

int resolve_threads(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw UsageError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("FRACCOND_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError("FRACCOND_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_verify(const CommandOptions& opts, std::ostream& log) {
  const Setup st = setup(opts);
  const GridDomain& dom = st.domain;
  const auto& w = st.weights;
  const double g0 = st.config.sweep.bounds.gamma0;
  const double tol = st.config.verify.tolerance;
  const int trials = st.config.verify.trials;
  const Index n = dom.size();
  Sampler rng(st.config.seed);

  Tally liouville, reduction, alessandrini, symmetry, gauge, flux;
  const NodeSet from = source_window(dom), to = target_window(dom);
  const NodeSet window = dom.w().empty() ? set_union(from, to) : dom.w();

  for (int t = 0; t < trials; ++t) {
    const ConductivityField gamma(rng.uniform_vec(n, g0, 1.0 / g0));
    liouville.add(verify_liouville_identity(w, gamma, rng.normal(n), rng.normal(n), st.config.op.q_sign));

    VectorXd g2 = gamma.values();
    for (Index i : dom.omega()) g2[i] = rng.uniform(g0, 1.0 / g0);
    const auto chk = verify_dn_reduction(w, gamma, ConductivityField(g2),
                                         rng.normal(static_cast<Index>(from.size())),
                                         rng.normal(static_cast<Index>(to.size())), {from, to});
    reduction.add(chk.residual);

    const auto gap = alessandrini_gap(w, rng.uniform_vec(n, 0.0, 1.0), rng.uniform_vec(n, 0.0, 1.0),
                                      rng.normal(static_cast<Index>(window.size())),
                                      rng.normal(static_cast<Index>(window.size())), window);
    alessandrini.add(gap.residual);

    const auto form = assemble_conductivity_form(w, gamma);
    VectorXd f = VectorXd::Zero(n), g = VectorXd::Zero(n);
    const VectorXd fr = rng.normal(n), gr = rng.normal(n);
    for (Index i : dom.exterior()) {
      f[i] = fr[i];
      g[i] = gr[i];
    }
    gauge.add(gauge_residual(form, f, g, rng.normal(n), rng.normal(n)));
  }

  const int maps = std::min(trials, 2);
  for (int t = 0; t < maps; ++t) {
    const ConductivityField gamma(rng.uniform_vec(n, g0, 1.0 / g0));
    const DnMap cond = dn_map(assemble_conductivity_form(w, gamma));
    symmetry.add(max_asymmetry(cond));
    const VectorXd ones = VectorXd::Ones(cond.size());
    flux.add((cond.matrix() * ones).cwiseAbs().maxCoeff() / cond.matrix().cwiseAbs().maxCoeff());
    const DnMap schr = dn_map(assemble_schrodinger_form(w, rng.uniform_vec(n, 0.0, 1.0)));
    symmetry.add(max_asymmetry(schr));
  }

  auto entry = [&](const Tally& tally) { return json{{"max_residual", num(tally.max)}, {"passed", tally.below(tol)}}; };
  json report = {{"tolerance", tol},
                 {"trials", trials},
                 {"nodes", n},
                 {"liouville", entry(liouville)},
                 {"dn_reduction", entry(reduction)},
                 {"alessandrini", entry(alessandrini)},
                 {"dn_symmetry", entry(symmetry)},
                 {"gauge", entry(gauge)},
                 {"constant_flux", entry(flux)}};
  report["liouville"]["q_sign"] = st.config.op.q_sign == PotentialSign::negative ? "negative" : "positive";
  const bool ok = liouville.below(tol) && reduction.below(tol) && alessandrini.below(tol) && symmetry.below(tol) &&
                  gauge.below(tol) && flux.below(tol);
  report["passed"] = ok;

  OutputDir out(opts.out, "verify");
  out.describe(st);
  out.json_file("verify_report.json", report);
  out.finish();
  const std::pair<const char*, const Tally*> lines[] = {{"liouville", &liouville},  {"dn_reduction", &reduction},
                                                        {"alessandrini", &alessandrini}, {"dn_symmetry", &symmetry},
                                                        {"gauge", &gauge},           {"constant_flux", &flux}};
  for (const auto& [key, tally] : lines)
    log << key << ": max residual " << format_double(tally->max) << (tally->below(tol) ? " ok" : " FAIL") << "\n";
  return ok ? kExitSuccess : kExitScientific;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& log) {
  Setup st = setup(opts);
  if (st.config.sweep.ladder.empty()) throw UsageError("empty amplitude ladder: nothing to do");
  st.config.sweep.threads = resolve_threads(opts.threads);
  const GridDomain& dom = st.domain;
  const bool thm1 = st.config.domain.mode == GeometryMode::exterior_agreement;
  const auto records = stability_sweep(st.weights, st.config.sweep);

  const ModulusModel model = st.config.model.value_or(thm1 ? ModulusModel::log : ModulusModel::loglog);
  const DistanceKind distance = thm1 ? DistanceKind::hs : DistanceKind::lp;

  OutputDir out(opts.out, "sweep");
  out.describe(st);
  out.text("records.csv", records_csv(records));

  json report = {{"model", to_string(model)}, {"distance", distance == DistanceKind::hs ? "d_hs" : "d_lp"}};
  report["audit"] = validate_geometry(dom, st.config.domain.mode).to_json();
  try {
    const ModulusFit fit = fit_modulus(records, model, distance);
    report["fit"] = fit.to_json();
    report["probe"] = theorem_inequality_probe(records, fit, distance).to_json();
    out.text("envelope.csv", envelope_plot_csv(records, fit, distance));
  } catch (const UsageError& e) {
    report["fit"] = nullptr;
    report["fit_error"] = e.what();
  }

  std::vector<std::pair<double, double>> partial;
  for (const auto& r : records)
    if (r.usable() && std::isfinite(r.partial_lhs)) partial.emplace_back(r.partial_lhs, r.partial_rhs);
  if (!partial.empty()) {
    // Records are sorted by amplitude; the first half of the ladder holds the largest ones.
    const size_t half = (partial.size() + 1) / 2;
    const std::vector<std::pair<double, double>> top(partial.end() - static_cast<long>(half), partial.end());
    const double c_half = envelope_constant(top), c_all = envelope_constant(partial);
    report["partial_reduction"] = {{"envelope_all", num(c_all)},
                                   {"envelope_largest_half", num(c_half)},
                                   {"growth", num(c_half > 0.0 ? c_all / c_half - 1.0 : 0.0)}};
  }

  // DN block of gamma_2 at the largest amplitude, usable as reconstruction data.
  {
    const double eps = *std::max_element(st.config.sweep.ladder.begin(), st.config.sweep.ladder.end());
    const VectorXd g2 = st.config.sweep.base.evaluate(dom) + eps * st.config.sweep.profile.evaluate(dom);
    const auto form = assemble_conductivity_form(st.weights, ConductivityField(g2));
    json prov = provenance_json(st, Equation::conductivity);
    prov["eps"] = eps;
    out.text("measured_block.csv", dn_block_csv(dn_block(form, source_window(dom), target_window(dom)), prov));
  }
  out.json_file("fit.json", report);
  out.finish();

  int ok = 0;
  for (const auto& r : records) {
    log << "eps=" << format_double(r.eps) << " delta=" << format_double(r.delta) << " d_hs=" << format_double(r.d_hs)
        << " d_lp=" << format_double(r.d_lp) << " status=" << r.status << "\n";
    if (r.usable()) ++ok;
  }
  return ok > 0 ? kExitSuccess : kExitScientific;
}

int cmd_fit(const CommandOptions& opts, std::ostream& log) {
  if (opts.records.empty()) throw UsageError("--records is required");
  const auto records = parse_records_csv(read_text(opts.records));
  const ModulusModel model = modulus_model_from_string(opts.model.empty() ? "log" : opts.model);
  const DistanceKind distance = model == ModulusModel::log ? DistanceKind::hs : DistanceKind::lp;
  const ModulusFit fit = fit_modulus(records, model, distance);
  const auto probe = theorem_inequality_probe(records, fit, distance);

  OutputDir out(opts.out, "fit");
  out.manifest().config_hash = fnv1a_hex(read_text(opts.records));
  out.json_file("fit.json", {{"fit", fit.to_json()}, {"probe", probe.to_json()}});
  out.text("envelope.csv", envelope_plot_csv(records, fit, distance));
  out.finish();
  log << fit.to_json().dump() << "\n";
  return fit.conforming && probe.passed ? kExitSuccess : kExitScientific;
}

int cmd_reconstruct(const CommandOptions& opts, std::ostream& log) {
  if (opts.data.empty()) throw UsageError("--data is required");
  const Setup st = setup(opts);
  const GridDomain& dom = st.domain;
  const DnBlockFile data = parse_dn_block_csv(read_text(opts.data));

  ReconstructionConfig rc;
  rc.alpha = st.config.reconstruct.alpha;
  rc.max_iterations = st.config.reconstruct.max_iterations;
  rc.tolerance = st.config.reconstruct.tolerance;
  rc.gamma0 = st.config.sweep.bounds.gamma0;
  rc.support = st.config.domain.mode == GeometryMode::exterior_agreement ? dom.omega() : dom.sigma();
  rc.from = source_window(dom);
  rc.to = target_window(dom);
  if (data.matrix.rows() != static_cast<Index>(rc.to.size()) || data.matrix.cols() != static_cast<Index>(rc.from.size()))
    throw ShapeError("DN block is " + std::to_string(data.matrix.rows()) + "x" + std::to_string(data.matrix.cols()) +
                     " but the configured windows need " + std::to_string(rc.to.size()) + "x" +
                     std::to_string(rc.from.size()));

  const VectorXd m0 = st.config.reconstruct.initial.evaluate(dom);
  const auto result = reconstruct(st.weights, data.matrix, rc, m0);

  OutputDir out(opts.out, "reconstruct");
  out.describe(st);
  std::string csv = dom.dim() == 1 ? "node,x,gamma,m\n" : "node,x,y,gamma,m\n";
  for (Index i = 0; i < dom.size(); ++i) {
    const Point x = dom.coordinate(i);
    csv += std::to_string(i) + "," + format_double(x[0]) + ",";
    if (dom.dim() == 2) csv += format_double(x[1]) + ",";
    csv += format_double(result.gamma[i]) + "," + format_double(result.deviation[i]) + "\n";
  }
  out.text("gamma_hat.csv", csv);

  json hist = json::array();
  for (const auto& h : result.history)
    hist.push_back({{"iteration", h.iteration},
                    {"objective", h.objective},
                    {"misfit", h.misfit},
                    {"regularization", h.regularization},
                    {"gradient_norm", h.gradient_norm},
                    {"step", h.step}});
  json report = {{"history", hist},
                 {"final_objective", result.objective},
                 {"converged", result.converged},
                 {"line_search_failed", result.line_search_failed},
                 {"message", result.message},
                 {"alpha", rc.alpha},
                 {"data_provenance", data.provenance}};
  const VectorXd gamma0_field = (VectorXd::Ones(dom.size()) + m0).array().square().matrix();
  report["relative_change_from_initial"] = relative_l2_error(result.gamma, gamma0_field);
  if (st.config.reconstruct.truth)
    report["relative_error"] = relative_l2_error(result.gamma, st.config.reconstruct.truth->evaluate(dom));
  out.json_file("history.json", report);
  out.finish();

  const double first = result.history.front().misfit, last = result.history.back().misfit;
  log << "misfit " << format_double(first) << " -> " << format_double(last) << " after "
      << result.history.size() - 1 << " iterations (" << result.message << ")\n";
  return last <= first ? kExitSuccess : kExitScientific;
}

int cmd_dnmap(const CommandOptions& opts, std::ostream& log) {
  const Setup st = setup(opts);
  const GridDomain& dom = st.domain;
  const VectorXd gamma = st.config.sweep.base.evaluate(dom) + st.config.dnmap.eps * st.config.sweep.profile.evaluate(dom);
  const ConductivityField field(gamma);
  const Equation eq = st.config.dnmap.equation;
  const NonlocalForm form =
      eq == Equation::conductivity
          ? assemble_conductivity_form(st.weights, field)
          : assemble_schrodinger_form(st.weights, liouville_potential(*st.weights, field, st.config.op.q_sign));
  const DnMap map = dn_map(form);
  const double asym = max_asymmetry(map);
  const MatrixXd block = restrict_dn(map, source_window(dom), target_window(dom));

  json prov = provenance_json(st, eq);
  prov["eps"] = st.config.dnmap.eps;
  OutputDir out(opts.out, "dnmap");
  out.describe(st);
  out.text("dn_full.csv", dn_block_csv(map.matrix(), prov));
  out.text("dn_block.csv", dn_block_csv(block, prov));
  const double top = map.matrix().cwiseAbs().maxCoeff();
  const double flux = top > 0.0 ? (map.matrix() * VectorXd::Ones(map.size())).cwiseAbs().maxCoeff() / top : 0.0;
  const json report = {{"asymmetry", asym},
                       {"constant_flux", flux},
                       {"exterior_nodes", map.size()},
                       {"block_rows", block.rows()},
                       {"block_cols", block.cols()},
                       {"interior_margin", check_dirichlet_eigenvalue(form)},
                       {"provenance", prov}};
  out.json_file("dnmap_report.json", report);
  out.finish();
  log << "DN map " << map.size() << "x" << map.size() << ", asymmetry " << format_double(asym) << "\n";
  return asym < 1e-10 ? kExitSuccess : kExitScientific;
}

int cmd_ucp_probe(const CommandOptions& opts, std::ostream& log) {
  const Setup st = setup(opts);
  const GridDomain& dom = st.domain;
  const UcpSection& u = st.config.ucp;
  if (u.centers.empty()) throw UsageError("ucp.centers is empty: nothing to do");
  const NodeSet window = set_union(dom.w1(), dom.w2());
  if (window.empty()) throw ConfigError("ucp-probe needs windows w1/w2 for W'");

  std::vector<UcpRecord> records;
  double homogeneity = 0.0;
  for (const Point& c : u.centers) {
    FieldSpec spec;
    spec.bumps.push_back({c, u.radius, u.height});
    const VectorXd v = spec.evaluate(dom);
    const UcpRecord r = ucp_probe(st.weights, v, window, u.s_prime, u.energy);
    const UcpRecord half = ucp_probe(st.weights, 0.5 * v, window, u.s_prime, u.energy);
    auto rel = [](double a, double b) { return b > 0.0 ? std::abs(a - b) / b : std::abs(a); };
    homogeneity = std::max({homogeneity, rel(2.0 * half.lhs, r.lhs), rel(2.0 * half.residual, r.residual)});
    records.push_back(r);
  }
  std::vector<UcpRecord> by_distance = records;
  std::stable_sort(by_distance.begin(), by_distance.end(),
                   [](const UcpRecord& a, const UcpRecord& b) { return a.distance < b.distance; });
  bool monotone = true;
  for (size_t k = 1; k < by_distance.size(); ++k)
    if (!(by_distance[k].residual < by_distance[k - 1].residual)) monotone = false;
  const UcpEnvelope env = fit_ucp_envelope(records);

  OutputDir out(opts.out, "ucp-probe");
  out.describe(st);
  std::string csv = "distance,lhs,residual,energy\n";
  for (const auto& r : records)
    csv += format_double(r.distance) + "," + format_double(r.lhs) + "," + format_double(r.residual) + "," +
           format_double(r.energy) + "\n";
  out.text("ucp_records.csv", csv);
  out.json_file("ucp_report.json", {{"C", num(env.c)},
                                    {"sigma", num(env.sigma)},
                                    {"covers", env.covers},
                                    {"homogeneity_residual", homogeneity},
                                    {"monotone_in_distance", monotone}});
  out.finish();
  log << "UCP envelope C=" << format_double(env.c) << " sigma=" << format_double(env.sigma)
      << " homogeneity=" << format_double(homogeneity) << " monotone=" << (monotone ? "yes" : "no") << "\n";
  return homogeneity < 1e-10 && env.covers ? kExitSuccess : kExitScientific;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    if (name == "verify") return cmd_verify(opts, log);
    if (name == "sweep") return cmd_sweep(opts, log);
    if (name == "fit") return cmd_fit(opts, log);
    if (name == "reconstruct") return cmd_reconstruct(opts, log);
    if (name == "dnmap") return cmd_dnmap(opts, log);
    if (name == "ucp-probe") return cmd_ucp_probe(opts, log);
    err << "error: unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "dimension mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "invalid parameter: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapacityError& e) {
    err << "problem too large: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitScientific;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitScientific;
  }
}

}  // namespace fraccond

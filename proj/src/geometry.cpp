#include "fraccond/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

#include "fraccond/error.hpp"

namespace fraccond {

namespace {

// Relative slack for lattice-versus-shape comparisons.
constexpr double kCoordTol = 1e-9;

Point read_point(const nlohmann::json& j, int dim, const char* what) {
  Point p{0.0, 0.0};
  if (j.is_number() && dim == 1) {
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(std::string("expected ") + std::to_string(dim) + " coordinates for " + what);
  for (int d = 0; d < dim; ++d) p[d] = j.at(d).get<double>();
  return p;
}

Shape read_shape(const nlohmann::json& j, int dim, const std::string& name) {
  // 1D shorthand: [a, b] is the interval (a, b).
  if (j.is_array() && dim == 1 && j.size() == 2 && j[0].is_number())
    return Shape::box({j[0].get<double>(), 0.0}, {j[1].get<double>(), 0.0});
  if (!j.is_object()) throw ConfigError("region '" + name + "' must be an object");
  const std::string type = j.value("type", "box");
  if (type == "box" || type == "interval") {
    Shape s = Shape::box(read_point(j.at("lo"), dim, "lo"), read_point(j.at("hi"), dim, "hi"));
    for (int d = 0; d < dim; ++d)
      if (!(s.lo[d] < s.hi[d])) throw ConfigError("region '" + name + "' has lo >= hi");
    return s;
  }
  if (type == "ball") {
    const double r = j.at("radius").get<double>();
    if (!(r > 0.0)) throw ConfigError("region '" + name + "' has nonpositive radius");
    return Shape::ball(read_point(j.at("center"), dim, "center"), r);
  }
  throw ConfigError("region '" + name + "' has unknown type '" + type + "'");
}

double box_box_distance(const Shape& a, const Shape& b, int dim) {
  double sq = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double gap = std::max({0.0, b.lo[d] - a.hi[d], a.lo[d] - b.hi[d]});
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

double point_box_distance(const Point& p, const Shape& b, int dim) {
  double sq = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double gap = std::max({0.0, b.lo[d] - p[d], p[d] - b.hi[d]});
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

double point_distance(const Point& a, const Point& b, int dim) {
  double sq = 0.0;
  for (int d = 0; d < dim; ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(sq);
}

// FNV-1a, 64 bit.
struct Fnv1a {
  std::uint64_t state = 1469598103934665603ull;
  void bytes(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ull;
    }
  }
  template <class T>
  void value(const T& v) { bytes(&v, sizeof(T)); }
};

}  // namespace

std::string to_string(GeometryMode mode) {
  return mode == GeometryMode::exterior_agreement ? "theorem-1" : "theorem-2";
}

GeometryMode geometry_mode_from_string(const std::string& name) {
  if (name == "theorem-1" || name == "exterior_agreement") return GeometryMode::exterior_agreement;
  if (name == "theorem-2" || name == "compact_difference") return GeometryMode::compact_difference;
  throw ConfigError("unknown geometry mode '" + name + "'");
}

Shape Shape::box(Point lo, Point hi) {
  Shape s;
  s.kind = Kind::box;
  s.lo = lo;
  s.hi = hi;
  return s;
}

Shape Shape::ball(Point center, double radius) {
  Shape s;
  s.kind = Kind::ball;
  s.center = center;
  s.radius = radius;
  return s;
}

bool Shape::contains_cell(const Point& x, double half, int dim, bool open_shape) const {
  const double tol = kCoordTol * std::max(1.0, half);
  if (kind == Kind::box) {
    for (int d = 0; d < dim; ++d) {
      const double a = x[d] - half, b = x[d] + half;
      if (open_shape) {
        if (!(a > lo[d] + tol && b < hi[d] - tol)) return false;
      } else if (!(a >= lo[d] - tol && b <= hi[d] + tol)) {
        return false;
      }
    }
    return true;
  }
  // Farthest corner of the cell from the center.
  double sq = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double far = std::abs(x[d] - center[d]) + half;
    sq += far * far;
  }
  const double far = std::sqrt(sq);
  return open_shape ? far < radius - tol : far <= radius + tol;
}

double Shape::distance_to(const Shape& other, int dim) const {
  if (kind == Kind::box && other.kind == Kind::box) return box_box_distance(*this, other, dim);
  if (kind == Kind::ball && other.kind == Kind::ball)
    return std::max(0.0, point_distance(center, other.center, dim) - radius - other.radius);
  const Shape& b = kind == Kind::box ? *this : other;
  const Shape& c = kind == Kind::ball ? *this : other;
  return std::max(0.0, point_box_distance(c.center, b, dim) - c.radius);
}

double Shape::max_abs_coordinate(int dim) const {
  double m = 0.0;
  for (int d = 0; d < dim; ++d) {
    if (kind == Kind::box)
      m = std::max({m, std::abs(lo[d]), std::abs(hi[d])});
    else
      m = std::max(m, std::abs(center[d]) + radius);
  }
  return m;
}

nlohmann::json to_json(const Shape& shape, int dim) {
  auto pt = [dim](const Point& p) {
    nlohmann::json a = nlohmann::json::array();
    for (int d = 0; d < dim; ++d) a.push_back(p[d]);
    return a;
  };
  if (shape.kind == Shape::Kind::box) return {{"type", "box"}, {"lo", pt(shape.lo)}, {"hi", pt(shape.hi)}};
  return {{"type", "ball"}, {"center", pt(shape.center)}, {"radius", shape.radius}};
}

DomainConfig domain_config_from_json(const nlohmann::json& j) {
  try {
    DomainConfig c;
    c.dim = j.at("n").get<int>();
    if (c.dim != 1 && c.dim != 2) throw ConfigError("dimension n must be 1 or 2");
    c.half_width = j.at("R").get<double>();
    c.spacing = j.at("h").get<double>();
    c.omega = read_shape(j.at("omega"), c.dim, "omega");
    if (j.contains("w1")) c.w1 = read_shape(j.at("w1"), c.dim, "w1");
    if (j.contains("w2")) c.w2 = read_shape(j.at("w2"), c.dim, "w2");
    if (j.contains("w")) c.w = read_shape(j.at("w"), c.dim, "w");
    if (j.contains("sigma")) c.sigma = read_shape(j.at("sigma"), c.dim, "sigma");
    c.mode = geometry_mode_from_string(j.value("mode", std::string("theorem-1")));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("domain section: ") + e.what());
  }
}

double GridDomain::cell_volume() const { return std::pow(config_.spacing, config_.dim); }

std::array<Index, 2> GridDomain::lattice_index(Index node) const {
  if (config_.dim == 1) return {node, 0};
  return {node % per_axis_, node / per_axis_};
}

Point GridDomain::coordinate(Index node) const {
  const auto li = lattice_index(node);
  Point p{0.0, 0.0};
  for (int d = 0; d < config_.dim; ++d)
    p[d] = -config_.half_width + static_cast<double>(li[d]) * config_.spacing;
  return p;
}

NodeSet GridDomain::nodes_in(const Shape& shape, bool open_shape) const {
  NodeSet out;
  const double half = 0.5 * config_.spacing;
  for (Index i = 0; i < size_; ++i)
    if (shape.contains_cell(coordinate(i), half, config_.dim, open_shape)) out.push_back(i);
  return out;
}

std::string GridDomain::geometry_hash() const {
  Fnv1a h;
  h.value(config_.dim);
  h.value(config_.half_width);
  h.value(config_.spacing);
  for (const NodeSet* set : {&omega_, &w1_, &w2_, &w_, &sigma_}) {
    h.value(set->size());
    for (Index i : *set) h.value(i);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.state));
  return buf;
}

GridDomain build_grid(const DomainConfig& config) {
  if (config.dim != 1 && config.dim != 2) throw ConfigError("dimension n must be 1 or 2");
  if (!(config.spacing > 0.0)) throw ConfigError("grid spacing h must be positive");
  if (!(config.half_width > 0.0)) throw ConfigError("box half-width R must be positive");
  const double cells = 2.0 * config.half_width / config.spacing;
  const double rounded = std::round(cells);
  if (rounded < 1.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
    throw ConfigError("grid spacing h does not divide the box [-R, R]");
  if (config.sigma.has_value() != (config.mode == GeometryMode::compact_difference))
    throw ConfigError("region 'sigma' must be given exactly when mode is theorem-2");

  const int dim = config.dim;
  auto inside_box = [&](const Shape& s, const char* name) {
    if (s.max_abs_coordinate(dim) > config.half_width + kCoordTol)
      throw ConfigError(std::string("region '") + name + "' extends outside the box");
  };
  inside_box(config.omega, "omega");
  if (config.w1) inside_box(*config.w1, "w1");
  if (config.w2) inside_box(*config.w2, "w2");
  if (config.w) inside_box(*config.w, "w");
  if (config.sigma) inside_box(*config.sigma, "sigma");

  GridDomain g;
  g.config_ = config;
  g.per_axis_ = static_cast<Index>(rounded) + 1;
  g.size_ = dim == 1 ? g.per_axis_ : g.per_axis_ * g.per_axis_;

  auto region = [&](const Shape& s, const char* name, bool open_shape) {
    NodeSet nodes = g.nodes_in(s, open_shape);
    if (nodes.empty()) throw ConfigError(std::string("region '") + name + "' contains no lattice nodes");
    return nodes;
  };
  g.omega_ = region(config.omega, "omega", true);
  if (config.w1) g.w1_ = region(*config.w1, "w1", true);
  if (config.w2) g.w2_ = region(*config.w2, "w2", true);
  if (config.w) g.w_ = region(*config.w, "w", true);
  if (config.sigma) g.sigma_ = region(*config.sigma, "sigma", false);

  g.omega_mask_.assign(static_cast<size_t>(g.size_), false);
  for (Index i : g.omega_) g.omega_mask_[static_cast<size_t>(i)] = true;
  g.exterior_pos_.assign(static_cast<size_t>(g.size_), -1);
  for (Index i = 0; i < g.size_; ++i) {
    if (!g.omega_mask_[static_cast<size_t>(i)]) {
      g.exterior_pos_[static_cast<size_t>(i)] = static_cast<Index>(g.exterior_.size());
      g.exterior_.push_back(i);
    }
  }
  if (g.exterior_.empty()) throw ConfigError("region 'omega' covers the whole box");
  return g;
}

double node_set_distance(const GridDomain& domain, const NodeSet& a, const NodeSet& b) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i : a) {
    const Point pi = domain.coordinate(i);
    for (Index j : b) best = std::min(best, point_distance(pi, domain.coordinate(j), domain.dim()));
  }
  return best;
}

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(const NodeSet& inner, const NodeSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

bool AuditReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const HypothesisCheck& c) { return !c.required || c.passed; });
}

const HypothesisCheck* AuditReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e = {{"name", c.name}, {"required", c.required}, {"passed", c.passed},
                        {"threshold", c.threshold}, {"detail", c.detail}};
    e["measured"] = std::isfinite(c.measured) ? nlohmann::json(c.measured) : nlohmann::json(nullptr);
    arr.push_back(e);
  }
  return {{"mode", fraccond::to_string(mode)}, {"passed", passed()}, {"checks", arr}};
}

AuditReport validate_geometry(const GridDomain& domain, GeometryMode mode) {
  const DomainConfig& cfg = domain.config();
  const int dim = cfg.dim;
  const double h = domain.spacing();
  AuditReport report;
  report.mode = mode;

  auto nonempty = [&](const std::string& name, const NodeSet& set) {
    HypothesisCheck c;
    c.name = name + "_nonempty";
    c.measured = static_cast<double>(set.size());
    c.threshold = 1.0;
    c.passed = !set.empty();
    c.detail = c.passed ? "" : "region has no lattice nodes";
    report.checks.push_back(c);
  };

  // Continuous separation of the closures plus a lattice margin of two cells.
  auto separated = [&](const std::string& name, const std::optional<Shape>& a, const NodeSet& na,
                       const std::vector<std::pair<const std::optional<Shape>*, const NodeSet*>>& others) {
    HypothesisCheck c;
    c.name = name;
    c.threshold = 2.0 * h;
    if (!a || na.empty()) {
      c.passed = false;
      c.measured = 0.0;
      c.detail = "window missing";
      report.checks.push_back(c);
      return;
    }
    double shape_gap = std::numeric_limits<double>::infinity();
    double lattice_gap = std::numeric_limits<double>::infinity();
    for (const auto& [shape, nodes] : others) {
      if (!shape->has_value()) continue;
      shape_gap = std::min(shape_gap, a->distance_to(**shape, dim));
      lattice_gap = std::min(lattice_gap, node_set_distance(domain, na, *nodes));
    }
    c.measured = lattice_gap;
    c.passed = shape_gap > 0.0 && lattice_gap >= 2.0 * h * (1.0 - 1e-12);
    char buf[160];
    std::snprintf(buf, sizeof buf, "closure distance %.6g, lattice distance %.6g", shape_gap, lattice_gap);
    c.detail = buf;
    if (!(shape_gap > 0.0)) c.detail += "; closures intersect";
    report.checks.push_back(c);
  };

  const std::optional<Shape> omega = cfg.omega;
  nonempty("omega", domain.omega());
  nonempty("w1", domain.w1());
  nonempty("w2", domain.w2());

  if (mode == GeometryMode::exterior_agreement) {
    separated("w1_compact_in_exterior", cfg.w1, domain.w1(), {{&omega, &domain.omega()}});
    separated("w2_compact_in_exterior", cfg.w2, domain.w2(), {{&omega, &domain.omega()}});
  } else {
    HypothesisCheck c;
    c.name = "sigma_present";
    c.passed = cfg.sigma.has_value() && !domain.sigma().empty();
    c.measured = static_cast<double>(domain.sigma().size());
    c.threshold = 1.0;
    if (c.passed && cfg.sigma->distance_to(cfg.omega, dim) == 0.0 &&
        is_subset(domain.sigma(), domain.nodes_in(cfg.omega, false)))
      c.detail = "sigma inside closure of omega: exterior-agreement special case";
    report.checks.push_back(c);
    separated("w1_separated_from_omega_and_sigma", cfg.w1, domain.w1(),
              {{&omega, &domain.omega()}, {&cfg.sigma, &domain.sigma()}});
    separated("w2_separated_from_omega_and_sigma", cfg.w2, domain.w2(),
              {{&omega, &domain.omega()}, {&cfg.sigma, &domain.sigma()}});
    if (cfg.w)
      separated("w_separated_from_omega_and_sigma", cfg.w, domain.w(),
                {{&omega, &domain.omega()}, {&cfg.sigma, &domain.sigma()}});
  }

  if (cfg.w) {
    HypothesisCheck c;
    c.name = "windows_nested_in_w";
    c.passed = is_subset(set_union(domain.w1(), domain.w2()), domain.w());
    c.measured = c.passed ? 1.0 : 0.0;
    c.threshold = 1.0;
    report.checks.push_back(c);
  }

  // Advisory: fields fed to the spectral operator must live in the inner half of the box.
  {
    HypothesisCheck c;
    c.name = "inner_half_padding";
    c.required = false;
    double reach = cfg.omega.max_abs_coordinate(dim);
    for (const auto* s : {&cfg.w1, &cfg.w2, &cfg.w, &cfg.sigma})
      if (s->has_value()) reach = std::max(reach, (*s)->max_abs_coordinate(dim));
    c.measured = reach;
    c.threshold = 0.5 * cfg.half_width;
    c.passed = reach <= c.threshold + kCoordTol;
    if (!c.passed) c.detail = "regions reach beyond R/2; truncation and wrap-around bias not controlled";
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace fraccond

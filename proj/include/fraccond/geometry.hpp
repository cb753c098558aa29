#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace fraccond {

using Index = Eigen::Index;
using Point = std::array<double, 2>;

/// Sorted list of node indices into a GridDomain.
using NodeSet = std::vector<Index>;

enum class GeometryMode {
  exterior_agreement,  // gamma_1 = gamma_2 on the whole exterior
  compact_difference,  // supp(gamma_1 - gamma_2) lies in a compact set Sigma
};

std::string to_string(GeometryMode mode);
GeometryMode geometry_mode_from_string(const std::string& name);

/// Axis-aligned box or Euclidean ball in R^n, n in {1, 2}.
struct Shape {
  enum class Kind { box, ball };

  Kind kind = Kind::box;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  Point center{0.0, 0.0};
  double radius = 0.0;

  static Shape box(Point lo, Point hi);
  static Shape ball(Point center, double radius);

  /// True if the closed cube of half-width `half` around `x` lies in the shape.
  /// `open_shape` selects strict containment (open sets) versus the closure.
  bool contains_cell(const Point& x, double half, int dim, bool open_shape) const;

  /// Distance between the closures of two shapes (0 when they touch or overlap).
  double distance_to(const Shape& other, int dim) const;

  /// Largest |coordinate| reached by the closure.
  double max_abs_coordinate(int dim) const;
};

struct DomainConfig {
  int dim = 1;
  double half_width = 1.0;  // box is [-R, R]^n
  double spacing = 0.5;
  Shape omega;
  std::optional<Shape> w1;
  std::optional<Shape> w2;
  std::optional<Shape> w;  // enclosing measurement window (partial-data reduction)
  std::optional<Shape> sigma;
  GeometryMode mode = GeometryMode::exterior_agreement;
};

DomainConfig domain_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Shape& shape, int dim);

/// Uniform lattice on [-R, R]^n with the node sets of the partial-data problem.
///
/// Nodes are indexed row-major with the first axis fastest: for n = 2 the
/// node (ix, iy) has index iy * M + ix, where M = 2R/h + 1.
class GridDomain {
 public:
  GridDomain() = default;

  int dim() const { return config_.dim; }
  double spacing() const { return config_.spacing; }
  double half_width() const { return config_.half_width; }
  Index nodes_per_axis() const { return per_axis_; }
  Index size() const { return size_; }
  /// h^n, the mass of one lattice cell.
  double cell_volume() const;

  Point coordinate(Index node) const;
  std::array<Index, 2> lattice_index(Index node) const;

  const NodeSet& omega() const { return omega_; }
  const NodeSet& exterior() const { return exterior_; }
  const NodeSet& w1() const { return w1_; }
  const NodeSet& w2() const { return w2_; }
  const NodeSet& w() const { return w_; }
  const NodeSet& sigma() const { return sigma_; }

  bool in_omega(Index node) const { return omega_mask_[static_cast<size_t>(node)]; }
  /// Position of a node within exterior(), or -1 for interior nodes.
  Index exterior_position(Index node) const { return exterior_pos_[static_cast<size_t>(node)]; }

  const DomainConfig& config() const { return config_; }

  /// Nodes whose closed cell lies in the given shape.
  NodeSet nodes_in(const Shape& shape, bool open_shape) const;

  /// Stable hex digest of the grid parameters and node sets.
  std::string geometry_hash() const;

  friend GridDomain build_grid(const DomainConfig& config);

 private:
  DomainConfig config_;
  Index per_axis_ = 0;
  Index size_ = 0;
  NodeSet omega_, exterior_, w1_, w2_, w_, sigma_;
  std::vector<bool> omega_mask_;
  std::vector<Index> exterior_pos_;
};

/// Builds the lattice and classifies nodes. Throws ConfigError on invalid input.
GridDomain build_grid(const DomainConfig& config);

/// Minimum Euclidean distance between two node sets (infinity if either is empty).
double node_set_distance(const GridDomain& domain, const NodeSet& a, const NodeSet& b);

NodeSet set_union(const NodeSet& a, const NodeSet& b);
bool is_subset(const NodeSet& inner, const NodeSet& outer);

struct HypothesisCheck {
  std::string name;
  bool required = true;
  bool passed = false;
  double measured = 0.0;   // measured separation or count
  double threshold = 0.0;
  std::string detail;
};

struct AuditReport {
  GeometryMode mode = GeometryMode::exterior_agreement;
  std::vector<HypothesisCheck> checks;

  /// True when every required check passed.
  bool passed() const;
  const HypothesisCheck* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

AuditReport validate_geometry(const GridDomain& domain, GeometryMode mode);

}  // namespace fraccond

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fraccond/stability.hpp"

namespace fraccond {

struct OperatorConfig {
  double s = 0.25;
  KernelModel kernel = KernelModel::truncated;
  PotentialSign q_sign = PotentialSign::negative;
  Index max_nodes = 6000;
};

struct VerifyConfig {
  int trials = 10;
  double tolerance = 1e-10;
};

struct ReconstructSection {
  double alpha = 1e-4;
  int max_iterations = 200;
  double tolerance = 1e-10;
  FieldSpec initial;               // deviation m of the starting guess
  std::optional<FieldSpec> truth;  // conductivity, for error reporting
};

struct UcpSection {
  std::vector<Point> centers;
  double radius = 0.25;
  double height = 0.1;
  double s_prime = 0.2;
  double energy = 1.0;
};

struct DnmapSection {
  double eps = 0.0;
  Equation equation = Equation::conductivity;
};

/// Parsed run configuration. Sections: domain, windows, operator,
/// conductivities, sweep, reconstruct, verify, ucp, dnmap, seed.
struct RunConfig {
  DomainConfig domain;
  OperatorConfig op;
  SweepConfig sweep;
  std::optional<ModulusModel> model;
  ReconstructSection reconstruct;
  VerifyConfig verify;
  UcpSection ucp;
  DnmapSection dnmap;
  std::uint64_t seed = 0;
  std::string hash;  // FNV-1a of the config bytes
};

/// Throws ConfigError on malformed JSON, missing keys or invalid values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace fraccond

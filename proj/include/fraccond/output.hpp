#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fraccond/stability.hpp"

namespace fraccond {

/// Round-trip decimal form (%.17g); "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);
/// Inverse of format_double. Throws ConfigError on malformed text.
double parse_double(std::string_view text);

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);  // ConfigError if unreadable
void write_json(const std::string& path, const nlohmann::json& j);

std::string records_csv(const std::vector<StabilityRecord>& records);
/// Parses records written by records_csv. Throws ConfigError on malformed input.
std::vector<StabilityRecord> parse_records_csv(const std::string& text);

struct DnBlockFile {
  nlohmann::json provenance;
  MatrixXd matrix;
};

/// "# <provenance json>" followed by one comma-separated row per line.
std::string dn_block_csv(const MatrixXd& block, const nlohmann::json& provenance);
DnBlockFile parse_dn_block_csv(const std::string& text);

/// Two columns: |log delta|^{-sigma} (or the log-log abscissa) and d.
std::string envelope_plot_csv(const std::vector<StabilityRecord>& records, const ModulusFit& fit,
                              DistanceKind distance);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string tool_version;
  int dim = 0;
  double s = 0.0, h = 0.0, R = 0.0;
  std::string mode;
  std::string created;  // ISO-8601 UTC; SOURCE_DATE_EPOCH when set
  std::vector<std::string> files;

  nlohmann::json to_json() const;
};

/// Current UTC time, or SOURCE_DATE_EPOCH when that variable is set.
std::string timestamp_utc();

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace fraccond

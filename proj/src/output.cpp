#include "fraccond/output.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fraccond/error.hpp"

namespace fraccond {

namespace {

const std::vector<std::string> kRecordColumns = {
    "eps",         "delta",       "d_hs",    "d_lp",   "d_sqrt_hs", "eta",    "partial_lhs",
    "partial_rhs", "ucp_lhs",     "flag_i",  "flag_ii", "flag_iii",  "status"};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_flag(const std::string& text) {
  if (text == "1") return true;
  if (text == "0") return false;
  throw ConfigError("malformed flag '" + text + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view text) {
  const std::string t = trim(std::string(text));
  if (t == "nan") return std::nan("");
  if (t == "inf") return HUGE_VAL;
  if (t == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("malformed number '" + t + "'");
  return v;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  if (!out) throw ConfigError("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string records_csv(const std::vector<StabilityRecord>& records) {
  std::ostringstream out;
  for (size_t k = 0; k < kRecordColumns.size(); ++k) out << (k ? "," : "") << kRecordColumns[k];
  out << "\n";
  for (const auto& r : records) {
    for (double v : {r.eps, r.delta, r.d_hs, r.d_lp, r.d_sqrt_hs, r.eta, r.partial_lhs, r.partial_rhs, r.ucp_lhs})
      out << format_double(v) << ",";
    out << (r.flags.support ? 1 : 0) << "," << (r.flags.ellipticity ? 1 : 0) << ","
        << (r.flags.regularity ? 1 : 0) << "," << r.status << "\n";
  }
  return out.str();
}

std::vector<StabilityRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("records file is empty");
  auto header = split(trim(line), ',');
  for (auto& h : header) h = trim(h);
  if (header != kRecordColumns) throw ConfigError("records file has an unexpected header");
  std::vector<StabilityRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != kRecordColumns.size())
      throw ConfigError("records file line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " fields");
    StabilityRecord r;
    double* slots[] = {&r.eps, &r.delta, &r.d_hs, &r.d_lp, &r.d_sqrt_hs, &r.eta, &r.partial_lhs, &r.partial_rhs,
                       &r.ucp_lhs};
    for (size_t k = 0; k < 9; ++k) *slots[k] = parse_double(cells[k]);
    r.flags.support = parse_flag(trim(cells[9]));
    r.flags.ellipticity = parse_flag(trim(cells[10]));
    r.flags.regularity = parse_flag(trim(cells[11]));
    r.status = trim(cells[12]);
    if (r.status != "ok" && r.status != "assumption" && r.status != "failed")
      throw ConfigError("records file line " + std::to_string(lineno) + " has unknown status");
    out.push_back(r);
  }
  return out;
}

std::string dn_block_csv(const MatrixXd& block, const nlohmann::json& provenance) {
  std::ostringstream out;
  nlohmann::json prov = provenance;
  prov["rows"] = block.rows();
  prov["cols"] = block.cols();
  out << "# " << prov.dump() << "\n";
  for (Index i = 0; i < block.rows(); ++i) {
    for (Index j = 0; j < block.cols(); ++j) out << (j ? "," : "") << format_double(block(i, j));
    out << "\n";
  }
  return out.str();
}

DnBlockFile parse_dn_block_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ConfigError("DN block file lacks its header");
  DnBlockFile f;
  try {
    f.provenance = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("DN block header is not valid JSON: ") + e.what());
  }
  if (!f.provenance.contains("rows") || !f.provenance.contains("cols") || !f.provenance["rows"].is_number_integer() ||
      !f.provenance["cols"].is_number_integer())
    throw ConfigError("DN block header lacks rows/cols");
  const Index rows = f.provenance["rows"].get<Index>();
  const Index cols = f.provenance["cols"].get<Index>();
  if (rows < 0 || cols < 0) throw ConfigError("DN block header has negative dimensions");
  f.matrix.resize(rows, cols);
  Index r = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (r >= rows) throw ConfigError("DN block file has more rows than declared");
    const auto cells = split(trim(line), ',');
    if (static_cast<Index>(cells.size()) != cols)
      throw ConfigError("DN block row " + std::to_string(r) + " has " + std::to_string(cells.size()) + " entries");
    for (Index c = 0; c < cols; ++c) {
      f.matrix(r, c) = parse_double(cells[static_cast<size_t>(c)]);
      if (!std::isfinite(f.matrix(r, c))) throw ConfigError("DN block contains a non-finite entry");
    }
    ++r;
  }
  if (r != rows) throw ConfigError("DN block file has fewer rows than declared");
  return f;
}

std::string envelope_plot_csv(const std::vector<StabilityRecord>& records, const ModulusFit& fit,
                              DistanceKind distance) {
  std::ostringstream out;
  out << (fit.model == ModulusModel::log ? "abs_log_delta_pow_minus_sigma" : "abs_log_inner_pow_minus_sigma1")
      << ",d\n";
  for (const auto& r : records) {
    const double d = distance == DistanceKind::hs ? r.d_hs : r.d_lp;
    if (!r.usable() || !(r.delta > 0.0 && r.delta < 1.0)) continue;
    const double l = -std::log(r.delta);
    double x;
    if (fit.model == ModulusModel::log) {
      x = std::pow(l, -fit.sigma);
    } else {
      const double inner = fit.c0 * std::pow(l, -fit.sigma0);
      if (!(inner < 1.0)) continue;
      x = std::pow(-std::log(inner), -fit.sigma1);
    }
    out << format_double(x) << "," << format_double(d) << "\n";
  }
  return out.str();
}

std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"config_hash", config_hash},
          {"tool_version", tool_version},
          {"n", dim},
          {"s", s},
          {"h", h},
          {"R", R},
          {"mode", mode},
          {"timestamps", {{"created", created}}},
          {"files", files}};
}

}  // namespace fraccond

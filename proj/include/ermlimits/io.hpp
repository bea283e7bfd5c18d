#pragma once

// Output helpers: CSV tables with an embedded metadata header, JSON
// documents, and loss-table serialization (CSV grid + JSON sidecar).

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ermlimits/errors.hpp"
#include "ermlimits/moreau.hpp"

namespace ermlimits {

inline std::string git_describe() {
  std::string out = "unknown";
#if defined(__unix__) || defined(__APPLE__)
  if (FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r")) {
    char buf[128];
    if (std::fgets(buf, sizeof(buf), p)) {
      out.assign(buf);
      while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) {
        out.pop_back();
      }
      if (out.empty()) out = "unknown";
    }
    ::pclose(p);
  }
#endif
  return out;
}

inline std::string iso_timestamp() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct RunMetadata {
  std::string version = git_describe();
  std::string created = iso_timestamp();
  std::uint64_t seed = 0;
  double tol = 0.0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const {
    return {{"version", version}, {"created", created},
            {"seed", seed},       {"tol", tol},
            {"wall_seconds", wall_seconds}};
  }

  std::string to_comment_block() const {
    std::ostringstream os;
    os << "# version: " << version << "\n# created: " << created
       << "\n# seed: " << seed << "\n# tol: " << tol
       << "\n# wall_seconds: " << wall_seconds << "\n";
    return os.str();
  }
};

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows,
                      const RunMetadata& meta) {
  std::ofstream f(path);
  if (!f) throw DomainError("write_csv: cannot open " + path);
  f << meta.to_comment_block();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    f << (i ? "," : "") << columns[i];
  }
  f << "\n";
  f.precision(12);
  for (const auto& row : rows) {
    if (row.size() != columns.size()) {
      throw DomainError("write_csv: row width mismatch");
    }
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << "\n";
  }
  if (!f.good()) throw DomainError("write_csv: write failed for " + path);
}

inline void write_json(const std::string& path, nlohmann::json doc,
                       const RunMetadata& meta) {
  doc["metadata"] = meta.to_json();
  std::ofstream f(path);
  if (!f) throw DomainError("write_json: cannot open " + path);
  f << doc.dump(2) << "\n";
  if (!f.good()) throw DomainError("write_json: write failed for " + path);
}

// Loss table: CSV with columns v,loss,dloss plus a JSON sidecar describing
// the construction.
inline void write_loss_table(const std::string& csv_path,
                             const TabulatedLoss& loss,
                             const nlohmann::json& sidecar,
                             const RunMetadata& meta) {
  const HermiteTable& t = loss.table();
  std::ofstream f(csv_path);
  if (!f) throw DomainError("write_loss_table: cannot open " + csv_path);
  f << meta.to_comment_block() << "v,loss,dloss\n";
  f.precision(15);
  for (std::size_t i = 0; i < t.vals.size(); ++i) {
    const double v = t.xmin + static_cast<double>(i) * t.dx;
    f << v << "," << t.vals[i] << "," << t.ders[i] << "\n";
  }
  if (!f.good()) throw DomainError("write_loss_table: write failed");
  write_json(csv_path + ".json", sidecar, meta);
}

struct LossTableData {
  std::vector<double> v, loss, dloss;
};

inline LossTableData read_loss_table(const std::string& csv_path) {
  std::ifstream f(csv_path);
  if (!f) throw DomainError("read_loss_table: cannot open " + csv_path);
  LossTableData d;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // v,loss,dloss header row
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 3) {
      throw DomainError("read_loss_table: expected 3 columns in " + csv_path);
    }
    d.v.push_back(vals[0]);
    d.loss.push_back(vals[1]);
    d.dloss.push_back(vals[2]);
  }
  if (d.v.size() < 5) {
    throw DomainError("read_loss_table: too few rows in " + csv_path);
  }
  return d;
}

inline TabulatedLoss load_tabulated_loss(const std::string& csv_path,
                                         const std::string& label) {
  LossTableData d = read_loss_table(csv_path);
  const double vmin = d.v.front();
  const double vmax = d.v.back();
  const double dx = (vmax - vmin) / static_cast<double>(d.v.size() - 1);
  for (std::size_t i = 0; i < d.v.size(); ++i) {
    const double expect = vmin + static_cast<double>(i) * dx;
    if (std::abs(d.v[i] - expect) > 1e-8 * (1.0 + std::abs(expect))) {
      throw DomainError("load_tabulated_loss: grid must be uniform");
    }
  }
  return TabulatedLoss::from_samples(vmin, vmax, std::move(d.loss),
                                     std::move(d.dloss), label);
}

// Generic two-column CSV reader (x,value) used for custom densities and
// custom link functions; skips '#' comments and an optional header row.
inline std::pair<std::vector<double>, std::vector<double>> read_xy_csv(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("read_xy_csv: cannot open " + path);
  std::vector<double> xs, ys;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) continue;
    try {
      const double x = std::stod(a);
      const double y = std::stod(b);
      xs.push_back(x);
      ys.push_back(y);
    } catch (const std::exception&) {
      continue;  // header row
    }
  }
  if (xs.size() < 3) throw DomainError("read_xy_csv: too few rows in " + path);
  return {std::move(xs), std::move(ys)};
}

}  // namespace ermlimits

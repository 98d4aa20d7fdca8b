#pragma once

// Report files. Every report is a TSV: "# key = value" metadata lines first
// (seed, config_hash, version), then a tab-separated header row, then data
// rows. Numbers are written with 17 significant digits so reading a report
// back reproduces them exactly; cells for steps that were not run are "NA".
//
// The ladder report is the only format that gets read back (by the
// regression command), so it has a strict parser. A report file may only be
// replaced by a run carrying the same config hash; anything else would mix
// rows produced under different settings.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "entcoef/config.hpp"
#include "entcoef/errors.hpp"

namespace entcoef {

struct ReportMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = kToolVersion;
};

struct LadderRow {
  std::size_t annotation_id = 0;
  double rho = 0.0;
  // The probe/removal fields are only present for the ladder steps the run
  // selected; rho is estimated for every step.
  bool has_delta = false;
  int iterations = 0;
  double final_acc = 0.0;
  double majority = 0.0;
  double delta_nats = 0.0;
  bool inlp_converged = true;
};

struct LadderReport {
  ReportMeta meta;
  std::vector<LadderRow> rows;
};

namespace detail {

inline std::string report_num(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

inline double parse_report_num(const std::string& cell, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    fail_input("report: bad " + what + " cell: " + cell);
  }
  if (used != cell.size()) fail_input("report: bad " + what + " cell: " + cell);
  return v;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == '\t') {
      cells.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return cells;
}

}  // namespace detail

inline void write_report_meta(const ReportMeta& meta, std::ostream& out) {
  out << "# seed = " << meta.seed << '\n';
  out << "# config_hash = " << meta.config_hash << '\n';
  out << "# version = " << meta.version << '\n';
}

inline constexpr const char* kLadderHeader =
    "annotation_id\trho\titerations\tfinal_acc\tmajority\tdelta_nats\tstatus";

inline void write_ladder_report(const LadderReport& report, std::ostream& out) {
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const LadderRow& row = report.rows[i];
    if (i > 0 && report.rows[i - 1].annotation_id >= row.annotation_id) {
      fail_input("ladder report rows must be sorted by annotation id");
    }
    if (row.rho < 0.0 || row.rho > 1.0) {
      fail_input("ladder report rho out of [0, 1]: " + detail::report_num(row.rho));
    }
  }
  write_report_meta(report.meta, out);
  out << kLadderHeader << '\n';
  for (const LadderRow& row : report.rows) {
    out << row.annotation_id << '\t' << detail::report_num(row.rho) << '\t';
    if (row.has_delta) {
      out << row.iterations << '\t' << detail::report_num(row.final_acc) << '\t'
          << detail::report_num(row.majority) << '\t' << detail::report_num(row.delta_nats)
          << '\t' << (row.inlp_converged ? "ok" : "max-iters");
    } else {
      out << "NA\tNA\tNA\tNA\tNA";
    }
    out << '\n';
  }
}

inline LadderReport read_ladder_report(std::istream& in) {
  LadderReport report;
  std::string line;
  bool saw_header = false;
  bool saw_hash = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key, eq, value;
      if (meta >> key >> eq >> value && eq == "=") {
        if (key == "seed") {
          report.meta.seed = static_cast<std::uint64_t>(
              detail::parse_report_num(value, "seed"));
        } else if (key == "config_hash") {
          report.meta.config_hash = value;
          saw_hash = true;
        } else if (key == "version") {
          report.meta.version = value;
        }
      }
      continue;
    }
    if (!saw_header) {
      if (line != kLadderHeader) {
        fail_input("ladder report line " + std::to_string(lineno) + ": unexpected header");
      }
      saw_header = true;
      continue;
    }
    auto cells = detail::split_tabs(line);
    if (cells.size() != 7) {
      fail_input("ladder report line " + std::to_string(lineno) + ": expected 7 columns, got " +
                 std::to_string(cells.size()));
    }
    LadderRow row;
    row.annotation_id = static_cast<std::size_t>(
        detail::parse_report_num(cells[0], "annotation_id"));
    row.rho = detail::parse_report_num(cells[1], "rho");
    if (cells[2] == "NA") {
      row.has_delta = false;
    } else {
      row.has_delta = true;
      row.iterations = static_cast<int>(detail::parse_report_num(cells[2], "iterations"));
      row.final_acc = detail::parse_report_num(cells[3], "final_acc");
      row.majority = detail::parse_report_num(cells[4], "majority");
      row.delta_nats = detail::parse_report_num(cells[5], "delta_nats");
      if (cells[6] == "ok") {
        row.inlp_converged = true;
      } else if (cells[6] == "max-iters") {
        row.inlp_converged = false;
      } else {
        fail_input("ladder report line " + std::to_string(lineno) + ": bad status cell: " +
                   cells[6]);
      }
    }
    if (!report.rows.empty() && report.rows.back().annotation_id >= row.annotation_id) {
      fail_input("ladder report rows out of order at line " + std::to_string(lineno));
    }
    report.rows.push_back(row);
  }
  if (!saw_header) fail_input("ladder report has no header row");
  if (!saw_hash) fail_input("ladder report has no config_hash metadata");
  return report;
}

inline LadderReport read_ladder_report_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_input("cannot open report file: " + path);
  return read_ladder_report(in);
}

// Guard called before a report path is (over)written. An existing report
// carrying a different config hash is never replaced; the caller should pick
// another output directory or rerun under the recorded settings.
inline void require_hash_compatible(const std::string& path, const ReportMeta& meta) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] != '#') return;
    std::istringstream row(line.substr(1));
    std::string key, eq, value;
    if (row >> key >> eq >> value && eq == "=" && key == "config_hash") {
      if (value != meta.config_hash) {
        fail_config("refusing to mix reports: " + path + " was written under config hash " +
                    value + ", this run has " + meta.config_hash);
      }
      return;
    }
  }
}

struct WorldRow {
  std::uint64_t world_id = 0;
  double rho = 0.0;
  double sigma = 0.0;
  double delta_I = 0.0;
  double bound = 0.0;
  bool holds = false;
};

inline void write_world_report(const ReportMeta& meta, const std::vector<WorldRow>& rows,
                               std::ostream& out) {
  write_report_meta(meta, out);
  out << "world_id\trho\tsigma\tdelta_I\tbound\tholds\n";
  for (const WorldRow& row : rows) {
    out << row.world_id << '\t' << detail::report_num(row.rho) << '\t'
        << detail::report_num(row.sigma) << '\t' << detail::report_num(row.delta_I) << '\t'
        << detail::report_num(row.bound) << '\t' << (row.holds ? 1 : 0) << '\n';
  }
}

}  // namespace entcoef

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cet::harness {

// One (condition, model) grid entry. A cell that failed mid-run keeps its
// place in the grid with ok = false and the reason in note, so one diverged
// model never voids the rest of a protocol.
struct Cell {
  std::string model;
  std::string condition;
  std::vector<double> per_seed;  // accuracy %, one entry per run seed
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev, 0 for a single seed
  bool ok = true;
  std::string note;
};

// Fills mean/stddev from per_seed. No-op on an empty cell.
void finalize_cell(Cell& cell);

struct AblationRow {
  std::size_t k = 0;
  double loss = 0.0;     // pre-training equilibrium InfoNCE
  double cos_sim = 0.0;  // validation positive cosine at equilibrium
  double accuracy = 0.0;
};

struct ExperimentReport {
  std::string protocol;
  std::vector<std::string> models;      // column order
  std::vector<std::string> conditions;  // row order
  std::vector<std::uint64_t> seeds;
  std::vector<Cell> cells;  // row-major: conditions x models
  std::vector<AblationRow> ablation;  // ablation protocol only

  const Cell* find(const std::string& condition,
                   const std::string& model) const;
};

// "57.74 + 0.300" (two decimals, then three); failed cells render "n/a".
std::string format_cell(const Cell& cell);

// Machine-readable dump, %.17g numbers. parse_report round-trips it exactly.
std::string report_csv(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& text);  // DataError

// Human summary table and a gnuplot script with its data file.
std::string report_summary(const ExperimentReport& report);
std::string plot_data(const ExperimentReport& report);
std::string plot_script(const ExperimentReport& report);

// Writes <protocol>_report.csv, <protocol>_plot.csv, <protocol>.gp per
// report, plus one summary.txt, into dir (created if missing). The ablation
// protocol additionally writes ablation.csv: a header plus exactly one
// k,loss,cos_sim,accuracy row per K. Empty report list or unwritable
// directory -> DataError; nothing is written on error. Output is
// byte-deterministic: no timestamps, no wall times.
void write_reports(std::span<const ExperimentReport> reports,
                   const std::string& dir);

// Reads every *_report.csv under dir (sorted by name). DataError when none.
std::vector<ExperimentReport> read_reports(const std::string& dir);

}  // namespace cet::harness

#include "cet/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cet/errors.hpp"

namespace cet::harness {

namespace {

// %.17g survives a strtod round trip bit-exactly for finite doubles.
std::string num17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed(double x, int decimals) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

double to_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw DataError("report: bad number '" + s + "'");
  return x;
}

std::uint64_t to_u64(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw DataError("report: bad integer '" + s + "'");
  return static_cast<std::uint64_t>(x);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// Grid labels become CSV fields; a comma inside one would shear the row.
void check_label(const std::string& label) {
  if (label.empty() || label.find(',') != std::string::npos ||
      label.find('\n') != std::string::npos)
    throw ContractError("report: label unusable as a CSV field: '" + label +
                        "'");
}

std::string join(const std::vector<std::string>& items, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < items.size(); ++i) {
    if (i > from) out += ",";
    out += items[i];
  }
  return out;
}

}  // namespace

void finalize_cell(Cell& cell) {
  if (cell.per_seed.empty()) return;
  double sum = 0.0;
  for (double x : cell.per_seed) sum += x;
  cell.mean = sum / static_cast<double>(cell.per_seed.size());
  double ss = 0.0;
  for (double x : cell.per_seed) ss += (x - cell.mean) * (x - cell.mean);
  cell.stddev = cell.per_seed.size() > 1
                    ? std::sqrt(ss / static_cast<double>(cell.per_seed.size() - 1))
                    : 0.0;
}

const Cell* ExperimentReport::find(const std::string& condition,
                                   const std::string& model) const {
  for (const Cell& c : cells)
    if (c.condition == condition && c.model == model) return &c;
  return nullptr;
}

std::string format_cell(const Cell& cell) {
  if (!cell.ok || cell.per_seed.empty()) return "n/a";
  return fixed(cell.mean, 2) + " + " + fixed(cell.stddev, 3);
}

std::string report_csv(const ExperimentReport& report) {
  check_label(report.protocol);
  for (const std::string& m : report.models) check_label(m);
  for (const std::string& c : report.conditions) check_label(c);

  std::string out;
  out += "protocol," + report.protocol + "\n";
  out += "seeds";
  for (std::uint64_t s : report.seeds) out += "," + std::to_string(s);
  out += "\n";
  out += "models," + join(report.models, 0) + "\n";
  out += "conditions," + join(report.conditions, 0) + "\n";
  for (const Cell& cell : report.cells) {
    check_label(cell.condition);
    check_label(cell.model);
    if (cell.note.find('\n') != std::string::npos)
      throw ContractError("report: newline in cell note");
    out += "cell," + cell.condition + "," + cell.model + ",";
    out += cell.ok ? "ok" : "fail";
    out += "," + std::to_string(cell.per_seed.size());
    out += "," + num17(cell.mean) + "," + num17(cell.stddev);
    for (double x : cell.per_seed) out += "," + num17(x);
    out += "," + cell.note + "\n";
  }
  for (const AblationRow& row : report.ablation) {
    out += "ablation," + std::to_string(row.k) + "," + num17(row.loss) + "," +
           num17(row.cos_sim) + "," + num17(row.accuracy) + "\n";
  }
  return out;
}

ExperimentReport parse_report(const std::string& text) {
  ExperimentReport rep;
  std::stringstream ss(text);
  std::string line;
  bool saw_protocol = false;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    const std::string& tag = f[0];
    if (tag == "protocol") {
      if (f.size() != 2) throw DataError("report: malformed protocol line");
      rep.protocol = f[1];
      saw_protocol = true;
    } else if (tag == "seeds") {
      for (std::size_t i = 1; i < f.size(); ++i)
        rep.seeds.push_back(to_u64(f[i]));
    } else if (tag == "models") {
      rep.models.assign(f.begin() + 1, f.end());
    } else if (tag == "conditions") {
      rep.conditions.assign(f.begin() + 1, f.end());
    } else if (tag == "cell") {
      if (f.size() < 7) throw DataError("report: malformed cell line");
      Cell cell;
      cell.condition = f[1];
      cell.model = f[2];
      if (f[3] == "ok")
        cell.ok = true;
      else if (f[3] == "fail")
        cell.ok = false;
      else
        throw DataError("report: cell status must be ok or fail");
      const std::size_t n = static_cast<std::size_t>(to_u64(f[4]));
      if (f.size() < 7 + n) throw DataError("report: cell seed count mismatch");
      cell.mean = to_double(f[5]);
      cell.stddev = to_double(f[6]);
      for (std::size_t i = 0; i < n; ++i)
        cell.per_seed.push_back(to_double(f[7 + i]));
      cell.note = join(f, 7 + n);  // notes may contain commas
      rep.cells.push_back(std::move(cell));
    } else if (tag == "ablation") {
      if (f.size() != 5) throw DataError("report: malformed ablation line");
      AblationRow row;
      row.k = static_cast<std::size_t>(to_u64(f[1]));
      row.loss = to_double(f[2]);
      row.cos_sim = to_double(f[3]);
      row.accuracy = to_double(f[4]);
      rep.ablation.push_back(row);
    } else {
      throw DataError("report: unknown line tag '" + tag + "'");
    }
  }
  if (!saw_protocol) throw DataError("report: missing protocol line");
  return rep;
}

std::string report_summary(const ExperimentReport& report) {
  // Column widths fit the widest entry; every cell is "MM.MM + S.SSS".
  std::size_t cond_w = 9;  // "condition"
  for (const std::string& c : report.conditions)
    cond_w = std::max(cond_w, c.size());
  std::vector<std::size_t> width(report.models.size());
  for (std::size_t j = 0; j < report.models.size(); ++j)
    width[j] = std::max<std::size_t>(report.models[j].size(), 14);

  std::string out = "protocol: " + report.protocol + "\n";
  std::string head(cond_w, ' ');
  head.replace(0, 9, "condition");
  for (std::size_t j = 0; j < report.models.size(); ++j) {
    head += "  ";
    std::string m = report.models[j];
    m.resize(width[j], ' ');
    head += m;
  }
  while (!head.empty() && head.back() == ' ') head.pop_back();
  out += head + "\n";
  for (const std::string& cond : report.conditions) {
    std::string row = cond;
    row.resize(cond_w, ' ');
    for (std::size_t j = 0; j < report.models.size(); ++j) {
      const Cell* cell = report.find(cond, report.models[j]);
      std::string text = cell ? format_cell(*cell) : "n/a";
      text.resize(std::max(text.size(), width[j]), ' ');
      row += "  " + text;
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row + "\n";
  }
  // Failures get their reasons below the table.
  for (const Cell& cell : report.cells)
    if (!cell.ok)
      out += "failed: " + cell.condition + " / " + cell.model + ": " +
             cell.note + "\n";
  return out;
}

std::string plot_data(const ExperimentReport& report) {
  std::string out = "condition";
  for (const std::string& m : report.models) out += "," + m;
  out += "\n";
  for (const std::string& cond : report.conditions) {
    out += cond;
    for (const std::string& m : report.models) {
      const Cell* cell = report.find(cond, m);
      out += ",";
      out += (cell && cell->ok && !cell->per_seed.empty()) ? num17(cell->mean)
                                                           : "nan";
    }
    out += "\n";
  }
  return out;
}

std::string plot_script(const ExperimentReport& report) {
  std::string out;
  out += "set datafile separator ','\n";
  out += "set key outside\n";
  out += "set ylabel 'test accuracy %'\n";
  out += "set xlabel 'condition'\n";
  out += "set xtics rotate by -30\n";
  out += "plot ";
  for (std::size_t j = 0; j < report.models.size(); ++j) {
    if (j > 0) out += ", \\\n     ";
    out += "'" + report.protocol + "_plot.csv' using 0:" +
           std::to_string(j + 2) + ":xtic(1) with linespoints title '" +
           report.models[j] + "'";
  }
  out += "\n";
  if (!report.ablation.empty()) {
    out += "# horizon sweep: ablation.csv has k,loss,cos_sim,accuracy\n";
    out += "# plot 'ablation.csv' using 1:2 with linespoints title 'loss'\n";
    out += "# plot 'ablation.csv' using 1:3 with linespoints title 'cos'\n";
  }
  return out;
}

void write_reports(std::span<const ExperimentReport> reports,
                   const std::string& dir) {
  if (reports.empty()) throw DataError("report: nothing to write");

  // Render everything first; an error must not leave partial output.
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
  for (const ExperimentReport& rep : reports) {
    check_label(rep.protocol);
    files.emplace_back(rep.protocol + "_report.csv", report_csv(rep));
    files.emplace_back(rep.protocol + "_plot.csv", plot_data(rep));
    files.emplace_back(rep.protocol + ".gp", plot_script(rep));
    if (!rep.ablation.empty()) {
      std::string ab = "k,loss,cos_sim,accuracy\n";
      for (const AblationRow& row : rep.ablation)
        ab += std::to_string(row.k) + "," + num17(row.loss) + "," +
              num17(row.cos_sim) + "," + num17(row.accuracy) + "\n";
      files.emplace_back("ablation.csv", ab);
    }
    if (!summary.empty()) summary += "\n";
    summary += report_summary(rep);
  }
  files.emplace_back("summary.txt", summary);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("report: cannot create directory " + dir);
  for (const auto& [name, body] : files) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw DataError("report: cannot write " + path);
  }
}

std::vector<ExperimentReport> read_reports(const std::string& dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 11 && name.ends_with("_report.csv"))
      names.push_back(entry.path().string());
  }
  if (ec) throw DataError("report: cannot read directory " + dir);
  if (names.empty()) throw DataError("report: no *_report.csv under " + dir);
  std::sort(names.begin(), names.end());
  std::vector<ExperimentReport> out;
  for (const std::string& path : names) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("report: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    out.push_back(parse_report(buf.str()));
  }
  return out;
}

}  // namespace cet::harness

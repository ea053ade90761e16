#include "cet/datagen/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cet/errors.hpp"
#include "cet/preprocess/bars.hpp"
#include "cet/preprocess/dwt.hpp"
#include "cet/preprocess/standardize.hpp"

namespace cet::data {

std::vector<std::size_t> DataSet::days_with_offset(int offset) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (days[i].offset == offset) out.push_back(i);
  }
  return out;
}

void finalize_features(DataSet& ds, double dwt_lambda, int dwt_levels,
                       bool dwt_zero_above) {
  const auto n_days = ds.day_count();
  ds.feat.assign(n_days, {});

  const std::size_t n_companies = ds.companies.size();
  std::vector<prep::ZStats> close_stats(n_companies), vol_stats(n_companies);
  for (std::size_t c = 0; c < n_companies; ++c) {
    std::vector<double> closes, volumes;
    for (std::size_t d = 0; d < n_days; ++d) {
      if (static_cast<std::size_t>(ds.days[d].company) != c) continue;
      if (ds.days[d].offset != 0) continue;
      closes.insert(closes.end(), ds.close_raw[d].begin(),
                    ds.close_raw[d].end());
      volumes.insert(volumes.end(), ds.volume_raw[d].begin(),
                     ds.volume_raw[d].end());
    }
    if (closes.empty()) {
      // No pre-announcement history (possible on ingested data); fall back
      // to everything this company has.
      for (std::size_t d = 0; d < n_days; ++d) {
        if (static_cast<std::size_t>(ds.days[d].company) != c) continue;
        closes.insert(closes.end(), ds.close_raw[d].begin(),
                      ds.close_raw[d].end());
        volumes.insert(volumes.end(), ds.volume_raw[d].begin(),
                       ds.volume_raw[d].end());
      }
    }
    if (closes.empty()) continue;  // company without any bars
    close_stats[c] = prep::compute_stats(closes);
    vol_stats[c] = prep::compute_stats(volumes);
  }

  const auto mode = dwt_zero_above ? prep::DwtMode::above : prep::DwtMode::below;
  for (std::size_t d = 0; d < n_days; ++d) {
    const auto c = static_cast<std::size_t>(ds.days[d].company);
    std::vector<double> close_z =
        prep::zscore(ds.close_raw[d], close_stats[c]);
    close_z = prep::dwt_denoise(close_z, dwt_lambda, dwt_levels, mode);
    const std::vector<double> vol_z =
        prep::zscore(ds.volume_raw[d], vol_stats[c]);
    std::vector<double>& f = ds.feat[d];
    f.resize(close_z.size() * kFeatures);
    for (std::size_t t = 0; t < close_z.size(); ++t) {
      f[t * kFeatures + 0] = close_z[t];
      f[t * kFeatures + 1] = vol_z[t];
    }
  }

  // Earnings: per-metric statistics over every vector in the set.
  ds.earnings_std.assign(ds.earnings_raw.size(), {});
  if (!ds.earnings_raw.empty()) {
    for (int i = 0; i < kEarningsDim; ++i) {
      std::vector<double> col;
      col.reserve(ds.earnings_raw.size());
      for (const auto& e : ds.earnings_raw) {
        if (!e.empty()) col.push_back(e[static_cast<std::size_t>(i)]);
      }
      if (col.empty()) continue;
      const prep::ZStats st = prep::compute_stats(col);
      for (std::size_t eq = 0; eq < ds.earnings_raw.size(); ++eq) {
        if (ds.earnings_raw[eq].empty()) continue;
        auto& out = ds.earnings_std[eq];
        if (out.empty()) out.assign(kEarningsDim, 0.0);
        const double x = ds.earnings_raw[eq][static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] =
            st.std < 1e-12 ? 0.0 : (x - st.mean) / st.std;
      }
    }
  }
}

std::vector<WindowRef> negative_pool(const DataSet& ds, std::size_t omega,
                                     std::size_t horizon) {
  if (omega == 0 || omega + horizon > static_cast<std::size_t>(kMinutes)) {
    throw ConfigError("negative_pool: omega + horizon exceeds day length");
  }
  std::vector<WindowRef> pool;
  const std::size_t starts =
      static_cast<std::size_t>(kMinutes) - omega - horizon + 1;
  for (std::size_t d = 0; d < ds.day_count(); ++d) {
    if (ds.days[d].offset != 0) continue;
    for (std::size_t s = 0; s < starts; ++s) pool.push_back({d, s});
  }
  return pool;
}

std::vector<WindowRef> sample_negatives(const std::vector<WindowRef>& pool,
                                        std::size_t n, num::Rng& rng) {
  if (pool.size() < n) {
    throw ConfigError("sample_negatives: pool of " +
                      std::to_string(pool.size()) +
                      " windows cannot supply " + std::to_string(n));
  }
  const std::vector<std::size_t> idx =
      rng.sample_without_replacement(pool.size(), n);
  std::vector<WindowRef> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(pool[i]);
  return out;
}

int gap_to_next_announcement(const DataSet& ds, const WindowRef& ref) {
  const int day = ds.days[ref.day].abs_day;
  int best = -1;
  for (int a : ds.announce_days) {
    if (a >= day && (best < 0 || a < best)) best = a;
  }
  if (best < 0) return 1000000000;
  return best - day;
}

namespace {

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << body;
  if (!out) throw DataError("write failed: " + path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvReader {
  std::ifstream in;
  std::string path;
  std::size_t line_no = 0;

  explicit CsvReader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw DataError("cannot open: " + p);
  }
  bool next(std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + msg);
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

double parse_double(const CsvReader& r, const std::string& s,
                    const char* field) {
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    r.fail(std::string("bad ") + field + " value '" + s + "'");
  }
  return v;
}

int parse_int(const CsvReader& r, const std::string& s, const char* field) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    r.fail(std::string("bad ") + field + " value '" + s + "'");
  }
  return v;
}

}  // namespace

void write_bars_csv(const std::string& path, const DataSet& ds) {
  std::string body = "symbol,day_index,minute_index,close,volume\n";
  body.reserve(ds.day_count() * 390 * 48);
  for (std::size_t d = 0; d < ds.day_count(); ++d) {
    const DayRecord& rec = ds.days[d];
    const std::string& sym =
        ds.companies[static_cast<std::size_t>(rec.company)].symbol;
    for (int t = 0; t < kMinutes; ++t) {
      body += sym;
      body += ',';
      body += std::to_string(rec.abs_day);
      body += ',';
      body += std::to_string(t);
      body += ',';
      body += fmt(ds.close_raw[d][static_cast<std::size_t>(t)]);
      body += ',';
      body += fmt(ds.volume_raw[d][static_cast<std::size_t>(t)]);
      body += '\n';
    }
  }
  write_file(path, body);
}

void write_earnings_csv(const std::string& path, const DataSet& ds) {
  std::string body = "symbol,quarter_id,announce_day_index,sector";
  for (int i = 1; i <= kEarningsDim; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",m%02d", i);
    body += buf;
  }
  body += '\n';
  for (std::size_t c = 0; c < ds.companies.size(); ++c) {
    for (int q = 0; q < ds.n_quarters(); ++q) {
      const auto& e = ds.earnings_raw[ds.eq_index(static_cast<int>(c), q)];
      if (e.empty()) continue;
      body += ds.companies[c].symbol;
      body += ',';
      body += std::to_string(q);
      body += ',';
      body += std::to_string(ds.announce_days[static_cast<std::size_t>(q)]);
      body += ',';
      body += ds.sectors[static_cast<std::size_t>(ds.companies[c].sector)];
      for (double v : e) {
        body += ',';
        body += fmt(v);
      }
      body += '\n';
    }
  }
  write_file(path, body);
}

DataSet ingest_csv(const std::string& bars_path,
                   const std::string& earnings_path,
                   std::vector<std::string>* warnings) {
  DataSet ds;
  std::map<std::string, int> company_id;
  std::map<std::string, int> sector_id;
  std::map<int, int> announce_by_quarter;

  // ---- earnings ----
  {
    CsvReader r(earnings_path);
    std::string line;
    if (!r.next(line)) r.fail("empty file");
    std::vector<std::vector<double>> rows38;
    std::vector<int> row_company, row_quarter;
    while (r.next(line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() != 4 + kEarningsDim) {
        r.fail("expected " + std::to_string(4 + kEarningsDim) +
               " fields, got " + std::to_string(f.size()));
      }
      const std::string& sym = f[0];
      const int q = parse_int(r, f[1], "quarter_id");
      const int a = parse_int(r, f[2], "announce_day_index");
      if (q < 0) r.fail("negative quarter_id");
      auto [ait, inserted] = announce_by_quarter.emplace(q, a);
      if (!inserted && ait->second != a) {
        r.fail("quarter " + std::to_string(q) +
               " has conflicting announce_day_index (shared calendar "
               "required)");
      }
      int sec;
      if (auto it = sector_id.find(f[3]); it != sector_id.end()) {
        sec = it->second;
      } else {
        sec = static_cast<int>(ds.sectors.size());
        sector_id.emplace(f[3], sec);
        ds.sectors.push_back(f[3]);
      }
      int c;
      if (auto it = company_id.find(sym); it != company_id.end()) {
        c = it->second;
        if (ds.companies[static_cast<std::size_t>(c)].sector != sec) {
          r.fail("symbol " + sym + " listed under two sectors");
        }
      } else {
        c = static_cast<int>(ds.companies.size());
        company_id.emplace(sym, c);
        ds.companies.push_back({sym, sec});
      }
      std::vector<double> e(kEarningsDim);
      for (int i = 0; i < kEarningsDim; ++i) {
        e[static_cast<std::size_t>(i)] =
            parse_double(r, f[static_cast<std::size_t>(4 + i)], "metric");
      }
      rows38.push_back(std::move(e));
      row_company.push_back(c);
      row_quarter.push_back(q);
    }
    if (rows38.empty()) throw DataError(earnings_path + ": empty dataset");

    const int n_q = static_cast<int>(announce_by_quarter.size());
    {
      int expect = 0;
      for (const auto& [q, a] : announce_by_quarter) {
        if (q != expect++) {
          throw DataError(earnings_path +
                          ": quarter_id values must be contiguous from 0");
        }
        ds.announce_days.push_back(a);
      }
    }
    ds.earnings_raw.assign(ds.companies.size() * static_cast<std::size_t>(n_q),
                           {});
    for (std::size_t i = 0; i < rows38.size(); ++i) {
      auto& slot = ds.earnings_raw[ds.eq_index(row_company[i], row_quarter[i])];
      if (!slot.empty()) {
        throw DataError(earnings_path + ": duplicate (symbol, quarter) row");
      }
      slot = std::move(rows38[i]);
    }
    ds.signal.assign(ds.earnings_raw.size(), 0.0);
  }

  // ---- bars ----
  {
    CsvReader r(bars_path);
    std::string line;
    if (!r.next(line)) r.fail("empty file");
    std::map<std::pair<int, int>, std::vector<prep::MinuteBar>> by_day;
    std::set<std::tuple<int, int, int>> seen;
    bool any = false;
    while (r.next(line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() != 5) {
        r.fail("expected 5 fields, got " + std::to_string(f.size()));
      }
      auto it = company_id.find(f[0]);
      if (it == company_id.end()) {
        r.fail("symbol '" + f[0] + "' has no earnings rows");
      }
      prep::MinuteBar bar;
      bar.symbol = f[0];
      bar.day_index = parse_int(r, f[1], "day_index");
      bar.minute_index = parse_int(r, f[2], "minute_index");
      bar.close = parse_double(r, f[3], "close");
      bar.volume = parse_double(r, f[4], "volume");
      if (!seen.emplace(it->second, bar.day_index, bar.minute_index).second) {
        r.fail("duplicate (symbol, day, minute) row");
      }
      by_day[{it->second, bar.day_index}].push_back(std::move(bar));
      any = true;
    }
    if (!any) throw DataError(bars_path + ": empty dataset");

    const int n_q = ds.n_quarters();
    std::set<std::pair<int, int>> covered;  // (company, quarter) with post days
    for (auto& [key, bars] : by_day) {
      const auto [c, abs_day] = key;
      // classify: post day of some quarter, pool day, or exclusion zone
      int offset = -1, quarter = -1;
      for (int q = 0; q < n_q; ++q) {
        const int a = ds.announce_days[static_cast<std::size_t>(q)];
        if (abs_day >= a && abs_day <= a + 4) {
          offset = abs_day - a + 1;
          quarter = q;
          break;
        }
      }
      if (offset < 0) {
        int next_a = -1, next_q = -1;
        for (int q = 0; q < n_q; ++q) {
          const int a = ds.announce_days[static_cast<std::size_t>(q)];
          if (a >= abs_day && (next_a < 0 || a < next_a)) {
            next_a = a;
            next_q = q;
          }
        }
        if (next_a >= 0 && next_a - abs_day < 5) continue;  // exclusion zone
        offset = 0;
        quarter = next_q;  // -1 when past the last announcement
      }
      std::vector<prep::MinuteBar> full = prep::interpolate_missing(bars);
      std::vector<double> close(static_cast<std::size_t>(prep::kMinutesPerDay));
      std::vector<double> volume(close.size());
      for (std::size_t t = 0; t < close.size(); ++t) {
        close[t] = full[t].close;
        volume[t] = full[t].volume;
      }
      if (offset > 0) covered.emplace(c, quarter);
      ds.days.push_back({c, quarter, abs_day, offset});
      ds.close_raw.push_back(std::move(close));
      ds.volume_raw.push_back(std::move(volume));
    }

    // announcements with no following trading data: drop that quarter's
    // earnings so nothing references them
    for (std::size_t c = 0; c < ds.companies.size(); ++c) {
      for (int q = 0; q < n_q; ++q) {
        auto& e = ds.earnings_raw[ds.eq_index(static_cast<int>(c), q)];
        if (!e.empty() && !covered.count({static_cast<int>(c), q})) {
          if (warnings) {
            warnings->push_back(ds.companies[c].symbol + " quarter " +
                                std::to_string(q) +
                                ": no post-announcement bars, dropped");
          }
          e.clear();
        }
      }
    }
  }

  finalize_features(ds);
  return ds;
}

}  // namespace cet::data

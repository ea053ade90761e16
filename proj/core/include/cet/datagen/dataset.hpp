#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cet/numerics/rng.hpp"

namespace cet::data {

inline constexpr int kMinutes = 390;
inline constexpr int kEarningsDim = 38;
inline constexpr int kFeatures = 2;  // close, volume

struct CompanyInfo {
  std::string symbol;
  int sector = 0;  // index into DataSet::sectors
};

// One generated (or ingested) trading day of one company.
// offset 0: negative-pool day ending >= 5 trading days before the next
// announcement. offset 1..5: post-announcement day D_1..D_5 of `quarter`.
struct DayRecord {
  int company = 0;
  int quarter = 0;
  int abs_day = 0;
  int offset = 0;
};

struct DataSet {
  std::vector<std::string> sectors;
  std::vector<CompanyInfo> companies;
  std::vector<int> announce_days;  // abs_day per quarter, shared calendar

  std::vector<DayRecord> days;
  std::vector<std::vector<double>> close_raw;   // [day][390]
  std::vector<std::vector<double>> volume_raw;  // [day][390]
  // Model inputs: per minute (close, volume), z-scored with pre-announcement
  // statistics, close channel DWT-denoised. Row-major 390 x 2.
  std::vector<std::vector<double>> feat;

  std::vector<std::vector<double>> earnings_raw;  // [company*quarters+q][38]
  std::vector<std::vector<double>> earnings_std;
  // Hidden drift signal s(e) per (company, quarter); generator ground truth
  // kept for oracle checks, never a model input.
  std::vector<double> signal;

  std::size_t day_count() const { return days.size(); }
  int n_quarters() const { return static_cast<int>(announce_days.size()); }
  std::size_t eq_index(int company, int quarter) const {
    return static_cast<std::size_t>(company) *
               static_cast<std::size_t>(n_quarters()) +
           static_cast<std::size_t>(quarter);
  }
  std::vector<std::size_t> days_with_offset(int offset) const;
};

// Z-scores close/volume with per-company statistics taken from offset-0
// (pre-announcement) days only, then DWT-denoises the close channel and
// standardizes earnings per metric. Fills feat and earnings_std.
// Pre-announcement days are the "historical" partition shared by every
// protocol, so no protocol's test data ever feeds the statistics.
void finalize_features(DataSet& ds, double dwt_lambda = 0.7,
                       int dwt_levels = 2, bool dwt_zero_above = true);

struct WindowRef {
  std::size_t day = 0;
  std::size_t start = 0;  // context minutes [start, start+omega)
};

// All stride-1 windows over offset-0 days. horizon reserves future minutes,
// matching the layout of CPC anchor windows.
std::vector<WindowRef> negative_pool(const DataSet& ds, std::size_t omega,
                                     std::size_t horizon);

// Uniform draw without replacement. n == pool.size() returns the whole pool.
// Throws ConfigError when the pool is smaller than n.
std::vector<WindowRef> sample_negatives(const std::vector<WindowRef>& pool,
                                        std::size_t n, num::Rng& rng);

// Trading-day distance from the window's day to its company's next
// announcement; large sentinel (1e9) when no later announcement exists.
int gap_to_next_announcement(const DataSet& ds, const WindowRef& ref);

// CSV formats:
//   bars:     symbol,day_index,minute_index,close,volume
//   earnings: symbol,quarter_id,announce_day_index,sector,m01..m38
void write_bars_csv(const std::string& path, const DataSet& ds);
void write_earnings_csv(const std::string& path, const DataSet& ds);

// Parses, validates (line-numbered errors, duplicate rows rejected),
// interpolates missing minutes, aligns days to announcements, and finalizes
// features. Days inside the 4-day pre-announcement exclusion zone are
// dropped; announcements with no following trading data drop that
// company/quarter with a warning pushed to `warnings`.
DataSet ingest_csv(const std::string& bars_path,
                   const std::string& earnings_path,
                   std::vector<std::string>* warnings = nullptr);

}  // namespace cet::data

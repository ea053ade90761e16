#pragma once

#include <string>
#include <vector>

namespace cet::prep {

inline constexpr int kMinutesPerDay = 390;

struct MinuteBar {
  std::string symbol;
  int day_index = 0;
  int minute_index = 0;  // 0..389
  double close = 0.0;    // > 0
  double volume = 0.0;   // >= 0
};

// Fills a single trading day out to all 390 minute slots. Present bars keep
// their values; interior gaps are linearly interpolated between the nearest
// present neighbors, boundary gaps take the nearest present value.
// Throws DataError for: fewer than 2 present bars, duplicate minutes,
// minutes outside 0..389, mixed symbols/days, nonpositive close,
// negative volume.
std::vector<MinuteBar> interpolate_missing(std::vector<MinuteBar> bars);

}  // namespace cet::prep

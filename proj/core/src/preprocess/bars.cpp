#include "cet/preprocess/bars.hpp"

#include <algorithm>
#include <cmath>

#include "cet/errors.hpp"

namespace cet::prep {

std::vector<MinuteBar> interpolate_missing(std::vector<MinuteBar> bars) {
  if (bars.size() < 2) {
    throw DataError("interpolate_missing: day has " +
                    std::to_string(bars.size()) + " bars, need at least 2");
  }
  std::sort(bars.begin(), bars.end(),
            [](const MinuteBar& a, const MinuteBar& b) {
              return a.minute_index < b.minute_index;
            });
  const std::string& sym = bars.front().symbol;
  const int day = bars.front().day_index;
  int prev_minute = -1;
  for (const MinuteBar& b : bars) {
    if (b.symbol != sym || b.day_index != day) {
      throw DataError("interpolate_missing: mixed symbol/day in one day list");
    }
    if (b.minute_index < 0 || b.minute_index >= kMinutesPerDay) {
      throw DataError("interpolate_missing: minute " +
                      std::to_string(b.minute_index) + " outside 0..389");
    }
    if (b.minute_index == prev_minute) {
      throw DataError("interpolate_missing: duplicate minute " +
                      std::to_string(b.minute_index));
    }
    if (!(b.close > 0.0) || !std::isfinite(b.close)) {
      throw DataError("interpolate_missing: nonpositive close at minute " +
                      std::to_string(b.minute_index));
    }
    if (b.volume < 0.0 || !std::isfinite(b.volume)) {
      throw DataError("interpolate_missing: negative volume at minute " +
                      std::to_string(b.minute_index));
    }
    prev_minute = b.minute_index;
  }

  std::vector<MinuteBar> out(kMinutesPerDay);
  std::vector<char> present(kMinutesPerDay, 0);
  for (const MinuteBar& b : bars) {
    out[static_cast<std::size_t>(b.minute_index)] = b;
    present[static_cast<std::size_t>(b.minute_index)] = 1;
  }

  int left = -1;  // last present minute seen
  for (int m = 0; m < kMinutesPerDay; ++m) {
    if (present[static_cast<std::size_t>(m)]) {
      left = m;
      continue;
    }
    int right = m + 1;
    while (right < kMinutesPerDay && !present[static_cast<std::size_t>(right)])
      ++right;
    MinuteBar& slot = out[static_cast<std::size_t>(m)];
    slot.symbol = sym;
    slot.day_index = day;
    slot.minute_index = m;
    if (left < 0) {
      // leading gap: nearest present value
      slot.close = out[static_cast<std::size_t>(right)].close;
      slot.volume = out[static_cast<std::size_t>(right)].volume;
    } else if (right >= kMinutesPerDay) {
      // trailing gap
      slot.close = out[static_cast<std::size_t>(left)].close;
      slot.volume = out[static_cast<std::size_t>(left)].volume;
    } else {
      const double t = static_cast<double>(m - left) /
                       static_cast<double>(right - left);
      const MinuteBar& a = out[static_cast<std::size_t>(left)];
      const MinuteBar& b = out[static_cast<std::size_t>(right)];
      slot.close = a.close + t * (b.close - a.close);
      slot.volume = a.volume + t * (b.volume - a.volume);
    }
  }
  return out;
}

}  // namespace cet::prep

#pragma once

#include <cstddef>
#include <vector>

namespace cet::prep {

// A sample is a context window [start, start+omega) plus the K future
// minutes [start+omega, start+omega+K) used as CPC prediction targets.
struct WindowSpan {
  std::size_t start = 0;
  std::size_t omega = 0;
  std::size_t horizon = 0;

  std::size_t end() const { return start + omega; }  // one past the context
};

// Stride-1 enumeration over a day of day_len minutes.
// Sample count is day_len - omega - horizon + 1; omega + horizon > day_len
// is a ConfigError, omega = 0 likewise.
std::vector<WindowSpan> make_windows(std::size_t day_len, std::size_t omega,
                                     std::size_t horizon);

enum class Movement : int { down = 0, hold = 1, up = 2 };

struct MovementLabel {
  Movement cls = Movement::hold;
  double realized_return = 0.0;
};

// r = (price_t1 - price_t)/price_t against the +-eps_hold band.
// Throws DataError when price_t <= 0.
MovementLabel label_movement(double price_t, double price_t1, double eps_hold);

}  // namespace cet::prep

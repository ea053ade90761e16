#include "cet/preprocess/windows.hpp"

#include <cmath>
#include <string>

#include "cet/errors.hpp"

namespace cet::prep {

std::vector<WindowSpan> make_windows(std::size_t day_len, std::size_t omega,
                                     std::size_t horizon) {
  if (omega == 0) throw ConfigError("make_windows: omega must be positive");
  if (omega + horizon > day_len) {
    throw ConfigError("make_windows: omega + horizon = " +
                      std::to_string(omega + horizon) + " exceeds day length " +
                      std::to_string(day_len));
  }
  const std::size_t count = day_len - omega - horizon + 1;
  std::vector<WindowSpan> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) out.push_back({s, omega, horizon});
  return out;
}

MovementLabel label_movement(double price_t, double price_t1,
                             double eps_hold) {
  if (!(price_t > 0.0) || !std::isfinite(price_t)) {
    throw DataError("label_movement: nonpositive price_t");
  }
  const double r = (price_t1 - price_t) / price_t;
  MovementLabel out;
  out.realized_return = r;
  if (r > eps_hold)
    out.cls = Movement::up;
  else if (r < -eps_hold)
    out.cls = Movement::down;
  else
    out.cls = Movement::hold;
  return out;
}

}  // namespace cet::prep

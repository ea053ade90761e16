#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cet/datagen/dataset.hpp"

namespace cet::data {

// Synthetic market with a planted post-earnings drift.
//
// Minute log-returns on day D with offset d:
//   r_t = m + u_t,   u_t = rho_D * u_{t-1} + base_vol * eps_t
//   m   = drift_strength * decay^(d-1) * s(e)   (0 on pre-announcement days)
//   s(e) = tanh(signal_gain * <w, e> / sigma_sector)
// rho_D is drawn per day from [rho_min, rho_max]: a momentum channel every
// price reader can learn. base_vol is tied to the movement threshold so
// that drift-free days keep all three classes near 1/3 (hold share does
// not swell as the drift decays), and drift_strength then sets how far
// the earnings vector, which pins m exactly, reaches beyond what a price
// reader recovers from the window. Day opens gap by open_jitter so the
// cumulative drift cannot be read off standardized price levels.
struct SyntheticConfig {
  int n_companies = 18;
  int n_quarters = 10;
  std::vector<std::string> sectors = {
      "Technology", "Financials", "Healthcare",
      "Energy",     "Consumer",   "Industrials",
      "Materials",  "Utilities",  "RealEstate"};
  double base_vol = 4.5e-4;        // AR(1) innovation std, per minute
  double drift_strength = 1.1e-3;  // planted drift amplitude A
  double drift_decay = 0.5;      // per-day multiplier, (0, 1]
  std::uint64_t signal_map_seed = 919;  // hidden linear map w
  std::uint64_t seed = 42;              // master stream

  double rho_min = 0.0;   // per-day AR(1) persistence range
  double rho_max = 0.3;
  double level_sigma = 0.05;   // per-company base log-price spread
  double open_jitter = 0.20;   // announcement-scale day-open gaps
  double volume_u = 0.8;       // intraday U-shape curvature
  double volume_noise = 0.3;   // lognormal sigma per minute
  double volume_base_sigma = 0.5;
  double earnings_noise = 0.7;  // idiosyncratic std in the factor model
  int factor_dim = 4;
  double signal_gain = 1.2;

  int first_announce_day = 10;
  int quarter_spacing = 65;  // trading days between announcements
  int pre_days = 4;          // pool days A-8..A-5 per quarter
  int post_days = 5;         // offsets 1..5

  void validate() const;  // throws ConfigError
};

// Deterministic: identical config (including seeds) gives a bit-identical
// dataset regardless of call order. Features are finalized before return.
DataSet generate(const SyntheticConfig& cfg);

// The hidden map applied to a raw earnings vector; exposed for oracle tests.
double planted_signal(const SyntheticConfig& cfg,
                      const std::vector<double>& w_over_sigma,
                      const std::vector<double>& earnings_raw);

// w / sigma_sector per sector, derived from signal_map_seed.
std::vector<std::vector<double>> signal_map(const SyntheticConfig& cfg);

}  // namespace cet::data

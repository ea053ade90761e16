#include "cet/datagen/generator.hpp"

#include <cctype>
#include <cmath>

#include "cet/errors.hpp"

namespace cet::data {

namespace {

// Stream purposes for derive_seed; keeps parallel-safe, order-free draws.
enum : std::uint64_t {
  kCompanyStream = 1,
  kPriceStream = 2,
  kVolumeStream = 3,
  kFactorStream = 4,
  kIdioStream = 5,
  kLoadingStream = 6,
};

std::uint64_t sid(std::uint64_t purpose, std::uint64_t a, std::uint64_t b) {
  return (purpose << 48) ^ (a << 24) ^ b;
}

std::string make_symbol(const std::string& sector, int ordinal) {
  std::string prefix;
  for (char ch : sector) {
    if (prefix.size() == 3) break;
    prefix.push_back(static_cast<char>(std::toupper(ch)));
  }
  return prefix + std::to_string(ordinal);
}

// Per-sector factor loadings, 38 x factor_dim, fixed given the master seed.
std::vector<double> sector_loadings(const SyntheticConfig& cfg, int sector) {
  num::Rng rng(num::derive_seed(
      cfg.seed, sid(kLoadingStream, static_cast<std::uint64_t>(sector), 0)));
  std::vector<double> L(static_cast<std::size_t>(kEarningsDim) *
                        static_cast<std::size_t>(cfg.factor_dim));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.factor_dim));
  for (double& x : L) x = scale * rng.normal();
  return L;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (!(base_vol > 0.0)) {
    throw ConfigError("synthetic: base_vol must be positive");
  }
  if (n_companies < 1) throw ConfigError("synthetic: n_companies must be >= 1");
  if (n_quarters < 1) throw ConfigError("synthetic: n_quarters must be >= 1");
  if (sectors.empty()) throw ConfigError("synthetic: sectors list empty");
  if (!(drift_decay > 0.0) || drift_decay > 1.0) {
    throw ConfigError("synthetic: drift_decay must be in (0, 1]");
  }
  if (drift_strength < 0.0) {
    throw ConfigError("synthetic: drift_strength must be >= 0");
  }
  if (rho_min < 0.0 || rho_max >= 1.0 || rho_min > rho_max) {
    throw ConfigError("synthetic: rho range must satisfy 0 <= min <= max < 1");
  }
  if (factor_dim < 1) throw ConfigError("synthetic: factor_dim must be >= 1");
  if (pre_days < 1 || post_days < 1) {
    throw ConfigError("synthetic: pre_days and post_days must be >= 1");
  }
  if (first_announce_day < pre_days + 4) {
    throw ConfigError("synthetic: first_announce_day leaves no room for the "
                      "pre-announcement pool");
  }
  if (quarter_spacing < pre_days + post_days + 5) {
    throw ConfigError("synthetic: quarter_spacing too small for pool + post "
                      "days");
  }
}

std::vector<std::vector<double>> signal_map(const SyntheticConfig& cfg) {
  num::Rng wrng(cfg.signal_map_seed);
  std::vector<double> w(kEarningsDim);
  double norm = 0.0;
  for (double& x : w) {
    x = wrng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : w) x /= norm;

  std::vector<std::vector<double>> per_sector;
  per_sector.reserve(cfg.sectors.size());
  for (int s = 0; s < static_cast<int>(cfg.sectors.size()); ++s) {
    const std::vector<double> L = sector_loadings(cfg, s);
    // sigma^2 of <w, e> under e = L g + noise * eps with unit w.
    double sig2 = cfg.earnings_noise * cfg.earnings_noise;
    for (int f = 0; f < cfg.factor_dim; ++f) {
      double proj = 0.0;
      for (int i = 0; i < kEarningsDim; ++i) {
        proj += w[static_cast<std::size_t>(i)] *
                L[static_cast<std::size_t>(i) *
                      static_cast<std::size_t>(cfg.factor_dim) +
                  static_cast<std::size_t>(f)];
      }
      sig2 += proj * proj;
    }
    std::vector<double> v(kEarningsDim);
    const double scale = cfg.signal_gain / std::sqrt(sig2);
    for (int i = 0; i < kEarningsDim; ++i) {
      v[static_cast<std::size_t>(i)] = scale * w[static_cast<std::size_t>(i)];
    }
    per_sector.push_back(std::move(v));
  }
  return per_sector;
}

double planted_signal(const SyntheticConfig&,
                      const std::vector<double>& w_over_sigma,
                      const std::vector<double>& earnings_raw) {
  double dot = 0.0;
  for (std::size_t i = 0; i < earnings_raw.size(); ++i) {
    dot += w_over_sigma[i] * earnings_raw[i];
  }
  return std::tanh(dot);
}

DataSet generate(const SyntheticConfig& cfg) {
  cfg.validate();
  DataSet ds;
  ds.sectors = cfg.sectors;

  const int n_sectors = static_cast<int>(cfg.sectors.size());
  std::vector<int> sector_ordinal(static_cast<std::size_t>(n_sectors), 0);
  for (int c = 0; c < cfg.n_companies; ++c) {
    const int s = c % n_sectors;
    ds.companies.push_back(
        {make_symbol(cfg.sectors[static_cast<std::size_t>(s)],
                     ++sector_ordinal[static_cast<std::size_t>(s)]),
         s});
  }
  for (int q = 0; q < cfg.n_quarters; ++q) {
    ds.announce_days.push_back(cfg.first_announce_day +
                               q * cfg.quarter_spacing);
  }

  // Earnings: e = L_s g_{s,q} + noise * eps, shared sector factor per quarter.
  const auto wmap = signal_map(cfg);
  ds.earnings_raw.resize(static_cast<std::size_t>(cfg.n_companies) *
                         static_cast<std::size_t>(cfg.n_quarters));
  ds.signal.resize(ds.earnings_raw.size());
  for (int c = 0; c < cfg.n_companies; ++c) {
    const int s = ds.companies[static_cast<std::size_t>(c)].sector;
    const std::vector<double> L = sector_loadings(cfg, s);
    for (int q = 0; q < cfg.n_quarters; ++q) {
      num::Rng frng(num::derive_seed(
          cfg.seed, sid(kFactorStream, static_cast<std::uint64_t>(s),
                        static_cast<std::uint64_t>(q))));
      std::vector<double> g(static_cast<std::size_t>(cfg.factor_dim));
      for (double& x : g) x = frng.normal();
      num::Rng irng(num::derive_seed(
          cfg.seed, sid(kIdioStream, static_cast<std::uint64_t>(c),
                        static_cast<std::uint64_t>(q))));
      std::vector<double> e(kEarningsDim);
      for (int i = 0; i < kEarningsDim; ++i) {
        double v = cfg.earnings_noise * irng.normal();
        for (int f = 0; f < cfg.factor_dim; ++f) {
          v += L[static_cast<std::size_t>(i) *
                     static_cast<std::size_t>(cfg.factor_dim) +
                 static_cast<std::size_t>(f)] *
               g[static_cast<std::size_t>(f)];
        }
        e[static_cast<std::size_t>(i)] = v;
      }
      const std::size_t eq = ds.eq_index(c, q);
      ds.signal[eq] =
          planted_signal(cfg, wmap[static_cast<std::size_t>(s)], e);
      ds.earnings_raw[eq] = std::move(e);
    }
  }

  // Price and volume paths.
  for (int c = 0; c < cfg.n_companies; ++c) {
    num::Rng crng(num::derive_seed(
        cfg.seed, sid(kCompanyStream, static_cast<std::uint64_t>(c), 0)));
    const double base_price = 100.0 * std::exp(cfg.level_sigma * crng.normal());
    const double base_volume =
        1000.0 * std::exp(cfg.volume_base_sigma * crng.normal());

    for (int q = 0; q < cfg.n_quarters; ++q) {
      const int announce = ds.announce_days[static_cast<std::size_t>(q)];
      const double s_cq = ds.signal[ds.eq_index(c, q)];
      for (int slot = 0; slot < cfg.pre_days + cfg.post_days; ++slot) {
        const bool pre = slot < cfg.pre_days;
        // pool days A-8..A-5 (for pre_days=4), post days A..A+4
        const int abs_day = pre ? announce - 4 - cfg.pre_days + slot
                                : announce + (slot - cfg.pre_days);
        const int offset = pre ? 0 : slot - cfg.pre_days + 1;
        const double m =
            pre ? 0.0
                : cfg.drift_strength *
                      std::pow(cfg.drift_decay, static_cast<double>(offset - 1)) *
                      s_cq;

        num::Rng prng(num::derive_seed(
            cfg.seed, sid(kPriceStream, static_cast<std::uint64_t>(c),
                          static_cast<std::uint64_t>(abs_day))));
        const double rho = cfg.rho_min +
                           (cfg.rho_max - cfg.rho_min) * prng.uniform();
        const double open =
            base_price * std::exp(cfg.open_jitter * prng.normal());
        double u = cfg.base_vol / std::sqrt(1.0 - rho * rho) * prng.normal();
        std::vector<double> close(kMinutes);
        double log_close = std::log(open);
        for (int t = 0; t < kMinutes; ++t) {
          if (t > 0) u = rho * u + cfg.base_vol * prng.normal();
          log_close += m + u;
          close[static_cast<std::size_t>(t)] = std::exp(log_close);
        }

        num::Rng vrng(num::derive_seed(
            cfg.seed, sid(kVolumeStream, static_cast<std::uint64_t>(c),
                          static_cast<std::uint64_t>(abs_day))));
        std::vector<double> volume(kMinutes);
        const double mid = (kMinutes - 1) / 2.0;
        for (int t = 0; t < kMinutes; ++t) {
          const double x = (static_cast<double>(t) - mid) / mid;
          const double shape = 1.0 + cfg.volume_u * x * x;
          volume[static_cast<std::size_t>(t)] =
              base_volume * shape * std::exp(cfg.volume_noise * vrng.normal());
        }

        ds.days.push_back({c, q, abs_day, offset});
        ds.close_raw.push_back(std::move(close));
        ds.volume_raw.push_back(std::move(volume));
      }
    }
  }

  finalize_features(ds);
  return ds;
}

}  // namespace cet::data

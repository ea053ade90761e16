#include "cet/baselines/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cet/errors.hpp"
#include "cet/numerics/adam.hpp"
#include "cet/numerics/ops.hpp"

namespace cet::baselines {

namespace {

// rng stream ids under one master seed. Purposes stay globally distinct:
// datagen owns the low values, trainer.cpp uses 8 and 9.
constexpr std::uint64_t kPretextStream = 10;
constexpr std::uint64_t kSupervisedInitStream = 11;

std::uint64_t sid(std::uint64_t purpose, std::uint64_t a, std::uint64_t b) {
  return (purpose << 48) ^ (a << 24) ^ b;
}

// Slot layout per pretext kind: 0 init, 1 holdout split, 2 epoch order,
// 3 train-step randomness, 4 validation randomness.
std::uint64_t slot(model::ModelKind kind, std::uint64_t which) {
  return static_cast<std::uint64_t>(kind) * 8 + which;
}

template <typename T>
std::vector<std::span<const T>> chunks(std::span<const T> xs, std::size_t size,
                                       std::size_t cap) {
  std::vector<std::span<const T>> out;
  for (std::size_t i = 0; i < xs.size(); i += size) {
    out.push_back(xs.subspan(i, std::min(size, xs.size() - i)));
  }
  if (cap > 0 && out.size() > cap) out.resize(cap);
  return out;
}

struct Holdout {
  std::vector<data::WindowRef> anchors;  // shuffled; first n_val held out
  std::size_t n_val = 0;
  std::span<const data::WindowRef> val() const {
    return {anchors.data(), n_val};
  }
  std::span<const data::WindowRef> train() const {
    return {anchors.data() + n_val, anchors.size() - n_val};
  }
};

Holdout split_day1_windows(const data::DataSet& ds, const BaselineSpec& spec,
                           model::ModelKind kind) {
  Holdout out;
  out.anchors = pretrain::pretext_anchors(ds, spec.model.omega);
  if (out.anchors.empty()) throw DataError("pretext: no day-1 windows");
  num::Rng rng(num::derive_seed(spec.seed, sid(kPretextStream,
                                               slot(kind, 1), 0)));
  rng.shuffle(out.anchors);
  const auto want = static_cast<std::size_t>(std::llround(
      spec.val_fraction * static_cast<double>(out.anchors.size())));
  out.n_val = std::clamp<std::size_t>(want, 1, out.anchors.size() - 1);
  return out;
}

void guard_epoch_loss(double train_loss, double val_loss, double bar,
                      std::size_t patience, std::size_t& diverged,
                      std::size_t epoch) {
  if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
    throw NumericError("pretext: non-finite loss at epoch " +
                       std::to_string(epoch));
  }
  if (train_loss > bar) {
    if (++diverged >= patience) {
      throw NumericError("pretext: loss " + std::to_string(train_loss) +
                         " above " + std::to_string(bar) + " for " +
                         std::to_string(diverged) + " epochs (epoch " +
                         std::to_string(epoch) + ")");
    }
  } else {
    diverged = 0;
  }
}

std::vector<num::Tensor> prefix_group(model::ParamStore& params,
                                      std::initializer_list<const char*> ps) {
  std::vector<num::Tensor> out;
  for (const char* p : ps) {
    for (num::Tensor& t : params.params_with_prefix(p)) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

double mean_square(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x * x;
  return acc / static_cast<double>(xs.size());
}

}  // namespace

void BaselineSpec::validate() const {
  model.validate();
  if (epochs == 0 || batch_size == 0) {
    throw ConfigError("baseline: epochs and batch_size must be positive");
  }
  if (lr <= 0.0) throw ConfigError("baseline: lr must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("baseline: val_fraction must be in (0, 1)");
  }
  switch (kind) {
    case model::ModelKind::mlm: {
      if (!(mask_fraction > 0.0 && mask_fraction < 1.0)) {
        throw ConfigError("mlm: mask_fraction must be in (0, 1)");
      }
      if (mask_span == 0 || mask_span > model.omega) {
        throw ConfigError("mlm: mask_span must fit inside the window");
      }
      const std::size_t n_blocks = model.omega / mask_span;
      const auto target = static_cast<std::size_t>(std::max<long long>(
          1, std::llround(mask_fraction *
                          static_cast<double>(model.omega))));
      const std::size_t n_spans =
          std::min(n_blocks, (target + mask_span - 1) / mask_span);
      if (n_spans * mask_span >= model.omega) {
        throw ConfigError("mlm: mask covers the whole window");
      }
      break;
    }
    case model::ModelKind::simclr:
      if (batch_size < 2) {
        throw ConfigError("simclr: in-batch negatives need batch_size >= 2");
      }
      if (noise_std < 0.0) {
        throw ConfigError("simclr: noise_std must be nonnegative");
      }
      if (temperature <= 0.0) {
        throw ConfigError("simclr: temperature must be positive");
      }
      if (proj_dim == 0) {
        throw ConfigError("simclr: proj_dim must be positive");
      }
      break;
    default:
      break;
  }
}

pretrain::HeadWiring wiring_for(model::ModelKind kind) {
  switch (kind) {
    case model::ModelKind::supraw:
      return pretrain::HeadWiring::concat;
    case model::ModelKind::supraw2:
      return pretrain::HeadWiring::price_only;
    default:
      return pretrain::HeadWiring::fused;
  }
}

model::ParamStore make_baseline_params(const BaselineSpec& spec,
                                       std::uint64_t seed) {
  const model::ModelConfig& m = spec.model;
  m.validate();
  if (spec.kind == model::ModelKind::cet) {
    return model::make_cet_params(m, seed);
  }
  num::Rng rng(seed);
  model::ParamStore store;
  model::add_price_encoder(store, m, rng);
  model::add_transformer(store, m, rng);
  switch (spec.kind) {
    case model::ModelKind::ae:
      model::add_earnings_autoencoder(store, m, rng);
      model::add_affine(store, "pdec", m.d, m.omega * m.upsilon, rng);
      model::add_head(store, m.d, m.n_classes);
      break;
    case model::ModelKind::mlm: {
      model::add_earnings_autoencoder(store, m, rng);
      std::vector<double> mv(m.d);
      const double s = 1.0 / std::sqrt(static_cast<double>(m.d));
      for (double& x : mv) x = rng.normal(0.0, s);
      store.add("mlm.mask", {1, m.d}, std::move(mv));
      model::add_affine(store, "mlm.dec", m.d, m.upsilon, rng);
      model::add_head(store, m.d, m.n_classes);
      break;
    }
    case model::ModelKind::simclr:
      model::add_earnings_autoencoder(store, m, rng);
      model::add_affine(store, "sim.proj", m.d, spec.proj_dim, rng);
      model::add_head(store, m.d, m.n_classes);
      break;
    case model::ModelKind::suprep:
      model::add_earnings_autoencoder(store, m, rng);
      model::add_head(store, m.d, m.n_classes);
      break;
    case model::ModelKind::supraw:
      model::add_head(store, m.d + m.earnings_dim, m.n_classes);
      break;
    case model::ModelKind::supraw2:
      model::add_head(store, m.d, m.n_classes);
      break;
    case model::ModelKind::cet:
      break;  // handled above
  }
  model::stamp_kind(store, spec.kind);
  return store;
}

// --- pretext pieces -------------------------------------------------------

num::Tensor ae_price_loss(const num::Tensor& windows, std::size_t batch,
                          const model::ParamStore& params,
                          const model::ModelConfig& cfg) {
  if (windows.rows() != batch * cfg.omega) {
    throw ContractError("ae_price_loss: windows rows != batch * omega");
  }
  num::Tensor c = model::price_context(windows, batch, params, cfg);
  num::Tensor recon = model::affine(c, params, "pdec");
  // Row-major [batch*omega, upsilon] flattens to [batch, omega*upsilon]
  // without reordering, so the target is the same buffer reshaped.
  std::vector<double> tv(windows.values().begin(), windows.values().end());
  num::Tensor target = num::Tensor::from_values(
      {batch, cfg.omega * cfg.upsilon}, std::move(tv));
  return num::mse_loss(recon, target);
}

MlmMask sample_mlm_mask(std::size_t batch, const BaselineSpec& spec,
                        num::Rng& rng) {
  const std::size_t omega = spec.model.omega;
  const std::size_t span = spec.mask_span;
  const std::size_t n_blocks = omega / span;
  const auto target = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(spec.mask_fraction * static_cast<double>(omega))));
  const std::size_t n_spans =
      std::min(n_blocks, (target + span - 1) / span);
  MlmMask out;
  out.row_mask.assign(batch * omega, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto picks = rng.sample_without_replacement(n_blocks, n_spans);
    for (std::size_t blk : picks) {
      for (std::size_t t = 0; t < span; ++t) {
        out.row_mask[b * omega + blk * span + t] = 1;
        ++out.masked;
      }
    }
  }
  return out;
}

num::Tensor mlm_masked_loss(const num::Tensor& windows, std::size_t batch,
                            const std::vector<std::uint8_t>& row_mask,
                            const model::ParamStore& params,
                            const model::ModelConfig& cfg) {
  num::Tensor z = model::encode_price(windows, params);
  num::Tensor zm = num::blend_rows(z, row_mask, params.get("mlm.mask"));
  num::Tensor zp = model::positional_encode(zm, batch, cfg);
  // Reconstruction reads both sides; downstream use stays causal.
  num::Tensor h =
      model::transformer_forward(zp, params, cfg, batch, /*causal=*/false);
  num::Tensor pred = model::affine(h, params, "mlm.dec");
  return num::masked_mse(pred, windows, row_mask);
}

std::pair<num::Tensor, num::Tensor> make_simclr_views(
    const num::Tensor& windows, double noise_std, num::Rng& rng) {
  if (noise_std < 0.0) throw ConfigError("simclr: negative noise_std");
  auto noised = [&]() {
    std::vector<double> v(windows.values().begin(), windows.values().end());
    if (noise_std > 0.0) {
      for (double& x : v) x += rng.normal(0.0, noise_std);
    }
    return num::Tensor::from_values(windows.shape(), std::move(v));
  };
  num::Tensor a = noised();
  num::Tensor b = noised();
  return {std::move(a), std::move(b)};
}

num::Tensor simclr_projection(const num::Tensor& view, std::size_t batch,
                              const model::ParamStore& params,
                              const model::ModelConfig& cfg) {
  num::Tensor c = model::price_context(view, batch, params, cfg);
  num::Tensor u = num::tanh_op(model::affine(c, params, "sim.proj"));
  return num::l2_normalize_rows(u);
}

num::Tensor nt_xent(const num::Tensor& n1, const num::Tensor& n2,
                    double temperature) {
  if (temperature <= 0.0) {
    throw ConfigError("nt_xent: temperature must be positive");
  }
  const std::size_t b = n1.rows();
  if (n2.rows() != b || n1.cols() != n2.cols()) {
    throw ShapeError("nt_xent: view shapes differ");
  }
  if (b < 2) throw ConfigError("nt_xent: need at least two pairs");
  const double invt = 1.0 / temperature;
  num::Tensor s11 = num::scale(num::matmul(n1, num::transpose(n1)), invt);
  num::Tensor s12 = num::scale(num::matmul(n1, num::transpose(n2)), invt);
  num::Tensor s21 = num::scale(num::matmul(n2, num::transpose(n1)), invt);
  num::Tensor s22 = num::scale(num::matmul(n2, num::transpose(n2)), invt);
  // Self-similarity is not a candidate; sink the diagonal below any
  // reachable logit (|sim|/t is bounded) so softmax ignores it.
  std::vector<double> dv(b * b, 0.0);
  for (std::size_t i = 0; i < b; ++i) dv[i * b + i] = -1e9;
  num::Tensor diag = num::Tensor::from_values({b, b}, std::move(dv));
  // Candidate columns: [view-1 rows | view-2 rows] for both anchor sets.
  num::Tensor logits1 = num::concat_cols(num::add(s11, diag), s12);
  num::Tensor logits2 = num::concat_cols(s21, num::add(s22, diag));
  std::vector<int> lab1(b), lab2(b);
  for (std::size_t i = 0; i < b; ++i) {
    lab1[i] = static_cast<int>(b + i);
    lab2[i] = static_cast<int>(i);
  }
  num::Tensor l1 = num::cross_entropy(logits1, lab1);
  num::Tensor l2 = num::cross_entropy(logits2, lab2);
  return num::scale(num::add(l1, l2), 0.5);
}

// --- pretext trainers -------------------------------------------------

pretrain::PretrainResult pretrain_ae(const data::DataSet& ds,
                                     const BaselineSpec& spec) {
  BaselineSpec s = spec;
  s.kind = model::ModelKind::ae;
  s.validate();
  const auto kind = s.kind;

  pretrain::PretrainResult res;
  res.params = make_baseline_params(
      s, num::derive_seed(s.seed, sid(kPretextStream, slot(kind, 0), 0)));
  model::ParamStore& params = res.params;
  num::Adam opt_main(prefix_group(params, {"enc.", "ar.", "pdec."}),
                     {.lr = s.lr});
  num::Adam opt_ae(params.params_with_prefix("ae."),
                   {.lr = s.lr, .weight_decay = s.ae_weight_decay});

  Holdout hold = split_day1_windows(ds, s, kind);
  const auto val_chunks =
      chunks<data::WindowRef>(hold.val(), s.batch_size, s.max_val_batches);
  std::vector<pretrain::PretextBatch> val_batches;
  for (const auto& c : val_chunks) {
    val_batches.push_back(
        pretrain::make_pretext_batch(ds, c, s.model.omega, true));
  }
  for (const auto& b : val_batches) {
    res.reference_loss += mean_square(b.windows.values()) +
                          mean_square(b.earnings.values());
  }
  res.reference_loss /= static_cast<double>(val_batches.size());

  const double bar = res.reference_loss + 5.0;
  std::size_t diverged = 0;
  std::vector<std::uint8_t> best_bytes;
  res.best_val = std::numeric_limits<double>::infinity();

  std::vector<data::WindowRef> order(hold.train().begin(),
                                     hold.train().end());
  for (std::size_t epoch = 1; epoch <= s.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    num::Rng order_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 2), epoch)));
    order_rng.shuffle(order);
    const auto batches =
        chunks<data::WindowRef>(order, s.batch_size, s.steps_per_epoch);

    pretrain::EpochRecord rec;
    rec.epoch = epoch;
    for (const auto& chunk : batches) {
      pretrain::PretextBatch b =
          pretrain::make_pretext_batch(ds, chunk, s.model.omega, true);
      num::Tensor price = ae_price_loss(b.windows, b.batch, params, s.model);
      num::Tensor earn = model::earnings_recon_loss(b.earnings, params);
      num::Tensor total = num::add(price, earn);
      opt_main.zero_grad();
      opt_ae.zero_grad();
      total.backward();
      opt_main.step();
      opt_ae.step();
      rec.train_loss += price.scalar_value();
      rec.recon_loss += earn.scalar_value();
    }
    rec.train_loss /= static_cast<double>(batches.size());
    rec.recon_loss /= static_cast<double>(batches.size());

    for (const auto& b : val_batches) {
      rec.val_loss +=
          ae_price_loss(b.windows, b.batch, params, s.model).scalar_value() +
          model::earnings_recon_loss(b.earnings, params).scalar_value();
    }
    rec.val_loss /= static_cast<double>(val_batches.size());
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.history.push_back(rec);

    guard_epoch_loss(rec.train_loss + rec.recon_loss, rec.val_loss, bar,
                     s.divergence_patience, diverged, epoch);
    if (rec.val_loss < res.best_val) {
      res.best_val = rec.val_loss;
      res.best_epoch = epoch;
      best_bytes = model::serialize_params(params);
    }
  }
  res.params = model::deserialize_params(best_bytes);
  return res;
}

pretrain::PretrainResult pretrain_mlm(const data::DataSet& ds,
                                      const BaselineSpec& spec) {
  BaselineSpec s = spec;
  s.kind = model::ModelKind::mlm;
  s.validate();
  const auto kind = s.kind;

  pretrain::PretrainResult res;
  res.params = make_baseline_params(
      s, num::derive_seed(s.seed, sid(kPretextStream, slot(kind, 0), 0)));
  model::ParamStore& params = res.params;
  num::Adam opt(prefix_group(params, {"enc.", "ar.", "mlm."}), {.lr = s.lr});

  Holdout hold = split_day1_windows(ds, s, kind);
  const auto val_chunks =
      chunks<data::WindowRef>(hold.val(), s.batch_size, s.max_val_batches);
  std::vector<pretrain::PretextBatch> val_batches;
  for (const auto& c : val_chunks) {
    val_batches.push_back(
        pretrain::make_pretext_batch(ds, c, s.model.omega, false));
  }
  // Predict-the-mean reference. Masked positions are a uniform draw, so
  // the variance over all window entries is the masked-target variance.
  {
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (const auto& b : val_batches) {
      for (double x : b.windows.values()) {
        sum += x;
        sumsq += x * x;
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    res.reference_loss = sumsq / static_cast<double>(count) - mean * mean;
  }

  const double bar = res.reference_loss + 5.0;
  std::size_t diverged = 0;
  std::vector<std::uint8_t> best_bytes;
  res.best_val = std::numeric_limits<double>::infinity();

  std::vector<data::WindowRef> order(hold.train().begin(),
                                     hold.train().end());
  for (std::size_t epoch = 1; epoch <= s.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    num::Rng order_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 2), epoch)));
    order_rng.shuffle(order);
    num::Rng mask_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 3), epoch)));
    const auto batches =
        chunks<data::WindowRef>(order, s.batch_size, s.steps_per_epoch);

    pretrain::EpochRecord rec;
    rec.epoch = epoch;
    for (const auto& chunk : batches) {
      pretrain::PretextBatch b =
          pretrain::make_pretext_batch(ds, chunk, s.model.omega, false);
      MlmMask mask = sample_mlm_mask(b.batch, s, mask_rng);
      num::Tensor loss =
          mlm_masked_loss(b.windows, b.batch, mask.row_mask, params, s.model);
      opt.zero_grad();
      loss.backward();
      opt.step();
      rec.train_loss += loss.scalar_value();
    }
    rec.train_loss /= static_cast<double>(batches.size());

    num::Rng val_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 4), epoch)));
    for (const auto& b : val_batches) {
      MlmMask mask = sample_mlm_mask(b.batch, s, val_rng);
      rec.val_loss +=
          mlm_masked_loss(b.windows, b.batch, mask.row_mask, params, s.model)
              .scalar_value();
    }
    rec.val_loss /= static_cast<double>(val_batches.size());
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.history.push_back(rec);

    guard_epoch_loss(rec.train_loss, rec.val_loss, bar,
                     s.divergence_patience, diverged, epoch);
    if (rec.val_loss < res.best_val) {
      res.best_val = rec.val_loss;
      res.best_epoch = epoch;
      best_bytes = model::serialize_params(params);
    }
  }
  res.params = model::deserialize_params(best_bytes);
  return res;
}

pretrain::PretrainResult pretrain_simclr(const data::DataSet& ds,
                                         const BaselineSpec& spec) {
  BaselineSpec s = spec;
  s.kind = model::ModelKind::simclr;
  s.validate();
  const auto kind = s.kind;

  pretrain::PretrainResult res;
  res.params = make_baseline_params(
      s, num::derive_seed(s.seed, sid(kPretextStream, slot(kind, 0), 0)));
  model::ParamStore& params = res.params;
  num::Adam opt(prefix_group(params, {"enc.", "ar.", "sim."}), {.lr = s.lr});

  Holdout hold = split_day1_windows(ds, s, kind);
  auto val_chunks =
      chunks<data::WindowRef>(hold.val(), s.batch_size, s.max_val_batches);
  std::erase_if(val_chunks, [](const auto& c) { return c.size() < 2; });
  if (val_chunks.empty()) {
    throw DataError("simclr: holdout too small for paired batches");
  }
  std::vector<pretrain::PretextBatch> val_batches;
  for (const auto& c : val_chunks) {
    val_batches.push_back(
        pretrain::make_pretext_batch(ds, c, s.model.omega, false));
  }
  res.reference_loss =
      std::log(2.0 * static_cast<double>(s.batch_size) - 1.0);

  const double bar = res.reference_loss + 5.0;
  std::size_t diverged = 0;
  std::vector<std::uint8_t> best_bytes;
  res.best_val = std::numeric_limits<double>::infinity();

  std::vector<data::WindowRef> order(hold.train().begin(),
                                     hold.train().end());
  for (std::size_t epoch = 1; epoch <= s.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    num::Rng order_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 2), epoch)));
    order_rng.shuffle(order);
    num::Rng noise_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 3), epoch)));
    auto batches =
        chunks<data::WindowRef>(order, s.batch_size, s.steps_per_epoch);
    // A single window has no in-batch negatives; drop stub tails.
    std::erase_if(batches, [](const auto& c) { return c.size() < 2; });
    if (batches.empty()) {
      throw DataError("simclr: training split too small for paired batches");
    }

    pretrain::EpochRecord rec;
    rec.epoch = epoch;
    for (const auto& chunk : batches) {
      pretrain::PretextBatch b =
          pretrain::make_pretext_batch(ds, chunk, s.model.omega, false);
      auto [v1, v2] = make_simclr_views(b.windows, s.noise_std, noise_rng);
      num::Tensor n1 = simclr_projection(v1, b.batch, params, s.model);
      num::Tensor n2 = simclr_projection(v2, b.batch, params, s.model);
      num::Tensor loss = nt_xent(n1, n2, s.temperature);
      opt.zero_grad();
      loss.backward();
      opt.step();
      rec.train_loss += loss.scalar_value();
      res.negatives_sampled += 2 * b.batch * (2 * b.batch - 2);
    }
    rec.train_loss /= static_cast<double>(batches.size());

    num::Rng val_rng(num::derive_seed(
        s.seed, sid(kPretextStream, slot(kind, 4), epoch)));
    for (const auto& b : val_batches) {
      auto [v1, v2] = make_simclr_views(b.windows, s.noise_std, val_rng);
      num::Tensor n1 = simclr_projection(v1, b.batch, params, s.model);
      num::Tensor n2 = simclr_projection(v2, b.batch, params, s.model);
      rec.val_loss += nt_xent(n1, n2, s.temperature).scalar_value();
      // Rows are unit length, so the twin dot product is the cosine.
      double cos = 0.0;
      for (std::size_t i = 0; i < b.batch; ++i) {
        for (std::size_t j = 0; j < n1.cols(); ++j) {
          cos += n1.at(i, j) * n2.at(i, j);
        }
      }
      rec.cos_sim += cos / static_cast<double>(b.batch);
    }
    rec.val_loss /= static_cast<double>(val_batches.size());
    rec.cos_sim /= static_cast<double>(val_batches.size());
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.history.push_back(rec);

    guard_epoch_loss(rec.train_loss, rec.val_loss, bar,
                     s.divergence_patience, diverged, epoch);
    if (rec.val_loss < res.best_val) {
      res.best_val = rec.val_loss;
      res.best_epoch = epoch;
      best_bytes = model::serialize_params(params);
    }
  }
  res.params = model::deserialize_params(best_bytes);
  return res;
}

pretrain::PretrainResult pretrain_baseline(const data::DataSet& ds,
                                           const BaselineSpec& spec) {
  switch (spec.kind) {
    case model::ModelKind::ae:
      return pretrain_ae(ds, spec);
    case model::ModelKind::mlm:
      return pretrain_mlm(ds, spec);
    case model::ModelKind::simclr:
      return pretrain_simclr(ds, spec);
    default:
      throw ConfigError(std::string("pretrain_baseline: ") +
                        model::kind_name(spec.kind) + " has no pretext phase");
  }
}

// --- fine-tuning -------------------------------------------------------

void freeze_for_finetune(model::ParamStore& params, model::ModelKind kind,
                         pretrain::FinetuneMode mode) {
  params.freeze_prefix("wk.");
  params.freeze_prefix("pdec.");
  params.freeze_prefix("mlm.");
  params.freeze_prefix("sim.");
  if (mode == pretrain::FinetuneMode::frozen) {
    params.freeze_prefix("enc.");
    params.freeze_prefix("ar.");
    if (kind == model::ModelKind::cet || kind == model::ModelKind::ae)
      params.freeze_prefix("ae.");
  }
}

pretrain::FinetuneResult finetune_baseline(
    const data::DataSet& ds, const model::ParamStore& pretrained,
    std::span<const data::SampleRef> train,
    std::span<const data::SampleRef> test, pretrain::FinetuneMode mode,
    const pretrain::SupervisedConfig& cfg) {
  const model::ModelKind kind = model::checkpoint_kind(pretrained);
  switch (kind) {
    case model::ModelKind::cet:
    case model::ModelKind::ae:
    case model::ModelKind::mlm:
    case model::ModelKind::simclr:
      break;
    default:
      throw ConfigError(std::string("finetune_baseline: ") +
                        model::kind_name(kind) +
                        " checkpoints have no pretext to fine-tune from");
  }
  pretrain::FinetuneResult out{model::clone_params(pretrained), {}, {}};
  freeze_for_finetune(out.params, kind, mode);
  pretrain::SupervisedConfig sup = cfg;
  sup.wiring = pretrain::HeadWiring::fused;
  out.epoch_losses = pretrain::train_movement(ds, out.params, train, sup);
  if (!test.empty())
    out.test = pretrain::evaluate_movement(ds, out.params, test, sup);
  return out;
}

// --- supervised baselines --------------------------------------------

SupervisedReport train_supervised(const data::DataSet& ds,
                                  const BaselineSpec& spec,
                                  std::span<const data::SampleRef> train,
                                  std::span<const data::SampleRef> test,
                                  const pretrain::SupervisedConfig& cfg,
                                  std::span<const std::uint64_t> seeds) {
  if (spec.kind != model::ModelKind::suprep &&
      spec.kind != model::ModelKind::supraw &&
      spec.kind != model::ModelKind::supraw2) {
    throw ConfigError(std::string("train_supervised: ") +
                      model::kind_name(spec.kind) +
                      " is not a supervised baseline");
  }
  if (seeds.empty()) throw ConfigError("train_supervised: no seeds");

  SupervisedReport rep;
  rep.kind = spec.kind;
  pretrain::SupervisedConfig run = cfg;
  run.model = spec.model;
  run.wiring = wiring_for(spec.kind);
  for (std::uint64_t seed : seeds) {
    model::ParamStore params = make_baseline_params(
        spec, num::derive_seed(
                  seed, sid(kSupervisedInitStream,
                            static_cast<std::uint64_t>(spec.kind), 0)));
    run.seed = seed;
    pretrain::train_movement(ds, params, train, run);
    rep.evals.push_back(pretrain::evaluate_movement(ds, params, test, run));
    rep.per_seed.push_back(rep.evals.back().accuracy);
  }
  double sum = 0.0;
  for (double a : rep.per_seed) sum += a;
  rep.mean = sum / static_cast<double>(rep.per_seed.size());
  if (rep.per_seed.size() > 1) {
    double ss = 0.0;
    for (double a : rep.per_seed) ss += (a - rep.mean) * (a - rep.mean);
    rep.stddev =
        std::sqrt(ss / static_cast<double>(rep.per_seed.size() - 1));
  }
  return rep;
}

}  // namespace cet::baselines

#include "cet/pretrain/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cet/errors.hpp"
#include "cet/numerics/adam.hpp"
#include "cet/numerics/ops.hpp"
#include "cet/pretrain/infonce.hpp"

namespace cet::pretrain {

namespace {

// rng stream ids under one master seed; disjoint from datagen's streams
constexpr std::uint64_t kPretrainStream = 8;
constexpr std::uint64_t kSupervisedStream = 9;

std::uint64_t sid(std::uint64_t purpose, std::uint64_t a, std::uint64_t b) {
  return (purpose << 48) ^ (a << 24) ^ b;
}

double tail_mean(const std::vector<EpochRecord>& hist,
                 double EpochRecord::* field) {
  if (hist.empty()) return 0.0;
  const std::size_t take = std::min<std::size_t>(3, hist.size());
  double acc = 0.0;
  for (std::size_t i = hist.size() - take; i < hist.size(); ++i) {
    acc += hist[i].*field;
  }
  return acc / static_cast<double>(take);
}

template <typename Ref>
std::vector<std::span<const Ref>> chunk_spans(std::span<const Ref> xs,
                                              std::size_t size) {
  std::vector<std::span<const Ref>> out;
  for (std::size_t i = 0; i < xs.size(); i += size) {
    out.push_back(xs.subspan(i, std::min(size, xs.size() - i)));
  }
  return out;
}

}  // namespace

double PretrainResult::equilibrium_loss() const {
  return tail_mean(history, &EpochRecord::train_loss);
}

double PretrainResult::equilibrium_cos() const {
  return tail_mean(history, &EpochRecord::cos_sim);
}

PretrainResult pretrain_cet(const data::DataSet& ds,
                            const PretrainConfig& cfg) {
  cfg.model.validate();
  if (cfg.epochs == 0 || cfg.batch_size == 0) {
    throw ConfigError("pretrain: epochs and batch_size must be positive");
  }
  const CpcBatchSpec spec{cfg.model.omega, cfg.model.k_steps, cfg.n_negatives,
                          cfg.shuffled_positives};
  std::vector<data::WindowRef> anchors = cpc_anchors(ds, spec);
  if (anchors.empty()) throw DataError("pretrain: no day-1 anchor windows");
  const std::vector<std::size_t> pool = negative_days(ds);

  PretrainResult res;
  res.params = model::make_cet_params(
      cfg.model, num::derive_seed(cfg.seed, sid(kPretrainStream, 0, 0)));
  model::ParamStore& params = res.params;

  std::vector<num::Tensor> main_group;
  for (const char* prefix : {"enc.", "ar.", "wk."}) {
    for (num::Tensor& t : params.params_with_prefix(prefix)) {
      main_group.push_back(std::move(t));
    }
  }
  num::Adam opt_main(std::move(main_group), {.lr = cfg.lr});
  num::Adam opt_ae(params.params_with_prefix("ae."),
                   {.lr = cfg.lr, .weight_decay = cfg.ae_weight_decay});

  num::Rng split_rng(num::derive_seed(cfg.seed, sid(kPretrainStream, 1, 0)));
  split_rng.shuffle(anchors);
  const auto want_val = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(anchors.size())));
  const std::size_t n_val =
      std::clamp<std::size_t>(want_val, 1, anchors.size() - 1);
  const std::span<const data::WindowRef> val(anchors.data(), n_val);
  const std::span<const data::WindowRef> train(anchors.data() + n_val,
                                               anchors.size() - n_val);

  res.reference_loss = std::log(static_cast<double>(cfg.n_negatives + 1));
  const double divergence_bar = res.reference_loss + 5.0;
  std::size_t diverged_epochs = 0;
  std::vector<std::uint8_t> best_bytes;
  res.best_val = std::numeric_limits<double>::infinity();

  std::vector<data::WindowRef> order(train.begin(), train.end());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    num::Rng order_rng(
        num::derive_seed(cfg.seed, sid(kPretrainStream, 2, epoch)));
    order_rng.shuffle(order);
    num::Rng batch_rng(
        num::derive_seed(cfg.seed, sid(kPretrainStream, 3, epoch)));

    auto batches = chunk_spans<data::WindowRef>(order, cfg.batch_size);
    if (cfg.steps_per_epoch > 0 && batches.size() > cfg.steps_per_epoch) {
      batches.resize(cfg.steps_per_epoch);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.per_k.assign(cfg.model.k_steps, 0.0);
    for (const auto& chunk : batches) {
      CpcBatch batch = make_cpc_batch(ds, chunk, pool, spec, batch_rng);
      res.negatives_sampled += batch.negative_day.size();
      res.gap_violations += count_gap_violations(ds, batch);

      InfoNceResult nce = infonce_loss(batch, params, cfg.model);
      num::Tensor recon = model::earnings_recon_loss(batch.earnings, params);
      num::Tensor total = num::add(nce.loss, recon);
      opt_main.zero_grad();
      opt_ae.zero_grad();
      total.backward();
      opt_main.step();
      opt_ae.step();

      rec.train_loss += nce.loss.scalar_value();
      rec.recon_loss += recon.scalar_value();
      for (std::size_t k = 0; k < nce.per_k.size(); ++k) {
        rec.per_k[k] += nce.per_k[k];
      }
    }
    const auto steps = static_cast<double>(batches.size());
    rec.train_loss /= steps;
    rec.recon_loss /= steps;
    for (double& v : rec.per_k) v /= steps;
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("pretrain: non-finite loss at epoch " +
                         std::to_string(epoch));
    }

    num::Rng val_rng(
        num::derive_seed(cfg.seed, sid(kPretrainStream, 4, epoch)));
    double val_acc = 0.0, cos_acc = 0.0;
    auto val_batches = chunk_spans<data::WindowRef>(val, cfg.batch_size);
    if (cfg.max_val_batches > 0 && val_batches.size() > cfg.max_val_batches) {
      val_batches.resize(cfg.max_val_batches);
    }
    for (const auto& chunk : val_batches) {
      CpcBatch batch = make_cpc_batch(ds, chunk, pool, spec, val_rng);
      val_acc += infonce_loss(batch, params, cfg.model).loss.scalar_value();
      cos_acc += mean_positive_cosine(batch, params, cfg.model);
    }
    rec.val_loss = val_acc / static_cast<double>(val_batches.size());
    rec.cos_sim = cos_acc / static_cast<double>(val_batches.size());
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.history.push_back(rec);

    if (rec.train_loss > divergence_bar) {
      if (++diverged_epochs >= cfg.divergence_patience) {
        throw NumericError(
            "pretrain: loss " + std::to_string(rec.train_loss) + " above " +
            std::to_string(divergence_bar) + " for " +
            std::to_string(diverged_epochs) + " epochs (epoch " +
            std::to_string(epoch) + ")");
      }
    } else {
      diverged_epochs = 0;
    }
    if (rec.val_loss < res.best_val) {
      res.best_val = rec.val_loss;
      res.best_epoch = epoch;
      best_bytes = model::serialize_params(params);
    }
  }
  res.params = model::deserialize_params(best_bytes);
  return res;
}

num::Tensor movement_logits(const LabeledBatch& batch,
                            const model::ParamStore& params,
                            const model::ModelConfig& cfg, HeadWiring wiring) {
  num::Tensor c_s = model::price_context(batch.windows, batch.batch, params,
                                         cfg, /*causal=*/true);
  switch (wiring) {
    case HeadWiring::fused: {
      num::Tensor c_e = model::encode_earnings(batch.earnings, params);
      return model::classify_movement(model::fuse_context(c_s, c_e), params);
    }
    case HeadWiring::concat:
      return model::classify_movement(num::concat_cols(c_s, batch.earnings),
                                      params);
    case HeadWiring::price_only: {
      num::Tensor logits = model::classify_movement(c_s, params);
      if ((logits.taint() & num::kTaintEarnings) != 0) {
        throw ContractError("price-only head: earnings taint in graph");
      }
      return logits;
    }
  }
  throw ConfigError("movement_logits: bad wiring");
}

namespace {

// Only what the classification graph reaches. Pretext-side arrays (wk.*,
// ae.dec, mask vectors, projection heads) get no gradients from the
// cross-entropy loss, and the optimizer contract rejects gradless params.
std::vector<num::Tensor> movement_trainable(const model::ParamStore& params,
                                            HeadWiring wiring) {
  std::vector<num::Tensor> out;
  for (const std::string& name : params.names()) {
    const bool reachable =
        name.starts_with("head.") || name.starts_with("enc.") ||
        name.starts_with("ar.") ||
        (wiring == HeadWiring::fused && name.starts_with("ae.enc"));
    if (!reachable) continue;
    num::Tensor t = params.get(name);
    if (t.requires_grad()) out.push_back(t);
  }
  return out;
}

}  // namespace

std::vector<double> train_movement(const data::DataSet& ds,
                                   model::ParamStore& params,
                                   std::span<const data::SampleRef> train,
                                   const SupervisedConfig& cfg) {
  cfg.model.validate();
  if (train.empty()) throw DataError("train_movement: no training samples");
  num::Adam opt(movement_trainable(params, cfg.wiring), {.lr = cfg.lr});
  std::vector<double> losses;
  std::vector<data::SampleRef> order(train.begin(), train.end());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    num::Rng order_rng(
        num::derive_seed(cfg.seed, sid(kSupervisedStream, 0, epoch)));
    order_rng.shuffle(order);
    double acc = 0.0;
    auto batches = chunk_spans<data::SampleRef>(order, cfg.batch_size);
    if (cfg.steps_per_epoch > 0 && batches.size() > cfg.steps_per_epoch) {
      batches.resize(cfg.steps_per_epoch);
    }
    for (const auto& chunk : batches) {
      LabeledBatch lb =
          make_labeled_batch(ds, chunk, cfg.model.omega, cfg.eps_hold);
      num::Tensor logits = movement_logits(lb, params, cfg.model, cfg.wiring);
      num::Tensor loss = num::cross_entropy(logits, lb.labels);
      opt.zero_grad();
      loss.backward();
      opt.step();
      acc += loss.scalar_value();
    }
    const double mean = acc / static_cast<double>(batches.size());
    if (!std::isfinite(mean)) {
      throw NumericError("train_movement: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    losses.push_back(mean);
  }
  return losses;
}

EvalResult evaluate_movement(const data::DataSet& ds,
                             const model::ParamStore& params,
                             std::span<const data::SampleRef> test,
                             const SupervisedConfig& cfg) {
  if (test.empty()) throw DataError("evaluate_movement: no test samples");
  EvalResult out;
  out.confusion.assign(cfg.model.n_classes * cfg.model.n_classes, 0);
  std::size_t correct = 0;
  for (const auto& chunk : chunk_spans<data::SampleRef>(test, cfg.batch_size)) {
    LabeledBatch lb =
        make_labeled_batch(ds, chunk, cfg.model.omega, cfg.eps_hold);
    num::Tensor logits = movement_logits(lb, params, cfg.model, cfg.wiring);
    const std::vector<int> pred = model::predict_classes(logits);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const auto truth = static_cast<std::size_t>(lb.labels[i]);
      const auto guess = static_cast<std::size_t>(pred[i]);
      ++out.confusion[truth * cfg.model.n_classes + guess];
      if (truth == guess) ++correct;
    }
    out.n += pred.size();
  }
  out.accuracy =
      100.0 * static_cast<double>(correct) / static_cast<double>(out.n);
  return out;
}

FinetuneResult finetune_cet(const data::DataSet& ds,
                            const model::ParamStore& pretrained,
                            std::span<const data::SampleRef> train,
                            std::span<const data::SampleRef> test,
                            FinetuneMode mode, const SupervisedConfig& cfg) {
  FinetuneResult out{model::clone_params(pretrained), {}, {}};
  // The LBL matrices score latent futures; prediction never uses them.
  out.params.freeze_prefix("wk.");
  if (mode == FinetuneMode::frozen) {
    out.params.freeze_prefix("enc.");
    out.params.freeze_prefix("ar.");
    out.params.freeze_prefix("ae.");
  }
  SupervisedConfig sup = cfg;
  sup.wiring = HeadWiring::fused;
  out.epoch_losses = train_movement(ds, out.params, train, sup);
  out.test = evaluate_movement(ds, out.params, test, sup);
  return out;
}

}  // namespace cet::pretrain

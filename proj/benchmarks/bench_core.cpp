// Microbenchmarks for the training hot path: dense matmul, attention
// forward/backward, one full InfoNCE step, and the DWT preprocessing.

#include <benchmark/benchmark.h>

#include <vector>

#include "cet/datagen/generator.hpp"
#include "cet/model/cet_model.hpp"
#include "cet/numerics/ops.hpp"
#include "cet/numerics/rng.hpp"
#include "cet/numerics/tensor.hpp"
#include "cet/preprocess/dwt.hpp"
#include "cet/pretrain/batch.hpp"
#include "cet/pretrain/infonce.hpp"

namespace {

using namespace cet;

num::Tensor random_tensor(std::size_t rows, std::size_t cols, num::Rng& rng,
                          bool grad) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal();
  return num::Tensor({rows, cols}, std::move(v), grad);
}

void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  num::Rng rng(1);
  const num::Tensor a = random_tensor(n, n, rng, false);
  const num::Tensor b = random_tensor(n, n, rng, false);
  for (auto _ : state) {
    num::Tensor c = num::matmul(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}

void bm_attention_forward(benchmark::State& state) {
  const std::size_t batch = 8, seq = 50, d = 128, heads = 4;
  num::Rng rng(2);
  const num::Tensor q = random_tensor(batch * seq, d, rng, false);
  const num::Tensor k = random_tensor(batch * seq, d, rng, false);
  const num::Tensor v = random_tensor(batch * seq, d, rng, false);
  for (auto _ : state) {
    num::Tensor y = num::multihead_attention(q, k, v, batch, heads, true);
    benchmark::DoNotOptimize(y.values().data());
  }
}

void bm_attention_backward(benchmark::State& state) {
  const std::size_t batch = 8, seq = 50, d = 128, heads = 4;
  num::Rng rng(3);
  for (auto _ : state) {
    num::Tensor q = random_tensor(batch * seq, d, rng, true);
    num::Tensor k = random_tensor(batch * seq, d, rng, true);
    num::Tensor v = random_tensor(batch * seq, d, rng, true);
    num::Tensor y = num::multihead_attention(q, k, v, batch, heads, true);
    num::Tensor loss = num::mean_all(y);
    loss.backward();
    benchmark::DoNotOptimize(q.grad().data());
  }
}

const data::DataSet& bench_dataset() {
  static const data::DataSet ds = [] {
    data::SyntheticConfig cfg;
    cfg.n_companies = 9;
    cfg.n_quarters = 2;
    return data::generate(cfg);
  }();
  return ds;
}

void bm_infonce_step(benchmark::State& state) {
  const data::DataSet& ds = bench_dataset();
  model::ModelConfig cfg;
  model::ParamStore params = model::make_cet_params(cfg, 7);
  pretrain::CpcBatchSpec spec;
  const auto anchors = pretrain::cpc_anchors(ds, spec);
  const auto pool = pretrain::negative_days(ds);
  num::Rng rng(11);
  const auto batch = pretrain::make_cpc_batch(
      ds, std::span(anchors).subspan(0, 32), pool, spec, rng);
  for (auto _ : state) {
    auto res = pretrain::infonce_loss(batch, params, cfg);
    res.loss.backward();
    benchmark::DoNotOptimize(res.loss.values().data());
  }
}

void bm_dwt(benchmark::State& state) {
  num::Rng rng(5);
  std::vector<double> series(390);
  for (double& x : series) x = rng.normal();
  for (auto _ : state) {
    auto out = prep::dwt_denoise(series, 0.7, 2, prep::DwtMode::above);
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK(bm_matmul)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_attention_forward)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_attention_backward)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_infonce_step)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_dwt)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

#include "cet/harness/protocols.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cet/baselines/baselines.hpp"
#include "cet/datagen/generator.hpp"
#include "cet/datagen/split.hpp"
#include "cet/errors.hpp"
#include "cet/numerics/rng.hpp"
#include "cet/pretrain/trainer.hpp"

namespace cet::harness {

namespace {

bool is_ssl(model::ModelKind kind) {
  return kind == model::ModelKind::cet || kind == model::ModelKind::ae ||
         kind == model::ModelKind::mlm || kind == model::ModelKind::simclr;
}

std::string fraction_label(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

// Notes land in single-line CSV fields.
std::string one_line(const std::string& text) {
  std::string out = text;
  for (char& c : out)
    if (c == '\n' || c == '\r') c = ' ';
  return out;
}

std::span<const data::SampleRef> capped(std::span<const data::SampleRef> xs,
                                        std::size_t cap) {
  return (cap > 0 && xs.size() > cap) ? xs.subspan(0, cap) : xs;
}

// Protocol isolation: no test ref may sit in any training set of the run.
void assert_isolated(std::span<const data::SampleRef> test,
                     std::span<const data::SampleRef> train,
                     const char* what) {
  auto key = [](const data::SampleRef& r) {
    return std::pair<std::size_t, std::size_t>(r.day, r.start);
  };
  std::vector<std::pair<std::size_t, std::size_t>> a, b;
  a.reserve(test.size());
  b.reserve(train.size());
  for (const auto& r : test) a.push_back(key(r));
  for (const auto& r : train) b.push_back(key(r));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::pair<std::size_t, std::size_t>> shared;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(shared));
  if (!shared.empty())
    throw ContractError(std::string("protocol isolation violated: ") + what);
}

// One pre-training per self-supervised kind; a failure is recorded, not
// fatal, so the rest of the grid still runs.
struct Pretrained {
  std::optional<model::ParamStore> params;
  std::string note;
};

Pretrained pretrain_ssl(const data::DataSet& ds, const ExperimentConfig& cfg,
                        model::ModelKind kind) {
  Pretrained out;
  try {
    if (kind == model::ModelKind::cet)
      out.params = pretrain_cet(ds, make_pretrain_config(cfg)).params;
    else
      out.params = baselines::pretrain_baseline(ds, make_baseline_spec(cfg, kind)).params;
  } catch (const std::exception& e) {
    out.note = one_line(std::string("pretrain failed: ") + e.what());
  }
  return out;
}

Cell skipped_cell(const std::string& condition, const std::string& model,
                  std::string note) {
  Cell cell;
  cell.condition = condition;
  cell.model = model;
  cell.ok = false;
  cell.note = std::move(note);
  return cell;
}

void freeze_all_but_head(model::ParamStore& params) {
  for (const char* prefix :
       {"enc.", "ar.", "ae.", "wk.", "pdec.", "mlm.", "sim."})
    params.freeze_prefix(prefix);
}

void zero_head(model::ParamStore& params) {
  for (const char* name : {"head.w", "head.b"})
    for (double& x : params.mutable_values(name)) x = 0.0;
}

ExperimentReport report_shell(const std::string& protocol,
                              const ExperimentConfig& cfg,
                              std::vector<std::string> conditions) {
  ExperimentReport rep;
  rep.protocol = protocol;
  for (model::ModelKind kind : cfg.models)
    rep.models.emplace_back(model::kind_name(kind));
  rep.conditions = std::move(conditions);
  rep.seeds = cfg.seeds;
  return rep;
}

}  // namespace

data::DataSet load_dataset(const ExperimentConfig& cfg) {
  if (cfg.bars_csv.empty()) return data::generate(cfg.synth);
  return data::ingest_csv(cfg.bars_csv, cfg.earnings_csv);
}

ExperimentReport run_fraction_sweep(const data::DataSet& ds,
                                    const ExperimentConfig& cfg) {
  std::vector<std::string> conditions;
  for (double f : cfg.fractions) conditions.push_back(fraction_label(f));
  ExperimentReport rep = report_shell("fractions", cfg, std::move(conditions));

  std::vector<Pretrained> pretrained;
  for (model::ModelKind kind : cfg.models)
    pretrained.push_back(is_ssl(kind) ? pretrain_ssl(ds, cfg, kind)
                                      : Pretrained{});

  for (std::size_t ci = 0; ci < cfg.fractions.size(); ++ci) {
    data::SplitSpec ss;
    ss.protocol = data::Protocol::fraction_sweep;
    ss.omega = cfg.model.omega;
    ss.fraction = cfg.fractions[ci];
    ss.test_fraction = cfg.test_fraction;
    ss.seed = cfg.master_seed;
    const data::Split split = data::split_dataset(ds, ss);
    assert_isolated(split.test, split.finetune, "fraction test vs finetune");
    const auto test = capped(split.test, cfg.eval_cap);

    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
      const model::ModelKind kind = cfg.models[mi];
      const std::string& name = rep.models[mi];
      if (is_ssl(kind) && !pretrained[mi].params) {
        rep.cells.push_back(
            skipped_cell(rep.conditions[ci], name, pretrained[mi].note));
        continue;
      }
      Cell cell;
      cell.condition = rep.conditions[ci];
      cell.model = name;
      try {
        if (is_ssl(kind)) {
          for (std::uint64_t seed : cfg.seeds) {
            const auto res = baselines::finetune_baseline(
                ds, *pretrained[mi].params, split.finetune, test,
                cfg.finetune_mode, make_supervised_config(cfg, seed));
            cell.per_seed.push_back(res.test.accuracy);
          }
        } else {
          const auto sup = make_supervised_config(cfg, 0);
          const auto res = baselines::train_supervised(
              ds, make_baseline_spec(cfg, kind), split.finetune, test, sup,
              cfg.seeds);
          cell.per_seed = res.per_seed;
        }
        finalize_cell(cell);
      } catch (const std::exception& e) {
        cell = skipped_cell(rep.conditions[ci], name, one_line(e.what()));
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  return rep;
}

ExperimentReport run_sector_split(const data::DataSet& ds,
                                  const ExperimentConfig& cfg) {
  if (ds.sectors.empty()) throw DataError("sector protocol: no sector tags");
  ExperimentReport rep = report_shell("sectors", cfg, ds.sectors);

  // The pooled 60% is the union of every sector's fine-tune slice, so it is
  // the same set whichever sector the split call names.
  data::SplitSpec pooled_spec;
  pooled_spec.protocol = data::Protocol::sector_split;
  pooled_spec.omega = cfg.model.omega;
  pooled_spec.sector = 0;
  pooled_spec.seed = cfg.master_seed;
  const std::vector<data::SampleRef> pooled =
      data::split_dataset(ds, pooled_spec).finetune;

  std::vector<Pretrained> pretrained;
  for (model::ModelKind kind : cfg.models)
    pretrained.push_back(is_ssl(kind) ? pretrain_ssl(ds, cfg, kind)
                                      : Pretrained{});

  // Stage 1, shared across sectors: unfrozen fine-tune on the pooled 60%,
  // one pass per (model, seed). Kept as checkpoint bytes; stage 2 reloads.
  std::vector<std::vector<std::vector<std::uint8_t>>> stage1(
      cfg.models.size());
  std::vector<std::string> stage1_note(cfg.models.size());
  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const model::ModelKind kind = cfg.models[mi];
    if (!is_ssl(kind)) continue;
    if (!pretrained[mi].params) {
      stage1_note[mi] = pretrained[mi].note;
      continue;
    }
    try {
      for (std::uint64_t seed : cfg.seeds) {
        const auto res = baselines::finetune_baseline(
            ds, *pretrained[mi].params, pooled, {},
            pretrain::FinetuneMode::unfrozen, make_supervised_config(cfg, seed));
        stage1[mi].push_back(model::serialize_params(res.params));
      }
    } catch (const std::exception& e) {
      stage1[mi].clear();
      stage1_note[mi] = one_line(std::string("pooled fine-tune failed: ") + e.what());
    }
  }

  for (std::size_t ci = 0; ci < ds.sectors.size(); ++ci) {
    data::SplitSpec ss = pooled_spec;
    ss.sector = static_cast<int>(ci);
    const data::Split split = data::split_dataset(ds, ss);
    const std::string& cond = rep.conditions[ci];

    if (split.head_train.empty() || split.test.empty()) {
      for (const std::string& name : rep.models)
        rep.cells.push_back(skipped_cell(cond, name, "skipped: empty sector"));
      continue;
    }
    assert_isolated(split.test, pooled, "sector test vs pooled fine-tune");
    assert_isolated(split.test, split.head_train, "sector test vs head train");
    const auto test = capped(split.test, cfg.eval_cap);

    // Supervised kinds see the pooled data plus the sector slice.
    std::vector<data::SampleRef> sup_train = pooled;
    sup_train.insert(sup_train.end(), split.head_train.begin(),
                     split.head_train.end());

    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
      const model::ModelKind kind = cfg.models[mi];
      const std::string& name = rep.models[mi];
      if (is_ssl(kind) && stage1[mi].empty()) {
        rep.cells.push_back(skipped_cell(cond, name, stage1_note[mi]));
        continue;
      }
      Cell cell;
      cell.condition = cond;
      cell.model = name;
      try {
        if (is_ssl(kind)) {
          for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            model::ParamStore params =
                model::deserialize_params(stage1[mi][si]);
            zero_head(params);
            freeze_all_but_head(params);
            auto sup = make_supervised_config(
                cfg, num::derive_seed(cfg.seeds[si],
                                      static_cast<std::uint64_t>(ci) + 1));
            sup.wiring = pretrain::HeadWiring::fused;
            pretrain::train_movement(ds, params, split.head_train, sup);
            cell.per_seed.push_back(
                pretrain::evaluate_movement(ds, params, test, sup).accuracy);
          }
        } else {
          const auto sup = make_supervised_config(cfg, 0);
          const auto res = baselines::train_supervised(
              ds, make_baseline_spec(cfg, kind), sup_train, test, sup, cfg.seeds);
          cell.per_seed = res.per_seed;
        }
        finalize_cell(cell);
      } catch (const std::exception& e) {
        cell = skipped_cell(cond, name, one_line(e.what()));
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  return rep;
}

ExperimentReport run_day_decay(const data::DataSet& ds,
                               const ExperimentConfig& cfg) {
  const int first_day = 2;
  const int last_day = 5;
  std::vector<std::string> conditions;
  for (int d = first_day; d <= last_day; ++d)
    conditions.push_back("day" + std::to_string(d));
  ExperimentReport rep = report_shell("days", cfg, std::move(conditions));
  const std::size_t n_days = rep.conditions.size();

  std::vector<data::Split> splits;
  for (int d = first_day; d <= last_day; ++d) {
    data::SplitSpec ss;
    ss.protocol = data::Protocol::day_decay;
    ss.omega = cfg.model.omega;
    ss.day_offset = d;
    ss.seed = cfg.master_seed;
    splits.push_back(data::split_dataset(ds, ss));
  }
  for (std::size_t i = 0; i < n_days; ++i)
    for (std::size_t j = 0; j < n_days; ++j)
      assert_isolated(splits[i].test, splits[j].finetune,
                      "day test vs day fine-tune");

  // cells in condition-major order, assembled at the end
  std::vector<Cell> grid(n_days * cfg.models.size());
  std::vector<Pretrained> pretrained;
  for (model::ModelKind kind : cfg.models)
    pretrained.push_back(is_ssl(kind) ? pretrain_ssl(ds, cfg, kind)
                                      : Pretrained{});

  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const model::ModelKind kind = cfg.models[mi];
    const std::string& name = rep.models[mi];
    for (std::size_t di = 0; di < n_days; ++di) {
      Cell& cell = grid[di * cfg.models.size() + mi];
      cell.condition = rep.conditions[di];
      cell.model = name;
    }

    auto fail_column = [&](const std::string& note) {
      for (std::size_t di = 0; di < n_days; ++di) {
        Cell& cell = grid[di * cfg.models.size() + mi];
        cell.ok = false;
        cell.note = note;
        cell.per_seed.clear();
      }
    };

    bool missing_day = false;
    for (std::size_t di = 0; di < n_days; ++di)
      if (splits[di].finetune.empty() || splits[di].test.empty())
        missing_day = true;
    if (missing_day) {
      fail_column("skipped: missing day");
      continue;
    }

    if (is_ssl(kind)) {
      if (!pretrained[mi].params) {
        fail_column(pretrained[mi].note);
        continue;
      }
      try {
        for (std::uint64_t seed : cfg.seeds) {
          // Continuous fine-tuning: weights carry across days, each day
          // trains on that day's 60% only.
          model::ParamStore params =
              model::clone_params(*pretrained[mi].params);
          baselines::freeze_for_finetune(params, kind, cfg.day_mode);
          for (std::size_t di = 0; di < n_days; ++di) {
            auto sup = make_supervised_config(
                cfg, num::derive_seed(seed, static_cast<std::uint64_t>(di)));
            sup.wiring = pretrain::HeadWiring::fused;
            pretrain::train_movement(ds, params, splits[di].finetune, sup);
            const auto test = capped(splits[di].test, cfg.eval_cap);
            grid[di * cfg.models.size() + mi].per_seed.push_back(
                pretrain::evaluate_movement(ds, params, test, sup).accuracy);
          }
        }
        for (std::size_t di = 0; di < n_days; ++di)
          finalize_cell(grid[di * cfg.models.size() + mi]);
      } catch (const std::exception& e) {
        fail_column(one_line(e.what()));
      }
    } else {
      for (std::size_t di = 0; di < n_days; ++di) {
        Cell& cell = grid[di * cfg.models.size() + mi];
        try {
          const auto sup = make_supervised_config(cfg, 0);
          const auto test = capped(splits[di].test, cfg.eval_cap);
          const auto res = baselines::train_supervised(
              ds, make_baseline_spec(cfg, kind), splits[di].finetune, test, sup,
              cfg.seeds);
          cell.per_seed = res.per_seed;
          finalize_cell(cell);
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.note = one_line(e.what());
          cell.per_seed.clear();
        }
      }
    }
  }
  rep.cells = std::move(grid);
  return rep;
}

ExperimentReport run_ablation(const data::DataSet& ds,
                              const ExperimentConfig& cfg) {
  std::vector<std::string> conditions;
  for (std::size_t k = 1; k <= cfg.k_max; ++k)
    conditions.push_back("k=" + std::to_string(k));
  ExperimentReport rep;
  rep.protocol = "ablation";
  rep.models = {"cet"};
  rep.conditions = std::move(conditions);
  rep.seeds = {cfg.seeds.front()};

  data::SplitSpec ss;
  ss.protocol = data::Protocol::fraction_sweep;
  ss.omega = cfg.model.omega;
  ss.fraction = 0.5;
  ss.test_fraction = cfg.test_fraction;
  ss.seed = cfg.master_seed;
  const data::Split split = data::split_dataset(ds, ss);
  assert_isolated(split.test, split.finetune, "ablation test vs finetune");
  const auto test = capped(split.test, cfg.eval_cap);

  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    Cell cell;
    cell.condition = rep.conditions[k - 1];
    cell.model = "cet";
    AblationRow row;
    row.k = k;
    try {
      pretrain::PretrainConfig pc = make_pretrain_config(cfg);
      pc.model.k_steps = k;
      const auto pre = pretrain_cet(ds, pc);
      row.loss = pre.equilibrium_loss();
      row.cos_sim = pre.equilibrium_cos();
      auto sup = make_supervised_config(cfg, cfg.seeds.front());
      sup.model.k_steps = k;
      const auto ft = baselines::finetune_baseline(
          ds, pre.params, split.finetune, test, cfg.finetune_mode, sup);
      row.accuracy = ft.test.accuracy;
      cell.per_seed.push_back(ft.test.accuracy);
      finalize_cell(cell);
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.note = one_line(e.what());
    }
    rep.ablation.push_back(row);
    rep.cells.push_back(std::move(cell));
  }
  return rep;
}

ExperimentReport run_protocol(const data::DataSet& ds,
                              const ExperimentConfig& cfg) {
  if (cfg.protocol == "fractions") return run_fraction_sweep(ds, cfg);
  if (cfg.protocol == "sectors") return run_sector_split(ds, cfg);
  if (cfg.protocol == "days") return run_day_decay(ds, cfg);
  if (cfg.protocol == "ablation") return run_ablation(ds, cfg);
  throw ConfigError("unknown protocol '" + cfg.protocol +
                    "' (fractions | sectors | days | ablation)");
}

}  // namespace cet::harness

// Experiment driver: data generation, pre-training, fine-tuning, the four
// protocols, and report regeneration.
//
// Exit codes: 0 success, 1 usage or internal error, 2 bad data or config,
// 3 numeric divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cet/baselines/baselines.hpp"
#include "cet/datagen/generator.hpp"
#include "cet/datagen/split.hpp"
#include "cet/errors.hpp"
#include "cet/harness/config.hpp"
#include "cet/harness/protocols.hpp"
#include "cet/harness/report.hpp"
#include "cet/model/param_store.hpp"
#include "cet/pretrain/trainer.hpp"

namespace {

using namespace cet;

harness::ExperimentConfig load_experiment(const std::string& config_path) {
  if (config_path.empty()) {
    harness::ConfigMap empty = harness::ConfigMap::parse_text("");
    return harness::experiment_from(empty);
  }
  harness::ConfigMap cm = harness::ConfigMap::parse_file(config_path);
  harness::ExperimentConfig cfg = harness::experiment_from(cm);
  cm.check_consumed();
  return cfg;
}

data::DataSet ingest_dir(const std::string& dir) {
  std::vector<std::string> warnings;
  data::DataSet ds =
      data::ingest_csv(dir + "/bars.csv", dir + "/earnings.csv", &warnings);
  for (const std::string& w : warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  return ds;
}

// One row per (epoch, k) for CPC; pretexts without a horizon log k = 0.
void write_training_log(const std::string& path,
                        const pretrain::PretrainResult& res) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "epoch,k,loss,cosine_sim,wall_ms\n";
  char line[160];
  for (const auto& rec : res.history) {
    if (rec.per_k.empty()) {
      std::snprintf(line, sizeof line, "%zu,0,%.17g,%.17g,%.17g\n", rec.epoch,
                    rec.train_loss, rec.cos_sim, rec.wall_ms);
      out << line;
    } else {
      for (std::size_t k = 0; k < rec.per_k.size(); ++k) {
        std::snprintf(line, sizeof line, "%zu,%zu,%.17g,%.17g,%.17g\n",
                      rec.epoch, k + 1, rec.per_k[k], rec.cos_sim,
                      rec.wall_ms);
        out << line;
      }
    }
  }
  if (!out) throw DataError("cannot write training log " + path);
}

int cmd_datagen(const std::string& config_path, const std::string& out_dir) {
  harness::ConfigMap cm = config_path.empty()
                              ? harness::ConfigMap::parse_text("")
                              : harness::ConfigMap::parse_file(config_path);
  data::SyntheticConfig synth = harness::synthetic_from(cm);
  cm.check_consumed();
  synth.validate();
  data::DataSet ds = data::generate(synth);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create directory " + out_dir);
  data::write_bars_csv(out_dir + "/bars.csv", ds);
  data::write_earnings_csv(out_dir + "/earnings.csv", ds);
  std::printf("wrote %zu trading days, %zu companies, %d quarters to %s\n",
              ds.day_count(), ds.companies.size(), ds.n_quarters(),
              out_dir.c_str());
  return 0;
}

int cmd_pretrain(const std::string& data_dir, const std::string& model_name,
                 const std::string& config_path, const std::string& out_path) {
  const model::ModelKind kind = model::kind_from_name(model_name);
  harness::ExperimentConfig cfg = load_experiment(config_path);
  data::DataSet ds = ingest_dir(data_dir);

  pretrain::PretrainResult res;
  if (kind == model::ModelKind::cet)
    res = pretrain::pretrain_cet(ds, harness::make_pretrain_config(cfg));
  else
    res = baselines::pretrain_baseline(ds,
                                       harness::make_baseline_spec(cfg, kind));

  model::save_checkpoint(res.params, out_path);
  write_training_log(out_path + ".log.csv", res);
  std::printf(
      "%s: best epoch %zu, val loss %.6f (reference %.6f), checkpoint %s\n",
      model_name.c_str(), res.best_epoch, res.best_val, res.reference_loss,
      out_path.c_str());
  return 0;
}

int cmd_finetune(const std::string& ckpt_path, const std::string& data_dir,
                 double fraction, const std::string& mode_name,
                 const std::string& config_path, const std::string& out_path) {
  harness::ExperimentConfig cfg = load_experiment(config_path);
  const pretrain::FinetuneMode mode = mode_name == "frozen"
                                          ? pretrain::FinetuneMode::frozen
                                          : pretrain::FinetuneMode::unfrozen;
  model::ParamStore pretrained = model::load_checkpoint(ckpt_path);
  data::DataSet ds = ingest_dir(data_dir);

  data::SplitSpec ss;
  ss.protocol = data::Protocol::fraction_sweep;
  ss.omega = cfg.model.omega;
  ss.fraction = fraction;
  ss.test_fraction = cfg.test_fraction;
  ss.seed = cfg.master_seed;
  const data::Split split = data::split_dataset(ds, ss);
  std::span<const data::SampleRef> test = split.test;
  if (cfg.eval_cap > 0 && test.size() > cfg.eval_cap)
    test = test.subspan(0, cfg.eval_cap);

  const auto res = baselines::finetune_baseline(
      ds, pretrained, split.finetune, test, mode,
      harness::make_supervised_config(cfg, cfg.seeds.front()));

  std::printf("fraction %g %s: accuracy %.2f%% over %zu samples\n", fraction,
              mode_name.c_str(), res.test.accuracy, res.test.n);
  std::printf("confusion (rows = truth down/hold/up):\n");
  for (std::size_t r = 0; r < 3; ++r)
    std::printf("  %6zu %6zu %6zu\n", res.test.confusion[r * 3],
                res.test.confusion[r * 3 + 1], res.test.confusion[r * 3 + 2]);
  if (!out_path.empty()) {
    model::save_checkpoint(res.params, out_path);
    std::printf("fine-tuned checkpoint: %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_run(const std::string& protocol, const std::string& config_path,
            const std::string& out_dir) {
  harness::ExperimentConfig cfg = load_experiment(config_path);
  cfg.protocol = protocol;
  data::DataSet ds = harness::load_dataset(cfg);
  const harness::ExperimentReport rep = harness::run_protocol(ds, cfg);
  const harness::ExperimentReport reports[] = {rep};
  harness::write_reports(reports, out_dir);
  std::printf("%s", harness::report_summary(rep).c_str());
  std::printf("report files in %s\n", out_dir.c_str());
  return 0;
}

int cmd_report(const std::string& in_dir) {
  const std::vector<harness::ExperimentReport> reports =
      harness::read_reports(in_dir);
  harness::write_reports(reports, in_dir);  // refresh derived files
  for (const auto& rep : reports)
    std::printf("%s\n", harness::report_summary(rep).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrastive earnings transformer pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_dir, model_name, mode_name,
      protocol, in_dir;
  std::string fraction_str = "0.5";

  CLI::App* datagen = app.add_subcommand("datagen", "generate synthetic CSVs");
  datagen->add_option("--config", config_path, "generator key = value file");
  datagen->add_option("--out", out_path, "output directory")->required();

  CLI::App* pre = app.add_subcommand("pretrain", "self-supervised pretext");
  pre->add_option("--data", data_dir, "directory with bars.csv/earnings.csv")
      ->required();
  pre->add_option("--model", model_name, "cet|ae|mlm|simclr")
      ->required()
      ->check(CLI::IsMember({"cet", "ae", "mlm", "simclr"}));
  pre->add_option("--config", config_path, "budget key = value file");
  pre->add_option("--out", out_path, "checkpoint path")->required();

  CLI::App* fine = app.add_subcommand("finetune", "movement fine-tune");
  fine->add_option("--ckpt", in_dir, "pretrained checkpoint")->required();
  fine->add_option("--data", data_dir, "directory with bars.csv/earnings.csv")
      ->required();
  fine->add_option("--fraction", fraction_str, "labeled fraction")
      ->check(CLI::IsMember({"0.2", "0.5", "0.8"}));
  fine->add_option("--mode", mode_name, "frozen|unfrozen")
      ->required()
      ->check(CLI::IsMember({"frozen", "unfrozen"}));
  fine->add_option("--config", config_path, "budget key = value file");
  fine->add_option("--out", out_path, "save fine-tuned checkpoint here");

  CLI::App* run = app.add_subcommand("run", "full experiment protocol");
  run->add_option("--protocol", protocol, "fractions|sectors|days|ablation")
      ->required()
      ->check(CLI::IsMember({"fractions", "sectors", "days", "ablation"}));
  run->add_option("--config", config_path, "experiment key = value file");
  run->add_option("--out", out_path, "report directory")->required();

  CLI::App* report = app.add_subcommand("report", "reprint stored reports");
  report->add_option("--in", in_dir, "report directory")->required();

  try {
    app.parse(argc, argv);
    if (datagen->parsed()) return cmd_datagen(config_path, out_path);
    if (pre->parsed())
      return cmd_pretrain(data_dir, model_name, config_path, out_path);
    if (fine->parsed())
      return cmd_finetune(in_dir, data_dir, std::stod(fraction_str),
                          mode_name, config_path, out_path);
    if (run->parsed()) return cmd_run(protocol, config_path, out_path);
    if (report->parsed()) return cmd_report(in_dir);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const cet::NumericError& e) {
    std::fprintf(stderr, "numeric divergence: %s\n", e.what());
    return 3;
  } catch (const cet::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const cet::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const cet::ShapeError& e) {
    std::fprintf(stderr, "shape error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

// Command-line front end: gen | train | decode | eval | profile | report.
// Configuration comes from an optional key=value file, then convenience
// flags, then raw --set overrides; the resolved echo and its hash are printed
// and stamped into every artifact.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "masklab/config.hpp"
#include "masklab/error.hpp"
#include "masklab/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string task, preset, scheme, policy;
  std::string data_dir, out_dir;
  double alpha = -1.0, tau = -1.0;
  long long k_start = -1, k_end = -1, iters = -1, batch = -1;
  long long eval_cadence = -1, checkpoint_cadence = -1;
  long long seed_data = -1, seed_model = -1, seed_train = -1, seed_decode = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file");
  cmd->add_option("--set", f.overrides, "raw key=value override (repeatable)");
  cmd->add_option("--task", f.task, "addition|maze|listops|countdown|sudoku");
  cmd->add_option("--preset", f.preset, "desk|paper (default desk)");
  cmd->add_option("--scheme", f.scheme, "random|papl|puma");
  cmd->add_option("--alpha", f.alpha, "papl.alpha");
  cmd->add_option("--tau", f.tau, "papl.tau");
  cmd->add_option("--k-start", f.k_start, "puma.k_start");
  cmd->add_option("--k-end", f.k_end, "puma.k_end");
  cmd->add_option("--iters", f.iters, "train.iters");
  cmd->add_option("--batch", f.batch, "train.batch");
  cmd->add_option("--eval-cadence", f.eval_cadence, "train.eval_cadence");
  cmd->add_option("--checkpoint-cadence", f.checkpoint_cadence, "train.checkpoint_cadence");
  cmd->add_option("--seed-data", f.seed_data, "seed.data");
  cmd->add_option("--seed-model", f.seed_model, "seed.model");
  cmd->add_option("--seed-train", f.seed_train, "seed.train");
  cmd->add_option("--seed-decode", f.seed_decode, "seed.decode");
  cmd->add_option("--data-dir", f.data_dir, "dataset directory");
  cmd->add_option("--out-dir", f.out_dir, "run output directory");
  cmd->add_option("--decode", f.policy,
                  "decode policy: confidence|random|oracle|scaffold:<frac>|<task policy>");
}

masklab::ExperimentConfig resolve(const CommonFlags& f) {
  masklab::KvConfig kv;
  if (!f.config_file.empty()) kv = masklab::KvConfig::from_file(f.config_file);
  const auto set_if = [&kv](const char* key, const std::string& v) {
    if (!v.empty()) kv.set(key, v);
  };
  set_if("task", f.task);
  set_if("preset", f.preset);
  set_if("scheme", f.scheme);
  set_if("decode.policy", f.policy);
  set_if("data.dir", f.data_dir);
  set_if("out.dir", f.out_dir);
  const auto set_num = [&kv](const char* key, double v) {
    if (v >= 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", v);
      kv.set(key, buf);
    }
  };
  set_num("papl.alpha", f.alpha);
  set_num("papl.tau", f.tau);
  const auto set_int = [&kv](const char* key, long long v) {
    if (v >= 0) kv.set(key, std::to_string(v));
  };
  set_int("puma.k_start", f.k_start);
  set_int("puma.k_end", f.k_end);
  set_int("train.iters", f.iters);
  set_int("train.batch", f.batch);
  set_int("train.eval_cadence", f.eval_cadence);
  set_int("train.checkpoint_cadence", f.checkpoint_cadence);
  set_int("seed.data", f.seed_data);
  set_int("seed.model", f.seed_model);
  set_int("seed.train", f.seed_train);
  set_int("seed.decode", f.seed_decode);
  for (const std::string& o : f.overrides) kv.apply_override(o);

  masklab::ExperimentConfig cfg = masklab::resolve_config(std::move(kv));
  std::cout << "# resolved config (hash " << cfg.hash << ")\n" << cfg.echo;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masked-diffusion reasoning laboratory"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string resume, checkpoint, dataset, trajectories, out;
  std::string policies = "confidence,random,oracle";

  CLI::App* gen = app.add_subcommand("gen", "generate datasets for a task");
  add_common(gen, f);

  CLI::App* train = app.add_subcommand("train", "train one scheme");
  add_common(train, f);
  train->add_option("--resume", resume, "checkpoint to continue from");

  CLI::App* decode = app.add_subcommand("decode", "decode a dataset with a checkpointed model");
  add_common(decode, f);
  decode->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  decode->add_option("--dataset", dataset, "dataset JSONL")->required();
  decode->add_option("--out", out, "trajectory JSONL to write")->required();

  CLI::App* eval = app.add_subcommand("eval", "stratified accuracy report from trajectories");
  add_common(eval, f);
  eval->add_option("--trajectories", trajectories, "trajectory JSONL")->required();
  eval->add_option("--dataset", dataset, "dataset JSONL")->required();
  eval->add_option("--out", out, "report CSV to write")->required();

  CLI::App* profile = app.add_subcommand("profile", "wrong-commit failure profile");
  add_common(profile, f);
  profile->add_option("--trajectories", trajectories, "trajectory JSONL")->required();
  profile->add_option("--dataset", dataset, "dataset JSONL")->required();
  profile->add_option("--out", out, "profile CSV to write")->required();

  CLI::App* report = app.add_subcommand("report", "decode + eval across policies");
  add_common(report, f);
  report->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  report->add_option("--dataset", dataset, "dataset JSONL")->required();
  report->add_option("--policies", policies, "comma-separated policy list");
  report->add_option("--out", out, "report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      masklab::cmd_gen(resolve(f));
    } else if (train->parsed()) {
      masklab::cmd_train(resolve(f), resume);
    } else if (decode->parsed()) {
      const masklab::ExperimentConfig cfg = resolve(f);
      const std::string policy = cfg.policy;
      masklab::cmd_decode(cfg, checkpoint, dataset, policy, out);
    } else if (eval->parsed()) {
      masklab::cmd_eval(resolve(f), trajectories, dataset, out);
    } else if (profile->parsed()) {
      masklab::cmd_profile(resolve(f), trajectories, dataset, out);
    } else if (report->parsed()) {
      std::vector<std::string> list;
      std::string cur;
      for (char c : policies + ",") {
        if (c == ',') {
          if (!cur.empty()) list.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      masklab::cmd_report(resolve(f), checkpoint, dataset, list, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

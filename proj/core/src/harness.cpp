#include "masklab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "masklab/addition.hpp"
#include "masklab/checkpoint.hpp"
#include "masklab/countdown.hpp"
#include "masklab/dataset.hpp"
#include "masklab/error.hpp"
#include "masklab/listops.hpp"
#include "masklab/maze.hpp"
#include "masklab/rng.hpp"
#include "masklab/sudoku.hpp"
#include "masklab/trainer.hpp"

namespace masklab {

namespace fs = std::filesystem;

namespace {

// Seed stream tags keep train/test/stratum corpora independent of each other
// and of generation order.
constexpr std::uint64_t kTrainStream = 0x10000000000ull;
constexpr std::uint64_t kTestStream = 0x20000000000ull;
constexpr std::uint64_t kStratumStream = 0x30000000000ull;
constexpr std::uint64_t kBankStream = 0x40000000000ull;

std::vector<ReasoningInstance> gen_addition_set(const ExperimentConfig& cfg, const Vocabulary& v,
                                                std::uint64_t stream, long count, int min_chain) {
  std::vector<ReasoningInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(cfg.seed_data, stream + static_cast<std::uint64_t>(i));
    out.push_back(min_chain > 0 ? gen_addition_stratum(cfg.addition_digits, min_chain, s, v)
                                : gen_addition(cfg.addition_digits, s, v));
  }
  return out;
}

std::vector<ReasoningInstance> gen_maze_set(const ExperimentConfig& cfg, const Vocabulary& v,
                                            std::uint64_t stream, long count) {
  std::vector<ReasoningInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(cfg.seed_data, stream + static_cast<std::uint64_t>(i));
    out.push_back(maze_instance(gen_maze(cfg.maze_rows, cfg.maze_cols, s), s, v));
  }
  return out;
}

std::vector<ReasoningInstance> gen_listops_train(const ExperimentConfig& cfg,
                                                 const Vocabulary& v) {
  // Depths 1..5 with frequency proportional to 0.5^depth, so each extra level
  // of nesting is half as common as the previous one.
  double norm = 0.0;
  for (int d = 1; d <= 5; ++d) norm += std::pow(0.5, d);
  std::vector<ReasoningInstance> out;
  out.reserve(static_cast<std::size_t>(cfg.gen_train));
  const ListopsGenLimits limits;
  for (long i = 0; i < cfg.gen_train; ++i) {
    const std::uint64_t s = derive_seed(cfg.seed_data, kTrainStream + static_cast<std::uint64_t>(i));
    Rng rng(s);
    const double u = rng.real() * norm;
    int depth = 1;
    double acc = 0.0;
    for (int d = 1; d <= 5; ++d) {
      acc += std::pow(0.5, d);
      if (u < acc) {
        depth = d;
        break;
      }
      depth = d;
    }
    const ListopsTree tree = gen_listops_tree(depth, limits, rng.bits());
    out.push_back(listops_instance(tree, s, v, cfg.prompt_len(), cfg.answer_len(), 4));
  }
  return out;
}

std::vector<ReasoningInstance> gen_listops_test(const ExperimentConfig& cfg, const Vocabulary& v) {
  const int depth_max = cfg.listops_test_depth_max;
  const long per_depth = cfg.gen_test / depth_max;
  check(per_depth > 0, "listops test size below one instance per depth");
  std::vector<ReasoningInstance> out;
  const ListopsGenLimits limits;
  for (int d = 1; d <= depth_max; ++d) {
    for (long i = 0; i < per_depth; ++i) {
      const std::uint64_t s = derive_seed(
          cfg.seed_data,
          kTestStream + static_cast<std::uint64_t>(d) * 0x1000000ull + static_cast<std::uint64_t>(i));
      const ListopsTree tree = gen_listops_tree(d, limits, s);
      out.push_back(listops_instance(tree, s, v, cfg.prompt_len(), cfg.answer_len(), 4));
    }
  }
  return out;
}

std::vector<ReasoningInstance> gen_countdown_set(const ExperimentConfig& cfg, const Vocabulary& v,
                                                 std::uint64_t stream, long count,
                                                 bool subsample) {
  CountdownGenConfig gcfg;
  std::vector<ReasoningInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  std::uint64_t k = 0;
  while (static_cast<long>(out.size()) < count) {
    const std::uint64_t s = derive_seed(cfg.seed_data, stream + k);
    ++k;
    const CountdownChain chain = gen_countdown_chain(gcfg, s);
    if (subsample) {
      const int m = countdown_multiplicity(chain.inputs, chain.target);
      // Rare-hard sub-sampling: keep 10% of chains whose target admits at
      // most three distinct solutions.
      if (m <= 3 && Rng(derive_seed(s, 1)).real() >= 0.1) continue;
    }
    out.push_back(countdown_instance(chain, s, v, gcfg));
  }
  return out;
}

struct SudokuCandidate {
  sudoku::Grid puzzle{};
  sudoku::Grid solution{};
  int rating = 0;
  std::uint64_t seed = 0;
};

SudokuCandidate self_gen_sudoku(const ExperimentConfig& cfg, std::uint64_t stream,
                                std::uint64_t k) {
  SudokuCandidate c;
  c.seed = derive_seed(cfg.seed_data, stream + k);
  c.solution = sudoku::gen_full(c.seed);
  c.puzzle = sudoku::gen_puzzle(c.solution, derive_seed(c.seed, 1));
  c.rating = sudoku::rate(c.puzzle);
  return c;
}

void gen_sudoku_self(const ExperimentConfig& cfg, const Vocabulary& v,
                     std::vector<ReasoningInstance>& train, std::vector<ReasoningInstance>& test) {
  check(cfg.sudoku_test_mode == "natural",
        "tiered sudoku test sets need an external puzzle bank (gen.sudoku_csv)");

  // Tier-decayed training mix: a candidate in tier t survives with probability
  // 0.01^t. The generator rarely reaches the top tiers, so the one-per-tier
  // floor applies to tiers seen within a bounded extra scan.
  std::array<long, 6> tier_count{};
  std::uint64_t k = 0;
  const std::uint64_t cap = static_cast<std::uint64_t>(cfg.gen_train) * 200ull + 1000ull;
  while (static_cast<long>(train.size()) < cfg.gen_train) {
    check(k < cap, "sudoku training generation exceeded its candidate budget");
    const SudokuCandidate c = self_gen_sudoku(cfg, kTrainStream, k);
    ++k;
    const int tier = sudoku::tier_of(c.rating);
    if (tier > 0 && Rng(derive_seed(c.seed, 2)).real() >= std::pow(0.01, tier)) continue;
    ++tier_count[static_cast<std::size_t>(tier)];
    train.push_back(sudoku::make_instance(c.puzzle, c.solution, c.rating, c.seed, v));
  }
  const std::uint64_t floor_scan = 2000;
  for (std::uint64_t extra = 0; extra < floor_scan; ++extra) {
    if (std::all_of(tier_count.begin(), tier_count.end(), [](long n) { return n > 0; })) break;
    const SudokuCandidate c = self_gen_sudoku(cfg, kTrainStream, k + extra);
    const int tier = sudoku::tier_of(c.rating);
    if (tier_count[static_cast<std::size_t>(tier)] > 0) continue;
    ++tier_count[static_cast<std::size_t>(tier)];
    train.push_back(sudoku::make_instance(c.puzzle, c.solution, c.rating, c.seed, v));
  }

  for (long i = 0; i < cfg.gen_test; ++i) {
    const SudokuCandidate c = self_gen_sudoku(cfg, kTestStream, static_cast<std::uint64_t>(i));
    test.push_back(sudoku::make_instance(c.puzzle, c.solution, c.rating, c.seed, v));
  }
}

void gen_sudoku_bank(const ExperimentConfig& cfg, const Vocabulary& v,
                     std::vector<ReasoningInstance>& train, std::vector<ReasoningInstance>& test) {
  const std::vector<sudoku::CsvPuzzle> bank = sudoku::load_csv(cfg.sudoku_csv);
  check(!bank.empty(), "sudoku puzzle bank is empty: " + cfg.sudoku_csv);
  std::vector<std::size_t> order(bank.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(cfg.seed_data, 0xBA4Eull));
  shuffle_rng.shuffle(order);

  std::vector<char> used(bank.size(), 0);
  std::array<long, 6> tier_count{};
  const auto instance_of = [&](std::size_t idx) {
    return sudoku::make_instance(bank[idx].puzzle, bank[idx].solution, bank[idx].rating,
                                 derive_seed(cfg.seed_data, kBankStream + idx), v);
  };

  for (std::size_t oi = 0; oi < order.size() && static_cast<long>(train.size()) < cfg.gen_train;
       ++oi) {
    const std::size_t idx = order[oi];
    const int tier = sudoku::tier_of(bank[idx].rating);
    if (tier > 0 &&
        Rng(derive_seed(cfg.seed_data, kBankStream + 0x1000000000ull + idx)).real() >=
            std::pow(0.01, tier))
      continue;
    used[idx] = 1;
    ++tier_count[static_cast<std::size_t>(tier)];
    train.push_back(instance_of(idx));
  }
  check(static_cast<long>(train.size()) == cfg.gen_train,
        "sudoku bank too small for the training quota");
  for (std::size_t oi = 0; oi < order.size(); ++oi) {  // one-per-tier floor
    if (std::all_of(tier_count.begin(), tier_count.end(), [](long n) { return n > 0; })) break;
    const std::size_t idx = order[oi];
    if (used[idx]) continue;
    const int tier = sudoku::tier_of(bank[idx].rating);
    if (tier_count[static_cast<std::size_t>(tier)] > 0) continue;
    used[idx] = 1;
    ++tier_count[static_cast<std::size_t>(tier)];
    train.push_back(instance_of(idx));
  }

  if (cfg.sudoku_test_mode == "natural") {
    for (std::size_t oi = 0; oi < order.size() && static_cast<long>(test.size()) < cfg.gen_test;
         ++oi) {
      if (used[order[oi]]) continue;
      test.push_back(instance_of(order[oi]));
    }
    check(static_cast<long>(test.size()) == cfg.gen_test,
          "sudoku bank too small for the natural test quota");
  } else {
    check(cfg.sudoku_test_mode == "tiered", "unknown sudoku test mode: " + cfg.sudoku_test_mode);
    std::array<long, 6> want{};
    for (std::size_t t = 0; t < 6; ++t) want[t] = cfg.sudoku_test_tiers[t];
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const std::size_t idx = order[oi];
      if (used[idx]) continue;
      const std::size_t tier = static_cast<std::size_t>(sudoku::tier_of(bank[idx].rating));
      if (want[tier] == 0) continue;
      --want[tier];
      test.push_back(instance_of(idx));
    }
    for (std::size_t t = 0; t < 6; ++t)
      check(want[t] == 0, "sudoku bank cannot fill test tier " + std::to_string(t));
  }
}

Vocabulary load_run_vocab(const ExperimentConfig& cfg) {
  const fs::path file = cfg.data_dir / "vocab.txt";
  Vocabulary vocab = Vocabulary::for_task(cfg.task);
  if (fs::exists(file)) {
    check(Vocabulary::load(file) == vocab, "vocab file disagrees with the task vocabulary");
  }
  return vocab;
}

// Rebuilds the model from a checkpoint after verifying it belongs to this
// resolved config.
Transformer<float> model_from_checkpoint(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                                         const fs::path& file) {
  check(ckpt.config_hash == cfg.hash,
        "checkpoint " + file.string() + " was produced by config " + ckpt.config_hash +
            " but this run resolves to " + cfg.hash + "; pass the matching config");
  Transformer<float> model(ckpt.model);
  check(ckpt.params.size() == model.param_count(), "checkpoint parameter blob size mismatch");
  for (std::size_t i = 0; i < ckpt.params.size(); ++i)
    model.params()(static_cast<Eigen::Index>(i)) = ckpt.params[i];
  return model;
}

}  // namespace

void cmd_gen(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.data_dir);
  const Vocabulary vocab = Vocabulary::for_task(cfg.task);
  vocab.save(cfg.data_dir / "vocab.txt");

  std::vector<ReasoningInstance> train, test;
  switch (cfg.task) {
    case Task::addition:
      train = gen_addition_set(cfg, vocab, kTrainStream, cfg.gen_train, 0);
      test = gen_addition_set(cfg, vocab, kTestStream, cfg.gen_test, 0);
      for (std::size_t si = 0; si < cfg.addition_strata.size(); ++si) {
        const int chain = cfg.addition_strata[si];
        const auto stratum = gen_addition_set(
            cfg, vocab, kStratumStream + static_cast<std::uint64_t>(chain) * 0x100000000ull,
            cfg.gen_stratum, chain);
        dataset_emit(stratum, vocab,
                     cfg.data_dir / ("stratum_chain" + std::to_string(chain) + ".jsonl"));
      }
      break;
    case Task::maze:
      train = gen_maze_set(cfg, vocab, kTrainStream, cfg.gen_train);
      test = gen_maze_set(cfg, vocab, kTestStream, cfg.gen_test);
      break;
    case Task::listops:
      train = gen_listops_train(cfg, vocab);
      test = gen_listops_test(cfg, vocab);
      break;
    case Task::countdown:
      train = gen_countdown_set(cfg, vocab, kTrainStream, cfg.gen_train, cfg.countdown_subsample);
      test = gen_countdown_set(cfg, vocab, kTestStream, cfg.gen_test, false);
      break;
    case Task::sudoku:
      if (cfg.sudoku_csv.empty()) {
        gen_sudoku_self(cfg, vocab, train, test);
      } else {
        gen_sudoku_bank(cfg, vocab, train, test);
      }
      break;
  }

  dataset_emit(train, vocab, cfg.data_dir / "train.jsonl");
  dataset_emit(test, vocab, cfg.data_dir / "test.jsonl");
  write_text_file(cfg.data_dir / "gen_config.txt", cfg.echo);
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& resume) {
  const Vocabulary vocab = load_run_vocab(cfg);
  std::vector<ReasoningInstance> train = dataset_load(cfg.data_dir / "train.jsonl", vocab);
  std::vector<ReasoningInstance> eval;
  if (cfg.train.eval_cadence > 0) {
    eval = dataset_load(cfg.data_dir / "test.jsonl", vocab);
    if (cfg.eval_subset > 0 && static_cast<long>(eval.size()) > cfg.eval_subset)
      eval.resize(static_cast<std::size_t>(cfg.eval_subset));
    check(!eval.empty(), "eval cadence configured but the test set is empty");
  }

  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "resolved_config.txt", cfg.echo);

  Trainer trainer(cfg.model, cfg.train, vocab, std::move(train), std::move(eval));
  if (resume.empty()) {
    trainer.init();
  } else {
    trainer.resume(load_checkpoint(resume));
  }
  trainer.run();
}

std::vector<Trajectory> cmd_decode(const ExperimentConfig& cfg, const fs::path& checkpoint,
                                   const fs::path& dataset, const std::string& policy_text,
                                   const fs::path& out_file) {
  const Vocabulary vocab = load_run_vocab(cfg);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const Transformer<float> model = model_from_checkpoint(cfg, ckpt, checkpoint);
  const std::vector<ReasoningInstance> insts = dataset_load(dataset, vocab);
  const PolicySpec spec = parse_policy(policy_text, cfg.task);

  ModelProbSource source(model);
  std::vector<Trajectory> trajs = decode_chunked(source, insts, spec, vocab, cfg.seed_decode);
  if (!out_file.empty()) {
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    save_trajectories(out_file, trajs, cfg.hash);
  }
  return trajs;
}

StratifiedReport cmd_eval(const ExperimentConfig& cfg, const fs::path& trajectories,
                          const fs::path& dataset, const fs::path& out_file) {
  const Vocabulary vocab = load_run_vocab(cfg);
  const std::vector<Trajectory> trajs = load_trajectories(trajectories);
  const std::vector<ReasoningInstance> insts = dataset_load(dataset, vocab);
  check(!trajs.empty(), "no trajectories in " + trajectories.string());
  const StratifiedReport rep =
      evaluate(trajs, insts, vocab, scheme_name(cfg.train.scheme), trajs.front().policy);
  if (!out_file.empty()) {
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    save_report(out_file, rep, cfg.hash, cfg.shrink_factor);
  }
  return rep;
}

void cmd_profile(const ExperimentConfig& cfg, const fs::path& trajectories, const fs::path& dataset,
                 const fs::path& out_file) {
  const Vocabulary vocab = load_run_vocab(cfg);
  const std::vector<Trajectory> trajs = load_trajectories(trajectories);
  const std::vector<ReasoningInstance> insts = dataset_load(dataset, vocab);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  switch (cfg.task) {
    case Task::addition:
      save_addition_profile(out_file, profile_addition_failures(trajs, insts, vocab), cfg.hash);
      return;
    case Task::maze:
      save_maze_profile(out_file, profile_maze_failures(trajs, insts, vocab), cfg.hash);
      return;
    default:
      fail(std::string("no failure profiler for task ") + task_name(cfg.task));
  }
}

std::string sanitize_policy_name(const std::string& name) {
  std::string out = name;
  std::replace(out.begin(), out.end(), ':', '_');
  return out;
}

void cmd_report(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& dataset,
                const std::vector<std::string>& policies, const fs::path& out_dir) {
  check(!policies.empty(), "report needs at least one policy");
  fs::create_directories(out_dir);
  std::string summary = "policy,stratum,bound,n,accuracy\n";
  for (const std::string& policy : policies) {
    const std::string tag = sanitize_policy_name(policy_name(parse_policy(policy, cfg.task)));
    const fs::path traj_file = out_dir / ("trajectories_" + tag + ".jsonl");
    cmd_decode(cfg, checkpoint, dataset, policy, traj_file);
    const StratifiedReport rep =
        cmd_eval(cfg, traj_file, dataset, out_dir / ("report_" + tag + ".csv"));
    for (const ReportRow& r : rep.rows) {
      char acc[32];
      std::snprintf(acc, sizeof(acc), "%.6f", r.accuracy);
      summary += rep.policy + "," + r.stratum + "," + r.bound + "," + std::to_string(r.n) + "," +
                 (r.defined ? acc : "undefined") + "\n";
    }
  }
  write_text_file(out_dir / "summary.csv", summary);
}

}  // namespace masklab

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "masklab/config.hpp"
#include "masklab/diag.hpp"
#include "masklab/decode.hpp"

namespace masklab {

// Thin orchestration over the library: each command resolves paths, stamps
// the config hash into every artifact, and delegates the actual work.

// Writes vocab.txt, train.jsonl, test.jsonl, per-chain stratum files for
// addition, and gen_config.txt (the resolved echo) into cfg.data_dir.
// Corpus shaping: listops train depths follow the 0.5-per-depth decay and the
// test set splits evenly over depths 1..listops_test_depth_max; countdown
// optionally keeps only 10% of low-multiplicity (m <= 3) training chains;
// sudoku training draws tiers with 0.01-per-tier decay plus a one-puzzle
// floor for every tier the generator can reach.
void cmd_gen(const ExperimentConfig& cfg);

// Trains the configured scheme to completion inside cfg.out_dir (train log,
// accuracy curve, checkpoints, resolved_config.txt). A non-empty resume path
// continues from that checkpoint with bit-identical RNG streams.
void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& resume = {});

// Decodes a dataset with the checkpointed model under one policy and writes
// the trajectory JSONL. Refuses a checkpoint whose config hash differs.
std::vector<Trajectory> cmd_decode(const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint,
                                   const std::filesystem::path& dataset,
                                   const std::string& policy_text,
                                   const std::filesystem::path& out_file);

// Stratified accuracy report from a trajectory file and its dataset.
StratifiedReport cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& trajectories,
                          const std::filesystem::path& dataset,
                          const std::filesystem::path& out_file);

// Wrong-commit profile (addition and maze only; other tasks have no failure
// profiler and error out).
void cmd_profile(const ExperimentConfig& cfg, const std::filesystem::path& trajectories,
                 const std::filesystem::path& dataset, const std::filesystem::path& out_file);

// decode + eval for each policy against one checkpoint and dataset, plus a
// combined summary.csv, all under out_dir.
void cmd_report(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                const std::filesystem::path& dataset, const std::vector<std::string>& policies,
                const std::filesystem::path& out_dir);

// "scaffold:0.5" -> "scaffold_0.5" for use in file names.
std::string sanitize_policy_name(const std::string& name);

}  // namespace masklab

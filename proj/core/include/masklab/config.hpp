#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/model.hpp"
#include "masklab/trainer.hpp"

namespace masklab {

// Plain key=value store. Lines starting with '#' and blank lines are ignored;
// later assignments win. Typed getters record the default whenever a key is
// absent, so after resolution the echo lists every value the run consulted,
// defaults included.
class KvConfig {
 public:
  KvConfig() = default;
  static KvConfig from_file(const std::filesystem::path& file);

  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& assignment);  // "key=value"
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& def);
  long long get_int(const std::string& key, long long def);
  double get_real(const std::string& key, double def);
  bool get_bool(const std::string& key, bool def);
  std::uint64_t get_seed(const std::string& key, std::uint64_t def);

  // Sorted "key=value" lines; the canonical resolved form that gets hashed.
  std::string echo() const;

 private:
  std::map<std::string, std::string> kv_;
};

// FNV-1a over the bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

// Every knob a run consults, resolved from (preset, config file, overrides).
// `echo` is the canonical serialized form and `hash` its FNV-1a digest; both
// are stamped into datasets, checkpoints, trajectories, and reports.
struct ExperimentConfig {
  Task task = Task::addition;
  std::string preset;  // "desk" or "paper"

  ModelConfig model;
  TrainConfig train;  // scheme, papl/puma knobs, batch, iters, opt, seeds

  std::uint64_t seed_data = 1;
  std::uint64_t seed_decode = 4;

  std::filesystem::path data_dir;
  std::filesystem::path out_dir;

  long gen_train = 0;
  long gen_test = 0;
  long gen_stratum = 0;  // per-file size for constructive strata (addition)
  int addition_digits = 8;
  std::vector<int> addition_strata;  // planted min-chain values
  int maze_rows = 5, maze_cols = 5;
  int listops_test_depth_max = 6;  // train always covers depths 1..5
  bool countdown_subsample = true;
  std::string sudoku_csv;       // external puzzle bank; empty = self-generate
  std::string sudoku_test_mode; // "natural" or "tiered"
  std::vector<long> sudoku_test_tiers;  // per-tier counts for tiered mode

  std::string policy = "confidence";
  int eval_subset = 0;  // eval-curve instances (0 = whole test set)
  double shrink_factor = 1.0;  // natural test size / paper-scale test size

  std::string echo;
  std::string hash;

  int prompt_len() const;
  int answer_len() const;
  int seq_len() const { return prompt_len() + answer_len(); }
};

// Applies preset defaults for (task, preset) and computes the derived fields.
// Consumes the store so the echo is complete; errors on unknown task, scheme,
// or malformed values.
ExperimentConfig resolve_config(KvConfig kv);

void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace masklab

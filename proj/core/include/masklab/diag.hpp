#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "masklab/decode.hpp"
#include "masklab/instance.hpp"
#include "masklab/rng.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

enum class Metric { exact_match, cell_accuracy };

// Sudoku scores per-cell over initially blank cells; everything else scores
// whole-answer exact match.
Metric metric_for(Task task);
const char* metric_name(Metric m);

// exact_match: fraction of instances whose full answer region matches.
// cell_accuracy: correctly decoded initially-blank cells pooled across
// instances, divided by all initially-blank cells.
double trajectory_accuracy(const std::vector<Trajectory>& trajs,
                           const std::vector<ReasoningInstance>& insts, const Vocabulary& vocab,
                           Metric metric);

struct ReportRow {
  std::string stratum;  // stratum key, e.g. "max_chain"
  std::string bound;    // group label: "all", "3", "1-3", "102+"
  long n = 0;
  double accuracy = 0.0;
  bool defined = false;  // false when n == 0
};

struct StratifiedReport {
  std::string task;
  std::string scheme;
  std::string policy;
  Metric metric = Metric::exact_match;
  std::vector<ReportRow> rows;  // "all" first, then per-stratum groups
};

// Joins trajectories to instances by position (seeds are cross-checked) and
// aggregates accuracy per difficulty group. Grouping: addition by max_chain
// value, listops by depth, maze by max_corridor in width-5 bins, countdown by
// multiplicity bins [1,3]/[4,10]/[11,inf), sudoku by rating tier.
StratifiedReport evaluate(const std::vector<Trajectory>& trajs,
                          const std::vector<ReasoningInstance>& insts, const Vocabulary& vocab,
                          const std::string& scheme, const std::string& policy);

void save_report(const std::filesystem::path& file, const StratifiedReport& report,
                 const std::string& config_hash, double shrink_factor);

// One row per wrong digit in a failed addition decode.
struct AdditionProfileRow {
  std::uint64_t instance_seed = 0;
  int digit_index = 0;        // LSB-indexed column; n is the carry-out cell
  char role = 'k';            // column role; the carry-out cell counts as 'k'
  bool chain_msb = false;     // first non-propagating cell above a maximal 9-run
  int raw_diff = 0;           // committed minus truth, in [-9, 9]
  std::string error_class;    // plus1 | minus1 | pm9 | other (by raw_diff)
  int mod10_sign = 0;         // +1 if (diff mod 10)==1, -1 if ==9, else 0
  double top1 = 0.0;          // confidence at the wrong commit
  int commit_step = 0;        // 0-indexed decode step
  int interior_len = 0;       // cells in the 9-run below a chain-MSB cell
  double masked_interior_fraction = 0.0;  // of those, still masked at commit
};

std::vector<AdditionProfileRow> profile_addition_failures(
    const std::vector<Trajectory>& trajs, const std::vector<ReasoningInstance>& insts,
    const Vocabulary& vocab);

void save_addition_profile(const std::filesystem::path& file,
                           const std::vector<AdditionProfileRow>& rows,
                           const std::string& config_hash);

// One row per failed maze decode.
struct MazeProfileRow {
  std::uint64_t instance_seed = 0;
  int wrong_cells = 0;
  int components = 0;   // 4-adjacency connected components of the wrong set
  bool contiguous = false;
  std::string error_class;  // path_removal | path_addition | mixed
  int neighbor_hist[5] = {0, 0, 0, 0, 0};  // wrong cells by wrong-neighbor count
  double mean_wrong_neighbors = 0.0;
  double neighbor_wrong_rate = 0.0;  // P(orthogonal neighbor wrong | cell wrong)
};

std::vector<MazeProfileRow> profile_maze_failures(const std::vector<Trajectory>& trajs,
                                                  const std::vector<ReasoningInstance>& insts,
                                                  const Vocabulary& vocab);

void save_maze_profile(const std::filesystem::path& file, const std::vector<MazeProfileRow>& rows,
                       const std::string& config_hash);

// Fraction of uniform random digit columns with a_i + b_i = 9; approaches 0.1.
double propagate_rate(long columns, Rng& rng);

struct LookaheadRow {
  int w = 0;
  double empirical = 0.0;
  double bound = 0.0;  // 33 * 10^-w at 32 digits
  long n = 0;
};

// Monte Carlo over uniform n-digit pairs: an instance fails at window w when
// some answer digit sits directly above a run of w propagate columns, making
// w-column lookahead insufficient to determine its carry-in.
std::vector<LookaheadRow> lookahead_bound_check(long n_instances, const std::vector<int>& windows,
                                                int n_digits, Rng& rng);

}  // namespace masklab

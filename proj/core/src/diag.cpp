#include "masklab/diag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "masklab/addition.hpp"
#include "masklab/error.hpp"
#include "masklab/maze.hpp"
#include "masklab/sudoku.hpp"

namespace masklab {

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Pairs trajs[i] with insts[i]; the seed stored in the trajectory must agree.
void check_join(const std::vector<Trajectory>& trajs, const std::vector<ReasoningInstance>& insts) {
  check(trajs.size() == insts.size(), "trajectory/instance count mismatch");
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    check(trajs[i].instance_seed == insts[i].seed, "trajectory/instance seed mismatch");
    check(trajs[i].task == task_name(insts[i].task), "trajectory/instance task mismatch");
  }
}

struct CellCount {
  long correct = 0;
  long total = 0;
};

// Initially blank cells only: prompt cell i is '.' and maps to answer cell i.
CellCount blank_cell_count(const Trajectory& t, const ReasoningInstance& inst,
                           const Vocabulary& vocab) {
  CellCount c;
  const int off = inst.answer_offset();
  const int n = static_cast<int>(inst.answer.size());
  check(static_cast<int>(inst.prompt.size()) == n + 1, "cell metric expects cell-per-cell layout");
  for (int i = 0; i < n; ++i) {
    if (vocab.str(inst.prompt[i]) != ".") continue;
    ++c.total;
    if (t.final_tokens[off + i] == inst.answer[i]) ++c.correct;
  }
  return c;
}

double metric_over(const std::vector<int>& idx, const std::vector<Trajectory>& trajs,
                   const std::vector<ReasoningInstance>& insts, const Vocabulary& vocab,
                   Metric metric) {
  if (metric == Metric::exact_match) {
    long hit = 0;
    for (int i : idx) hit += trajs[i].exact_match ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(idx.size());
  }
  CellCount pool;
  for (int i : idx) {
    const CellCount c = blank_cell_count(trajs[i], insts[i], vocab);
    pool.correct += c.correct;
    pool.total += c.total;
  }
  check(pool.total > 0, "cell metric over instances with no blank cells");
  return static_cast<double>(pool.correct) / static_cast<double>(pool.total);
}

struct Grouping {
  std::string key;                       // stratum name read off the instances
  std::vector<std::string> labels;      // report order; may include empty bins
  std::vector<int> group_of;            // per instance, index into labels
};

Grouping group_instances(const std::vector<ReasoningInstance>& insts) {
  Grouping g;
  const Task task = insts.front().task;
  switch (task) {
    case Task::addition:
    case Task::listops: {
      g.key = task == Task::addition ? "max_chain" : "depth";
      std::map<long long, int> order;
      for (const auto& inst : insts) order.emplace(std::llround(inst.stratum(g.key)), 0);
      for (auto& [v, slot] : order) {
        slot = static_cast<int>(g.labels.size());
        g.labels.push_back(std::to_string(v));
      }
      for (const auto& inst : insts)
        g.group_of.push_back(order.at(std::llround(inst.stratum(g.key))));
      return g;
    }
    case Task::maze: {
      g.key = "max_corridor";
      std::map<long long, int> order;  // bin lower bound -> label slot
      for (const auto& inst : insts) order.emplace(std::llround(inst.stratum(g.key)) / 5 * 5, 0);
      for (auto& [lo, slot] : order) {
        slot = static_cast<int>(g.labels.size());
        g.labels.push_back(std::to_string(lo) + "-" + std::to_string(lo + 4));
      }
      for (const auto& inst : insts)
        g.group_of.push_back(order.at(std::llround(inst.stratum(g.key)) / 5 * 5));
      return g;
    }
    case Task::countdown: {
      g.key = "m";
      g.labels = {"1-3", "4-10", "11+"};
      for (const auto& inst : insts) {
        const long long m = std::llround(inst.stratum(g.key));
        check(m >= 1, "countdown multiplicity below 1");
        g.group_of.push_back(m <= 3 ? 0 : m <= 10 ? 1 : 2);
      }
      return g;
    }
    case Task::sudoku: {
      g.key = "rating";
      g.labels = {"0", "1-17", "18-34", "35-51", "52-101", "102+"};
      for (const auto& inst : insts)
        g.group_of.push_back(sudoku::tier_of(static_cast<int>(std::llround(inst.stratum(g.key)))));
      return g;
    }
  }
  fail("group_instances: bad task");
}

}  // namespace

Metric metric_for(Task task) {
  return task == Task::sudoku ? Metric::cell_accuracy : Metric::exact_match;
}

const char* metric_name(Metric m) {
  return m == Metric::exact_match ? "exact_match" : "cell_accuracy";
}

double trajectory_accuracy(const std::vector<Trajectory>& trajs,
                           const std::vector<ReasoningInstance>& insts, const Vocabulary& vocab,
                           Metric metric) {
  check(!trajs.empty(), "trajectory_accuracy on empty set");
  check_join(trajs, insts);
  std::vector<int> all(trajs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return metric_over(all, trajs, insts, vocab, metric);
}

StratifiedReport evaluate(const std::vector<Trajectory>& trajs,
                          const std::vector<ReasoningInstance>& insts, const Vocabulary& vocab,
                          const std::string& scheme, const std::string& policy) {
  check(!trajs.empty(), "evaluate on empty set");
  check_join(trajs, insts);

  StratifiedReport rep;
  rep.task = task_name(insts.front().task);
  rep.scheme = scheme;
  rep.policy = policy;
  rep.metric = metric_for(insts.front().task);

  const Grouping g = group_instances(insts);
  std::vector<std::vector<int>> members(g.labels.size());
  for (std::size_t i = 0; i < insts.size(); ++i)
    members[g.group_of[i]].push_back(static_cast<int>(i));

  std::vector<int> all(trajs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  ReportRow total{g.key, "all", static_cast<long>(all.size()),
                  metric_over(all, trajs, insts, vocab, rep.metric), true};
  rep.rows.push_back(total);

  for (std::size_t b = 0; b < g.labels.size(); ++b) {
    ReportRow row{g.key, g.labels[b], static_cast<long>(members[b].size()), 0.0, false};
    if (!members[b].empty()) {
      row.accuracy = metric_over(members[b], trajs, insts, vocab, rep.metric);
      row.defined = true;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

void save_report(const std::filesystem::path& file, const StratifiedReport& report,
                 const std::string& config_hash, double shrink_factor) {
  std::ofstream out(file, std::ios::trunc);
  check(out.good(), "cannot open report file " + file.string());
  char shrink[32];
  std::snprintf(shrink, sizeof(shrink), "%g", shrink_factor);
  out << "# config_hash=" << config_hash << "\n";
  out << "# task=" << report.task << "\n";
  out << "# scheme=" << report.scheme << "\n";
  out << "# policy=" << report.policy << "\n";
  out << "# metric=" << metric_name(report.metric) << "\n";
  out << "# shrink_factor=" << shrink << "\n";
  out << "stratum,bound,n,accuracy\n";
  for (const auto& r : report.rows) {
    out << r.stratum << "," << r.bound << "," << r.n << ","
        << (r.defined ? fmt6(r.accuracy) : "undefined") << "\n";
  }
  check(out.good(), "write failed for report file " + file.string());
}

std::vector<AdditionProfileRow> profile_addition_failures(
    const std::vector<Trajectory>& trajs, const std::vector<ReasoningInstance>& insts,
    const Vocabulary& vocab) {
  check_join(trajs, insts);
  std::vector<AdditionProfileRow> rows;

  const auto digit_value = [&](int tok) -> int {
    const std::string& s = vocab.str(tok);
    return (s.size() == 1 && s[0] >= '0' && s[0] <= '9') ? s[0] - '0' : -1;
  };

  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const Trajectory& traj = trajs[t];
    const ReasoningInstance& inst = insts[t];
    if (traj.exact_match) continue;
    check(inst.task == Task::addition, "addition profiler fed a non-addition instance");

    const AdditionOperands ops = parse_addition_prompt(inst.prompt, vocab);
    const CarryProfile prof = carry_profile(ops.a, ops.b);
    const int n = static_cast<int>(ops.a.size());
    const int off = inst.answer_offset();
    const int ans_len = static_cast<int>(inst.answer.size());

    // Commit step per answer position; -1 for positions revealed up front.
    std::vector<int> step_of(ans_len, -1);
    std::vector<const TrajectoryStep*> rec_of(ans_len, nullptr);
    for (const TrajectoryStep& s : traj.steps) {
      const int j = s.position - off;
      check(j >= 0 && j < ans_len, "trajectory step outside the answer region");
      step_of[j] = s.step;
      rec_of[j] = &s;
    }

    for (int j = 0; j < ans_len; ++j) {
      if (traj.final_tokens[off + j] == inst.answer[j]) continue;
      const int d = addition_digit_of_pos(n, j);

      AdditionProfileRow row;
      row.instance_seed = inst.seed;
      row.digit_index = d;
      // The carry-out cell behaves like a kill column: its sum term is zero.
      row.role = d < n ? prof.roles[d] : 'k';
      row.chain_msb = d >= 1 && prof.roles[d - 1] == 'p' && (d >= n || prof.roles[d] != 'p');

      const int committed = digit_value(traj.final_tokens[off + j]);
      const int truth = digit_value(inst.answer[j]);
      check(truth >= 0, "addition answer holds a non-digit token");
      if (committed >= 0) {
        row.raw_diff = committed - truth;
        row.error_class = row.raw_diff == 1    ? "plus1"
                          : row.raw_diff == -1 ? "minus1"
                          : std::abs(row.raw_diff) == 9
                              ? "pm9"
                              : "other";
        const int mod = ((committed - truth) % 10 + 10) % 10;
        row.mod10_sign = mod == 1 ? 1 : mod == 9 ? -1 : 0;
      } else {
        row.raw_diff = 100;  // committed token was not a digit
        row.error_class = "other";
        row.mod10_sign = 0;
      }

      const TrajectoryStep* rec = rec_of[j];
      check(rec != nullptr, "wrong cell was never committed by a step");
      row.top1 = rec->top1;
      row.commit_step = rec->step;

      if (row.chain_msb) {
        // The propagate run directly below d, inclusive bounds [lo, d-1].
        int lo = d - 1;
        while (lo > 0 && prof.roles[lo - 1] == 'p') --lo;
        row.interior_len = d - lo;
        int masked = 0;
        for (int k = lo; k < d; ++k) {
          const int jj = n - k;  // answer position of digit k
          // Masked while this cell was being committed: committed strictly
          // later and not part of the prereveal set.
          if (step_of[jj] > rec->step) ++masked;
        }
        row.masked_interior_fraction =
            static_cast<double>(masked) / static_cast<double>(row.interior_len);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void save_addition_profile(const std::filesystem::path& file,
                           const std::vector<AdditionProfileRow>& rows,
                           const std::string& config_hash) {
  std::ofstream out(file, std::ios::trunc);
  check(out.good(), "cannot open profile file " + file.string());
  out << "# config_hash=" << config_hash << "\n";
  out << "# steps_zero_indexed=true\n";
  out << "seed,digit_index,role,chain_msb,raw_diff,error_class,mod10_sign,top1,commit_step,"
         "interior_len,masked_interior_fraction\n";
  for (const auto& r : rows) {
    out << r.instance_seed << "," << r.digit_index << "," << r.role << "," << (r.chain_msb ? 1 : 0)
        << "," << r.raw_diff << "," << r.error_class << "," << r.mod10_sign << "," << fmt6(r.top1)
        << "," << r.commit_step << "," << r.interior_len << ","
        << fmt6(r.masked_interior_fraction) << "\n";
  }
  check(out.good(), "write failed for profile file " + file.string());
}

std::vector<MazeProfileRow> profile_maze_failures(const std::vector<Trajectory>& trajs,
                                                  const std::vector<ReasoningInstance>& insts,
                                                  const Vocabulary& vocab) {
  check_join(trajs, insts);
  std::vector<MazeProfileRow> rows;

  const auto on_path = [&](int tok) {
    const std::string& s = vocab.str(tok);
    return s == "1" || s == "S" || s == "E";
  };

  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const Trajectory& traj = trajs[t];
    const ReasoningInstance& inst = insts[t];
    if (traj.exact_match) continue;
    check(inst.task == Task::maze, "maze profiler fed a non-maze instance");

    const MazeSpec maze = maze_from_prompt(inst.prompt, vocab);
    const int R = maze.grid_rows(), C = maze.grid_cols();
    const int off = inst.answer_offset();
    check(static_cast<int>(inst.answer.size()) == R * C, "maze answer/grid size mismatch");

    std::vector<char> wrong(R * C, 0);
    std::vector<int> wrong_idx;
    for (int j = 0; j < R * C; ++j) {
      if (traj.final_tokens[off + j] != inst.answer[j]) {
        wrong[j] = 1;
        wrong_idx.push_back(j);
      }
    }
    check(!wrong_idx.empty(), "failed trajectory with no wrong cells");

    MazeProfileRow row;
    row.instance_seed = inst.seed;
    row.wrong_cells = static_cast<int>(wrong_idx.size());

    const auto neighbors = [&](int j, auto&& fn) {
      const int r = j / C, c = j % C;
      if (r > 0) fn(j - C);
      if (r + 1 < R) fn(j + C);
      if (c > 0) fn(j - 1);
      if (c + 1 < C) fn(j + 1);
    };

    // Connected components of the wrong set under 4-adjacency.
    std::vector<char> seen(R * C, 0);
    for (int s : wrong_idx) {
      if (seen[s]) continue;
      ++row.components;
      std::vector<int> stack{s};
      seen[s] = 1;
      while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        neighbors(j, [&](int k) {
          if (wrong[k] && !seen[k]) {
            seen[k] = 1;
            stack.push_back(k);
          }
        });
      }
    }
    row.contiguous = row.components == 1;

    long pair_total = 0, pair_wrong = 0, neigh_sum = 0;
    for (int j : wrong_idx) {
      int wn = 0;
      neighbors(j, [&](int k) {
        ++pair_total;
        if (wrong[k]) {
          ++pair_wrong;
          ++wn;
        }
      });
      ++row.neighbor_hist[wn];
      neigh_sum += wn;
    }
    row.mean_wrong_neighbors =
        static_cast<double>(neigh_sum) / static_cast<double>(row.wrong_cells);
    row.neighbor_wrong_rate =
        pair_total > 0 ? static_cast<double>(pair_wrong) / static_cast<double>(pair_total) : 0.0;

    // path_removal: every wrong cell is a true-path cell committed off-path.
    // path_addition: every wrong cell is a true off-path cell committed on-path.
    bool all_removal = true, all_addition = true;
    for (int j : wrong_idx) {
      const bool truth_on = on_path(inst.answer[j]);
      const bool committed_on = on_path(traj.final_tokens[off + j]);
      if (!(truth_on && !committed_on)) all_removal = false;
      if (!(!truth_on && committed_on)) all_addition = false;
    }
    row.error_class = all_removal ? "path_removal" : all_addition ? "path_addition" : "mixed";
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_maze_profile(const std::filesystem::path& file, const std::vector<MazeProfileRow>& rows,
                       const std::string& config_hash) {
  std::ofstream out(file, std::ios::trunc);
  check(out.good(), "cannot open profile file " + file.string());
  out << "# config_hash=" << config_hash << "\n";
  out << "seed,wrong_cells,components,contiguous,error_class,wn0,wn1,wn2,wn3,wn4,"
         "mean_wrong_neighbors,neighbor_wrong_rate\n";
  for (const auto& r : rows) {
    out << r.instance_seed << "," << r.wrong_cells << "," << r.components << ","
        << (r.contiguous ? 1 : 0) << "," << r.error_class;
    for (int h : r.neighbor_hist) out << "," << h;
    out << "," << fmt6(r.mean_wrong_neighbors) << "," << fmt6(r.neighbor_wrong_rate) << "\n";
  }
  check(out.good(), "write failed for profile file " + file.string());
}

double propagate_rate(long columns, Rng& rng) {
  check(columns > 0, "propagate_rate needs at least one column");
  long hits = 0;
  for (long i = 0; i < columns; ++i) {
    const int s = static_cast<int>(rng.below(10)) + static_cast<int>(rng.below(10));
    if (s == 9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(columns);
}

std::vector<LookaheadRow> lookahead_bound_check(long n_instances, const std::vector<int>& windows,
                                                int n_digits, Rng& rng) {
  check(n_instances > 0 && n_digits > 0, "lookahead check needs instances and digits");
  for (int w : windows) check(w >= 1, "lookahead window must be positive");

  // A window of w columns below some answer digit is all-propagate iff the
  // operands contain a propagate run of length >= w, so only the longest run
  // matters per instance.
  std::vector<long> fails(windows.size(), 0);
  for (long i = 0; i < n_instances; ++i) {
    int run = 0, max_run = 0;
    for (int d = 0; d < n_digits; ++d) {
      const int s = static_cast<int>(rng.below(10)) + static_cast<int>(rng.below(10));
      run = s == 9 ? run + 1 : 0;
      max_run = std::max(max_run, run);
    }
    for (std::size_t k = 0; k < windows.size(); ++k)
      if (max_run >= windows[k]) ++fails[k];
  }

  std::vector<LookaheadRow> rows;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    LookaheadRow r;
    r.w = windows[k];
    r.n = n_instances;
    r.empirical = static_cast<double>(fails[k]) / static_cast<double>(n_instances);
    // Union bound over the n+1 answer digits that could sit above such a run.
    r.bound = static_cast<double>(n_digits + 1) * std::pow(10.0, -r.w);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace masklab

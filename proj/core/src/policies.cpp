#include "masklab/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "masklab/error.hpp"
#include "masklab/listops.hpp"
#include "masklab/maze.hpp"
#include "masklab/sudoku.hpp"

namespace masklab {

namespace {

void require_task(const PolicySpec& spec, const ReasoningInstance& inst, Task expected) {
  check(inst.task == expected, policy_name(spec) + " policy does not apply to task " +
                                   task_name(inst.task));
}

PolicyPlan static_order(std::vector<int> ranks) {
  PolicyPlan plan;
  plan.class_of = std::move(ranks);
  plan.confidence_within_class = false;
  return plan;
}

PolicyPlan lsb_first_plan(const ReasoningInstance& inst) {
  const int n = static_cast<int>(inst.answer.size());
  std::vector<int> ranks(inst.answer.size());
  for (int i = 0; i < n; ++i) ranks[static_cast<std::size_t>(i)] = n - 1 - i;
  return static_order(std::move(ranks));
}

PolicyPlan dead_end_fill_plan(const ReasoningInstance& inst, const Vocabulary& vocab) {
  const MazeSpec maze = maze_from_prompt(inst.prompt, vocab);
  const DeadEndFill fill = dead_end_fill(maze);
  std::vector<int> ranks(inst.answer.size(), -1);
  int r = 0;
  for (std::size_t i = 0; i < fill.labels.size(); ++i) {
    if (fill.labels[i] == '#') ranks[i] = r++;
  }
  for (int idx : fill.reveal_order) ranks[static_cast<std::size_t>(idx)] = r++;
  check(std::find(ranks.begin(), ranks.end(), -1) == ranks.end(),
        "dead-end-fill plan left cells unranked");
  return static_order(std::move(ranks));
}

PolicyPlan layered_postorder_plan(const ReasoningInstance& inst, const Vocabulary& vocab) {
  const ListopsNode root = listops_parse(listops_text_from_prompt(inst.prompt, vocab));
  const std::vector<int> heights = listops_trace_heights(root);
  check(heights.size() <= inst.answer.size(), "trace longer than answer region");
  const int pad_layer = *std::max_element(heights.begin(), heights.end()) + 1;
  PolicyPlan plan;
  plan.class_of.assign(inst.answer.size(), pad_layer);
  for (std::size_t i = 0; i < heights.size(); ++i) plan.class_of[i] = heights[i];
  plan.confidence_within_class = true;  // intra-layer ties go to the model's confidence
  return plan;
}

PolicyPlan step_sequential_plan(const ReasoningInstance& inst) {
  std::vector<int> ranks(inst.answer.size());
  std::iota(ranks.begin(), ranks.end(), 0);
  return static_order(std::move(ranks));
}

PolicyPlan constraint_propagation_plan(const ReasoningInstance& inst, const Vocabulary& vocab) {
  const sudoku::Grid grid = sudoku::grid_from_prompt(inst.prompt, vocab);
  const sudoku::SolveResult solved = sudoku::solve(grid, 1);
  check(solved.solutions >= 1, "constraint-propagation plan: unsolvable puzzle");
  std::vector<int> ranks(81, -1);
  int r = 0;
  for (int i = 0; i < 81; ++i) {
    if (grid[static_cast<std::size_t>(i)] != 0) ranks[static_cast<std::size_t>(i)] = r++;
  }
  for (int cell : solved.assign_order) {
    check(ranks[static_cast<std::size_t>(cell)] == -1, "solver order revisited a cell");
    ranks[static_cast<std::size_t>(cell)] = r++;
  }
  check(r == 81, "solver order left cells unranked");
  return static_order(std::move(ranks));
}

PolicyPlan technique_difficulty_plan(const ReasoningInstance& inst, const Vocabulary& vocab) {
  const sudoku::Grid grid = sudoku::grid_from_prompt(inst.prompt, vocab);
  const std::array<int, 81> levels = sudoku::tl_classify(grid);
  PolicyPlan plan;
  plan.class_of.resize(81);
  for (int i = 0; i < 81; ++i) {
    // givens first (class 0), then blanks by ascending technique level
    plan.class_of[static_cast<std::size_t>(i)] = levels[static_cast<std::size_t>(i)] + 1;
  }
  plan.confidence_within_class = true;
  return plan;
}

PolicyPlan scaffold_plan(const PolicySpec& spec, const ReasoningInstance& inst, Rng& rng) {
  check(spec.scaffold_fraction >= 0.0 && spec.scaffold_fraction <= 1.0,
        "scaffold fraction outside [0,1]");
  const int n = static_cast<int>(inst.answer.size());
  const int k = static_cast<int>(std::ceil(spec.scaffold_fraction * n));
  std::vector<int> idx(inst.answer.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  PolicyPlan plan;  // confidence decoding over the remainder
  plan.prereveal.assign(idx.begin(), idx.begin() + k);
  std::sort(plan.prereveal.begin(), plan.prereveal.end());
  return plan;
}

}  // namespace

PolicyPlan build_policy_plan(const PolicySpec& spec, const ReasoningInstance& inst,
                             const Vocabulary& vocab, Rng& rng) {
  switch (spec.kind) {
    case PolicyKind::confidence:
      return PolicyPlan{};
    case PolicyKind::random: {
      PolicyPlan plan;
      plan.confidence_within_class = false;
      plan.random_within_class = true;
      return plan;
    }
    case PolicyKind::lsb_first:
      require_task(spec, inst, Task::addition);
      return lsb_first_plan(inst);
    case PolicyKind::dead_end_fill:
      require_task(spec, inst, Task::maze);
      return dead_end_fill_plan(inst, vocab);
    case PolicyKind::layered_postorder:
      require_task(spec, inst, Task::listops);
      return layered_postorder_plan(inst, vocab);
    case PolicyKind::step_sequential:
      require_task(spec, inst, Task::countdown);
      return step_sequential_plan(inst);
    case PolicyKind::constraint_propagation:
      require_task(spec, inst, Task::sudoku);
      return constraint_propagation_plan(inst, vocab);
    case PolicyKind::technique_difficulty:
      require_task(spec, inst, Task::sudoku);
      return technique_difficulty_plan(inst, vocab);
    case PolicyKind::scaffold:
      return scaffold_plan(spec, inst, rng);
  }
  fail("build_policy_plan: bad policy kind");
}

}  // namespace masklab

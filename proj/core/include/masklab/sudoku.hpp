#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab::sudoku {

using Grid = std::array<int, 81>;  // 0 = blank, 1..9 = digit

struct SolveResult {
  int solutions = 0;           // counted up to the requested cap
  Grid solution{};             // first solution found (valid when solutions >= 1)
  int guesses = 0;             // candidate trials at branch points, failed branches included
  std::vector<int> assign_order;  // cells in fill order along the first successful path
};

// MRV backtracking with naked/hidden-singles propagation between guesses.
// Deterministic: lowest-index MRV cell, candidates ascending.
SolveResult solve(const Grid& puzzle, int max_solutions = 2);

// Difficulty rating = guesses spent reaching the first solution. 0 iff the
// puzzle yields to singles propagation alone.
int rate(const Grid& puzzle);

// Technique levels, applied cheapest-first with escalation:
//   0 naked/hidden singles
//   1 naked/hidden pairs and triples, pointing pairs, box-line reduction
//   2 X-Wing, Swordfish, XY-Wing
//   3 single-cell hypothesis: assume a candidate, propagate singles,
//     eliminate it on contradiction
//   4 none of the above suffices (search-only cells)
// Each blank cell is tagged with the deepest level that fired since the last
// placement; when levels 0-3 all stall, every remaining blank is level 4.
// Givens are tagged -1.
std::array<int, 81> tl_classify(const Grid& puzzle);

// Rating tiers: 0, 1-17, 18-34, 35-51, 52-101, >=102 -> 0..5.
int tier_of(int rating);

// Full grid via randomized backtracking, then blanking: visit cells in random
// order and delete each whose removal keeps the solution unique.
Grid gen_full(std::uint64_t seed);
Grid gen_puzzle(const Grid& full, std::uint64_t seed);

struct CsvPuzzle {
  Grid puzzle{};
  Grid solution{};
  int rating = 0;
};

// CSV with columns puzzle (81 chars, '.' = blank), solution (81 digits),
// rating (int). A header row naming the columns is honored; extra columns are
// ignored. Errors mention the line number.
std::vector<CsvPuzzle> load_csv(const std::filesystem::path& file);

// Sequence layout: prompt = 81 puzzle cells + '='; answer = 81 solution cells.
// Strata: {"rating", "tl4_frac", "blanks"}.
ReasoningInstance make_instance(const Grid& puzzle, const Grid& solution, int rating,
                                std::uint64_t seed, const Vocabulary& vocab);

Grid grid_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab);

}  // namespace masklab::sudoku

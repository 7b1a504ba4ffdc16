#include <doctest.h>

#include <fstream>
#include <set>
#include <string>

#include "helpers.hpp"
#include "masklab/rng.hpp"
#include "masklab/sudoku.hpp"

using namespace masklab;
using sudoku::Grid;

namespace {

// Independent validity check: each row, column, and box holds 1..9 exactly
// once, and the solution extends the puzzle.
void check_valid_solution(const Grid& puzzle, const Grid& sol) {
  for (int i = 0; i < 81; ++i) {
    REQUIRE(sol[static_cast<std::size_t>(i)] >= 1);
    REQUIRE(sol[static_cast<std::size_t>(i)] <= 9);
    if (puzzle[static_cast<std::size_t>(i)] != 0) {
      CHECK(sol[static_cast<std::size_t>(i)] == puzzle[static_cast<std::size_t>(i)]);
    }
  }
  for (int g = 0; g < 9; ++g) {
    std::set<int> row, col, box;
    for (int k = 0; k < 9; ++k) {
      row.insert(sol[static_cast<std::size_t>(g * 9 + k)]);
      col.insert(sol[static_cast<std::size_t>(k * 9 + g)]);
      const int r = (g / 3) * 3 + k / 3, c = (g % 3) * 3 + k % 3;
      box.insert(sol[static_cast<std::size_t>(r * 9 + c)]);
    }
    CHECK(row.size() == 9);
    CHECK(col.size() == 9);
    CHECK(box.size() == 9);
  }
}

Grid parse_grid(const std::string& s) {
  REQUIRE(s.size() == 81);
  Grid g{};
  for (int i = 0; i < 81; ++i) {
    const char c = s[static_cast<std::size_t>(i)];
    g[static_cast<std::size_t>(i)] = (c == '.' || c == '0') ? 0 : c - '0';
  }
  return g;
}

}  // namespace

TEST_SUITE_BEGIN("sudoku");

TEST_CASE("solver solves and counts on classic fixtures") {
  // A well-known easy puzzle (singles only).
  const Grid easy = parse_grid(
      "530070000600195000098000060800060003400803001700020006060000280000419005000080079");
  const auto res = sudoku::solve(easy);
  REQUIRE(res.solutions == 1);
  check_valid_solution(easy, res.solution);
  CHECK(sudoku::rate(easy) == 0);

  // Empty grid has many solutions; the cap stops at 2.
  const Grid empty{};
  CHECK(sudoku::solve(empty).solutions == 2);

  // Contradictory puzzle: two 5s in a row.
  Grid bad{};
  bad[0] = 5;
  bad[1] = 5;
  CHECK(sudoku::solve(bad).solutions == 0);
}

TEST_CASE("assignment order fills every blank exactly once") {
  const Grid puzzle = parse_grid(
      "530070000600195000098000060800060003400803001700020006060000280000419005000080079");
  const auto res = sudoku::solve(puzzle);
  std::set<int> cells(res.assign_order.begin(), res.assign_order.end());
  int blanks = 0;
  for (int i = 0; i < 81; ++i) blanks += (puzzle[static_cast<std::size_t>(i)] == 0);
  CHECK(static_cast<int>(cells.size()) == blanks);
  CHECK(cells.size() == res.assign_order.size());
  for (int c : cells) {
    CHECK(c >= 0);
    CHECK(c < 81);
    CHECK(puzzle[static_cast<std::size_t>(c)] == 0);
  }
}

TEST_CASE("generated puzzles solve back to their source grid") {
  for (int trial = 0; trial < 30; ++trial) {
    const std::uint64_t seed = derive_seed(808, static_cast<std::uint64_t>(trial));
    const Grid full = sudoku::gen_full(seed);
    check_valid_solution(Grid{}, full);

    const Grid puzzle = sudoku::gen_puzzle(full, derive_seed(seed, 1));
    const auto res = sudoku::solve(puzzle);
    REQUIRE(res.solutions == 1);  // uniqueness is the generator's contract
    CHECK(res.solution == full);
  }
}

TEST_CASE("generation is deterministic in the seed") {
  CHECK(sudoku::gen_full(99) == sudoku::gen_full(99));
  const Grid full = sudoku::gen_full(99);
  CHECK(sudoku::gen_puzzle(full, 7) == sudoku::gen_puzzle(full, 7));
  CHECK(sudoku::gen_full(99) != sudoku::gen_full(100));
}

TEST_CASE("rating tiers partition the rating axis") {
  CHECK(sudoku::tier_of(0) == 0);
  CHECK(sudoku::tier_of(1) == 1);
  CHECK(sudoku::tier_of(17) == 1);
  CHECK(sudoku::tier_of(18) == 2);
  CHECK(sudoku::tier_of(34) == 2);
  CHECK(sudoku::tier_of(35) == 3);
  CHECK(sudoku::tier_of(51) == 3);
  CHECK(sudoku::tier_of(52) == 4);
  CHECK(sudoku::tier_of(101) == 4);
  CHECK(sudoku::tier_of(102) == 5);
  CHECK(sudoku::tier_of(465) == 5);
}

TEST_CASE("technique levels tag givens and easy cells sensibly") {
  const Grid easy = parse_grid(
      "530070000600195000098000060800060003400803001700020006060000280000419005000080079");
  const auto levels = sudoku::tl_classify(easy);
  for (int i = 0; i < 81; ++i) {
    if (easy[static_cast<std::size_t>(i)] != 0) {
      CHECK(levels[static_cast<std::size_t>(i)] == -1);
    } else {
      CHECK(levels[static_cast<std::size_t>(i)] >= 0);
      CHECK(levels[static_cast<std::size_t>(i)] <= 4);
    }
  }
  // A singles-only puzzle never needs anything past level 0.
  REQUIRE(sudoku::rate(easy) == 0);
  for (int i = 0; i < 81; ++i) {
    if (easy[static_cast<std::size_t>(i)] == 0) {
      CHECK(levels[static_cast<std::size_t>(i)] == 0);
    }
  }
}

TEST_CASE("csv ingestion honors headers and reports line numbers") {
  testutil::TempDir tmp("sudokucsv");
  const Grid full = sudoku::gen_full(5);
  const Grid puzzle = sudoku::gen_puzzle(full, 6);
  std::string prow, srow;
  for (int i = 0; i < 81; ++i) {
    prow += puzzle[static_cast<std::size_t>(i)] == 0
                ? '.'
                : static_cast<char>('0' + puzzle[static_cast<std::size_t>(i)]);
    srow += static_cast<char>('0' + full[static_cast<std::size_t>(i)]);
  }
  {
    std::ofstream os(tmp / "bank.csv");
    os << "puzzle,solution,rating,extra\n";
    os << prow << "," << srow << ",3,ignored\n";
  }
  const auto rows = sudoku::load_csv(tmp / "bank.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].puzzle == puzzle);
  CHECK(rows[0].solution == full);
  CHECK(rows[0].rating == 3);

  {
    std::ofstream os(tmp / "bad.csv");
    os << "puzzle,solution,rating\n";
    os << "tooshort,123,0\n";
  }
  try {
    sudoku::load_csv(tmp / "bad.csv");
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("instances carry the grid and strata") {
  const Vocabulary vocab = Vocabulary::for_task(Task::sudoku);
  const Grid full = sudoku::gen_full(21);
  const Grid puzzle = sudoku::gen_puzzle(full, 22);
  const int rating = sudoku::rate(puzzle);
  const auto inst = sudoku::make_instance(puzzle, full, rating, 33, vocab);
  REQUIRE(inst.prompt.size() == 82);
  REQUIRE(inst.answer.size() == 81);
  CHECK(vocab.str(inst.prompt[81]) == "=");
  CHECK(sudoku::grid_from_prompt(inst.prompt, vocab) == puzzle);
  CHECK(inst.stratum("rating") == rating);
  int blanks = 0;
  for (int v : puzzle) blanks += (v == 0);
  CHECK(inst.stratum("blanks") == blanks);
  CHECK(inst.stratum("tl4_frac") >= 0.0);
  CHECK(inst.stratum("tl4_frac") <= 1.0);
  for (int i = 0; i < 81; ++i) {
    const std::string cell = vocab.str(inst.answer[static_cast<std::size_t>(i)]);
    CHECK(cell == std::string(1, static_cast<char>('0' + full[static_cast<std::size_t>(i)])));
  }
}

TEST_SUITE_END();

#include "masklab/sudoku.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>
#include <sstream>

#include "masklab/error.hpp"
#include "masklab/rng.hpp"

namespace masklab::sudoku {

namespace {

constexpr std::uint16_t kAll = 0x1FF;

struct Tables {
  std::array<std::array<int, 9>, 27> units{};   // rows 0-8, cols 9-17, boxes 18-26
  std::array<std::array<int, 3>, 81> unit_of{};  // row, col, box unit index per cell
  std::array<std::array<int, 20>, 81> peers{};

  Tables() {
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) units[r][c] = r * 9 + c;
    for (int c = 0; c < 9; ++c)
      for (int r = 0; r < 9; ++r) units[9 + c][r] = r * 9 + c;
    for (int b = 0; b < 9; ++b) {
      const int r0 = (b / 3) * 3, c0 = (b % 3) * 3;
      for (int k = 0; k < 9; ++k) units[18 + b][k] = (r0 + k / 3) * 9 + (c0 + k % 3);
    }
    for (int cell = 0; cell < 81; ++cell) {
      const int r = cell / 9, c = cell % 9, b = (r / 3) * 3 + c / 3;
      unit_of[cell] = {r, 9 + c, 18 + b};
      bool seen[81] = {};
      int n = 0;
      for (int u : unit_of[cell]) {
        for (int other : units[u]) {
          if (other != cell && !seen[other]) {
            seen[other] = true;
            peers[cell][n++] = other;
          }
        }
      }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

inline int bit_digit(std::uint16_t mask) { return std::countr_zero(mask) + 1; }

struct Board {
  std::array<std::uint16_t, 81> cand{};
  std::array<int, 81> val{};
  int open = 81;

  static Board from(const Grid& g) {
    Board b;
    b.cand.fill(kAll);
    bool ok = true;
    for (int i = 0; i < 81 && ok; ++i) {
      if (g[i] != 0) ok = b.assign(i, g[i]);
    }
    check(ok, "sudoku: puzzle givens are contradictory");
    return b;
  }

  bool assign(int cell, int d) {
    const std::uint16_t bit = std::uint16_t(1) << (d - 1);
    if (!(cand[cell] & bit)) return false;
    val[cell] = d;
    cand[cell] = bit;
    --open;
    for (int p : tables().peers[cell]) {
      if (val[p] == 0) {
        cand[p] = std::uint16_t(cand[p] & ~bit);
        if (cand[p] == 0) return false;
      } else if (val[p] == d) {
        return false;
      }
    }
    return true;
  }

  // Naked + hidden singles to fixpoint. Returns false on contradiction;
  // appends assigned cells to *order when given.
  bool propagate(std::vector<int>* order) {
    for (bool changed = true; changed;) {
      changed = false;
      for (int i = 0; i < 81; ++i) {
        if (val[i] == 0 && std::popcount(cand[i]) == 1) {
          if (!assign(i, bit_digit(cand[i]))) return false;
          if (order) order->push_back(i);
          changed = true;
        }
      }
      for (int u = 0; u < 27; ++u) {
        for (int d = 1; d <= 9; ++d) {
          const std::uint16_t bit = std::uint16_t(1) << (d - 1);
          int spot = -1, count = 0;
          bool placed = false;
          for (int cell : tables().units[u]) {
            if (val[cell] == d) {
              placed = true;
              break;
            }
            if (val[cell] == 0 && (cand[cell] & bit)) {
              spot = cell;
              ++count;
            }
          }
          if (placed) continue;
          if (count == 0) return false;
          if (count == 1) {
            if (!assign(spot, d)) return false;
            if (order) order->push_back(spot);
            changed = true;
          }
        }
      }
    }
    return true;
  }
};

void search(Board board, int max_solutions, SolveResult& out, std::vector<int>& order) {
  const std::size_t order_mark = order.size();
  if (!board.propagate(&order)) {
    order.resize(order_mark);
    return;
  }
  if (board.open == 0) {
    if (out.solutions == 0) {
      for (int i = 0; i < 81; ++i) out.solution[i] = board.val[i];
      out.assign_order = order;
    }
    ++out.solutions;
    order.resize(order_mark);
    return;
  }
  int cell = -1, best = 10;
  for (int i = 0; i < 81; ++i) {
    if (board.val[i] == 0) {
      const int n = std::popcount(board.cand[i]);
      if (n < best) {
        best = n;
        cell = i;
      }
    }
  }
  for (int d = 1; d <= 9; ++d) {
    if (!(board.cand[cell] & (std::uint16_t(1) << (d - 1)))) continue;
    if (out.solutions >= max_solutions) break;
    ++out.guesses;
    Board next = board;
    if (next.assign(cell, d)) {
      order.push_back(cell);
      search(next, max_solutions, out, order);
      order.pop_back();
    }
  }
  order.resize(order_mark);
}

// --- classification techniques beyond singles ---------------------------------

struct Fired {
  bool any = false;
  int placed = -1;  // cell index when the application assigned a digit
};

// Walks k-subsets of idx[0..n) in lexicographic order.
template <typename F>
bool for_subsets(int n, int k, F&& f) {
  std::vector<int> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    if (f(pick)) return true;
    int i = k - 1;
    while (i >= 0 && pick[i] == n - k + i) --i;
    if (i < 0) return false;
    ++pick[i];
    for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

Fired level0(Board& b) {
  Fired f;
  for (int i = 0; i < 81; ++i) {
    if (b.val[i] == 0 && std::popcount(b.cand[i]) == 1) {
      check(b.assign(i, bit_digit(b.cand[i])), "sudoku classify: contradiction on naked single");
      return {true, i};
    }
  }
  for (int u = 0; u < 27; ++u) {
    for (int d = 1; d <= 9; ++d) {
      const std::uint16_t bit = std::uint16_t(1) << (d - 1);
      int spot = -1, count = 0;
      bool placed = false;
      for (int cell : tables().units[u]) {
        if (b.val[cell] == d) {
          placed = true;
          break;
        }
        if (b.val[cell] == 0 && (b.cand[cell] & bit)) {
          spot = cell;
          ++count;
        }
      }
      if (placed || count != 1) continue;
      check(b.assign(spot, d), "sudoku classify: contradiction on hidden single");
      return {true, spot};
    }
  }
  return f;
}

bool eliminate(Board& b, int cell, std::uint16_t bits) {
  if (b.val[cell] != 0) return false;
  const std::uint16_t kept = std::uint16_t(b.cand[cell] & ~bits);
  if (kept == b.cand[cell]) return false;
  check(kept != 0, "sudoku classify: elimination emptied a cell");
  b.cand[cell] = kept;
  return true;
}

Fired level1(Board& b) {
  const Tables& t = tables();
  // naked pairs / triples
  for (int k : {2, 3}) {
    for (int u = 0; u < 27; ++u) {
      std::vector<int> blanks;
      for (int cell : t.units[u]) {
        if (b.val[cell] == 0) blanks.push_back(cell);
      }
      if (static_cast<int>(blanks.size()) <= k) continue;
      const bool hit = for_subsets(static_cast<int>(blanks.size()), k, [&](const std::vector<int>& pick) {
        std::uint16_t mask = 0;
        for (int p : pick) mask |= b.cand[blanks[p]];
        if (std::popcount(mask) != k) return false;
        bool any = false;
        for (std::size_t i = 0; i < blanks.size(); ++i) {
          if (std::find(pick.begin(), pick.end(), static_cast<int>(i)) != pick.end()) continue;
          any |= eliminate(b, blanks[i], mask);
        }
        return any;
      });
      if (hit) return {true, -1};
    }
  }
  // hidden pairs / triples
  for (int k : {2, 3}) {
    for (int u = 0; u < 27; ++u) {
      std::vector<int> missing;
      for (int d = 1; d <= 9; ++d) {
        bool placed = false;
        for (int cell : t.units[u]) placed |= b.val[cell] == d;
        if (!placed) missing.push_back(d);
      }
      if (static_cast<int>(missing.size()) <= k) continue;
      const bool hit = for_subsets(static_cast<int>(missing.size()), k, [&](const std::vector<int>& pick) {
        std::uint16_t dmask = 0;
        for (int p : pick) dmask |= std::uint16_t(1) << (missing[p] - 1);
        std::vector<int> spots;
        for (int cell : t.units[u]) {
          if (b.val[cell] == 0 && (b.cand[cell] & dmask)) spots.push_back(cell);
        }
        if (static_cast<int>(spots.size()) != k) return false;
        bool any = false;
        for (int cell : spots) any |= eliminate(b, cell, std::uint16_t(~dmask));
        return any;
      });
      if (hit) return {true, -1};
    }
  }
  // pointing pairs: digit confined to one row/col of a box
  for (int bx = 0; bx < 9; ++bx) {
    for (int d = 1; d <= 9; ++d) {
      const std::uint16_t bit = std::uint16_t(1) << (d - 1);
      std::vector<int> spots;
      bool placed = false;
      for (int cell : t.units[18 + bx]) {
        if (b.val[cell] == d) placed = true;
        if (b.val[cell] == 0 && (b.cand[cell] & bit)) spots.push_back(cell);
      }
      if (placed || spots.size() < 2) continue;
      for (int axis = 0; axis < 2; ++axis) {
        const auto coord = [axis](int cell) { return axis == 0 ? cell / 9 : cell % 9; };
        bool same = true;
        for (int s : spots) same &= coord(s) == coord(spots[0]);
        if (!same) continue;
        bool any = false;
        const int line = axis == 0 ? coord(spots[0]) : 9 + coord(spots[0]);
        for (int cell : t.units[line]) {
          if (t.unit_of[cell][2] != 18 + bx) any |= eliminate(b, cell, bit);
        }
        if (any) return {true, -1};
      }
    }
  }
  // box-line reduction: digit confined to one box of a row/col
  for (int line = 0; line < 18; ++line) {
    for (int d = 1; d <= 9; ++d) {
      const std::uint16_t bit = std::uint16_t(1) << (d - 1);
      std::vector<int> spots;
      bool placed = false;
      for (int cell : t.units[line]) {
        if (b.val[cell] == d) placed = true;
        if (b.val[cell] == 0 && (b.cand[cell] & bit)) spots.push_back(cell);
      }
      if (placed || spots.size() < 2) continue;
      bool same = true;
      for (int s : spots) same &= t.unit_of[s][2] == t.unit_of[spots[0]][2];
      if (!same) continue;
      bool any = false;
      for (int cell : t.units[t.unit_of[spots[0]][2]]) {
        if (t.unit_of[cell][line < 9 ? 0 : 1] != line) any |= eliminate(b, cell, bit);
      }
      if (any) return {true, -1};
    }
  }
  return {};
}

Fired level2(Board& b) {
  const Tables& t = tables();
  // X-Wing (k=2) and Swordfish (k=3), rows as base then columns as base
  for (int k : {2, 3}) {
    for (int axis = 0; axis < 2; ++axis) {
      for (int d = 1; d <= 9; ++d) {
        const std::uint16_t bit = std::uint16_t(1) << (d - 1);
        std::vector<int> lines;
        std::vector<std::uint16_t> covers;
        for (int li = 0; li < 9; ++li) {
          const int u = axis == 0 ? li : 9 + li;
          std::uint16_t cover = 0;
          int n = 0;
          bool placed = false;
          for (int cell : t.units[u]) {
            if (b.val[cell] == d) placed = true;
            if (b.val[cell] == 0 && (b.cand[cell] & bit)) {
              cover |= std::uint16_t(1) << (axis == 0 ? cell % 9 : cell / 9);
              ++n;
            }
          }
          if (!placed && n >= 2 && n <= k) {
            lines.push_back(li);
            covers.push_back(cover);
          }
        }
        if (static_cast<int>(lines.size()) < k) continue;
        const bool hit = for_subsets(static_cast<int>(lines.size()), k, [&](const std::vector<int>& pick) {
          std::uint16_t cover = 0;
          for (int p : pick) cover |= covers[p];
          if (std::popcount(cover) != k) return false;
          bool any = false;
          for (int c2 = 0; c2 < 9; ++c2) {
            if (!(cover & (std::uint16_t(1) << c2))) continue;
            for (int li = 0; li < 9; ++li) {
              bool base = false;
              for (int p : pick) base |= lines[p] == li;
              if (base) continue;
              const int cell = axis == 0 ? li * 9 + c2 : c2 * 9 + li;
              any |= eliminate(b, cell, bit);
            }
          }
          return any;
        });
        if (hit) return {true, -1};
      }
    }
  }
  // XY-Wing
  auto is_peer = [&](int a2, int c2) {
    for (int p : t.peers[a2]) {
      if (p == c2) return true;
    }
    return false;
  };
  for (int pivot = 0; pivot < 81; ++pivot) {
    if (b.val[pivot] != 0 || std::popcount(b.cand[pivot]) != 2) continue;
    for (int wa : t.peers[pivot]) {
      if (b.val[wa] != 0 || std::popcount(b.cand[wa]) != 2) continue;
      const std::uint16_t shared_a = std::uint16_t(b.cand[pivot] & b.cand[wa]);
      if (std::popcount(shared_a) != 1) continue;
      for (int wb : t.peers[pivot]) {
        if (wb == wa || b.val[wb] != 0 || std::popcount(b.cand[wb]) != 2) continue;
        const std::uint16_t shared_b = std::uint16_t(b.cand[pivot] & b.cand[wb]);
        if (std::popcount(shared_b) != 1 || shared_a == shared_b) continue;
        if ((shared_a | shared_b) != b.cand[pivot]) continue;
        const std::uint16_t z = std::uint16_t(b.cand[wa] & b.cand[wb] & ~b.cand[pivot]);
        if (std::popcount(z) != 1) continue;
        bool any = false;
        for (int cell = 0; cell < 81; ++cell) {
          if (cell == pivot || cell == wa || cell == wb) continue;
          if (is_peer(wa, cell) && is_peer(wb, cell)) any |= eliminate(b, cell, z);
        }
        if (any) return {true, -1};
      }
    }
  }
  return {};
}

Fired level3(Board& b) {
  for (int cell = 0; cell < 81; ++cell) {
    if (b.val[cell] != 0) continue;
    for (int d = 1; d <= 9; ++d) {
      if (!(b.cand[cell] & (std::uint16_t(1) << (d - 1)))) continue;
      Board trial = b;
      const bool consistent = trial.assign(cell, d) && trial.propagate(nullptr);
      if (!consistent) {
        check(eliminate(b, cell, std::uint16_t(1) << (d - 1)),
              "sudoku classify: hypothesis elimination was a no-op");
        return {true, -1};
      }
    }
  }
  return {};
}

}  // namespace

SolveResult solve(const Grid& puzzle, int max_solutions) {
  check(max_solutions >= 1, "sudoku::solve: max_solutions must be >= 1");
  SolveResult out;
  std::vector<int> order;
  search(Board::from(puzzle), max_solutions, out, order);
  return out;
}

int rate(const Grid& puzzle) {
  const SolveResult r = solve(puzzle, 1);
  check(r.solutions >= 1, "sudoku::rate: puzzle has no solution");
  return r.guesses;
}

std::array<int, 81> tl_classify(const Grid& puzzle) {
  Board b = Board::from(puzzle);
  std::array<int, 81> levels;
  for (int i = 0; i < 81; ++i) levels[i] = puzzle[i] != 0 ? -1 : 4;
  int escalation = 0;
  while (b.open > 0) {
    Fired f = level0(b);
    int fired_level = 0;
    if (!f.any) {
      f = level1(b);
      fired_level = 1;
    }
    if (!f.any) {
      f = level2(b);
      fired_level = 2;
    }
    if (!f.any) {
      f = level3(b);
      fired_level = 3;
    }
    if (!f.any) break;  // remaining blanks stay level 4
    escalation = std::max(escalation, fired_level);
    if (f.placed >= 0) {
      levels[f.placed] = escalation;
      escalation = 0;
    }
  }
  return levels;
}

int tier_of(int rating) {
  check(rating >= 0, "tier_of: negative rating");
  if (rating == 0) return 0;
  if (rating <= 17) return 1;
  if (rating <= 34) return 2;
  if (rating <= 51) return 3;
  if (rating <= 101) return 4;
  return 5;
}

namespace {

bool fill_from(Board& board, int cell, Rng& rng) {
  while (cell < 81 && board.val[cell] != 0) ++cell;
  if (cell == 81) return true;
  std::vector<int> digits;
  for (int d = 1; d <= 9; ++d) {
    if (board.cand[cell] & (std::uint16_t(1) << (d - 1))) digits.push_back(d);
  }
  rng.shuffle(digits);
  for (int d : digits) {
    Board next = board;
    if (next.assign(cell, d) && fill_from(next, cell + 1, rng)) {
      board = next;
      return true;
    }
  }
  return false;
}

}  // namespace

Grid gen_full(std::uint64_t seed) {
  Rng rng(seed);
  Board b;
  b.cand.fill(kAll);
  check(fill_from(b, 0, rng), "sudoku::gen_full: backtracking failed");
  Grid g;
  for (int i = 0; i < 81; ++i) g[i] = b.val[i];
  return g;
}

Grid gen_puzzle(const Grid& full, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> order(81);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  Grid g = full;
  for (int cell : order) {
    const int saved = g[cell];
    g[cell] = 0;
    if (solve(g, 2).solutions != 1) g[cell] = saved;
  }
  return g;
}

std::vector<CsvPuzzle> load_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  check(is.good(), "cannot open puzzle csv: " + file.string());
  std::vector<CsvPuzzle> out;
  std::string line;
  long line_no = 0;
  int col_puzzle = 0, col_solution = 1, col_rating = 2;
  bool first = true;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) cols.push_back(part);
    if (first) {
      first = false;
      auto find_col = [&](const std::string& name) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          if (cols[i] == name) return static_cast<int>(i);
        }
        return -1;
      };
      const int p = find_col("puzzle");
      if (p >= 0) {  // header row
        col_puzzle = p;
        col_solution = find_col("solution");
        col_rating = find_col("rating");
        check(col_solution >= 0 && col_rating >= 0,
              file.string() + ":1: header lacks solution/rating columns");
        continue;
      }
    }
    const int need = std::max({col_puzzle, col_solution, col_rating});
    check(static_cast<int>(cols.size()) > need,
          file.string() + ":" + std::to_string(line_no) + ": too few columns");
    CsvPuzzle row;
    auto parse_grid = [&](const std::string& s, bool blanks_ok) {
      check(s.size() == 81, file.string() + ":" + std::to_string(line_no) + ": grid not 81 chars");
      Grid g;
      for (int i = 0; i < 81; ++i) {
        const char c = s[i];
        if (c == '.' && blanks_ok) {
          g[i] = 0;
        } else {
          check(c >= '1' && c <= '9',
                file.string() + ":" + std::to_string(line_no) + ": bad grid char");
          g[i] = c - '0';
        }
      }
      return g;
    };
    row.puzzle = parse_grid(cols[col_puzzle], true);
    row.solution = parse_grid(cols[col_solution], false);
    try {
      row.rating = std::stoi(cols[col_rating]);
    } catch (const std::exception&) {
      fail(file.string() + ":" + std::to_string(line_no) + ": bad rating");
    }
    out.push_back(row);
  }
  return out;
}

ReasoningInstance make_instance(const Grid& puzzle, const Grid& solution, int rating,
                                std::uint64_t seed, const Vocabulary& vocab) {
  ReasoningInstance inst;
  inst.task = Task::sudoku;
  inst.seed = seed;
  int blanks = 0;
  for (int i = 0; i < 81; ++i) {
    check(solution[i] >= 1 && solution[i] <= 9, "sudoku instance: incomplete solution");
    check(puzzle[i] == 0 || puzzle[i] == solution[i], "sudoku instance: puzzle disagrees with solution");
    blanks += puzzle[i] == 0 ? 1 : 0;
    inst.prompt.push_back(puzzle[i] == 0 ? vocab.id(".")
                                         : vocab.id(std::string(1, char('0' + puzzle[i]))));
  }
  inst.prompt.push_back(vocab.id("="));
  for (int i = 0; i < 81; ++i) {
    inst.answer.push_back(vocab.id(std::string(1, char('0' + solution[i]))));
  }
  check(blanks > 0, "sudoku instance: puzzle has no blanks");
  const std::array<int, 81> levels = tl_classify(puzzle);
  int tl4 = 0;
  for (int i = 0; i < 81; ++i) tl4 += levels[i] == 4 ? 1 : 0;
  inst.strata["rating"] = rating;
  inst.strata["tl4_frac"] = static_cast<double>(tl4) / blanks;
  inst.strata["blanks"] = blanks;
  return inst;
}

Grid grid_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab) {
  check(prompt.size() == 82, "sudoku prompt: expected 81 cells + '='");
  check(prompt[81] == vocab.id("="), "sudoku prompt: missing '='");
  Grid g;
  for (int i = 0; i < 81; ++i) {
    const std::string& t = vocab.str(prompt[i]);
    if (t == ".") {
      g[i] = 0;
    } else {
      check(t.size() == 1 && t[0] >= '1' && t[0] <= '9', "sudoku prompt: bad cell");
      g[i] = t[0] - '0';
    }
  }
  return g;
}

}  // namespace masklab::sudoku

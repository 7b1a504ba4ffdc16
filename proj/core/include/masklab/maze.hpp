#pragma once

#include <cstdint>
#include <vector>

#include "masklab/instance.hpp"
#include "masklab/vocab.hpp"

namespace masklab {

// Perfect maze on a rows x cols logical grid, rendered onto a
// (2*rows+1) x (2*cols+1) character grid: cell (2r+1, 2c+1) is a corridor,
// even-coordinate cells between two neighbors are openable walls, and the
// border is always wall. Corridors therefore form a tree (unique paths).
struct MazeSpec {
  int rows = 0, cols = 0;   // logical dimensions
  std::vector<char> grid;   // row-major over the rendered grid: '#', '.', 'S', 'E'
  int start = -1, end = -1;  // rendered-grid indices of 'S' and 'E'

  int grid_rows() const { return 2 * rows + 1; }
  int grid_cols() const { return 2 * cols + 1; }
  int grid_size() const { return grid_rows() * grid_cols(); }
  bool corridor(int idx) const { return grid[idx] != '#'; }
};

// Randomized depth-first spanning tree; start/end are a most-distant corridor
// pair (tree diameter endpoints, lowest scan index on ties).
MazeSpec gen_maze(int rows, int cols, std::uint64_t seed);

// Dead-end filling: iteratively delete degree-1 corridor cells (keeping S/E)
// until only the S-E backbone remains.
struct DeadEndFill {
  // Answer-grid labels per rendered cell: '#' wall, '0' eliminated corridor,
  // '1' backbone corridor, 'S'/'E' endpoints.
  std::vector<char> labels;
  // Corridor-cell grid indices in solver order: eliminated cells first
  // (fixpoint rounds, scan order within a round), then the backbone walked
  // from S to E. Covers every corridor cell exactly once.
  std::vector<int> reveal_order;
  // Longest run of consecutive backbone cells strictly between branch points
  // (corridor cells with 3+ corridor neighbors), counted on the rendered grid.
  int max_corridor = 0;
};

DeadEndFill dead_end_fill(const MazeSpec& maze);

// Sequence layout: prompt = rendered puzzle grid row-major + '=' separator,
// answer = rendered label grid row-major (same length as the puzzle grid).
ReasoningInstance maze_instance(const MazeSpec& maze, std::uint64_t seed, const Vocabulary& vocab);

// Rebuild the rendered maze from an instance prompt (used by decode policies
// and diagnostics; grid shape is inferred from the square length).
MazeSpec maze_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab);

}  // namespace masklab

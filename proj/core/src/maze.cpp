#include "masklab/maze.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "masklab/error.hpp"
#include "masklab/rng.hpp"

namespace masklab {

namespace {

struct GridDims {
  int gr, gc;
  int at(int r, int c) const { return r * gc + c; }
};

// BFS distances over corridor cells; parent trace enables path recovery.
void bfs(const MazeSpec& m, int from, std::vector<int>& dist, std::vector<int>& parent) {
  const GridDims g{m.grid_rows(), m.grid_cols()};
  dist.assign(m.grid_size(), -1);
  parent.assign(m.grid_size(), -1);
  std::vector<int> queue{from};
  dist[from] = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int cur = queue[qi];
    const int r = cur / g.gc, c = cur % g.gc;
    const std::array<int, 4> nbrs{g.at(r - 1, c), g.at(r + 1, c), g.at(r, c - 1), g.at(r, c + 1)};
    for (int nb : nbrs) {
      // border is always wall, so r/c never leave the grid here
      if (m.corridor(nb) && dist[nb] < 0) {
        dist[nb] = dist[cur] + 1;
        parent[nb] = cur;
        queue.push_back(nb);
      }
    }
  }
}

int farthest(const std::vector<int>& dist) {
  int best = -1, best_idx = -1;
  for (int i = 0; i < static_cast<int>(dist.size()); ++i) {
    if (dist[i] > best) {
      best = dist[i];
      best_idx = i;
    }
  }
  return best_idx;
}

}  // namespace

MazeSpec gen_maze(int rows, int cols, std::uint64_t seed) {
  check(rows >= 2 && cols >= 2, "gen_maze: need at least a 2x2 logical grid");
  Rng rng(seed);
  MazeSpec m;
  m.rows = rows;
  m.cols = cols;
  m.grid.assign(m.grid_size(), '#');
  const GridDims g{m.grid_rows(), m.grid_cols()};

  // Iterative randomized DFS over logical cells carves a spanning tree.
  std::vector<char> visited(rows * cols, 0);
  std::vector<int> stack{rng.range(0, rows * cols - 1)};
  visited[stack[0]] = 1;
  m.grid[g.at(2 * (stack[0] / cols) + 1, 2 * (stack[0] % cols) + 1)] = '.';
  const std::array<std::pair<int, int>, 4> dirs{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  while (!stack.empty()) {
    const int cur = stack.back();
    const int r = cur / cols, c = cur % cols;
    std::vector<int> open;
    for (int d = 0; d < 4; ++d) {
      const int nr = r + dirs[d].first, nc = c + dirs[d].second;
      if (nr >= 0 && nr < rows && nc >= 0 && nc < cols && !visited[nr * cols + nc]) open.push_back(d);
    }
    if (open.empty()) {
      stack.pop_back();
      continue;
    }
    const int d = open[rng.below(open.size())];
    const int nr = r + dirs[d].first, nc = c + dirs[d].second;
    visited[nr * cols + nc] = 1;
    m.grid[g.at(2 * nr + 1, 2 * nc + 1)] = '.';
    m.grid[g.at(r + nr + 1, c + nc + 1)] = '.';  // midpoint wall between the two cells
    stack.push_back(nr * cols + nc);
  }

  // Endpoints: double BFS gives a diameter pair of the corridor tree.
  std::vector<int> dist, parent;
  int seed_cell = -1;
  for (int i = 0; i < m.grid_size() && seed_cell < 0; ++i) {
    if (m.corridor(i)) seed_cell = i;
  }
  bfs(m, seed_cell, dist, parent);
  const int s = farthest(dist);
  bfs(m, s, dist, parent);
  const int e = farthest(dist);
  m.start = s;
  m.end = e;
  m.grid[s] = 'S';
  m.grid[e] = 'E';
  return m;
}

DeadEndFill dead_end_fill(const MazeSpec& maze) {
  check(maze.start >= 0 && maze.end >= 0, "dead_end_fill: maze lacks endpoints");
  const GridDims g{maze.grid_rows(), maze.grid_cols()};
  DeadEndFill out;
  out.labels.assign(maze.grid.begin(), maze.grid.end());

  std::vector<char> alive(maze.grid_size(), 0);
  for (int i = 0; i < maze.grid_size(); ++i) alive[i] = maze.corridor(i) ? 1 : 0;
  auto alive_neighbors = [&](int idx) {
    const int r = idx / g.gc, c = idx % g.gc;
    const std::array<int, 4> nbrs{g.at(r - 1, c), g.at(r + 1, c), g.at(r, c - 1), g.at(r, c + 1)};
    int n = 0;
    for (int nb : nbrs) n += alive[nb];
    return n;
  };

  // Rounds of simultaneous dead-end removal, scan order within each round.
  for (;;) {
    std::vector<int> doomed;
    for (int i = 0; i < maze.grid_size(); ++i) {
      if (alive[i] && i != maze.start && i != maze.end && alive_neighbors(i) <= 1) doomed.push_back(i);
    }
    if (doomed.empty()) break;
    for (int i : doomed) {
      alive[i] = 0;
      out.labels[i] = '0';
      out.reveal_order.push_back(i);
    }
  }

  // Survivors form the unique S-E backbone; walk it from S.
  std::vector<int> walk;
  int prev = -1, cur = maze.start;
  while (true) {
    walk.push_back(cur);
    out.reveal_order.push_back(cur);
    if (out.labels[cur] == '.') out.labels[cur] = '1';
    if (cur == maze.end) break;
    const int r = cur / g.gc, c = cur % g.gc;
    const std::array<int, 4> nbrs{g.at(r - 1, c), g.at(r + 1, c), g.at(r, c - 1), g.at(r, c + 1)};
    int next = -1;
    for (int nb : nbrs) {
      if (alive[nb] && nb != prev) {
        check(next < 0, "dead_end_fill: backbone is not a simple path");
        next = nb;
      }
    }
    check(next >= 0, "dead_end_fill: backbone disconnected");
    prev = cur;
    cur = next;
  }

  // Corridor runs between branch points, measured on the full corridor graph.
  auto corridor_neighbors = [&](int idx) {
    const int r = idx / g.gc, c = idx % g.gc;
    const std::array<int, 4> nbrs{g.at(r - 1, c), g.at(r + 1, c), g.at(r, c - 1), g.at(r, c + 1)};
    int n = 0;
    for (int nb : nbrs) n += maze.corridor(nb) ? 1 : 0;
    return n;
  };
  int run = 0;
  for (int idx : walk) {
    if (corridor_neighbors(idx) >= 3) {
      out.max_corridor = std::max(out.max_corridor, run);
      run = 0;
    } else {
      ++run;
    }
  }
  out.max_corridor = std::max(out.max_corridor, run);
  return out;
}

ReasoningInstance maze_instance(const MazeSpec& maze, std::uint64_t seed, const Vocabulary& vocab) {
  const DeadEndFill fill = dead_end_fill(maze);
  ReasoningInstance inst;
  inst.task = Task::maze;
  inst.seed = seed;
  inst.prompt.reserve(maze.grid_size() + 1);
  for (char ch : maze.grid) inst.prompt.push_back(vocab.id(std::string(1, ch)));
  inst.prompt.push_back(vocab.id("="));
  inst.answer.reserve(maze.grid_size());
  for (char ch : fill.labels) inst.answer.push_back(vocab.id(std::string(1, ch)));
  inst.strata["max_corridor"] = fill.max_corridor;
  return inst;
}

MazeSpec maze_from_prompt(const std::vector<int>& prompt, const Vocabulary& vocab) {
  check(prompt.size() >= 2, "maze_from_prompt: prompt too short");
  const int cells = static_cast<int>(prompt.size()) - 1;
  check(prompt.back() == vocab.id("="), "maze_from_prompt: missing separator");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cells))));
  check(side * side == cells && side % 2 == 1 && side >= 5,
        "maze_from_prompt: prompt is not an odd square grid");
  MazeSpec m;
  m.rows = (side - 1) / 2;
  m.cols = (side - 1) / 2;
  m.grid.resize(cells);
  for (int i = 0; i < cells; ++i) {
    const std::string& t = vocab.str(prompt[i]);
    check(t.size() == 1 && (t[0] == '#' || t[0] == '.' || t[0] == 'S' || t[0] == 'E'),
          "maze_from_prompt: unexpected token in grid");
    m.grid[i] = t[0];
    if (t[0] == 'S') m.start = i;
    if (t[0] == 'E') m.end = i;
  }
  check(m.start >= 0 && m.end >= 0, "maze_from_prompt: grid lacks S/E");
  return m;
}

}  // namespace masklab

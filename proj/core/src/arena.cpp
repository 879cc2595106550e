#include "dfrl/arena.hpp"

#include <algorithm>
#include <numeric>

#include "dfrl/error.hpp"
#include "dfrl/rng.hpp"

namespace dfrl {

Heading turn_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}

Heading turn_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}

Cell neighbor(Cell c, Heading h) {
  switch (h) {
    case Heading::kNorth: return {c.x, c.y - 1};
    case Heading::kEast: return {c.x + 1, c.y};
    case Heading::kSouth: return {c.x, c.y + 1};
    case Heading::kWest: return {c.x - 1, c.y};
  }
  return c;
}

char heading_char(Heading h) {
  constexpr char kChars[] = {'N', 'E', 'S', 'W'};
  return kChars[static_cast<int>(h)];
}

GridArena::GridArena(int width, int height, int num_blocks, std::uint64_t seed)
    : width_(width),
      height_(height),
      num_blocks_(num_blocks),
      seed_(seed),
      occupied_(static_cast<std::size_t>(width) * height, 0) {}

namespace {

// Flood fill over free cells from spawn; true if all free interior cells are reached.
bool interior_connected(int width, int height, const std::vector<std::uint8_t>& occupied) {
  const auto idx = [width](int x, int y) { return static_cast<std::size_t>(y) * width + x; };
  std::vector<std::uint8_t> seen(occupied.size(), 0);
  std::vector<Cell> stack{{1, 1}};
  seen[idx(1, 1)] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    ++reached;
    for (int h = 0; h < 4; ++h) {
      const Cell n = neighbor(c, static_cast<Heading>(h));
      if (n.x <= 0 || n.y <= 0 || n.x >= width - 1 || n.y >= height - 1) continue;
      if (occupied[idx(n.x, n.y)] || seen[idx(n.x, n.y)]) continue;
      seen[idx(n.x, n.y)] = 1;
      stack.push_back(n);
    }
  }
  const auto free_cells = static_cast<std::size_t>(
      std::count(occupied.begin(), occupied.end(), std::uint8_t{0}));
  return reached == free_cells;
}

}  // namespace

GridArena GridArena::generate(int width, int height, int num_blocks, std::uint64_t seed) {
  if (width < 3 || height < 3) {
    throw Error(ErrorCode::kInfeasibleArena,
                "arena must be at least 3x3 to have an interior");
  }
  if (num_blocks < 0) {
    throw Error(ErrorCode::kInfeasibleArena, "negative block count");
  }
  const int interior = (width - 2) * (height - 2);
  if (num_blocks > interior - 1) {
    throw Error(ErrorCode::kInfeasibleArena,
                "cannot place " + std::to_string(num_blocks) + " blocks in " +
                    std::to_string(interior) + " interior cells with one reserved for spawn");
  }

  GridArena arena(width, height, num_blocks, seed);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (arena.is_border({x, y})) arena.occupied_[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }

  // Candidate interior cells, excluding spawn, in row-major order.
  std::vector<Cell> candidates;
  for (int y = 1; y < height - 1; ++y) {
    for (int x = 1; x < width - 1; ++x) {
      if (Cell{x, y} != arena.spawn_cell()) candidates.push_back({x, y});
    }
  }

  Rng rng(derive_seed(seed, 0x41524e41ULL));
  int placed = 0;
  std::size_t remaining = candidates.size();
  std::vector<Cell> rejected;
  while (placed < num_blocks && remaining > 0) {
    // Partial Fisher-Yates: pick from the unconsumed prefix.
    const std::size_t pick = rng.uniform_index(remaining);
    std::swap(candidates[pick], candidates[remaining - 1]);
    const Cell c = candidates[remaining - 1];
    --remaining;
    auto& slot = arena.occupied_[static_cast<std::size_t>(c.y) * width + c.x];
    slot = 1;
    if (interior_connected(width, height, arena.occupied_)) {
      ++placed;
      // A rejected cut cell can become removable once the region behind it fills up.
      for (const Cell& r : rejected) candidates[remaining++] = r;
      rejected.clear();
    } else {
      slot = 0;
      rejected.push_back(c);
    }
  }
  if (placed < num_blocks) {
    throw Error(ErrorCode::kInfeasibleArena,
                "cannot place " + std::to_string(num_blocks) +
                    " blocks while keeping the interior connected");
  }
  return arena;
}

bool GridArena::is_obstacle(Cell c) const noexcept {
  if (!inside(c)) return true;
  return occupied_[static_cast<std::size_t>(c.y) * width_ + c.x] != 0;
}

bool GridArena::is_border(Cell c) const noexcept {
  return c.x == 0 || c.y == 0 || c.x == width_ - 1 || c.y == height_ - 1;
}

std::vector<Cell> GridArena::blocks() const {
  std::vector<Cell> out;
  for (int y = 1; y < height_ - 1; ++y) {
    for (int x = 1; x < width_ - 1; ++x) {
      if (is_obstacle({x, y})) out.push_back({x, y});
    }
  }
  return out;
}

std::string GridArena::to_ascii() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(width_ + 1) * height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const Cell c{x, y};
      out += c == spawn_cell() ? 'R' : (is_obstacle(c) ? '#' : '.');
    }
    out += '\n';
  }
  return out;
}

SensorState sense(const GridArena& arena, const RobotPose& pose) {
  const auto blocked = [&](Heading h) {
    return arena.is_obstacle(neighbor(pose.cell, h)) ? 1u : 0u;
  };
  const unsigned front = blocked(pose.heading);
  const unsigned left = blocked(turn_left(pose.heading));
  const unsigned right = blocked(turn_right(pose.heading));
  return SensorState{4 * front + 2 * left + right};
}

StepResult step(const GridArena& arena, const RobotPose& pose, Move move) {
  switch (move) {
    case Move::kForward: {
      const Cell ahead = neighbor(pose.cell, pose.heading);
      if (arena.is_obstacle(ahead)) return {pose, kCollisionReward, true};
      return {{ahead, pose.heading}, kForwardReward, false};
    }
    case Move::kTurnLeft:
      return {{pose.cell, turn_left(pose.heading)}, kTurnReward, false};
    case Move::kTurnRight:
      return {{pose.cell, turn_right(pose.heading)}, kTurnReward, false};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown move");
}

}  // namespace dfrl

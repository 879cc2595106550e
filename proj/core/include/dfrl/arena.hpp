#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfrl/q_table.hpp"

namespace dfrl {

struct Cell {
  int x = 0;
  int y = 0;

  bool operator==(const Cell&) const = default;
};

/// Compass heading; y grows southwards.
enum class Heading : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

enum class Move : ActionId { kForward = 0, kTurnLeft = 1, kTurnRight = 2 };

inline constexpr std::size_t kNumMoves = 3;
inline constexpr std::size_t kNumSensorStates = 8;

Heading turn_left(Heading h);
Heading turn_right(Heading h);
Cell neighbor(Cell c, Heading h);
char heading_char(Heading h);

struct RobotPose {
  Cell cell;
  Heading heading = Heading::kNorth;

  bool operator==(const RobotPose&) const = default;
};

/// 3-bit proximity reading: 4*front + 2*left + 1*right.
struct SensorState {
  StateId state_id = 0;

  bool front() const { return (state_id & 4u) != 0; }
  bool left() const { return (state_id & 2u) != 0; }
  bool right() const { return (state_id & 1u) != 0; }

  bool operator==(const SensorState&) const = default;
};

struct ArenaShape {
  int width = 12;
  int height = 12;
  int num_blocks = 0;

  bool operator==(const ArenaShape&) const = default;
};

/// Bounded grid with a solid border and single-cell obstacle blocks.
///
/// The spawn cell is always (1, 1) facing north, and blocks are never
/// placed there. Block placement also keeps the free interior connected so
/// that every free cell is reachable from spawn.
class GridArena {
 public:
  /// Deterministic in all four arguments. Throws kInfeasibleArena when the
  /// interior cannot host the requested blocks.
  static GridArena generate(int width, int height, int num_blocks, std::uint64_t seed);
  static GridArena generate(const ArenaShape& shape, std::uint64_t seed) {
    return generate(shape.width, shape.height, shape.num_blocks, seed);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int num_blocks() const noexcept { return num_blocks_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool inside(Cell c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  /// Cells outside the grid count as obstacles.
  bool is_obstacle(Cell c) const noexcept;
  bool is_border(Cell c) const noexcept;

  Cell spawn_cell() const noexcept { return {1, 1}; }
  RobotPose spawn_pose() const noexcept { return {spawn_cell(), Heading::kNorth}; }

  /// Interior obstacle cells in row-major order.
  std::vector<Cell> blocks() const;

  /// '#' obstacle, '.' free, 'R' spawn; one line per row.
  std::string to_ascii() const;

  bool operator==(const GridArena&) const = default;

 private:
  GridArena(int width, int height, int num_blocks, std::uint64_t seed);

  int width_;
  int height_;
  int num_blocks_;
  std::uint64_t seed_;
  std::vector<std::uint8_t> occupied_;
};

SensorState sense(const GridArena& arena, const RobotPose& pose);

struct StepResult {
  RobotPose pose;
  double reward = 0.0;
  bool collided = false;
};

inline constexpr double kForwardReward = 1.0;
inline constexpr double kCollisionReward = -10.0;
inline constexpr double kTurnReward = 0.0;

StepResult step(const GridArena& arena, const RobotPose& pose, Move move);

}  // namespace dfrl

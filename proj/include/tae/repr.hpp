#pragma once

#include <filesystem>

#include "tae/grid.hpp"
#include "tae/sim.hpp"

namespace tae {

// Which embodiment an observation describes.
enum class Actor { left_arm, right_arm, bimanual_pair };

// 4-channel end-effector map over a square window centered on the gripper
// (or the pincer midpoint), rendered in the local frame at theta = 0.
// Channel order is fixed: depth_open, mask_open, depth_closed, mask_closed.
struct EndEffectorRepr {
  GridMap depth_open;
  GridMap mask_open;
  GridMap depth_closed;
  GridMap mask_closed;

  const GridMap& channel(int k) const {
    switch (k) {
      case 0: return depth_open;
      case 1: return mask_open;
      case 2: return depth_closed;
      default: return mask_closed;
    }
  }
  GridMap& channel(int k) {
    return const_cast<GridMap&>(static_cast<const EndEffectorRepr&>(*this).channel(k));
  }
  void save(const std::filesystem::path& path) const;
  static EndEffectorRepr load(const std::filesystem::path& path);
};

struct SceneObs {
  GridMap height;
  void save(const std::filesystem::path& path) const;
  static SceneObs load(const std::filesystem::path& path);
};

struct ReprParams {
  MapGeometry ee_geom{{-0.25, -0.25}, {0.25, 0.25}, 112, 0.05};
};

// Top-down heightmap of unheld objects; arms and held tools excluded.
SceneObs render_scene(const WorldState& world);

// Depth = height above the grasp plane; masks flag contact-allowed geometry
// (pads for a bare gripper, tools only when tools are held).
EndEffectorRepr render_end_effector(const WorldState& world, Actor actor,
                                    const ReprParams& params = {});

}  // namespace tae

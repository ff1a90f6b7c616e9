#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tae/geometry.hpp"
#include "tae/grid.hpp"
#include "tae/rng.hpp"

namespace tae {

enum class SeedShape { I, L, T };

struct ShapeSpec {
  SeedShape seed_shape = SeedShape::I;
  double scale_x = 1.0;  // in [0.5, 1.5]
  double scale_y = 1.0;
  double limb_width = 0.03;   // meters, before scaling
  double prism_height = 0.03; // meters

  // Local-frame polygon, centered on its area centroid.
  Polygon footprint() const;
};

enum class ObjectRole { target, tool };

struct ObjectState {
  ShapeSpec shape;
  Pose2 pose;  // angle normalized to [0, 2*pi)
  ObjectRole role = ObjectRole::target;

  Polygon world_footprint() const { return transformed(shape.footprint(), pose); }
};

enum class ArmId { left, right };
enum class JawState { open, closed };

// A tool rigidly attached to a gripper. `attach` maps gripper frame to tool
// frame; pad_stop_* are the inner-face offsets where the jaws met the tool.
struct HeldTool {
  ObjectState tool;
  Pose2 attach;
  double pad_stop_a = 0.0;  // +closing-axis side, distance of inner face from center
  double pad_stop_b = 0.0;  // -closing-axis side
};

struct ArmState {
  ArmId arm_id = ArmId::left;
  Pose2 gripper_pose;
  JawState jaw = JawState::open;
  double jaw_gap_open = 0.08;
  double jaw_gap_closed = 0.005;
  double pad_half_len = 0.03;    // along the axis perpendicular to closing
  double pad_thickness = 0.02;   // along the closing axis
  double pad_height = 0.01;      // above the grasp plane
  std::optional<HeldTool> held_tool;
  Vec2 reach_center;
  double reach_radius = 0.45;

  bool in_reach(Vec2 p) const { return norm(p - reach_center) <= reach_radius; }
  // Pad polygons in the gripper frame, inner faces at +a / -b on the closing axis.
  Polygon pad_polygon_a(double inner_face) const;
  Polygon pad_polygon_b(double inner_face) const;
  Pose2 held_tool_world_pose() const;  // requires held_tool
};

struct ActionOutcome {
  bool success = false;
  bool illegal_contact = false;
  double displacement_x = 0.0;
  std::optional<ObjectState> attached_tool;
};

struct SimParams {
  MapGeometry scene_geom{{-0.125, -0.125}, {0.125, 0.125}, 64, 0.3};
  double arm_base_spacing = 1.0;
  double reach_radius = 0.45;
  double reach_center_offset = 0.32;  // from base toward the workspace center
  double jaw_gap_open = 0.08;
  double jaw_gap_closed = 0.005;
  double pad_half_len = 0.03;
  double pad_thickness = 0.02;
  double pad_height = 0.01;
  double push_distance = 0.30;
  double push_success_min = 0.10;
  double slip_ratio = 0.25;
  double deflect_factor = 0.5;
  double bimanual_gap_open = 0.08;
  double bimanual_gap_closed = 0.005;
  double prism_height = 0.03;
  int spawn_retries = 32;
};

struct WorldState {
  SimParams params;
  std::array<ArmState, 2> arms;
  std::vector<ObjectState> objects;  // live, unheld objects
  Rng rng;

  static WorldState make(const SimParams& params, uint64_t seed);
  ArmState& arm(ArmId id) { return arms[id == ArmId::left ? 0 : 1]; }
  const ArmState& arm(ArmId id) const { return arms[id == ArmId::left ? 0 : 1]; }
  const ObjectState* live_object() const;  // most recently spawned, or null
};

// Uniform seed shape (unless forced), scales uniform in [0.5, 1.5], position
// uniform inside bounds shrunk by the circumradius, angle uniform [0, 2*pi).
ObjectState spawn_object(WorldState& world, ObjectRole role,
                         std::optional<SeedShape> forced_shape = std::nullopt);

// Parallel-jaw closure test at `pose`. On success against a tool the tool
// attaches to the arm. See ActionOutcome for the failure taxonomy.
ActionOutcome grasp_primitive(WorldState& world, ArmId arm, const Pose2& pose);

// Quasi-static straight push along +x over params.push_distance.
ActionOutcome push_primitive(WorldState& world, ArmId arm, const Pose2& pose);

// Two held tools close like fingers around `pose`; theta must lie in [0, pi).
ActionOutcome bimanual_grasp_primitive(WorldState& world, const Pose2& pose);

const char* seed_shape_name(SeedShape s);

}  // namespace tae

#pragma once

#include "tae/model.hpp"
#include "tae/rng.hpp"
#include "tae/sim.hpp"

namespace tae {

struct ActionIndex {
  int i = 0;  // row
  int j = 0;  // column
  int k = 0;  // rotation slot
  bool operator==(const ActionIndex&) const = default;
};

struct ActionPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Greedy argmax over all H*W*K entries; ties resolve to the smallest flat
// index in (i, j, k) row-major order.
ActionIndex select_action(const QMap& q);

ActionPose index_to_pose(const ActionIndex& idx, const MapGeometry& geom, int k_rotations,
                         AngleCoding coding);
ActionIndex pose_to_index(const ActionPose& pose, const MapGeometry& geom, int k_rotations,
                          AngleCoding coding);

// Uniform position over the workspace bounds and uniform orientation over the
// coding's angle range.
ActionPose random_policy(const MapGeometry& geom, AngleCoding coding, Rng& rng);

// Ground-truth baseline: target centroid for grasps, centroid minus a fixed
// x offset for pushes; orientation uniform.
ActionPose scripted_policy(const WorldState& world, bool push_step, AngleCoding coding,
                           Rng& rng, double push_offset_x = 0.12);

}  // namespace tae

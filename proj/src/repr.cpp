#include "tae/repr.hpp"

#include <stdexcept>

#include "tae/errors.hpp"

namespace tae {

void EndEffectorRepr::save(const std::filesystem::path& path) const {
  const GridMap* chans[4] = {&depth_open, &mask_open, &depth_closed, &mask_closed};
  write_rgm1_channels(path, chans);
}

EndEffectorRepr EndEffectorRepr::load(const std::filesystem::path& path) {
  const Rgm1 t = read_rgm1(path);
  if (t.c != 4 || t.h != t.w) throw DataError("end-effector map must be square x4 channels");
  EndEffectorRepr e;
  for (int k = 0; k < 4; ++k) {
    GridMap& m = e.channel(k);
    m.width = t.w;
    m.height = t.h;
    m.values.resize(size_t(t.h) * t.w);
    for (int i = 0; i < t.h; ++i)
      for (int j = 0; j < t.w; ++j) m.at(i, j) = t.at(i, j, k);
  }
  return e;
}

void SceneObs::save(const std::filesystem::path& path) const {
  const GridMap* chans[1] = {&height};
  write_rgm1_channels(path, chans);
}

SceneObs SceneObs::load(const std::filesystem::path& path) {
  const Rgm1 t = read_rgm1(path);
  if (t.c != 1) throw DataError("scene map must be single channel");
  SceneObs s;
  s.height.width = t.w;
  s.height.height = t.h;
  s.height.values = t.data;
  return s;
}

SceneObs render_scene(const WorldState& world) {
  const MapGeometry& geom = world.params.scene_geom;
  SceneObs obs;
  obs.height = GridMap::make(geom);
  for (const ObjectState& o : world.objects) {
    const float h = float(std::min(o.shape.prism_height, geom.height_clip));
    render_footprint_into(obs.height, geom, o.world_footprint(), h);
  }
  return obs;
}

namespace {

// One rigid piece of end-effector geometry in the local render frame.
struct Piece {
  Polygon poly;
  float height = 0.0f;
  bool contact_allowed = true;
};

void render_pieces(const std::vector<Piece>& pieces, const MapGeometry& geom,
                   GridMap& depth, GridMap& mask) {
  depth = GridMap::make(geom);
  mask = GridMap::make(geom);
  // Depth combines by max; disallowed geometry then clears the mask.
  for (const Piece& p : pieces) {
    render_footprint_into(depth, geom, p.poly, p.height);
    if (p.contact_allowed) stamp_footprint(mask, geom, p.poly, 1.0f);
  }
  for (const Piece& p : pieces)
    if (!p.contact_allowed) stamp_footprint(mask, geom, p.poly, 0.0f);
}

// Pads + held tool for one arm, in the arm's gripper frame offset by `base`.
void arm_pieces(const ArmState& arm, const Pose2& base, bool open_jaw,
                std::vector<Piece>& out) {
  const bool tool_held = arm.held_tool.has_value();
  double fa, fb;
  if (open_jaw) {
    fa = fb = arm.jaw_gap_open / 2;
  } else if (tool_held) {
    fa = arm.held_tool->pad_stop_a;
    fb = arm.held_tool->pad_stop_b;
  } else {
    fa = fb = arm.jaw_gap_closed / 2;
  }
  const float pad_h = float(arm.pad_height);
  out.push_back({transformed(arm.pad_polygon_a(fa), base), pad_h, !tool_held});
  out.push_back({transformed(arm.pad_polygon_b(fb), base), pad_h, !tool_held});
  if (tool_held) {
    const Pose2 tool_pose = base.compose(arm.held_tool->attach);
    out.push_back({transformed(arm.held_tool->tool.shape.footprint(), tool_pose),
                   float(arm.held_tool->tool.shape.prism_height), true});
  }
}

}  // namespace

EndEffectorRepr render_end_effector(const WorldState& world, Actor actor,
                                    const ReprParams& params) {
  const MapGeometry& geom = params.ee_geom;
  EndEffectorRepr e;

  auto build = [&](bool open_jaw, GridMap& depth, GridMap& mask) {
    std::vector<Piece> pieces;
    if (actor == Actor::bimanual_pair) {
      const ArmState& left = world.arm(ArmId::left);
      const ArmState& right = world.arm(ArmId::right);
      if (!left.held_tool || !right.held_tool)
        throw std::invalid_argument("bimanual end-effector needs two held tools");
      const double sep =
          (open_jaw ? world.params.bimanual_gap_open : world.params.bimanual_gap_closed) / 2;
      // Pincer closing axis is +y at the canonical orientation. Jaw state of
      // each arm stays at its grasp stops; the pincer separation is what the
      // open/closed pair of channels varies.
      arm_pieces(left, {0.0, -sep, 0.0}, false, pieces);
      arm_pieces(right, {0.0, sep, 0.0}, false, pieces);
    } else {
      const ArmState& arm = world.arm(actor == Actor::left_arm ? ArmId::left : ArmId::right);
      arm_pieces(arm, {0.0, 0.0, 0.0}, open_jaw, pieces);
    }
    render_pieces(pieces, geom, depth, mask);
  };

  build(true, e.depth_open, e.mask_open);
  build(false, e.depth_closed, e.mask_closed);
  return e;
}

}  // namespace tae

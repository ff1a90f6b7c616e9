#include "tae/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tae {

namespace {

// Seed shape outlines before scaling, axis-aligned, widths = limb_width.
Polygon seed_outline(SeedShape s, double w) {
  switch (s) {
    case SeedShape::I: {
      const double len = 0.10;
      return make_rect({0, 0}, len / 2, w / 2);
    }
    case SeedShape::L: {
      const double lx = 0.09, ly = 0.07;
      return {{0, 0}, {lx, 0}, {lx, w}, {w, w}, {w, ly}, {0, ly}};
    }
    case SeedShape::T: {
      const double bar = 0.08, stem = 0.05;
      const double cx = bar / 2;
      return {{cx - w / 2, 0}, {cx + w / 2, 0}, {cx + w / 2, stem}, {bar, stem},
              {bar, stem + w}, {0, stem + w},   {0, stem},          {cx - w / 2, stem}};
    }
  }
  return {};
}

}  // namespace

Polygon ShapeSpec::footprint() const {
  Polygon p = seed_outline(seed_shape, limb_width);
  const Vec2 c = polygon_centroid(p);
  for (Vec2& v : p) {
    v.x = (v.x - c.x) * scale_x;
    v.y = (v.y - c.y) * scale_y;
  }
  return p;
}

const char* seed_shape_name(SeedShape s) {
  switch (s) {
    case SeedShape::I: return "I";
    case SeedShape::L: return "L";
    case SeedShape::T: return "T";
  }
  return "?";
}

Polygon ArmState::pad_polygon_a(double inner_face) const {
  return make_rect({0, inner_face + pad_thickness / 2}, pad_half_len, pad_thickness / 2);
}

Polygon ArmState::pad_polygon_b(double inner_face) const {
  return make_rect({0, -inner_face - pad_thickness / 2}, pad_half_len, pad_thickness / 2);
}

Pose2 ArmState::held_tool_world_pose() const {
  return gripper_pose.compose(held_tool->attach);
}

WorldState WorldState::make(const SimParams& params, uint64_t seed) {
  WorldState w{params, {}, {}, Rng(mix_seed(seed, uint64_t(SeedSpace::world)))};
  const Vec2 scene_center = 0.5 * (params.scene_geom.bounds_min + params.scene_geom.bounds_max);
  for (int k = 0; k < 2; ++k) {
    ArmState& arm = w.arms[k];
    arm.arm_id = k == 0 ? ArmId::left : ArmId::right;
    const double side = k == 0 ? -1.0 : 1.0;
    const Vec2 base{scene_center.x, scene_center.y + side * params.arm_base_spacing / 2};
    const Vec2 toward{scene_center.x - base.x, scene_center.y - base.y};
    const double d = norm(toward);
    arm.reach_center = base + (params.reach_center_offset / d) * toward;
    arm.reach_radius = params.reach_radius;
    arm.jaw_gap_open = params.jaw_gap_open;
    arm.jaw_gap_closed = params.jaw_gap_closed;
    arm.pad_half_len = params.pad_half_len;
    arm.pad_thickness = params.pad_thickness;
    arm.pad_height = params.pad_height;
  }
  return w;
}

const ObjectState* WorldState::live_object() const {
  return objects.empty() ? nullptr : &objects.back();
}

ObjectState spawn_object(WorldState& world, ObjectRole role,
                         std::optional<SeedShape> forced_shape) {
  for (const ObjectState& o : world.objects)
    if (o.role == role) throw std::logic_error("spawn_object: live object of that role exists");

  ObjectState obj;
  obj.role = role;
  if (forced_shape) {
    obj.shape.seed_shape = *forced_shape;
  } else {
    const SeedShape shapes[3] = {SeedShape::I, SeedShape::L, SeedShape::T};
    obj.shape.seed_shape = shapes[world.rng.below(3)];
  }
  obj.shape.scale_x = world.rng.uniform(0.5, 1.5);
  obj.shape.scale_y = world.rng.uniform(0.5, 1.5);
  obj.shape.prism_height = world.params.prism_height;
  const double angle = world.rng.uniform(0.0, 2.0 * M_PI);

  const MapGeometry& geom = world.params.scene_geom;
  const double margin = circumradius(obj.shape.footprint());
  const double lo_x = geom.bounds_min.x + margin, hi_x = geom.bounds_max.x - margin;
  const double lo_y = geom.bounds_min.y + margin, hi_y = geom.bounds_max.y - margin;
  Vec2 pos{0.5 * (geom.bounds_min.x + geom.bounds_max.x),
           0.5 * (geom.bounds_min.y + geom.bounds_max.y)};
  if (lo_x < hi_x && lo_y < hi_y) {
    pos.x = world.rng.uniform(lo_x, hi_x);
    pos.y = world.rng.uniform(lo_y, hi_y);
  }
  obj.pose = {pos.x, pos.y, normalize_angle(angle)};
  world.objects.push_back(obj);
  return obj;
}

namespace {

struct Body {
  Polygon poly;
  bool contact_allowed = true;  // mask-1 geometry
};

// First-contact scan for a group of rigid bodies moving together.
struct GroupSweep {
  double first_t = std::numeric_limits<double>::infinity();
  bool first_by_allowed = true;
  bool pad_touch = false;  // a disallowed body touches at the group stop time
};

GroupSweep sweep_group(const std::vector<Body>& bodies, Vec2 dir, const Polygon& target,
                       double travel_limit) {
  GroupSweep r;
  std::vector<double> times(bodies.size(), std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < bodies.size(); ++i) {
    if (auto t = sweep_gap(bodies[i].poly, dir, target)) times[i] = *t;
    if (times[i] < r.first_t) {
      r.first_t = times[i];
      r.first_by_allowed = bodies[i].contact_allowed;
    }
  }
  const double stop = std::min(r.first_t, travel_limit);
  for (size_t i = 0; i < bodies.size(); ++i)
    if (!bodies[i].contact_allowed && times[i] <= stop + 1e-12) r.pad_touch = true;
  return r;
}

bool pose_reachable(const WorldState& world, const ArmState& arm, const Pose2& pose) {
  return world.params.scene_geom.contains({pose.x, pose.y}) && arm.in_reach({pose.x, pose.y});
}

std::vector<Body> pusher_bodies(const ArmState& arm, const Pose2& gp) {
  const bool tool_held = arm.held_tool.has_value();
  std::vector<Body> bodies;
  const double fa = tool_held ? arm.held_tool->pad_stop_a : arm.jaw_gap_closed / 2;
  const double fb = tool_held ? arm.held_tool->pad_stop_b : arm.jaw_gap_closed / 2;
  bodies.push_back({transformed(arm.pad_polygon_a(fa), gp), !tool_held});
  bodies.push_back({transformed(arm.pad_polygon_b(fb), gp), !tool_held});
  if (tool_held) {
    const Pose2 tool_pose = gp.compose(arm.held_tool->attach);
    bodies.push_back({transformed(arm.held_tool->tool.shape.footprint(), tool_pose), true});
  }
  return bodies;
}

void erase_object(WorldState& world, const ObjectState* obj) {
  for (auto it = world.objects.begin(); it != world.objects.end(); ++it) {
    if (&*it == obj) {
      world.objects.erase(it);
      return;
    }
  }
}

}  // namespace

ActionOutcome grasp_primitive(WorldState& world, ArmId arm_id, const Pose2& pose) {
  ActionOutcome out;
  ArmState& arm = world.arm(arm_id);
  const ObjectState* target = world.live_object();
  arm.gripper_pose = pose;
  if (!target || !pose_reachable(world, arm, pose)) return out;

  const Polygon tpoly = target->world_footprint();
  const bool tool_held = arm.held_tool.has_value();
  const double f_open = arm.jaw_gap_open / 2;
  const double f_closed = arm.jaw_gap_closed / 2;
  const double travel = f_open - f_closed;

  const Polygon pad_a = transformed(arm.pad_polygon_a(f_open), pose);
  const Polygon pad_b = transformed(arm.pad_polygon_b(f_open), pose);

  // Approach collision: open-configuration footprints must not overlap.
  if (polygons_overlap(pad_a, tpoly) || polygons_overlap(pad_b, tpoly)) {
    out.illegal_contact = tool_held;
    return out;
  }
  if (tool_held) {
    const Pose2 tool_pose = pose.compose(arm.held_tool->attach);
    if (polygons_overlap(transformed(arm.held_tool->tool.shape.footprint(), tool_pose), tpoly))
      return out;
  }

  const Vec2 u{-std::sin(pose.theta), std::cos(pose.theta)};  // closing axis
  const auto t_a = sweep_gap(pad_a, {-u.x, -u.y}, tpoly);
  const auto t_b = sweep_gap(pad_b, u, tpoly);
  const bool contact_a = t_a && *t_a < travel;
  const bool contact_b = t_b && *t_b < travel;

  if (tool_held) {
    // Pads are mask-0 while a tool is held; touching the target is illegal.
    if (contact_a || contact_b) out.illegal_contact = true;
    return out;
  }
  if (!(contact_a && contact_b)) return out;

  out.success = true;
  arm.jaw = JawState::closed;
  if (target->role == ObjectRole::tool) {
    HeldTool held;
    held.tool = *target;
    held.attach = pose.inverse().compose(target->pose);
    held.pad_stop_a = f_open - *t_a;
    held.pad_stop_b = f_open - *t_b;
    out.attached_tool = *target;
    arm.held_tool = held;
  }
  erase_object(world, target);  // grasped objects leave the plane
  return out;
}

ActionOutcome push_primitive(WorldState& world, ArmId arm_id, const Pose2& pose) {
  ActionOutcome out;
  ArmState& arm = world.arm(arm_id);
  ObjectState* target = world.objects.empty() ? nullptr : &world.objects.back();
  arm.gripper_pose = pose;
  arm.jaw = JawState::closed;
  if (!target || !pose_reachable(world, arm, pose)) return out;

  const Polygon tpoly = target->world_footprint();
  const std::vector<Body> bodies = pusher_bodies(arm, pose);
  const double len = world.params.push_distance;

  const GroupSweep sweep = sweep_group(bodies, {1.0, 0.0}, tpoly, len);
  if (sweep.first_t >= len) return out;  // never reaches the object
  out.illegal_contact = sweep.pad_touch;

  Interval pusher_shadow{std::numeric_limits<double>::infinity(),
                         -std::numeric_limits<double>::infinity()};
  for (const Body& b : bodies) {
    const Interval s = y_shadow(b.poly);
    pusher_shadow.lo = std::min(pusher_shadow.lo, s.lo);
    pusher_shadow.hi = std::max(pusher_shadow.hi, s.hi);
  }
  const Interval obj_shadow = y_shadow(tpoly);
  const double w = interval_overlap(pusher_shadow, obj_shadow);
  const double extent = obj_shadow.length();
  const double r = extent > 0 ? w / extent : 0.0;

  const double run = len - sweep.first_t;
  if (r >= world.params.slip_ratio) {
    out.displacement_x = std::max(0.0, run);
  } else if (r > 0.0) {
    out.displacement_x = std::max(0.0, world.params.deflect_factor * run);
  }
  target->pose.x += out.displacement_x;
  out.success = out.displacement_x >= world.params.push_success_min && !out.illegal_contact;
  return out;
}

ActionOutcome bimanual_grasp_primitive(WorldState& world, const Pose2& pose) {
  if (pose.theta < 0.0 || pose.theta >= M_PI)
    throw std::invalid_argument("bimanual_grasp_primitive: theta must lie in [0, pi)");
  ArmState& left = world.arm(ArmId::left);
  ArmState& right = world.arm(ArmId::right);
  if (!left.held_tool || !right.held_tool)
    throw std::invalid_argument("bimanual_grasp_primitive: both arms must hold tools");

  ActionOutcome out;
  const ObjectState* target = world.live_object();
  const double f_open = world.params.bimanual_gap_open / 2;
  const double f_closed = world.params.bimanual_gap_closed / 2;
  const double travel = f_open - f_closed;
  const Vec2 u{-std::sin(pose.theta), std::cos(pose.theta)};

  const Pose2 pose_l{pose.x - f_open * u.x, pose.y - f_open * u.y, pose.theta};
  const Pose2 pose_r{pose.x + f_open * u.x, pose.y + f_open * u.y, pose.theta};
  left.gripper_pose = pose_l;
  right.gripper_pose = pose_r;
  if (!target) return out;
  if (!world.params.scene_geom.contains({pose.x, pose.y}) ||
      !left.in_reach({pose.x, pose.y}) || !right.in_reach({pose.x, pose.y}))
    return out;

  const Polygon tpoly = target->world_footprint();
  auto group_bodies = [&](const ArmState& arm, const Pose2& gp) {
    std::vector<Body> bodies;
    const Pose2 tool_pose = gp.compose(arm.held_tool->attach);
    bodies.push_back({transformed(arm.held_tool->tool.shape.footprint(), tool_pose), true});
    bodies.push_back({transformed(arm.pad_polygon_a(arm.held_tool->pad_stop_a), gp), false});
    bodies.push_back({transformed(arm.pad_polygon_b(arm.held_tool->pad_stop_b), gp), false});
    return bodies;
  };
  const std::vector<Body> bodies_l = group_bodies(left, pose_l);
  const std::vector<Body> bodies_r = group_bodies(right, pose_r);

  for (const auto* bodies : {&bodies_l, &bodies_r}) {
    for (const Body& b : *bodies) {
      if (polygons_overlap(b.poly, tpoly)) {
        out.illegal_contact = !b.contact_allowed;
        return out;
      }
    }
  }

  const GroupSweep sl = sweep_group(bodies_l, u, tpoly, travel);
  const GroupSweep sr = sweep_group(bodies_r, {-u.x, -u.y}, tpoly, travel);
  out.illegal_contact = sl.pad_touch || sr.pad_touch;
  const bool closed_l = sl.first_t < travel && sl.first_by_allowed;
  const bool closed_r = sr.first_t < travel && sr.first_by_allowed;
  if (closed_l && closed_r && !out.illegal_contact) {
    out.success = true;
    erase_object(world, target);
  }
  return out;
}

}  // namespace tae

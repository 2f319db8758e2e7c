#include "patchnav/kinematic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace patchnav {

void RobotParams::validate() const {
    if (track_width <= 0.0) throw std::invalid_argument("track_width must be positive");
    if (a_max <= 0.0) throw std::invalid_argument("a_max must be positive");
    if (v_max <= 0.0) throw std::invalid_argument("v_max must be positive");
    if (accel_levels < 2) throw std::invalid_argument("accel_levels must be at least 2");
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    if (num_iter < 1) throw std::invalid_argument("num_iter must be at least 1");
    if (voxel_size <= 0.0) throw std::invalid_argument("voxel_size must be positive");
    if (goal_tol <= 0.0) throw std::invalid_argument("goal_tol must be positive");
    if (max_expansions < 1) throw std::invalid_argument("max_expansions must be positive");
}

const char* to_string(PlanStatus status) {
    switch (status) {
        case PlanStatus::Success: return "success";
        case PlanStatus::StartSnapFailed: return "start-snap-failed";
        case PlanStatus::GoalSnapFailed: return "goal-snap-failed";
        case PlanStatus::Infeasible: return "infeasible";
    }
    return "?";
}

RobotState state_transition(const Waypoint& w, const Vec2& accel, const RobotParams& robot) {
    const RobotState& s = w.state;
    const Patch& patch = *w.patch;
    const double dt = robot.dt;
    const double l = robot.track_width;

    RobotState out = s;
    const double dtheta =
        (s.v_left - s.v_right) / l * dt + (accel.x() - accel.y()) / (2.0 * l) * dt * dt;
    out.theta = wrap_angle(s.theta + dtheta);

    const double lo = robot.forward_only ? 0.0 : -robot.v_max;
    out.v_left = std::clamp(s.v_left + accel.x() * dt, lo, robot.v_max);
    out.v_right = std::clamp(s.v_right + accel.y() * dt, lo, robot.v_max);

    // Central velocity components in the patch frame vary linearly over dt.
    const double v_prev = 0.5 * (s.v_left + s.v_right);
    const double v_next = 0.5 * (out.v_left + out.v_right);
    const double dx_local = 0.5 * (v_prev * std::cos(s.theta) + v_next * std::cos(out.theta)) * dt;
    const double dy_local = 0.5 * (v_prev * std::sin(s.theta) + v_next * std::sin(out.theta)) * dt;

    const Mat2 rot = patch.rot2();
    out.position.x() = s.position.x() + rot(0, 0) * dx_local + rot(0, 1) * dy_local;
    out.position.y() = s.position.y() + rot(1, 0) * dx_local + rot(1, 1) * dy_local;
    out.position.z() = patch.height_at(out.position.x(), out.position.y());
    return out;
}

std::optional<double> adjust_orientation(double theta_pm, const Patch& prev, const Patch& cur) {
    const Vec2 heading(std::cos(theta_pm), std::sin(theta_pm));
    const Vec2 proj = prev.rot2() * heading;  // world-xy projection of the heading
    if (proj.norm() <= 1e-12) return std::nullopt;
    // Heading on the new patch whose world-xy projection matches, up to the
    // positive scale k: cur.rot2() * k * (cos, sin) = proj.
    const Vec2 v = cur.rot2().inverse() * proj;
    if (v.norm() <= 1e-12) return std::nullopt;
    return std::atan2(v.y(), v.x());
}

double adjust_z(double x, double y, const Patch& patch) { return patch.height_at(x, y); }

std::vector<Vec2> control_set(const RobotParams& robot) {
    std::vector<double> levels(static_cast<std::size_t>(robot.accel_levels));
    for (int i = 0; i < robot.accel_levels; ++i)
        levels[static_cast<std::size_t>(i)] =
            -robot.a_max + 2.0 * robot.a_max * i / (robot.accel_levels - 1);
    std::vector<Vec2> controls;
    controls.reserve(levels.size() * levels.size());
    for (double left : levels)
        for (double right : levels) controls.emplace_back(left, right);
    return controls;
}

std::optional<MotionPrimitive> integrate_primitive(const Waypoint& from, const Vec2& control,
                                                   const MultiLevelMap& map,
                                                   const RobotParams& robot) {
    MotionPrimitive prim;
    prim.control = control;
    prim.duration = robot.num_iter * robot.dt;
    prim.waypoints.reserve(static_cast<std::size_t>(robot.num_iter));

    Waypoint w = from;
    for (int k = 0; k < robot.num_iter; ++k) {
        RobotState next = state_transition(w, control, robot);
        const MeshIndex cell = locate_cell(next.position.x(), next.position.y(), map.params());
        if (!(cell == w.patch->home)) {
            const Patch* found = locate_patch(map, next.position.x(), next.position.y(), *w.patch);
            if (!found) return std::nullopt;
            const auto theta = adjust_orientation(next.theta, *w.patch, *found);
            if (!theta) return std::nullopt;
            next.theta = *theta;
            next.position.z() = adjust_z(next.position.x(), next.position.y(), *found);
            w.patch = found;
        }
        w.state = next;
        prim.waypoints.push_back(w);
    }
    return prim;
}

std::vector<MotionPrimitive> expand_node(const Waypoint& from, const MultiLevelMap& map,
                                         const RobotParams& robot) {
    std::vector<MotionPrimitive> out;
    for (const Vec2& u : control_set(robot))
        if (auto prim = integrate_primitive(from, u, map, robot)) out.push_back(std::move(*prim));
    return out;
}

namespace {

std::uint64_t voxel_of(const Vec3& pos, double voxel_size) {
    const auto vx = static_cast<std::int64_t>(std::floor(pos.x() / voxel_size));
    const auto vy = static_cast<std::int64_t>(std::floor(pos.y() / voxel_size));
    const auto vz = static_cast<std::int64_t>(std::floor(pos.z() / voxel_size));
    constexpr std::int64_t kBias = 1 << 20;
    constexpr std::uint64_t kMask = (1 << 21) - 1;
    return ((static_cast<std::uint64_t>(vx + kBias) & kMask) << 42) |
           ((static_cast<std::uint64_t>(vy + kBias) & kMask) << 21) |
           (static_cast<std::uint64_t>(vz + kBias) & kMask);
}

struct Node {
    Waypoint wp;
    double g = 0.0;
    std::int32_t parent = -1;
    Vec2 control = Vec2::Zero();
    std::uint64_t voxel = 0;
    bool closed = false;
};

struct OpenEntry {
    double f;
    double h;
    std::uint64_t seq;
    std::int32_t node;
};

struct OpenOrder {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
        if (a.f != b.f) return a.f > b.f;
        if (a.h != b.h) return a.h > b.h;
        return a.seq > b.seq;
    }
};

// Heading whose world-xy projection points along dir_xy; zero when degenerate.
double heading_toward(const Patch& patch, const Vec2& dir_xy) {
    if (dir_xy.norm() < 1e-12) return 0.0;
    const Vec2 v = patch.rot2().inverse() * dir_xy;
    if (v.norm() <= 1e-12) return 0.0;
    return std::atan2(v.y(), v.x());
}

}  // namespace

PlanResult search(const MultiLevelMap& map, const Vec3& start, const Vec3& goal,
                  const RobotParams& robot, SearchTrace* trace) {
    robot.validate();
    PlanResult result;

    const Patch* start_patch = locate_patch(map, start.x(), start.y(), start.z());
    if (!start_patch) {
        result.status = PlanStatus::StartSnapFailed;
        return result;
    }
    const Patch* goal_patch = locate_patch(map, goal.x(), goal.y(), goal.z());
    if (!goal_patch) {
        result.status = PlanStatus::GoalSnapFailed;
        return result;
    }

    const Vec3 start_pos(start.x(), start.y(), start_patch->height_at(start.x(), start.y()));
    const Vec3 goal_pos(goal.x(), goal.y(), goal_patch->height_at(goal.x(), goal.y()));

    Waypoint start_wp;
    start_wp.state.position = start_pos;
    start_wp.state.theta =
        heading_toward(*start_patch, Vec2(goal_pos.x() - start_pos.x(), goal_pos.y() - start_pos.y()));
    start_wp.patch = start_patch;

    auto heuristic = [&](const Vec3& pos) {
        return std::hypot(goal_pos.x() - pos.x(), goal_pos.y() - pos.y()) / robot.v_max;
    };

    if ((goal_pos - start_pos).norm() <= robot.goal_tol) {
        result.status = PlanStatus::Success;
        result.trajectory.waypoints.push_back(start_wp);
        result.trajectory.times.push_back(0.0);
        return result;
    }

    const std::vector<Vec2> controls = control_set(robot);
    const double edge_cost = robot.num_iter * robot.dt;

    std::vector<Node> nodes;
    nodes.reserve(4096);
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
    std::unordered_map<std::uint64_t, std::int32_t> voxel_owner;
    std::uint64_t seq = 0;

    Node root;
    root.wp = start_wp;
    root.voxel = voxel_of(start_pos, robot.voxel_size);
    nodes.push_back(root);
    voxel_owner[root.voxel] = 0;
    open.push(OpenEntry{heuristic(start_pos), heuristic(start_pos), seq++, 0});

    std::int32_t goal_node = -1;
    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        {
            auto it = voxel_owner.find(nodes[static_cast<std::size_t>(top.node)].voxel);
            if (it == voxel_owner.end() || it->second != top.node) continue;  // superseded
        }
        Node& current = nodes[static_cast<std::size_t>(top.node)];
        if (current.closed) continue;
        current.closed = true;

        if ((current.wp.state.position - goal_pos).norm() <= robot.goal_tol) {
            goal_node = top.node;
            break;
        }
        if (result.stats.expansions >= robot.max_expansions) break;
        ++result.stats.expansions;

        for (const Vec2& u : controls) {
            auto prim = integrate_primitive(current.wp, u, map, robot);
            if (!prim) continue;
            ++result.stats.generated;

            Node child;
            child.wp = prim->waypoints.back();
            child.g = current.g + edge_cost;
            child.parent = top.node;
            child.control = u;
            child.voxel = voxel_of(child.wp.state.position, robot.voxel_size);

            auto [it, inserted] = voxel_owner.try_emplace(child.voxel, 0);
            if (!inserted) {
                const Node& incumbent = nodes[static_cast<std::size_t>(it->second)];
                if (child.g >= incumbent.g) {  // ties keep the earlier node
                    ++result.stats.pruned;
                    if (trace) trace->events.push_back({child.voxel, child.g, false});
                    continue;
                }
            }
            const auto child_id = static_cast<std::int32_t>(nodes.size());
            nodes.push_back(child);
            it->second = child_id;
            if (trace) trace->events.push_back({child.voxel, child.g, true});
            const double h = heuristic(child.wp.state.position);
            open.push(OpenEntry{child.g + h, h, seq++, child_id});
        }
    }

    if (goal_node < 0) {
        result.status = PlanStatus::Infeasible;
        return result;
    }

    std::vector<std::int32_t> chain;
    for (std::int32_t id = goal_node; id >= 0; id = nodes[static_cast<std::size_t>(id)].parent)
        chain.push_back(id);
    std::reverse(chain.begin(), chain.end());

    Trajectory& traj = result.trajectory;
    traj.waypoints.push_back(start_wp);
    traj.times.push_back(0.0);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const Node& parent = nodes[static_cast<std::size_t>(chain[i - 1])];
        const Node& node = nodes[static_cast<std::size_t>(chain[i])];
        auto prim = integrate_primitive(parent.wp, node.control, map, robot);
        for (const Waypoint& w : prim->waypoints) {
            traj.waypoints.push_back(w);
            traj.controls.push_back(node.control);
            traj.times.push_back(traj.times.back() + robot.dt);
        }
    }
    result.status = PlanStatus::Success;
    return result;
}

}  // namespace patchnav

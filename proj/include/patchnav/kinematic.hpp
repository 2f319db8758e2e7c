#pragma once

#include "patchnav/multilevel_map.hpp"
#include "patchnav/patch_index.hpp"

#include <optional>
#include <vector>

namespace patchnav {

struct RobotParams {
    double track_width = 0.5;   // wheel separation l [m]
    double a_max = 1.0;         // wheel acceleration bound [m/s^2]
    double v_max = 2.5;         // wheel speed bound [m/s]
    int accel_levels = 3;       // per-wheel control discretization over [-a_max, a_max]
    double dt = 0.2;            // integration step [s]
    int num_iter = 10;          // steps per motion primitive
    double voxel_size = 0.3;    // pruning grid [m]
    double goal_tol = 1.0;      // goal acceptance radius [m]
    bool forward_only = false;  // clamp wheel speeds to [0, v_max] instead of [-v_max, v_max]
    int max_expansions = 200000;

    void validate() const;
};

struct RobotState {
    Vec3 position = Vec3::Zero();  // world frame
    double v_left = 0.0;
    double v_right = 0.0;
    double theta = 0.0;  // heading in the resident patch frame
};

struct Waypoint {
    RobotState state;
    const Patch* patch = nullptr;
};

struct MotionPrimitive {
    Vec2 control = Vec2::Zero();      // (a_left, a_right)
    std::vector<Waypoint> waypoints;  // the num_iter states after the start waypoint
    double duration = 0.0;
};

struct Trajectory {
    std::vector<Waypoint> waypoints;
    std::vector<Vec2> controls;  // per segment; empty once re-sampled by optimization
    std::vector<double> times;   // per waypoint, starting at 0

    double total_time() const { return times.empty() ? 0.0 : times.back(); }
    std::size_t size() const { return waypoints.size(); }
};

/// One integration step of the wheel-acceleration model on the waypoint's
/// patch: trapezoidal position update in the patch frame mapped through the
/// patch transform, wheel speeds clamped, z re-projected onto the plane.
RobotState state_transition(const Waypoint& w, const Vec2& accel, const RobotParams& robot);

/// Heading carried from one patch frame to another so that its world-xy
/// projection is unchanged. Empty when the heading has no xy projection.
std::optional<double> adjust_orientation(double theta_pm, const Patch& prev, const Patch& cur);

/// z that puts (x, y) on the patch plane.
double adjust_z(double x, double y, const Patch& patch);

/// The discretized control set: an accel_levels x accel_levels grid over
/// [-a_max, a_max]^2 per wheel.
std::vector<Vec2> control_set(const RobotParams& robot);

/// Integrates one control for num_iter steps from the given waypoint,
/// resolving patch transitions. Returns the waypoint sequence, or nothing if
/// any step leaves the traversable surface.
std::optional<MotionPrimitive> integrate_primitive(const Waypoint& from, const Vec2& control,
                                                   const MultiLevelMap& map,
                                                   const RobotParams& robot);

/// All surviving primitives from a waypoint, one per control.
std::vector<MotionPrimitive> expand_node(const Waypoint& from, const MultiLevelMap& map,
                                         const RobotParams& robot);

enum class PlanStatus { Success, StartSnapFailed, GoalSnapFailed, Infeasible };

const char* to_string(PlanStatus status);

struct PlanStats {
    int expansions = 0;
    int generated = 0;
    int pruned = 0;
};

/// Optional search instrumentation for pruning-soundness tests.
struct SearchTrace {
    struct Event {
        std::uint64_t voxel;
        double g;
        bool kept;  // node became (or stayed) the voxel owner
    };
    std::vector<Event> events;
};

struct PlanResult {
    PlanStatus status = PlanStatus::Infeasible;
    Trajectory trajectory;
    PlanStats stats;
};

/// Min-time A* over motion primitives. start/goal are (x, y, reference z);
/// both must snap to traversable patches. The heuristic is the world-xy
/// distance to the goal divided by v_max.
PlanResult search(const MultiLevelMap& map, const Vec3& start, const Vec3& goal,
                  const RobotParams& robot, SearchTrace* trace = nullptr);

}  // namespace patchnav

#pragma once

#include "patchnav/kinematic.hpp"

#include <optional>
#include <span>
#include <vector>

namespace patchnav {

struct OptParams {
    double w_o = 1.0;   // obstacle weight
    double w_c = 1.0;   // curvature weight
    double w_s = 4.0;   // smoothness weight
    double r_o = 1.5;   // obstacle influence radius [m]
    double c_max = 0.5; // curvature bound [1/m]
    int max_iters_stage1 = 50;
    int max_iters_stage2 = 20;
    double grad_tol = 1e-3;
    int interp_factor = 3;    // stage-2 subdivisions per segment
    bool fix_original = true; // stage-2 anchors the pre-interpolation waypoints

    void validate() const;
};

struct ObstacleHit {
    Vec2 point = Vec2::Zero();  // obstacle mesh cell center
    double distance = 0.0;      // always <= r_o
    int m = 0, n = 0;           // obstacle mesh cell index
};

/// Nearest obstacle mesh cell at the waypoint's level: breadth-first
/// expansion over vertex-sharing traversable patches within radius r_o; a
/// cell is free only if both parts hold a patch reached by that expansion.
std::optional<ObstacleHit> same_level_obstacles(const Waypoint& w, const MultiLevelMap& map,
                                                const OptParams& params);

/// Per-waypoint obstacle queries, OpenMP-parallel; results are identical to
/// batch_obstacles_serial.
std::vector<std::optional<ObstacleHit>> batch_obstacles(std::span<const Waypoint> waypoints,
                                                        const MultiLevelMap& map,
                                                        const OptParams& params);
std::vector<std::optional<ObstacleHit>> batch_obstacles_serial(std::span<const Waypoint> waypoints,
                                                               const MultiLevelMap& map,
                                                               const OptParams& params);

struct ObjectiveEval {
    double value = 0.0;
    std::vector<Vec2> gradient;  // per waypoint; endpoints zeroed
};

/// 2D objective: one-sided quadratic obstacle and curvature penalties plus
/// squared second differences. Throws DegenerateSegmentError when consecutive
/// waypoints coincide.
ObjectiveEval objective_eval(std::span<const Vec2> pts,
                             std::span<const std::optional<ObstacleHit>> obstacles,
                             const OptParams& params);

struct Objective3Eval {
    double value = 0.0;
    std::vector<Vec3> gradient;
};

/// Stage-2 objective: 3D curvature and smoothness terms, no obstacle term.
Objective3Eval objective3_eval(std::span<const Vec3> pts, const OptParams& params);

struct OptLogRow {
    int iteration = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct OptimizeOutcome {
    Trajectory trajectory;
    std::vector<OptLogRow> log;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    int iterations = 0;
};

/// Conjugate-gradient descent on the waypoints' xy positions with nearest
/// obstacles re-queried every evaluation; each accepted step re-resolves the
/// waypoint patches and re-projects z. The final objective never exceeds the
/// initial one.
OptimizeOutcome optimize_stage1(const Trajectory& traj, const MultiLevelMap& map,
                                const OptParams& params);

/// Linear interpolation to a denser waypoint sequence followed by gradient
/// descent on the 3D curvature/smoothness objective. Steps that would lift a
/// waypoint more than 0.5*thr_rep off its patch plane are rejected.
OptimizeOutcome optimize_stage2(const Trajectory& traj, const MultiLevelMap& map,
                                const OptParams& params);

}  // namespace patchnav

#pragma once

#include "patchnav/point_cloud.hpp"
#include "patchnav/trajectory_opt.hpp"

#include <functional>

namespace patchnav {

struct MapAccuracyReport {
    double e_avg = 0.0;               // mean per-patch E over traversable patches with points
    std::size_t num_traversable = 0;
    std::size_t patches_with_points = 0;
    std::size_t patches_without_points = 0;  // traversable patches with no associated point
    std::vector<double> per_patch_e;         // by patch id; negative when no points
};

/// Vertical discrepancy between traversable patch planes and ground-truth
/// points projecting into them at the same level (within thr_slice).
MapAccuracyReport map_accuracy(const MultiLevelMap& map, const PointCloud& ground_truth);

/// Same, with the ground truth sampled from an analytic height function on a
/// grid of the given spacing over the map footprint.
MapAccuracyReport map_accuracy(const MultiLevelMap& map,
                               const std::function<double(double, double)>& height,
                               double sample_res);

struct TrajectoryReport {
    double length = 0.0;          // 3D arc length
    double mean_curvature = 0.0;  // mean turning angle per incoming segment length
    double max_curvature = 0.0;
    bool collision_free = false;
    double total_time = 0.0;
    int degenerate_segments = 0;
    int interior_count = 0;
};

/// Geometric metrics; collision_free checks patch traversability only.
TrajectoryReport trajectory_metrics(const Trajectory& traj);

/// Full metrics including the same-level safety-radius check.
TrajectoryReport trajectory_metrics(const Trajectory& traj, const MultiLevelMap& map,
                                    const OptParams& opt, double safety_radius);

struct PlanRequest {
    Vec3 start = Vec3::Zero();
    Vec3 goal = Vec3::Zero();
};

/// Seeded start/goal pairs at traversable patch centroids. With
/// reachable_only, both endpoints come from the largest vertex-connected
/// traversable component.
std::vector<PlanRequest> generate_pairs(const MultiLevelMap& map, int count, std::uint64_t seed,
                                        bool reachable_only);

struct BenchPairResult {
    int index = 0;
    PlanRequest request;
    PlanStatus status = PlanStatus::Infeasible;
    bool success = false;  // feasible and collision-free after optimization
    double plan_seconds = 0.0;
    double opt_seconds = 0.0;
    double initial_length = 0.0;
    double initial_curvature = 0.0;
    TrajectoryReport report;  // of the optimized trajectory
};

struct BenchSummary {
    int n_pairs = 0;
    int successes = 0;
    double success_rate = 0.0;  // NaN when n_pairs == 0
    double mean_seconds = 0.0;  // plan + optimize per pair
    double median_seconds = 0.0;
    double mean_length = 0.0;     // over successful pairs
    double mean_curvature = 0.0;  // over successful pairs
};

/// Plans and optimizes every pair; failures are recorded, not thrown. Wall
/// times are the only non-deterministic outputs. parallel_pairs distributes
/// pairs over OpenMP threads (per-pair timing then reflects contention).
BenchSummary run_benchmark(const MultiLevelMap& map, std::span<const PlanRequest> pairs,
                           const RobotParams& robot, const OptParams& opt, double safety_radius,
                           std::vector<BenchPairResult>* per_pair = nullptr,
                           bool parallel_pairs = false);

}  // namespace patchnav

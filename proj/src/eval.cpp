#include "patchnav/eval.hpp"

#include "patchnav/map_builder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace patchnav {

namespace {

MapAccuracyReport accuracy_impl(const MultiLevelMap& map, std::span<const Vec3> points) {
    const MapParams& mp = map.params();
    std::vector<double> sums(map.patches().size(), 0.0);
    std::vector<std::int64_t> counts(map.patches().size(), 0);

    for (const Vec3& p : points) {
        const MeshIndex cell = locate_cell(p.x(), p.y(), mp);
        std::int32_t best = -1;
        double best_diff = mp.thr_slice;
        for (std::int32_t id : map.level_list(cell.m, cell.n, cell.part)) {
            const Patch& patch = map.patch(id);
            if (!patch.traversable) continue;
            const double diff = std::abs(patch.height_at(p.x(), p.y()) - p.z());
            if (diff <= best_diff) {
                best_diff = diff;
                best = id;
            }
        }
        if (best < 0) continue;
        sums[static_cast<std::size_t>(best)] +=
            std::abs(map.patch(best).height_at(p.x(), p.y()) - p.z());
        ++counts[static_cast<std::size_t>(best)];
    }

    MapAccuracyReport report;
    report.num_traversable = map.traversable_count();
    report.per_patch_e.assign(map.patches().size(), -1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < map.patches().size(); ++i) {
        if (!map.patches()[i].traversable) continue;
        if (counts[i] == 0) {
            ++report.patches_without_points;
            continue;
        }
        report.per_patch_e[i] = sums[i] / static_cast<double>(counts[i]);
        total += report.per_patch_e[i];
        ++report.patches_with_points;
    }
    report.e_avg = report.patches_with_points > 0
                       ? total / static_cast<double>(report.patches_with_points)
                       : 0.0;
    return report;
}

}  // namespace

MapAccuracyReport map_accuracy(const MultiLevelMap& map, const PointCloud& ground_truth) {
    return accuracy_impl(map, ground_truth.points);
}

MapAccuracyReport map_accuracy(const MultiLevelMap& map,
                               const std::function<double(double, double)>& height,
                               double sample_res) {
    if (sample_res <= 0.0) throw std::invalid_argument("sample_res must be positive");
    Vec3 lo, hi;
    map.bounds(&lo, &hi);
    std::vector<Vec3> samples;
    for (double x = lo.x(); x <= hi.x() + 1e-12; x += sample_res)
        for (double y = lo.y(); y <= hi.y() + 1e-12; y += sample_res)
            samples.emplace_back(x, y, height(x, y));
    return accuracy_impl(map, samples);
}

namespace {

TrajectoryReport metrics_impl(const Trajectory& traj, const MultiLevelMap* map,
                              const OptParams* opt, double safety_radius) {
    TrajectoryReport report;
    report.total_time = traj.total_time();

    const auto& wps = traj.waypoints;
    double curv_sum = 0.0;
    for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
        const Vec3 seg = wps[i + 1].state.position - wps[i].state.position;
        const double len = seg.norm();
        if (len < 1e-12) {
            ++report.degenerate_segments;
            continue;
        }
        report.length += len;
    }
    for (std::size_t i = 1; i + 1 < wps.size(); ++i) {
        const Vec3 a = wps[i].state.position - wps[i - 1].state.position;
        const Vec3 b = wps[i + 1].state.position - wps[i].state.position;
        const double la = a.norm();
        if (la < 1e-12 || b.norm() < 1e-12) continue;
        const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
        const double curv = angle / la;
        curv_sum += curv;
        report.max_curvature = std::max(report.max_curvature, curv);
        ++report.interior_count;
    }
    report.mean_curvature =
        report.interior_count > 0 ? curv_sum / static_cast<double>(report.interior_count) : 0.0;

    report.collision_free = !wps.empty();
    for (const Waypoint& w : wps) {
        if (!w.patch || !w.patch->traversable) {
            report.collision_free = false;
            break;
        }
        if (map && opt && safety_radius > 0.0) {
            const auto hit = same_level_obstacles(w, *map, *opt);
            if (hit && hit->distance < safety_radius) {
                report.collision_free = false;
                break;
            }
        }
    }
    return report;
}

}  // namespace

TrajectoryReport trajectory_metrics(const Trajectory& traj) {
    return metrics_impl(traj, nullptr, nullptr, 0.0);
}

TrajectoryReport trajectory_metrics(const Trajectory& traj, const MultiLevelMap& map,
                                    const OptParams& opt, double safety_radius) {
    return metrics_impl(traj, &map, &opt, safety_radius);
}

namespace {

struct VertexIdHash {
    std::size_t operator()(const VertexId& id) const {
        std::uint64_t h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(id.m)) << 40) ^
                          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(id.n)) << 20) ^
                          static_cast<std::uint64_t>(static_cast<std::uint32_t>(id.slice));
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return static_cast<std::size_t>(h);
    }
};

struct UnionFind {
    std::vector<std::int32_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int32_t find(std::int32_t a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace

std::vector<PlanRequest> generate_pairs(const MultiLevelMap& map, int count, std::uint64_t seed,
                                        bool reachable_only) {
    std::vector<std::int32_t> pool;
    if (reachable_only) {
        UnionFind uf(map.patches().size());
        std::unordered_map<VertexId, std::int32_t, VertexIdHash> owner;
        for (std::size_t i = 0; i < map.patches().size(); ++i) {
            const Patch& p = map.patches()[i];
            if (!p.traversable) continue;
            for (const VertexId& id : p.ids) {
                auto [it, inserted] = owner.try_emplace(id, static_cast<std::int32_t>(i));
                if (!inserted) uf.unite(it->second, static_cast<std::int32_t>(i));
            }
        }
        std::unordered_map<std::int32_t, std::int64_t> comp_size;
        for (std::size_t i = 0; i < map.patches().size(); ++i)
            if (map.patches()[i].traversable) ++comp_size[uf.find(static_cast<std::int32_t>(i))];
        std::int32_t best_root = -1;
        std::int64_t best_size = -1;
        for (const auto& [root, size] : comp_size)
            if (size > best_size || (size == best_size && root < best_root)) {
                best_root = root;
                best_size = size;
            }
        for (std::size_t i = 0; i < map.patches().size(); ++i)
            if (map.patches()[i].traversable && uf.find(static_cast<std::int32_t>(i)) == best_root)
                pool.push_back(static_cast<std::int32_t>(i));
    } else {
        for (std::size_t i = 0; i < map.patches().size(); ++i)
            if (map.patches()[i].traversable) pool.push_back(static_cast<std::int32_t>(i));
    }
    if (pool.empty()) return {};

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    auto centroid = [&](std::int32_t id) {
        const Patch& p = map.patch(id);
        return Vec3((p.vertices[0] + p.vertices[1] + p.vertices[2]) / 3.0);
    };

    std::vector<PlanRequest> pairs;
    pairs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PlanRequest req;
        req.start = centroid(pool[pick(rng)]);
        req.goal = centroid(pool[pick(rng)]);
        pairs.push_back(req);
    }
    return pairs;
}

BenchSummary run_benchmark(const MultiLevelMap& map, std::span<const PlanRequest> pairs,
                           const RobotParams& robot, const OptParams& opt, double safety_radius,
                           std::vector<BenchPairResult>* per_pair, bool parallel_pairs) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchPairResult> results(pairs.size());

    auto run_pair = [&](std::int64_t i) {
        BenchPairResult& r = results[static_cast<std::size_t>(i)];
        r.index = static_cast<int>(i);
        r.request = pairs[static_cast<std::size_t>(i)];
        const auto t0 = clock::now();
        PlanResult plan = search(map, r.request.start, r.request.goal, robot);
        const auto t1 = clock::now();
        r.plan_seconds = std::chrono::duration<double>(t1 - t0).count();
        r.status = plan.status;
        if (plan.status != PlanStatus::Success) return;
        try {
            const TrajectoryReport initial = trajectory_metrics(plan.trajectory);
            r.initial_length = initial.length;
            r.initial_curvature = initial.mean_curvature;
            OptimizeOutcome s1 = optimize_stage1(plan.trajectory, map, opt);
            OptimizeOutcome s2 = optimize_stage2(s1.trajectory, map, opt);
            const auto t2 = clock::now();
            r.opt_seconds = std::chrono::duration<double>(t2 - t1).count();
            r.report = trajectory_metrics(s2.trajectory, map, opt, safety_radius);
            r.success = r.report.collision_free;
        } catch (const std::exception&) {
            r.success = false;  // optimization failure counts as a failed pair
        }
    };

    const auto n = static_cast<std::int64_t>(pairs.size());
    if (parallel_pairs) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t i = 0; i < n; ++i) run_pair(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) run_pair(i);
    }

    BenchSummary summary;
    summary.n_pairs = static_cast<int>(pairs.size());
    std::vector<double> seconds;
    double len_sum = 0.0;
    double curv_sum = 0.0;
    double sec_sum = 0.0;
    for (const BenchPairResult& r : results) {
        seconds.push_back(r.plan_seconds + r.opt_seconds);
        sec_sum += seconds.back();
        if (r.success) {
            ++summary.successes;
            len_sum += r.report.length;
            curv_sum += r.report.mean_curvature;
        }
    }
    if (summary.n_pairs > 0) {
        summary.success_rate =
            static_cast<double>(summary.successes) / static_cast<double>(summary.n_pairs);
        summary.mean_seconds = sec_sum / static_cast<double>(summary.n_pairs);
        std::sort(seconds.begin(), seconds.end());
        const std::size_t mid = seconds.size() / 2;
        summary.median_seconds = seconds.size() % 2 == 1
                                     ? seconds[mid]
                                     : 0.5 * (seconds[mid - 1] + seconds[mid]);
    } else {
        summary.success_rate = std::numeric_limits<double>::quiet_NaN();
    }
    if (summary.successes > 0) {
        summary.mean_length = len_sum / static_cast<double>(summary.successes);
        summary.mean_curvature = curv_sum / static_cast<double>(summary.successes);
    }
    if (per_pair) *per_pair = std::move(results);
    return summary;
}

}  // namespace patchnav

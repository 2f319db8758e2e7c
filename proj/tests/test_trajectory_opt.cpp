#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "patchnav/trajectory_opt.hpp"
#include "patchnav/map_builder.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

#include <random>

using namespace patchnav;
using namespace patchnav::testing;

namespace {

OptParams test_opt() {
    OptParams o;
    o.w_o = 1.0;
    o.w_c = 1.0;
    o.w_s = 4.0;
    o.r_o = 1.5;
    o.c_max = 0.5;
    o.max_iters_stage1 = 60;
    o.max_iters_stage2 = 20;
    o.grad_tol = 1e-4;
    o.interp_factor = 3;
    return o;
}

// Hand-assembled flat grid map over cells [-extent_cells, extent_cells]^2.
// Cells listed in `missing` get no patches; cells in `steep_parts` get a
// raised third vertex (own slice id) making the listed part untraversable.
MultiLevelMap make_synthetic_grid_map(int extent_cells,
                                      const std::vector<std::pair<int, int>>& missing,
                                      const std::vector<MeshIndex>& steep_parts) {
    MapParams params = default_map_params();
    const double res = params.res_m;
    std::vector<Patch> patches;
    const auto is_missing = [&](int m, int n) {
        for (const auto& [mm, nn] : missing)
            if (mm == m && nn == n) return true;
        return false;
    };
    const auto is_steep = [&](int m, int n, Part part) {
        for (const MeshIndex& idx : steep_parts)
            if (idx.m == m && idx.n == n && idx.part == part) return true;
        return false;
    };
    for (int m = -extent_cells; m < extent_cells; ++m) {
        for (int n = -extent_cells; n < extent_cells; ++n) {
            if (is_missing(m, n)) continue;
            for (Part part : {Part::Down, Part::Up}) {
                Patch p;
                p.home = MeshIndex{m, n, part};
                const Vec3 va(m * res, n * res, 0.0);
                const Vec3 vd((m + 1) * res, (n + 1) * res, 0.0);
                if (part == Part::Down) {
                    p.vertices = {va, Vec3((m + 1) * res, n * res, 0.0), vd};
                    p.ids = {VertexId{m, n, 0}, VertexId{m + 1, n, 0}, VertexId{m + 1, n + 1, 0}};
                } else {
                    p.vertices = {va, vd, Vec3(m * res, (n + 1) * res, 0.0)};
                    p.ids = {VertexId{m, n, 0}, VertexId{m + 1, n + 1, 0}, VertexId{m, n + 1, 0}};
                }
                if (is_steep(m, n, part)) {
                    p.vertices[2].z() += 1.0;  // well past the 40 degree cutoff
                    p.ids[2].slice = 1;
                }
                patches.push_back(p);
            }
        }
    }
    return MultiLevelMap(params, std::move(patches));
}

Waypoint waypoint_on(const MultiLevelMap& map, double x, double y, double ref_z = 0.0) {
    const Patch* patch = locate_patch(map, x, y, ref_z);
    REQUIRE(patch != nullptr);
    Waypoint w;
    w.patch = patch;
    w.state.position = Vec3(x, y, patch->height_at(x, y));
    return w;
}

Trajectory make_trajectory(const MultiLevelMap& map, const std::vector<Vec2>& xy,
                           double ref_z = 0.0) {
    Trajectory traj;
    for (std::size_t i = 0; i < xy.size(); ++i) {
        traj.waypoints.push_back(waypoint_on(map, xy[i].x(), xy[i].y(), ref_z));
        traj.times.push_back(static_cast<double>(i));
    }
    return traj;
}

}  // namespace

TEST_CASE("no obstacle reported on a wide-open traversable field") {
    const MultiLevelMap map = make_synthetic_grid_map(8, {}, {});
    const OptParams opt = test_opt();
    const Waypoint w = waypoint_on(map, 0.31, 0.29);
    CHECK_FALSE(same_level_obstacles(w, map, opt).has_value());
}

TEST_CASE("nearest obstacle picks the closest failing mesh cell") {
    // layout mirrors the worked example: cell (2,0) lacks patches entirely,
    // cell (0,3) is untraversable in both parts, cell (-3,0) in one part
    const MultiLevelMap map = make_synthetic_grid_map(
        8, {{2, 0}},
        {MeshIndex{0, 3, Part::Down}, MeshIndex{0, 3, Part::Up}, MeshIndex{-3, 0, Part::Down}});
    OptParams opt = test_opt();
    opt.r_o = 2.0;
    const Waypoint w = waypoint_on(map, 0.3, 0.3);
    REQUIRE(w.patch->home.m == 0);
    REQUIRE(w.patch->home.n == 0);

    const auto hit = same_level_obstacles(w, map, opt);
    REQUIRE(hit.has_value());
    CHECK(hit->m == 2);
    CHECK(hit->n == 0);
    CHECK(hit->point.x() == doctest::Approx(1.5));
    CHECK(hit->point.y() == doctest::Approx(0.3));
    CHECK(hit->distance == doctest::Approx(1.2));

    // all three doctored cells are obstacles for the expansion
    const auto oracle = oracle_same_level_obstacle(w, map, opt);
    REQUIRE(oracle.has_value());
    CHECK(oracle->m == hit->m);
    CHECK(oracle->n == hit->n);
}

TEST_CASE("other levels are neither obstacles nor free space for this level") {
    const MapParams params = default_map_params();
    const double gap = 3.0;
    // full lower plane; upper plane with a hole over the origin
    PointCloud cloud = make_plane_cloud(-4.2, 4.2, -4.2, 4.2, params.res_pc, 0.0);
    const PointCloud upper =
        make_plane_with_hole(4.2, params.res_pc, -1.45, 0.55, -1.45, 0.55);
    for (Vec3 p : upper.points) cloud.points.emplace_back(p.x(), p.y(), gap);
    const MultiLevelMap map = build_map(cloud, params);
    OptParams opt = test_opt();
    opt.r_o = 1.2;

    // on the lower level the upper hole does not exist
    const Waypoint low = waypoint_on(map, -0.45, -0.45, 0.0);
    CHECK(low.patch->mean_z() == doctest::Approx(0.0));
    CHECK_FALSE(same_level_obstacles(low, map, opt).has_value());

    // on the upper level the hole is an obstacle even though the lower plane
    // is intact underneath
    const Waypoint high = waypoint_on(map, -2.3, -0.45, gap);
    CHECK(high.patch->mean_z() == doctest::Approx(gap));
    const auto hit = same_level_obstacles(high, map, opt);
    CHECK(hit.has_value());
}

TEST_CASE("same-level query matches the exhaustive BFS oracle on random waypoints") {
    const MapParams params = default_map_params();
    UnevenSceneParams scene;
    scene.extent = 14.0;
    scene.amplitude = 1.1;
    scene.seed = 41;
    const MultiLevelMap map = build_map(generate_uneven_scene(scene), params);
    const OptParams opt = test_opt();

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> pick(0, map.patches().size() - 1);
    std::uniform_real_distribution<double> bary(0.05, 0.9);
    int checked = 0;
    int agreements = 0;
    while (checked < 1000) {
        const Patch& patch = map.patches()[pick(rng)];
        if (!patch.traversable) continue;
        double b0 = bary(rng);
        double b1 = bary(rng) * (1.0 - b0);
        const Vec3 pos =
            b0 * patch.vertices[0] + b1 * patch.vertices[1] + (1.0 - b0 - b1) * patch.vertices[2];
        Waypoint w;
        w.patch = &patch;
        w.state.position = pos;
        const auto fast = same_level_obstacles(w, map, opt);
        const auto slow = oracle_same_level_obstacle(w, map, opt);
        const bool same = fast.has_value() == slow.has_value() &&
                          (!fast || (fast->m == slow->m && fast->n == slow->n &&
                                     fast->distance == slow->distance));
        if (same) ++agreements;
        ++checked;
    }
    CHECK(agreements == 1000);
}

TEST_CASE("parallel obstacle batch equals the serial reference") {
    const MapParams params = default_map_params();
    const MultiLevelMap map = build_map(
        make_plane_with_hole(6.0, params.res_pc, -1.25, 0.75, -1.25, 0.75), params);
    const OptParams opt = test_opt();
    std::vector<Waypoint> wps;
    for (double x = -4.0; x <= 4.0; x += 0.31) {
        const Patch* p = locate_patch(map, x, 2.05, 0.0);
        if (!p) continue;
        Waypoint w;
        w.patch = p;
        w.state.position = Vec3(x, 2.05, 0.0);
        wps.push_back(w);
    }
    REQUIRE(wps.size() > 10);
    const auto parallel = batch_obstacles(wps, map, opt);
    const auto serial = batch_obstacles_serial(wps, map, opt);
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < parallel.size(); ++i) {
        CHECK(parallel[i].has_value() == serial[i].has_value());
        if (parallel[i])
            CHECK((parallel[i]->m == serial[i]->m && parallel[i]->n == serial[i]->n &&
                   parallel[i]->distance == serial[i]->distance));
    }
}

TEST_CASE("objective: collinear evenly spaced waypoints with no obstacles score zero") {
    const OptParams opt = test_opt();
    std::vector<Vec2> pts;
    std::vector<std::optional<ObstacleHit>> obstacles;
    for (int i = 0; i < 6; ++i) {
        pts.emplace_back(0.5 * i, 0.25 * i);
        obstacles.emplace_back(std::nullopt);
    }
    const auto eval = objective_eval(pts, obstacles, opt);
    CHECK(eval.value == doctest::Approx(0.0));
    for (const Vec2& g : eval.gradient) CHECK(g.norm() == doctest::Approx(0.0));
}

TEST_CASE("objective: single obstacle at half the influence radius") {
    OptParams opt = test_opt();
    opt.w_o = 2.5;
    std::vector<Vec2> pts = {{0, 0}, {1, 0}, {2, 0}};
    std::vector<std::optional<ObstacleHit>> obstacles(3);
    obstacles[1] = ObstacleHit{Vec2(1.0, opt.r_o / 2.0), opt.r_o / 2.0, 0, 0};
    const auto eval = objective_eval(pts, obstacles, opt);
    CHECK(eval.value == doctest::Approx(opt.w_o * (opt.r_o / 2.0) * (opt.r_o / 2.0)));
}

TEST_CASE("objective: right-angle corner curvature and smoothness terms") {
    OptParams opt = test_opt();
    opt.w_o = 1.0;
    opt.w_c = 2.0;
    opt.w_s = 3.0;
    opt.c_max = 1e-12;  // effectively zero bound, keeps validate() out of play
    const double s = 0.8;
    std::vector<Vec2> pts = {{0, 0}, {s, 0}, {s, s}};
    std::vector<std::optional<ObstacleHit>> obstacles(3);
    const auto eval = objective_eval(pts, obstacles, opt);
    const double curvature_term = opt.w_c * std::pow(kPi / (2.0 * s), 2.0);
    const double smoothness_term = opt.w_s * 2.0 * s * s;
    CHECK(eval.value == doctest::Approx(curvature_term + smoothness_term).epsilon(1e-9));
}

TEST_CASE("objective rejects coincident consecutive waypoints") {
    const OptParams opt = test_opt();
    std::vector<Vec2> pts = {{0, 0}, {0, 0}, {1, 0}};
    std::vector<std::optional<ObstacleHit>> obstacles(3);
    CHECK_THROWS_AS(objective_eval(pts, obstacles, opt), DegenerateSegmentError);
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> jitter(-0.35, 0.35);
    std::uniform_real_distribution<double> obst_offset(0.3, 1.4);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    OptParams opt = test_opt();
    opt.c_max = 0.4;

    int passes = 0;
    const int configs = 100;
    for (int c = 0; c < configs; ++c) {
        const int n = 6;
        std::vector<Vec2> pts;
        for (int i = 0; i < n; ++i)
            pts.emplace_back(0.8 * i + jitter(rng), jitter(rng) * 2.0);
        std::vector<std::optional<ObstacleHit>> obstacles(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (coin(rng) < 0.5) {
                const double d = obst_offset(rng);
                obstacles[i] = ObstacleHit{pts[i] + Vec2(0.0, d), d, 0, 0};
            }

        const auto eval = objective_eval(pts, obstacles, opt);
        std::vector<double> x;
        for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
            x.push_back(pts[i].x());
            x.push_back(pts[i].y());
        }
        const auto f = [&](const std::vector<double>& v) {
            std::vector<Vec2> moved = pts;
            for (std::size_t i = 1; i + 1 < moved.size(); ++i) {
                moved[i].x() = v[2 * (i - 1)];
                moved[i].y() = v[2 * (i - 1) + 1];
            }
            return objective_eval(moved, obstacles, opt).value;
        };
        const auto fd = finite_difference(f, x, 1e-6);

        double err2 = 0.0;
        double ref2 = 0.0;
        for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
            const Vec2 g = eval.gradient[i];
            err2 += std::pow(g.x() - fd[2 * (i - 1)], 2) + std::pow(g.y() - fd[2 * (i - 1) + 1], 2);
            ref2 += g.squaredNorm();
        }
        const double rel = std::sqrt(err2) / std::max(1.0, std::sqrt(ref2));
        if (rel < 1e-5) ++passes;
    }
    CHECK(passes == configs);
}

TEST_CASE("3d objective gradient matches finite differences") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    OptParams opt = test_opt();
    opt.c_max = 0.4;
    for (int c = 0; c < 30; ++c) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 6; ++i)
            pts.emplace_back(0.7 * i + jitter(rng), jitter(rng), 0.3 * jitter(rng));
        const auto eval = objective3_eval(pts, opt);
        std::vector<double> x;
        for (std::size_t i = 1; i + 1 < pts.size(); ++i)
            for (int k = 0; k < 3; ++k) x.push_back(pts[i][k]);
        const auto f = [&](const std::vector<double>& v) {
            std::vector<Vec3> moved = pts;
            for (std::size_t i = 1; i + 1 < moved.size(); ++i)
                for (int k = 0; k < 3; ++k) moved[i][k] = v[3 * (i - 1) + k];
            return objective3_eval(moved, opt).value;
        };
        const auto fd = finite_difference(f, x, 1e-6);
        for (std::size_t i = 1; i + 1 < pts.size(); ++i)
            for (int k = 0; k < 3; ++k)
                CHECK(eval.gradient[i][k] ==
                      doctest::Approx(fd[3 * (i - 1) + k]).epsilon(1e-4));
    }
}

TEST_CASE("stage 1 leaves an already-straight line unchanged") {
    const MapParams params = default_map_params();
    const MultiLevelMap map =
        build_map(make_plane_cloud(-4.2, 4.2, -4.2, 4.2, params.res_pc), params);
    const OptParams opt = test_opt();
    std::vector<Vec2> xy;
    for (int i = 0; i <= 10; ++i) xy.emplace_back(-2.5 + 0.5 * i, 0.05);
    const Trajectory traj = make_trajectory(map, xy);
    const OptimizeOutcome out = optimize_stage1(traj, map, opt);
    CHECK(out.initial_objective == doctest::Approx(0.0));
    CHECK(out.final_objective <= out.initial_objective);
    for (std::size_t i = 0; i < traj.size(); ++i)
        CHECK((out.trajectory.waypoints[i].state.position -
               traj.waypoints[i].state.position).norm() < 1e-12);
}

TEST_CASE("stage 1 smooths a zig-zag and preserves the endpoints bit-exactly") {
    const MapParams params = default_map_params();
    const MultiLevelMap map =
        build_map(make_plane_cloud(-4.8, 4.8, -4.8, 4.8, params.res_pc), params);
    const OptParams opt = test_opt();
    std::vector<Vec2> xy;
    for (int i = 0; i <= 12; ++i) xy.emplace_back(-3.0 + 0.5 * i, (i % 2 == 0) ? 0.3 : -0.3);
    const Trajectory traj = make_trajectory(map, xy);

    const auto smoothness = [&](const Trajectory& t) {
        double sum = 0.0;
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            const Vec2 a = t.waypoints[i].state.position.head<2>() -
                           t.waypoints[i - 1].state.position.head<2>();
            const Vec2 b = t.waypoints[i + 1].state.position.head<2>() -
                           t.waypoints[i].state.position.head<2>();
            sum += (b - a).squaredNorm();
        }
        return sum;
    };

    const OptimizeOutcome out = optimize_stage1(traj, map, opt);
    CHECK(out.final_objective < out.initial_objective);
    CHECK(smoothness(out.trajectory) < smoothness(traj));
    CHECK(out.trajectory.waypoints.front().state.position ==
          traj.waypoints.front().state.position);
    CHECK(out.trajectory.waypoints.back().state.position ==
          traj.waypoints.back().state.position);
    for (const Waypoint& w : out.trajectory.waypoints) {
        REQUIRE(w.patch != nullptr);
        CHECK(std::abs(w.state.position.z() -
                       w.patch->height_at(w.state.position.x(), w.state.position.y())) < 1e-9);
    }
    CHECK_FALSE(out.log.empty());
}

TEST_CASE("stage 1 pushes a wall-hugging trajectory away from the wall") {
    MapParams params = default_map_params();
    const PointCloud cloud = make_plane_with_wall(7.2, params.res_pc, 2.6, 7.2, 1.5);
    const MultiLevelMap map = build_map(cloud, params);
    OptParams opt = test_opt();
    opt.w_s = 1.0;

    // untraversable band starts around x = 1.8; hug it at x = 1.55
    std::vector<Vec2> xy;
    for (int i = 0; i <= 12; ++i) xy.emplace_back(1.55, -3.0 + 0.5 * i);
    const Trajectory traj = make_trajectory(map, xy);

    const auto mean_obstacle_distance = [&](const Trajectory& t) {
        const auto hits = batch_obstacles_serial(t.waypoints, map, opt);
        double sum = 0.0;
        int count = 0;
        for (const auto& hit : hits)
            if (hit) {
                sum += hit->distance;
                ++count;
            }
        REQUIRE(count > 0);
        return sum / count;
    };

    const double before = mean_obstacle_distance(traj);
    const OptimizeOutcome out = optimize_stage1(traj, map, opt);
    const double after = mean_obstacle_distance(out.trajectory);
    CHECK(out.final_objective < out.initial_objective);
    CHECK(after > before);
}

TEST_CASE("stage 2 with unit interpolation and zero iterations is the identity") {
    const MapParams params = default_map_params();
    const MultiLevelMap map =
        build_map(make_plane_cloud(-3.0, 3.0, -3.0, 3.0, params.res_pc), params);
    OptParams opt = test_opt();
    opt.interp_factor = 1;
    opt.max_iters_stage2 = 0;
    std::vector<Vec2> xy;
    for (int i = 0; i <= 6; ++i) xy.emplace_back(-1.5 + 0.5 * i, (i % 2 == 0) ? 0.2 : -0.2);
    const Trajectory traj = make_trajectory(map, xy);
    const OptimizeOutcome out = optimize_stage2(traj, map, opt);
    REQUIRE(out.trajectory.size() == traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(out.trajectory.waypoints[i].state.position == traj.waypoints[i].state.position);
        CHECK(out.trajectory.times[i] == traj.times[i]);
    }
}

TEST_CASE("stage 2 interpolation on one inclined plane stays on the plane with zero objective") {
    const MapParams params = default_map_params();
    const double alpha = deg_to_rad(20.0);
    const MultiLevelMap map = build_map(make_inclined_plane(4.8, params.res_pc, alpha), params);
    OptParams opt = test_opt();

    std::vector<Vec2> xy;
    for (int i = 0; i <= 8; ++i) xy.emplace_back(-2.0 + 0.5 * i, 0.05);
    Trajectory traj;
    for (std::size_t i = 0; i < xy.size(); ++i) {
        traj.waypoints.push_back(
            waypoint_on(map, xy[i].x(), xy[i].y(), std::tan(alpha) * xy[i].x()));
        traj.times.push_back(static_cast<double>(i));
    }

    const OptimizeOutcome out = optimize_stage2(traj, map, opt);
    CHECK(out.initial_objective == doctest::Approx(0.0).epsilon(1e-10));
    for (const Waypoint& w : out.trajectory.waypoints) {
        REQUIRE(w.patch != nullptr);
        CHECK(std::abs(w.state.position.z() -
                       w.patch->height_at(w.state.position.x(), w.state.position.y())) < 1e-9);
    }
}

TEST_CASE("stage 2 reduces the 3d crease of a ridge crossing") {
    MapParams params = default_map_params();
    // tent surface z = 1 - 0.35|x|, trajectory crossing the ridge along x
    PointCloud cloud;
    cloud.resolution_hint = params.res_pc;
    for (double x = -4.0; x <= 4.0 + 1e-9; x += params.res_pc)
        for (double y = -2.4; y <= 2.4 + 1e-9; y += params.res_pc)
            cloud.points.emplace_back(x, y, 1.0 - 0.35 * std::abs(x));
    const MultiLevelMap map = build_map(cloud, params);
    OptParams opt = test_opt();
    opt.fix_original = false;
    opt.max_iters_stage2 = 30;

    std::vector<Vec2> xy;
    for (int i = 0; i <= 10; ++i) xy.emplace_back(-2.5 + 0.5 * i, 0.05);
    Trajectory traj;
    for (std::size_t i = 0; i < xy.size(); ++i) {
        traj.waypoints.push_back(
            waypoint_on(map, xy[i].x(), xy[i].y(), 1.0 - 0.35 * std::abs(xy[i].x())));
        traj.times.push_back(static_cast<double>(i));
    }

    const OptimizeOutcome out = optimize_stage2(traj, map, opt);
    CHECK(out.initial_objective > 0.0);  // the crease carries 3d curvature
    CHECK(out.final_objective < out.initial_objective);
    const double max_dev = 0.5 * params.thr_rep;
    for (const Waypoint& w : out.trajectory.waypoints) {
        REQUIRE(w.patch != nullptr);
        CHECK(std::abs(w.state.position.z() -
                       w.patch->height_at(w.state.position.x(), w.state.position.y())) <=
              max_dev + 1e-12);
    }
    CHECK(out.trajectory.waypoints.front().state.position ==
          traj.waypoints.front().state.position);
    CHECK(out.trajectory.waypoints.back().state.position ==
          traj.waypoints.back().state.position);
}

#pragma once

// Independent reference implementations used only to check the library:
// brute-force patch lookup, an exhaustive same-level BFS built from raw
// vertex comparisons, finite-difference gradients, and a literal
// transcription of the node-expansion loop. None of them share spatial
// indexing or gradient code with the implementation they verify.

#include "patchnav/kinematic.hpp"
#include "patchnav/multilevel_map.hpp"
#include "patchnav/trajectory_opt.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

namespace patchnav::testing {

inline bool triangle_contains_xy(const Patch& p, double x, double y) {
    const auto side = [&](const Vec3& a, const Vec3& b) {
        return (b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x());
    };
    const double s0 = side(p.vertices[0], p.vertices[1]);
    const double s1 = side(p.vertices[1], p.vertices[2]);
    const double s2 = side(p.vertices[2], p.vertices[0]);
    const bool any_neg = s0 < 0 || s1 < 0 || s2 < 0;
    const bool any_pos = s0 > 0 || s1 > 0 || s2 > 0;
    return !(any_neg && any_pos);
}

/// Scan of every traversable patch: 2D containment, then nearest plane
/// height to ref_z.
inline const Patch* brute_force_locate(const MultiLevelMap& map, double x, double y,
                                       double ref_z) {
    const Patch* best = nullptr;
    double best_diff = std::numeric_limits<double>::infinity();
    for (const Patch& p : map.patches()) {
        if (!p.traversable || !triangle_contains_xy(p, x, y)) continue;
        const double diff = std::abs(p.height_at(x, y) - ref_z);
        if (diff < best_diff) {
            best_diff = diff;
            best = &p;
        }
    }
    return best;
}

inline bool share_vertex_coords(const Patch& a, const Patch& b) {
    for (const Vec3& va : a.vertices)
        for (const Vec3& vb : b.vertices)
            if (va.x() == vb.x() && va.y() == vb.y() && va.z() == vb.z()) return true;
    return false;
}

/// Exhaustive same-level obstacle query: collects all traversable patches
/// whose home cell touches the disk, builds the shared-vertex adjacency by
/// comparing raw vertex coordinates pairwise, BFS from the waypoint patch,
/// then classifies cells exactly like the contract describes.
inline std::optional<ObstacleHit> oracle_same_level_obstacle(const Waypoint& w,
                                                             const MultiLevelMap& map,
                                                             const OptParams& params) {
    const double res = map.params().res_m;
    const double cx = w.state.position.x();
    const double cy = w.state.position.y();
    const double r = params.r_o;

    const auto cell_intersects_disk = [&](int m, int n) {
        const double nx = std::clamp(cx, m * res, (m + 1) * res);
        const double ny = std::clamp(cy, n * res, (n + 1) * res);
        return std::hypot(cx - nx, cy - ny) <= r;
    };

    std::vector<const Patch*> pool;
    int start = -1;
    for (const Patch& p : map.patches()) {
        if (!p.traversable || !cell_intersects_disk(p.home.m, p.home.n)) continue;
        if (&p == w.patch) start = static_cast<int>(pool.size());
        pool.push_back(&p);
    }
    std::vector<bool> reached(pool.size(), false);
    if (start >= 0) {
        std::deque<int> queue{start};
        reached[static_cast<std::size_t>(start)] = true;
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
                if (reached[static_cast<std::size_t>(i)]) continue;
                if (share_vertex_coords(*pool[static_cast<std::size_t>(cur)],
                                        *pool[static_cast<std::size_t>(i)])) {
                    reached[static_cast<std::size_t>(i)] = true;
                    queue.push_back(i);
                }
            }
        }
    }

    const int m_lo = static_cast<int>(std::floor((cx - r) / res)) - 1;
    const int m_hi = static_cast<int>(std::floor((cx + r) / res)) + 1;
    const int n_lo = static_cast<int>(std::floor((cy - r) / res)) - 1;
    const int n_hi = static_cast<int>(std::floor((cy + r) / res)) + 1;
    std::optional<ObstacleHit> best;
    for (int m = m_lo; m <= m_hi; ++m) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const Vec2 center((m + 0.5) * res, (n + 0.5) * res);
            const double dist = std::hypot(cx - center.x(), cy - center.y());
            if (dist > r) continue;
            bool down_ok = false;
            bool up_ok = false;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (!reached[i]) continue;
                const Patch* p = pool[i];
                if (p->home.m != m || p->home.n != n) continue;
                (p->home.part == Part::Down ? down_ok : up_ok) = true;
            }
            if (down_ok && up_ok) continue;
            if (!best || dist < best->distance) best = ObstacleHit{center, dist, m, n};
        }
    }
    return best;
}

/// Central finite differences of a scalar function of packed coordinates.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double step) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double fp = f(x);
        x[i] = orig - step;
        const double fm = f(x);
        x[i] = orig;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

/// Literal transcription of the expansion loop: integrate each control,
/// re-locate on exit, drop the control on failure. Uses its own integration
/// arithmetic so the survivor set is derived independently.
inline std::vector<Vec2> reference_surviving_controls(const Waypoint& from,
                                                      const MultiLevelMap& map,
                                                      const RobotParams& robot) {
    std::vector<double> levels;
    for (int i = 0; i < robot.accel_levels; ++i)
        levels.push_back(-robot.a_max + 2.0 * robot.a_max * i / (robot.accel_levels - 1));

    std::vector<Vec2> survivors;
    for (double al : levels) {
        for (double ar : levels) {
            Vec3 pos = from.state.position;
            double vl = from.state.v_left;
            double vr = from.state.v_right;
            double th = from.state.theta;
            const Patch* patch = from.patch;
            bool ok = true;
            for (int k = 0; k < robot.num_iter && ok; ++k) {
                const double th_new = wrap_angle(
                    th + (vl - vr) / robot.track_width * robot.dt +
                    (al - ar) / (2.0 * robot.track_width) * robot.dt * robot.dt);
                const double lo = robot.forward_only ? 0.0 : -robot.v_max;
                const double vl_new = std::clamp(vl + al * robot.dt, lo, robot.v_max);
                const double vr_new = std::clamp(vr + ar * robot.dt, lo, robot.v_max);
                const double v0 = 0.5 * (vl + vr);
                const double v1 = 0.5 * (vl_new + vr_new);
                const double dxl = 0.5 * (v0 * std::cos(th) + v1 * std::cos(th_new)) * robot.dt;
                const double dyl = 0.5 * (v0 * std::sin(th) + v1 * std::sin(th_new)) * robot.dt;
                const double x = pos.x() + patch->tf(0, 0) * dxl + patch->tf(0, 1) * dyl;
                const double y = pos.y() + patch->tf(1, 0) * dxl + patch->tf(1, 1) * dyl;
                double th_next = th_new;
                const MeshIndex cell = locate_cell(x, y, map.params());
                const Patch* next_patch = patch;
                if (!(cell == patch->home)) {
                    next_patch = locate_patch(map, x, y, *patch);
                    if (!next_patch) {
                        ok = false;
                        break;
                    }
                    const auto adjusted = adjust_orientation(th_new, *patch, *next_patch);
                    if (!adjusted) {
                        ok = false;
                        break;
                    }
                    th_next = *adjusted;
                }
                pos = Vec3(x, y, next_patch->height_at(x, y));
                patch = next_patch;
                th = th_next;
                vl = vl_new;
                vr = vr_new;
            }
            if (ok) survivors.emplace_back(al, ar);
        }
    }
    return survivors;
}

}  // namespace patchnav::testing

#include "patchnav/trajectory_opt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <unordered_set>

namespace patchnav {

void OptParams::validate() const {
    if (w_o < 0.0 || w_c < 0.0 || w_s < 0.0)
        throw std::invalid_argument("objective weights must be non-negative");
    if (r_o <= 0.0) throw std::invalid_argument("r_o must be positive");
    if (c_max <= 0.0) throw std::invalid_argument("c_max must be positive");
    if (max_iters_stage1 < 0 || max_iters_stage2 < 0)
        throw std::invalid_argument("iteration limits must be non-negative");
    if (grad_tol <= 0.0) throw std::invalid_argument("grad_tol must be positive");
    if (interp_factor < 1) throw std::invalid_argument("interp_factor must be at least 1");
}

namespace {

// Flat per-thread scratch for the same-level expansion; the query runs in
// the optimizer's inner loop, so it must not allocate per call.
struct SameLevelScratch {
    struct Cell {
        std::int32_t patch_begin = 0;
        std::int32_t patch_end = 0;
        std::uint8_t reached = 0;  // bit 0 down, bit 1 up
        bool in_disk = false;
    };
    std::vector<Cell> cells;
    std::vector<std::int32_t> patch_ids;   // traversable patches grouped by window cell
    std::vector<std::int32_t> patch_cell;  // owning window-cell index per entry
    std::vector<bool> visited;
    std::vector<std::int32_t> queue;
};

thread_local SameLevelScratch tl_scratch;

}  // namespace

std::optional<ObstacleHit> same_level_obstacles(const Waypoint& w, const MultiLevelMap& map,
                                                const OptParams& params) {
    const MapParams& mp = map.params();
    const double res = mp.res_m;
    const double cx = w.state.position.x();
    const double cy = w.state.position.y();
    const double r = params.r_o;

    const int m_lo = static_cast<int>(std::floor((cx - r) / res));
    const int m_hi = static_cast<int>(std::floor((cx + r) / res));
    const int n_lo = static_cast<int>(std::floor((cy - r) / res));
    const int n_hi = static_cast<int>(std::floor((cy + r) / res));
    const int width = m_hi - m_lo + 1;
    const int height = n_hi - n_lo + 1;

    SameLevelScratch& scratch = tl_scratch;
    scratch.cells.assign(static_cast<std::size_t>(width * height), {});
    scratch.patch_ids.clear();
    scratch.patch_cell.clear();
    scratch.queue.clear();

    const std::int32_t start_id = map.id_of(*w.patch);
    std::int32_t start_local = -1;
    for (int m = m_lo; m <= m_hi; ++m) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const int ci = (m - m_lo) * height + (n - n_lo);
            auto& cell = scratch.cells[static_cast<std::size_t>(ci)];
            const double nx = std::clamp(cx, m * res, (m + 1) * res);
            const double ny = std::clamp(cy, n * res, (n + 1) * res);
            cell.in_disk = (cx - nx) * (cx - nx) + (cy - ny) * (cy - ny) <= r * r;
            cell.patch_begin = static_cast<std::int32_t>(scratch.patch_ids.size());
            if (cell.in_disk) {
                for (Part part : {Part::Down, Part::Up}) {
                    for (std::int32_t id : map.level_list(m, n, part)) {
                        if (!map.patch(id).traversable) continue;
                        if (id == start_id)
                            start_local = static_cast<std::int32_t>(scratch.patch_ids.size());
                        scratch.patch_ids.push_back(id);
                        scratch.patch_cell.push_back(ci);
                    }
                }
            }
            cell.patch_end = static_cast<std::int32_t>(scratch.patch_ids.size());
        }
    }

    // Same level = reachable from w.patch through shared vertices without
    // leaving the disk.
    scratch.visited.assign(scratch.patch_ids.size(), false);
    if (start_local >= 0) {
        scratch.visited[static_cast<std::size_t>(start_local)] = true;
        scratch.queue.push_back(start_local);
    }
    for (std::size_t head = 0; head < scratch.queue.size(); ++head) {
        const std::int32_t local = scratch.queue[head];
        const Patch& p = map.patch(scratch.patch_ids[static_cast<std::size_t>(local)]);
        const int ci = scratch.patch_cell[static_cast<std::size_t>(local)];
        scratch.cells[static_cast<std::size_t>(ci)].reached |=
            static_cast<std::uint8_t>(p.home.part == Part::Down ? 1 : 2);
        const int cm = ci / height;
        const int cn = ci % height;
        for (int dm = -1; dm <= 1; ++dm) {
            for (int dn = -1; dn <= 1; ++dn) {
                const int nm = cm + dm;
                const int nn = cn + dn;
                if (nm < 0 || nm >= width || nn < 0 || nn >= height) continue;
                const auto& cell = scratch.cells[static_cast<std::size_t>(nm * height + nn)];
                for (std::int32_t q = cell.patch_begin; q < cell.patch_end; ++q) {
                    if (scratch.visited[static_cast<std::size_t>(q)]) continue;
                    if (!shares_vertices(p, map.patch(scratch.patch_ids[static_cast<std::size_t>(q)])))
                        continue;
                    scratch.visited[static_cast<std::size_t>(q)] = true;
                    scratch.queue.push_back(q);
                }
            }
        }
    }

    // Obstacle candidates are the cells whose center lies within r_o.
    std::optional<ObstacleHit> best;
    for (int m = m_lo; m <= m_hi; ++m) {
        for (int n = n_lo; n <= n_hi; ++n) {
            const Vec2 center((m + 0.5) * res, (n + 0.5) * res);
            const double dist = std::hypot(cx - center.x(), cy - center.y());
            if (dist > r) continue;
            const auto& cell = scratch.cells[static_cast<std::size_t>((m - m_lo) * height + (n - n_lo))];
            if (cell.reached == 3) continue;  // free: both parts hold same-level patches
            if (!best || dist < best->distance) best = ObstacleHit{center, dist, m, n};
        }
    }
    return best;
}

std::vector<std::optional<ObstacleHit>> batch_obstacles(std::span<const Waypoint> waypoints,
                                                        const MultiLevelMap& map,
                                                        const OptParams& params) {
    std::vector<std::optional<ObstacleHit>> out(waypoints.size());
    const auto count = static_cast<std::int64_t>(waypoints.size());
#pragma omp parallel for schedule(dynamic, 32)
    for (std::int64_t i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] =
            same_level_obstacles(waypoints[static_cast<std::size_t>(i)], map, params);
    return out;
}

std::vector<std::optional<ObstacleHit>> batch_obstacles_serial(std::span<const Waypoint> waypoints,
                                                               const MultiLevelMap& map,
                                                               const OptParams& params) {
    std::vector<std::optional<ObstacleHit>> out(waypoints.size());
    for (std::size_t i = 0; i < waypoints.size(); ++i)
        out[i] = same_level_obstacles(waypoints[i], map, params);
    return out;
}

ObjectiveEval objective_eval(std::span<const Vec2> pts,
                             std::span<const std::optional<ObstacleHit>> obstacles,
                             const OptParams& o) {
    const std::size_t n = pts.size();
    if (n < 3) throw std::invalid_argument("objective needs at least 3 waypoints");
    if (obstacles.size() != n)
        throw std::invalid_argument("one obstacle query result per waypoint expected");

    std::vector<Vec2> d(n);
    std::vector<double> len(n);
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = pts[i] - pts[i - 1];
        len[i] = d[i].norm();
        if (len[i] < 1e-9) throw DegenerateSegmentError("coincident consecutive waypoints");
    }

    ObjectiveEval out;
    out.gradient.assign(n, Vec2::Zero());

    for (std::size_t i = 0; i < n; ++i) {
        if (!obstacles[i]) continue;
        const Vec2 diff = pts[i] - obstacles[i]->point;
        const double dist = diff.norm();
        const double arg = dist - o.r_o;
        if (arg < 0.0) {
            out.value += o.w_o * arg * arg;
            if (dist > 1e-12) out.gradient[i] += o.w_o * 2.0 * arg / dist * diff;
        }
    }

    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Vec2& di = d[i];
        const Vec2& dj = d[i + 1];
        const double cross = di.x() * dj.y() - di.y() * dj.x();
        const double dot = di.dot(dj);
        const double phi = std::atan2(std::abs(cross), dot);
        const double e = phi / len[i] - o.c_max;
        if (e > 0.0) {
            out.value += o.w_c * e * e;
            const double denom = cross * cross + dot * dot;
            const double sgn = cross >= 0.0 ? 1.0 : -1.0;
            const Vec2 dcross_di(dj.y(), -dj.x());
            const Vec2 dcross_dj(-di.y(), di.x());
            const Vec2 dphi_di = sgn / denom * (dot * dcross_di - cross * dj);
            const Vec2 dphi_dj = sgn / denom * (dot * dcross_dj - cross * di);
            const Vec2 de_di = dphi_di / len[i] - phi / (len[i] * len[i] * len[i]) * di;
            const Vec2 de_dj = dphi_dj / len[i];
            const double c = o.w_c * 2.0 * e;
            out.gradient[i - 1] -= c * de_di;
            out.gradient[i] += c * (de_di - de_dj);
            out.gradient[i + 1] += c * de_dj;
        }

        const Vec2 sdiff = dj - di;
        out.value += o.w_s * sdiff.squaredNorm();
        out.gradient[i - 1] += o.w_s * 2.0 * sdiff;
        out.gradient[i] -= o.w_s * 4.0 * sdiff;
        out.gradient[i + 1] += o.w_s * 2.0 * sdiff;
    }

    out.gradient.front().setZero();
    out.gradient.back().setZero();
    return out;
}

Objective3Eval objective3_eval(std::span<const Vec3> pts, const OptParams& o) {
    const std::size_t n = pts.size();
    if (n < 3) throw std::invalid_argument("objective needs at least 3 waypoints");

    std::vector<Vec3> d(n);
    std::vector<double> len(n);
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = pts[i] - pts[i - 1];
        len[i] = d[i].norm();
        if (len[i] < 1e-9) throw DegenerateSegmentError("coincident consecutive waypoints");
    }

    Objective3Eval out;
    out.gradient.assign(n, Vec3::Zero());

    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Vec3& di = d[i];
        const Vec3& dj = d[i + 1];
        const Vec3 cross = di.cross(dj);
        const double nrm = cross.norm();
        const double dot = di.dot(dj);
        const double phi = std::atan2(nrm, dot);
        const double e = phi / len[i] - o.c_max;
        if (e > 0.0) {
            out.value += o.w_c * e * e;
            if (nrm > 1e-12) {
                const Vec3 chat = cross / nrm;
                const double denom = nrm * nrm + dot * dot;
                const Vec3 dphi_di = (dot * dj.cross(chat) - nrm * dj) / denom;
                const Vec3 dphi_dj = (dot * chat.cross(di) - nrm * di) / denom;
                const Vec3 de_di = dphi_di / len[i] - phi / (len[i] * len[i] * len[i]) * di;
                const Vec3 de_dj = dphi_dj / len[i];
                const double c = o.w_c * 2.0 * e;
                out.gradient[i - 1] -= c * de_di;
                out.gradient[i] += c * (de_di - de_dj);
                out.gradient[i + 1] += c * de_dj;
            }
        }

        const Vec3 sdiff = dj - di;
        out.value += o.w_s * sdiff.squaredNorm();
        out.gradient[i - 1] += o.w_s * 2.0 * sdiff;
        out.gradient[i] -= o.w_s * 4.0 * sdiff;
        out.gradient[i + 1] += o.w_s * 2.0 * sdiff;
    }

    out.gradient.front().setZero();
    out.gradient.back().setZero();
    return out;
}

namespace {

constexpr double kArmijoC = 1e-4;
constexpr int kMaxHalvings = 40;
constexpr int kRestartInterval = 50;

struct Stage1State {
    std::vector<Vec2> pos;
    std::vector<const Patch*> patches;
    std::vector<std::optional<ObstacleHit>> obstacles;
    double value = 0.0;
    std::vector<Vec2> grad;
};

// Patch re-resolution via hinted lookup; empty when any waypoint loses its
// patch.
std::optional<std::vector<const Patch*>> resolve_patches(const std::vector<Vec2>& pos,
                                                         const std::vector<const Patch*>& prev,
                                                         const MultiLevelMap& map) {
    std::vector<const Patch*> patches(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const Patch* p = locate_patch(map, pos[i].x(), pos[i].y(), *prev[i]);
        if (!p) return std::nullopt;
        patches[i] = p;
    }
    return patches;
}

// Full evaluation at candidate positions: patch re-resolution, fresh
// obstacle queries, then the 2D objective. Empty when any waypoint loses its
// patch or a segment collapses.
std::optional<Stage1State> evaluate_stage1(const std::vector<Vec2>& pos,
                                           const std::vector<const Patch*>& prev_patches,
                                           const MultiLevelMap& map, const OptParams& params) {
    auto patches = resolve_patches(pos, prev_patches, map);
    if (!patches) return std::nullopt;
    Stage1State s;
    s.pos = pos;
    s.patches = std::move(*patches);
    std::vector<Waypoint> wps(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        wps[i].patch = s.patches[i];
        wps[i].state.position =
            Vec3(pos[i].x(), pos[i].y(), s.patches[i]->height_at(pos[i].x(), pos[i].y()));
    }
    s.obstacles = batch_obstacles(wps, map, params);
    try {
        ObjectiveEval e = objective_eval(s.pos, s.obstacles, params);
        s.value = e.value;
        s.grad = std::move(e.gradient);
    } catch (const DegenerateSegmentError&) {
        return std::nullopt;
    }
    return s;
}

double grad_norm(const std::vector<Vec2>& g) {
    double sum = 0.0;
    for (const Vec2& v : g) sum += v.squaredNorm();
    return std::sqrt(sum);
}

double grad_norm3(const std::vector<Vec3>& g) {
    double sum = 0.0;
    for (const Vec3& v : g) sum += v.squaredNorm();
    return std::sqrt(sum);
}

double max_norm(const std::vector<Vec2>& g) {
    double m = 0.0;
    for (const Vec2& v : g) m = std::max(m, v.norm());
    return m;
}

double max_norm3(const std::vector<Vec3>& g) {
    double m = 0.0;
    for (const Vec3& v : g) m = std::max(m, v.norm());
    return m;
}

Waypoint make_waypoint(const Waypoint& base, const Vec3& pos, const Patch* patch) {
    Waypoint w = base;
    w.state.position = pos;
    w.patch = patch;
    return w;
}

}  // namespace

OptimizeOutcome optimize_stage1(const Trajectory& traj, const MultiLevelMap& map,
                                const OptParams& params) {
    params.validate();
    OptimizeOutcome out;
    out.trajectory = traj;

    // Spin-in-place steps leave coincident waypoints; collapse them first.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (!keep.empty() && i + 1 < traj.size()) {
            const Vec3& prev = traj.waypoints[keep.back()].state.position;
            const Vec3& cur = traj.waypoints[i].state.position;
            if (std::hypot(cur.x() - prev.x(), cur.y() - prev.y()) < 1e-9) continue;
        }
        keep.push_back(i);
    }
    if (keep.size() >= 2) {
        const Vec3& last = traj.waypoints[keep.back()].state.position;
        const Vec3& prev = traj.waypoints[keep[keep.size() - 2]].state.position;
        if (std::hypot(last.x() - prev.x(), last.y() - prev.y()) < 1e-9)
            keep.erase(keep.end() - 2);
    }
    if (keep.size() < 3) return out;

    std::vector<Vec2> pos(keep.size());
    std::vector<const Patch*> patches(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const Waypoint& w = traj.waypoints[keep[i]];
        if (!w.patch || !w.patch->traversable)
            throw std::invalid_argument("initial trajectory leaves the traversable surface");
        pos[i] = w.state.position.head<2>();
        patches[i] = w.patch;
    }

    auto state = evaluate_stage1(pos, patches, map, params);
    if (!state) throw std::invalid_argument("initial trajectory fails objective evaluation");
    out.initial_objective = state->value;
    out.log.push_back({0, state->value, grad_norm(state->grad), 0.0});

    std::vector<Vec2> dir(state->pos.size());
    for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -state->grad[i];
    std::vector<Vec2> prev_grad = state->grad;

    const double move_cap = 0.5 * map.params().res_m;  // one hinted-lookup hop at most
    int iter = 0;
    while (iter < params.max_iters_stage1 && grad_norm(state->grad) > params.grad_tol) {
        ++iter;

        double gTd = 0.0;
        for (std::size_t i = 0; i < dir.size(); ++i) gTd += state->grad[i].dot(dir[i]);
        if (gTd >= 0.0) {  // not a descent direction, restart on steepest descent
            for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -state->grad[i];
            gTd = 0.0;
            for (std::size_t i = 0; i < dir.size(); ++i) gTd += state->grad[i].dot(dir[i]);
            if (gTd >= 0.0) break;
        }

        const double dmax = max_norm(dir);
        if (dmax < 1e-15) break;
        double t = std::min(1.0, move_cap / dmax);

        std::optional<Stage1State> accepted;
        double t_used = 0.0;
        for (int halving = 0; halving < kMaxHalvings; ++halving) {
            std::vector<Vec2> candidate = state->pos;
            for (std::size_t i = 1; i + 1 < candidate.size(); ++i) candidate[i] += t * dir[i];
            const double threshold = state->value + kArmijoC * t * gTd;
            // Cheap prefilter on the frozen obstacle assignment; acceptance
            // is always confirmed against freshly queried obstacles.
            bool plausible = true;
            try {
                plausible = objective_eval(candidate, state->obstacles, params).value <= threshold;
            } catch (const DegenerateSegmentError&) {
                plausible = false;
            }
            if (plausible) {
                auto trial = evaluate_stage1(candidate, state->patches, map, params);
                if (trial && trial->value <= threshold) {
                    accepted = std::move(trial);
                    t_used = t;
                    break;
                }
            }
            t *= 0.5;
            if (t * dmax < 1e-12) break;
        }
        if (!accepted) break;  // converged by stagnation

        prev_grad = state->grad;
        *state = std::move(*accepted);
        out.log.push_back({iter, state->value, grad_norm(state->grad), t_used});

        // Polak-Ribiere with periodic restart.
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < dir.size(); ++i) {
            num += state->grad[i].dot(state->grad[i] - prev_grad[i]);
            den += prev_grad[i].squaredNorm();
        }
        double beta = (den > 0.0 && iter % kRestartInterval != 0) ? std::max(0.0, num / den) : 0.0;
        for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -state->grad[i] + beta * dir[i];
    }

    out.iterations = iter;
    out.final_objective = state->value;

    Trajectory result;
    result.controls = {};
    result.waypoints.reserve(keep.size());
    result.times.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const Patch* p = state->patches[i];
        const Vec3 position(state->pos[i].x(), state->pos[i].y(),
                            p->height_at(state->pos[i].x(), state->pos[i].y()));
        result.waypoints.push_back(make_waypoint(traj.waypoints[keep[i]], position, p));
        result.times.push_back(traj.times[keep[i]]);
    }
    out.trajectory = std::move(result);
    return out;
}

OptimizeOutcome optimize_stage2(const Trajectory& traj, const MultiLevelMap& map,
                                const OptParams& params) {
    params.validate();
    OptimizeOutcome out;
    out.trajectory = traj;
    if (traj.size() < 2) return out;

    // Linear interpolation in xy with z re-projected on the resident patch.
    std::vector<Vec3> pos;
    std::vector<const Patch*> patches;
    std::vector<bool> movable;
    std::vector<double> times;
    std::vector<Waypoint> bases;

    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const Waypoint& a = traj.waypoints[i];
        const Waypoint& b = traj.waypoints[i + 1];
        pos.push_back(a.state.position);
        patches.push_back(a.patch);
        movable.push_back(!params.fix_original && i > 0);
        times.push_back(traj.times[i]);
        bases.push_back(a);
        const Patch* walk = a.patch;
        for (int s = 1; s < params.interp_factor; ++s) {
            const double t = static_cast<double>(s) / params.interp_factor;
            Vec3 p = (1.0 - t) * a.state.position + t * b.state.position;
            if (walk) {
                if (const Patch* found = locate_patch(map, p.x(), p.y(), *walk)) walk = found;
                p.z() = walk->height_at(p.x(), p.y());
            }
            pos.push_back(p);
            patches.push_back(walk);
            movable.push_back(true);
            times.push_back((1.0 - t) * traj.times[i] + t * traj.times[i + 1]);
            Waypoint wb;
            wb.state.position = p;
            wb.state.theta = (1.0 - t) * a.state.theta + t * b.state.theta;
            wb.state.v_left = (1.0 - t) * a.state.v_left + t * b.state.v_left;
            wb.state.v_right = (1.0 - t) * a.state.v_right + t * b.state.v_right;
            wb.patch = walk;
            bases.push_back(wb);
        }
    }
    pos.push_back(traj.waypoints.back().state.position);
    patches.push_back(traj.waypoints.back().patch);
    movable.push_back(false);
    times.push_back(traj.times.back());
    bases.push_back(traj.waypoints.back());

    auto finish = [&](double initial, double final_value, int iters,
                      std::vector<OptLogRow> log) {
        out.initial_objective = initial;
        out.final_objective = final_value;
        out.iterations = iters;
        out.log = std::move(log);
        Trajectory result;
        result.waypoints.reserve(pos.size());
        for (std::size_t i = 0; i < pos.size(); ++i)
            result.waypoints.push_back(make_waypoint(bases[i], pos[i], patches[i]));
        result.times = times;
        out.trajectory = std::move(result);
    };

    if (pos.size() < 3) {
        finish(0.0, 0.0, 0, {});
        return out;
    }

    const double max_deviation = 0.5 * map.params().thr_rep;
    auto deviation_ok = [&](const Vec3& p, const Patch* patch) {
        return patch && std::abs(p.z() - patch->height_at(p.x(), p.y())) <= max_deviation;
    };

    Objective3Eval eval = objective3_eval(pos, params);
    auto masked = [&](std::vector<Vec3> g) {
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!movable[i]) g[i].setZero();
        return g;
    };
    std::vector<Vec3> grad = masked(eval.gradient);
    double value = eval.value;

    std::vector<OptLogRow> log;
    log.push_back({0, value, grad_norm3(grad), 0.0});
    const double initial_value = value;
    const double move_cap = 0.25 * map.params().res_m;

    int iter = 0;
    while (iter < params.max_iters_stage2 && grad_norm3(grad) > params.grad_tol) {
        ++iter;
        const double dmax = max_norm3(grad);
        if (dmax < 1e-15) break;
        double t = std::min(1.0, move_cap / dmax);
        double gTd = 0.0;
        for (const Vec3& g : grad) gTd -= g.squaredNorm();

        bool accepted = false;
        for (int halving = 0; halving < kMaxHalvings && !accepted; ++halving) {
            std::vector<Vec3> candidate = pos;
            std::vector<const Patch*> cand_patches = patches;
            bool valid = true;
            for (std::size_t i = 0; i < candidate.size() && valid; ++i) {
                if (!movable[i]) continue;
                candidate[i] -= t * grad[i];
                if (patches[i]) {
                    const Patch* found =
                        locate_patch(map, candidate[i].x(), candidate[i].y(), *patches[i]);
                    if (!found) {
                        valid = false;
                        break;
                    }
                    cand_patches[i] = found;
                }
                if (!deviation_ok(candidate[i], cand_patches[i])) valid = false;
            }
            if (valid) {
                try {
                    Objective3Eval trial = objective3_eval(candidate, params);
                    if (trial.value <= value + kArmijoC * t * gTd) {
                        pos = std::move(candidate);
                        patches = std::move(cand_patches);
                        value = trial.value;
                        grad = masked(trial.gradient);
                        log.push_back({iter, value, grad_norm3(grad), t});
                        accepted = true;
                    }
                } catch (const DegenerateSegmentError&) {
                }
            }
            if (!accepted) {
                t *= 0.5;
                if (t * dmax < 1e-12) break;
            }
        }
        if (!accepted) break;
    }

    finish(initial_value, value, iter, std::move(log));
    return out;
}

}  // namespace patchnav

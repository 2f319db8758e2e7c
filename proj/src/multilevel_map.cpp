#include "patchnav/multilevel_map.hpp"

#include "patchnav/map_builder.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

namespace patchnav {

void MapParams::validate() const {
    if (res_pc <= 0.0) throw std::invalid_argument("res_pc must be positive");
    if (res_m <= 0.0) throw std::invalid_argument("res_m must be positive");
    if (res_m < res_pc) throw std::invalid_argument("res_m must not be smaller than res_pc");
    if (thr_slice <= 0.0) throw std::invalid_argument("thr_slice must be positive");
    if (least_num < 1) throw std::invalid_argument("least_num must be at least 1");
    if (lambda < 1.0) throw std::invalid_argument("lambda must be at least 1.0");
    if (thr_rep <= 0.0) throw std::invalid_argument("thr_rep must be positive");
    if (thr_slope <= 0.0 || thr_slope >= 90.0)
        throw std::invalid_argument("thr_slope must be in (0, 90) degrees");
}

const char* to_string(Part part) { return part == Part::Down ? "down" : "up"; }

Part part_from_string(std::string_view name) {
    if (name == "down") return Part::Down;
    if (name == "up") return Part::Up;
    throw std::invalid_argument("unknown mesh cell part '" + std::string(name) + "'");
}

namespace {

std::tuple<std::int32_t, std::int32_t, std::int32_t, std::int32_t, std::int32_t, std::int32_t,
           std::int32_t, std::int32_t, std::int32_t>
id_tuple(const Patch& p) {
    return {p.ids[0].m, p.ids[0].n, p.ids[0].slice, p.ids[1].m, p.ids[1].n, p.ids[1].slice,
            p.ids[2].m, p.ids[2].n, p.ids[2].slice};
}

}  // namespace

MultiLevelMap::MultiLevelMap(MapParams params, std::vector<Patch> patches)
    : params_(params), patches_(std::move(patches)) {
    params_.validate();

    const double slope_cut = params_.thr_slope_rad();
    for (Patch& p : patches_) {
        PatchFrame frame = patch_frame(p.vertices[0], p.vertices[1], p.vertices[2]);
        p.x_pf = frame.x_pf;
        p.y_pf = frame.y_pf;
        p.z_pf = frame.z_pf;
        p.tf = frame.tf;
        p.traversable = p.slope() < slope_cut;
    }

    std::sort(patches_.begin(), patches_.end(), [](const Patch& a, const Patch& b) {
        if (a.home.m != b.home.m) return a.home.m < b.home.m;
        if (a.home.n != b.home.n) return a.home.n < b.home.n;
        if (a.home.part != b.home.part) return a.home.part < b.home.part;
        if (a.mean_z() != b.mean_z()) return a.mean_z() < b.mean_z();
        if (a.max_z() != b.max_z()) return a.max_z() < b.max_z();
        return id_tuple(a) < id_tuple(b);
    });

    for (std::size_t i = 0; i < patches_.size(); ++i) {
        Patch& p = patches_[i];
        MeshCell& cell = cells_[cell_key(p.home.m, p.home.n)];
        auto& list = p.home.part == Part::Down ? cell.down : cell.up;
        p.level = static_cast<int>(list.size());
        list.push_back(static_cast<std::int32_t>(i));
        if (p.traversable) ++traversable_count_;
    }
}

std::span<const std::int32_t> MultiLevelMap::level_list(int m, int n, Part part) const {
    auto it = cells_.find(cell_key(m, n));
    if (it == cells_.end()) return {};
    return it->second.part(part);
}

void MultiLevelMap::bounds(Vec3* lo, Vec3* hi) const {
    Vec3 mn = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 mx = -mn;
    for (const Patch& p : patches_) {
        for (const Vec3& v : p.vertices) {
            mn = mn.cwiseMin(v);
            mx = mx.cwiseMax(v);
        }
    }
    *lo = mn;
    *hi = mx;
}

}  // namespace patchnav

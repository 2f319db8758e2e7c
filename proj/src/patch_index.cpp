#include "patchnav/patch_index.hpp"

#include <cmath>
#include <limits>

namespace patchnav {

MeshIndex locate_cell(double x, double y, const MapParams& params) {
    MeshIndex idx;
    idx.m = static_cast<int>(std::floor(x / params.res_m));
    idx.n = static_cast<int>(std::floor(y / params.res_m));
    const double dx = x - idx.m * params.res_m;
    const double dy = y - idx.n * params.res_m;
    idx.part = (dy <= dx) ? Part::Down : Part::Up;
    return idx;
}

bool shares_vertices(const Patch& p1, const Patch& p2) {
    for (const VertexId& a : p1.ids)
        for (const VertexId& b : p2.ids)
            if (a == b) return true;
    return false;
}

const Patch* locate_patch(const MultiLevelMap& map, double x, double y, const Patch& hint) {
    const MeshIndex target = locate_cell(x, y, map.params());
    const Patch* best = nullptr;
    double best_diff = std::numeric_limits<double>::infinity();
    const double hint_z = hint.height_at(x, y);
    for (std::int32_t id : map.level_list(target.m, target.n, target.part)) {
        const Patch& p = map.patch(id);
        if (!p.traversable || !shares_vertices(p, hint)) continue;
        const double diff = std::abs(p.height_at(x, y) - hint_z);
        if (diff < best_diff) {
            best_diff = diff;
            best = &p;
        }
    }
    return best;
}

const Patch* locate_patch(const MultiLevelMap& map, double x, double y, double ref_z) {
    const MeshIndex target = locate_cell(x, y, map.params());
    const Patch* best = nullptr;
    double best_diff = std::numeric_limits<double>::infinity();
    for (std::int32_t id : map.level_list(target.m, target.n, target.part)) {
        const Patch& p = map.patch(id);
        if (!p.traversable) continue;
        const double diff = std::abs(p.height_at(x, y) - ref_z);
        if (diff < best_diff) {
            best_diff = diff;
            best = &p;
        }
    }
    return best;
}

}  // namespace patchnav

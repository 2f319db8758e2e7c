#include "patchnav/map_builder.hpp"

#include <algorithm>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace patchnav {

std::unordered_map<std::uint64_t, std::vector<Vec3>> cluster_points(const PointCloud& cloud,
                                                                    const MapParams& params) {
    std::unordered_map<std::uint64_t, std::vector<Vec3>> cells;
    cells.reserve(cloud.size() / 4 + 1);
    for (const Vec3& p : cloud.points) {
        const int m = cell_coord(p.x(), params.res_m);
        const int n = cell_coord(p.y(), params.res_m);
        cells[cell_key(m, n)].push_back(p);
    }
    return cells;
}

std::vector<Slice> slice_cell(std::span<const double> sorted_z, const MapParams& params) {
    std::vector<Slice> slices;
    std::size_t begin = 0;
    while (begin < sorted_z.size()) {
        std::size_t end = begin + 1;
        while (end < sorted_z.size() && sorted_z[end] - sorted_z[end - 1] <= params.thr_slice) ++end;
        const int count = static_cast<int>(end - begin);
        if (count >= params.least_num) {
            double sum = 0.0;
            for (std::size_t i = begin; i < end; ++i) sum += sorted_z[i];
            slices.push_back(Slice{sorted_z[begin], sorted_z[end - 1], sum / count, count});
        }
        begin = end;
    }
    return slices;
}

bool can_connect(const Slice& s1, const Slice& s2, const MapParams& params) {
    const double gap = params.lambda * params.res_pc;
    return (s1.z_min - s2.z_max <= gap) && (s2.z_min - s1.z_max <= gap);
}

double representative_z(const Slice& s, const MapParams& params) {
    return (s.z_max - s.z_min) > params.thr_rep ? s.z_max : s.z_avg;
}

PatchFrame patch_frame(const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 normal = (b - a).cross(c - a);
    const double len = normal.norm();
    if (len < 1e-12 * std::max(1.0, (b - a).norm() * (c - a).norm()))
        throw DegeneratePatchError("collinear patch vertices");
    if (normal.z() < 0.0) normal = -normal;  // swap of b and c
    if (normal.z() <= 1e-12 * len) throw VerticalPatchError("vertical patch plane");

    PatchFrame f;
    f.z_pf = normal / len;
    const Vec3 x_raw(f.z_pf.z(), 0.0, -f.z_pf.x());
    f.x_pf = x_raw / x_raw.norm();
    const Vec3 y_raw = f.z_pf.cross(f.x_pf);
    f.y_pf = y_raw / y_raw.norm();

    f.tf = Mat4::Identity();
    f.tf.block<3, 1>(0, 0) = f.x_pf;
    f.tf.block<3, 1>(0, 1) = f.y_pf;
    f.tf.block<3, 1>(0, 2) = f.z_pf;
    f.tf.block<3, 1>(0, 3) = a;
    return f;
}

namespace {

struct CellSlices {
    int m = 0;
    int n = 0;
    std::vector<Slice> slices;
    std::vector<double> rep_z;  // computed once per slice so shared vertices compare equal
};

struct Candidate {
    std::array<Vec3, 3> vertices;
    std::array<VertexId, 3> ids;
    double mean_z = 0.0;
    double max_z = 0.0;
    std::array<std::int32_t, 3> order;  // slice indices in (a, b, c) position order
};

struct SliceTable {
    std::vector<CellSlices> cells;
    std::unordered_map<std::uint64_t, std::int32_t> index;

    const CellSlices* find(int m, int n) const {
        auto it = index.find(cell_key(m, n));
        return it == index.end() ? nullptr : &cells[static_cast<std::size_t>(it->second)];
    }
};

SliceTable build_slice_table(const PointCloud& cloud, const MapParams& params) {
    std::unordered_map<std::uint64_t, std::vector<double>> zbins;
    zbins.reserve(cloud.size() / 4 + 1);
    for (const Vec3& p : cloud.points) {
        const int m = cell_coord(p.x(), params.res_m);
        const int n = cell_coord(p.y(), params.res_m);
        zbins[cell_key(m, n)].push_back(p.z());
    }

    SliceTable table;
    table.cells.resize(zbins.size());
    std::vector<std::pair<std::uint64_t, std::vector<double>*>> order;
    order.reserve(zbins.size());
    for (auto& [key, zs] : zbins) order.emplace_back(key, &zs);
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const auto n_cells = static_cast<std::int64_t>(order.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n_cells; ++i) {
        CellSlices& cs = table.cells[static_cast<std::size_t>(i)];
        const std::uint64_t key = order[static_cast<std::size_t>(i)].first;
        cs.m = static_cast<int>(static_cast<std::int32_t>(key >> 32));
        cs.n = static_cast<int>(static_cast<std::int32_t>(key & 0xffffffffULL));
        std::vector<double>& zs = *order[static_cast<std::size_t>(i)].second;
        std::sort(zs.begin(), zs.end());
        cs.slices = slice_cell(zs, params);
        cs.rep_z.reserve(cs.slices.size());
        for (const Slice& s : cs.slices) cs.rep_z.push_back(representative_z(s, params));
    }
    for (std::int64_t i = 0; i < n_cells; ++i)
        table.index.emplace(cell_key(table.cells[static_cast<std::size_t>(i)].m,
                                     table.cells[static_cast<std::size_t>(i)].n),
                            static_cast<std::int32_t>(i));
    return table;
}

// Enumerates connected slice triples for one part of mesh cell (m, n) and
// keeps the uppermost among vertex-sharing candidates. The down part chains
// map cells (m,n)-(m+1,n)-(m+1,n+1); the up part chains (m,n)-(m,n+1)-
// (m+1,n+1), vertices ordered counter-clockwise from above.
void connect_part(const SliceTable& table, const MapParams& params, int m, int n, Part part,
                  std::vector<Patch>& out) {
    const bool down = part == Part::Down;
    const CellSlices* first = table.find(m, n);
    const CellSlices* mid = down ? table.find(m + 1, n) : table.find(m, n + 1);
    const CellSlices* last = table.find(m + 1, n + 1);
    if (!first || !mid || !last) return;

    const Vec3 pos_first(m * params.res_m, n * params.res_m, 0.0);
    const Vec3 pos_mid = down ? Vec3((m + 1) * params.res_m, n * params.res_m, 0.0)
                              : Vec3(m * params.res_m, (n + 1) * params.res_m, 0.0);
    const Vec3 pos_last((m + 1) * params.res_m, (n + 1) * params.res_m, 0.0);
    const VertexId id_base_first{m, n, 0};
    const VertexId id_base_mid = down ? VertexId{m + 1, n, 0} : VertexId{m, n + 1, 0};
    const VertexId id_base_last{m + 1, n + 1, 0};

    std::vector<Candidate> candidates;
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(first->slices.size()); ++i) {
        for (std::int32_t j = 0; j < static_cast<std::int32_t>(mid->slices.size()); ++j) {
            if (!can_connect(first->slices[static_cast<std::size_t>(i)],
                             mid->slices[static_cast<std::size_t>(j)], params))
                continue;
            for (std::int32_t k = 0; k < static_cast<std::int32_t>(last->slices.size()); ++k) {
                if (!can_connect(mid->slices[static_cast<std::size_t>(j)],
                                 last->slices[static_cast<std::size_t>(k)], params))
                    continue;
                Candidate cand;
                const Vec3 va(pos_first.x(), pos_first.y(), first->rep_z[static_cast<std::size_t>(i)]);
                const Vec3 vm(pos_mid.x(), pos_mid.y(), mid->rep_z[static_cast<std::size_t>(j)]);
                const Vec3 vl(pos_last.x(), pos_last.y(), last->rep_z[static_cast<std::size_t>(k)]);
                VertexId ia = id_base_first, im = id_base_mid, il = id_base_last;
                ia.slice = i;
                im.slice = j;
                il.slice = k;
                if (down) {
                    cand.vertices = {va, vm, vl};
                    cand.ids = {ia, im, il};
                } else {
                    cand.vertices = {va, vl, vm};
                    cand.ids = {ia, il, im};
                }
                cand.mean_z = (va.z() + vm.z() + vl.z()) / 3.0;
                cand.max_z = std::max({va.z(), vm.z(), vl.z()});
                cand.order = {i, j, k};
                candidates.push_back(cand);
            }
        }
    }
    if (candidates.empty()) return;

    // Uppermost first: larger mean z, then larger max z, then slice order.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.mean_z != b.mean_z) return a.mean_z > b.mean_z;
        if (a.max_z != b.max_z) return a.max_z > b.max_z;
        return a.order > b.order;
    });

    std::size_t kept_begin = out.size();
    for (const Candidate& cand : candidates) {
        bool shares = false;
        for (std::size_t p = kept_begin; p < out.size() && !shares; ++p)
            for (const VertexId& id : cand.ids)
                if (id == out[p].ids[0] || id == out[p].ids[1] || id == out[p].ids[2]) {
                    shares = true;
                    break;
                }
        if (shares) continue;
        Patch patch;
        patch.vertices = cand.vertices;
        patch.ids = cand.ids;
        patch.home = MeshIndex{m, n, part};
        out.push_back(patch);
    }
}

void connect_mesh_cell(const SliceTable& table, const MapParams& params, int m, int n,
                       std::vector<Patch>& out) {
    connect_part(table, params, m, n, Part::Down, out);
    connect_part(table, params, m, n, Part::Up, out);
}

}  // namespace

MultiLevelMap build_map(const PointCloud& cloud, const MapParams& params) {
    params.validate();
    if (cloud.empty()) throw std::invalid_argument("cannot build a map from an empty cloud");

    const SliceTable table = build_slice_table(cloud, params);
    const auto n_cells = static_cast<std::int64_t>(table.cells.size());
    std::vector<std::vector<Patch>> partial(static_cast<std::size_t>(n_cells));

#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n_cells; ++i) {
        const CellSlices& cs = table.cells[static_cast<std::size_t>(i)];
        connect_mesh_cell(table, params, cs.m, cs.n, partial[static_cast<std::size_t>(i)]);
    }

    std::vector<Patch> patches;
    for (const auto& chunk : partial) patches.insert(patches.end(), chunk.begin(), chunk.end());
    return MultiLevelMap(params, std::move(patches));
}

MultiLevelMap build_map_serial(const PointCloud& cloud, const MapParams& params) {
    params.validate();
    if (cloud.empty()) throw std::invalid_argument("cannot build a map from an empty cloud");

    std::unordered_map<std::uint64_t, std::vector<double>> zbins;
    for (const Vec3& p : cloud.points)
        zbins[cell_key(cell_coord(p.x(), params.res_m), cell_coord(p.y(), params.res_m))]
            .push_back(p.z());

    std::vector<std::uint64_t> keys;
    keys.reserve(zbins.size());
    for (const auto& [key, zs] : zbins) keys.push_back(key);
    std::sort(keys.begin(), keys.end());

    SliceTable table;
    table.cells.reserve(keys.size());
    for (std::uint64_t key : keys) {
        CellSlices cs;
        cs.m = static_cast<int>(static_cast<std::int32_t>(key >> 32));
        cs.n = static_cast<int>(static_cast<std::int32_t>(key & 0xffffffffULL));
        std::vector<double>& zs = zbins[key];
        std::sort(zs.begin(), zs.end());
        cs.slices = slice_cell(zs, params);
        cs.rep_z.reserve(cs.slices.size());
        for (const Slice& s : cs.slices) cs.rep_z.push_back(representative_z(s, params));
        table.index.emplace(key, static_cast<std::int32_t>(table.cells.size()));
        table.cells.push_back(std::move(cs));
    }

    std::vector<Patch> patches;
    for (const CellSlices& cs : table.cells) connect_mesh_cell(table, params, cs.m, cs.n, patches);
    return MultiLevelMap(params, std::move(patches));
}

}  // namespace patchnav

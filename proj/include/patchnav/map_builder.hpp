#pragma once

#include "patchnav/multilevel_map.hpp"
#include "patchnav/point_cloud.hpp"

#include <span>
#include <unordered_map>
#include <vector>

namespace patchnav {

/// Map-cell coordinate of a world coordinate: half-open intervals
/// [m*res_m - res_m/2, m*res_m + res_m/2) so every point lands in exactly
/// one cell.
inline int cell_coord(double x, double res_m) {
    return static_cast<int>(std::floor(x / res_m + 0.5));
}

/// Assigns every point to its map cell, keyed by cell_key(m, n).
std::unordered_map<std::uint64_t, std::vector<Vec3>> cluster_points(const PointCloud& cloud,
                                                                    const MapParams& params);

/// Splits ascending z values at gaps greater than thr_slice and drops slices
/// with fewer than least_num points.
std::vector<Slice> slice_cell(std::span<const double> sorted_z, const MapParams& params);

/// Vertical proximity condition for two slices.
bool can_connect(const Slice& s1, const Slice& s2, const MapParams& params);

/// z of the slice representative point: z_max for spans above thr_rep,
/// otherwise z_avg.
double representative_z(const Slice& s, const MapParams& params);

struct PatchFrame {
    Vec3 x_pf, y_pf, z_pf;
    Mat4 tf;
};

/// Orthonormal patch frame with the normal's z component positive and x_pf
/// horizontal (zero world-y component). Swaps b and c if needed; throws
/// DegeneratePatchError for collinear vertices and VerticalPatchError when
/// the plane is vertical.
PatchFrame patch_frame(const Vec3& a, const Vec3& b, const Vec3& c);

/// Full pipeline: cluster, slice, connect slice triples into patches,
/// deduplicate to the uppermost per (mesh cell, part). OpenMP-parallel over
/// map cells; output is identical to build_map_serial.
MultiLevelMap build_map(const PointCloud& cloud, const MapParams& params);

/// Straightforward sequential construction, kept as the reference for tests
/// and the kernel benchmark.
MultiLevelMap build_map_serial(const PointCloud& cloud, const MapParams& params);

}  // namespace patchnav

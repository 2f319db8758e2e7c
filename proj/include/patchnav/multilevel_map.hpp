#pragma once

#include "patchnav/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace patchnav {

struct MapParams {
    double res_m = 0.6;        // map-cell size [m]
    double thr_slice = 0.5;    // minimum vertical slice gap [m], > robot height
    int least_num = 3;         // minimum points per slice
    double lambda = 1.5;       // slice connection slack, >= 1
    double res_pc = 0.2;       // point cloud resolution [m]
    double thr_rep = 0.3;      // slice span threshold for max-vs-avg representative z [m]
    double thr_slope = 40.0;   // traversability cutoff [deg]

    double thr_slope_rad() const { return deg_to_rad(thr_slope); }
    void validate() const;  // throws std::invalid_argument
};

struct Slice {
    double z_min = 0.0;
    double z_max = 0.0;
    double z_avg = 0.0;
    int count = 0;
};

enum class Part : std::uint8_t { Down = 0, Up = 1 };

const char* to_string(Part part);
Part part_from_string(std::string_view name);

struct MeshIndex {
    int m = 0;
    int n = 0;
    Part part = Part::Down;

    bool operator==(const MeshIndex&) const = default;
};

/// Identity of a slice representative point: map cell index plus the slice's
/// position in that cell. Equal ids imply bitwise-equal vertices.
struct VertexId {
    std::int32_t m = 0;
    std::int32_t n = 0;
    std::int32_t slice = -1;

    bool operator==(const VertexId&) const = default;
};

struct Patch {
    std::array<Vec3, 3> vertices;     // a, b, c; a is the frame origin
    std::array<VertexId, 3> ids;
    Vec3 x_pf, y_pf, z_pf;            // orthonormal right-handed frame, z_pf.z > 0
    Mat4 tf;                          // rotation columns x_pf|y_pf|z_pf, translation a
    bool traversable = false;
    MeshIndex home;
    int level = 0;                    // index within (home cell, part), ascending height

    /// z that places (x, y) on the patch plane.
    double height_at(double x, double y) const {
        return (z_pf.dot(vertices[0]) - z_pf.x() * x - z_pf.y() * y) / z_pf.z();
    }
    /// Angle between the patch normal and vertical.
    double slope() const { return std::acos(std::min(1.0, std::max(-1.0, z_pf.z()))); }
    /// Top-left 2x2 block of the transform (xy projection of x_pf, y_pf).
    Mat2 rot2() const { return tf.topLeftCorner<2, 2>(); }
    double mean_z() const { return (vertices[0].z() + vertices[1].z() + vertices[2].z()) / 3.0; }
    double max_z() const { return std::max({vertices[0].z(), vertices[1].z(), vertices[2].z()}); }
};

struct MeshCell {
    std::vector<std::int32_t> down;  // patch ids, ascending mean height
    std::vector<std::int32_t> up;

    std::span<const std::int32_t> part(Part p) const { return p == Part::Down ? down : up; }
};

inline std::uint64_t cell_key(int m, int n) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(n));
}

/// Immutable multi-level patch map. Construction canonicalizes patch order,
/// recomputes frames and traversability, and assigns levels, so maps built in
/// parallel, serially, or loaded from disk compare element-wise.
class MultiLevelMap {
public:
    MultiLevelMap() = default;

    /// Input patches need vertices, ids and home (cell, part) set.
    MultiLevelMap(MapParams params, std::vector<Patch> patches);

    const MapParams& params() const { return params_; }
    const std::vector<Patch>& patches() const { return patches_; }

    std::span<const std::int32_t> level_list(int m, int n, Part part) const;
    const Patch& patch(std::int32_t id) const { return patches_[static_cast<std::size_t>(id)]; }
    std::int32_t id_of(const Patch& p) const { return static_cast<std::int32_t>(&p - patches_.data()); }

    std::size_t traversable_count() const { return traversable_count_; }
    bool empty() const { return patches_.empty(); }

    /// Axis-aligned bounds of all patch vertices.
    void bounds(Vec3* lo, Vec3* hi) const;

private:
    MapParams params_;
    std::vector<Patch> patches_;
    std::unordered_map<std::uint64_t, MeshCell> cells_;
    std::size_t traversable_count_ = 0;
};

}  // namespace patchnav

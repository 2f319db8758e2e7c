#pragma once

#include "patchnav/common.hpp"

#include <filesystem>
#include <string_view>
#include <vector>

namespace patchnav {

struct PointCloud {
    std::vector<Vec3> points;
    double resolution_hint = 0.0;  // grid spacing of the source sampling, 0 if unknown

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

enum class CloudFormat { XyzAscii, PlyAscii, PcdAscii };

CloudFormat cloud_format_from_string(std::string_view name);
CloudFormat cloud_format_from_path(const std::filesystem::path& path);
const char* to_string(CloudFormat format);

/// Reads an ASCII point cloud. Throws ParseError with the offending line
/// number on malformed input and std::runtime_error on an empty cloud.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);

/// Writes the cloud so that load_cloud(save_cloud(c)) reproduces the exact
/// point sequence. The resolution hint is kept in a comment line.
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format);

struct SpiralSceneParams {
    double radius = 20.0;        // centerline radius of the ramp [m]
    double width = 8.0;          // ramp width [m]
    double turns = 6.0;          // number of full revolutions
    double rise_per_turn = 3.0;  // elevation gain per revolution [m]
    double res_pc = 0.2;         // sampling grid spacing [m]
    double noise_sigma = 0.0;    // stddev of Gaussian z-noise [m]
    std::uint64_t seed = 1;
};

/// Helical ramp around a flat circular apron that fills the inner hole.
/// The ramp starts level with the apron and climbs rise_per_turn per
/// revolution; pure function of params (same seed, same cloud).
PointCloud generate_spiral_scene(const SpiralSceneParams& params);

struct UnevenSceneParams {
    double extent = 30.0;     // side of the square footprint [m]
    double res_pc = 0.2;      // sampling grid spacing [m]
    double amplitude = 1.0;   // base height amplitude [m]
    int octaves = 3;          // value-noise octaves (gain 0.5, lacunarity 2)
    std::uint64_t seed = 1;
    double base_wavelength = 0.0;  // 0 -> extent / 4
};

/// Undulating single-layer terrain from seeded value noise.
PointCloud generate_uneven_scene(const UnevenSceneParams& params);

/// Height of the uneven terrain at (x, y); the generator samples exactly this.
double uneven_scene_height(const UnevenSceneParams& params, double x, double y);

/// Sum of the per-octave gains; |z| of the uneven scene is bounded by
/// amplitude times this value.
double uneven_scene_gain_sum(int octaves);

}  // namespace patchnav

#pragma once

#include "patchnav/map_builder.hpp"
#include "patchnav/point_cloud.hpp"

#include <cmath>

namespace patchnav::testing {

inline MapParams default_map_params() {
    MapParams p;
    p.res_pc = 0.2;
    p.res_m = 0.6;
    p.thr_slice = 0.5;
    p.least_num = 3;
    p.lambda = 1.5;
    p.thr_rep = 0.3;
    p.thr_slope = 40.0;
    return p;
}

/// Grid-sampled horizontal plane z = height over [x0, x1] x [y0, y1].
inline PointCloud make_plane_cloud(double x0, double x1, double y0, double y1, double res,
                                   double height = 0.0) {
    PointCloud cloud;
    cloud.resolution_hint = res;
    const long nx = static_cast<long>(std::floor((x1 - x0) / res + 0.5));
    const long ny = static_cast<long>(std::floor((y1 - y0) / res + 0.5));
    for (long i = 0; i <= nx; ++i)
        for (long j = 0; j <= ny; ++j)
            cloud.points.emplace_back(x0 + i * res, y0 + j * res, height);
    return cloud;
}

/// Plane z = tan(alpha) * x (tilt about the world y axis).
inline PointCloud make_inclined_plane(double extent, double res, double alpha_rad) {
    PointCloud cloud;
    cloud.resolution_hint = res;
    const double slope = std::tan(alpha_rad);
    const long n = static_cast<long>(std::floor(extent / res + 0.5));
    for (long i = -n; i <= n; ++i)
        for (long j = -n; j <= n; ++j)
            cloud.points.emplace_back(i * res, j * res, slope * i * res);
    return cloud;
}

/// Two horizontal planes at z = z_low and z = z_high over the same footprint.
inline PointCloud make_two_planes(double extent, double res, double z_low, double z_high) {
    PointCloud cloud = make_plane_cloud(-extent, extent, -extent, extent, res, z_low);
    PointCloud upper = make_plane_cloud(-extent, extent, -extent, extent, res, z_high);
    cloud.points.insert(cloud.points.end(), upper.points.begin(), upper.points.end());
    return cloud;
}

/// Flat plane plus a vertical wall sheet at x = wall_x spanning |y| <=
/// wall_half_len, sampled from the floor up to wall_height.
inline PointCloud make_plane_with_wall(double extent, double res, double wall_x,
                                       double wall_half_len, double wall_height) {
    PointCloud cloud = make_plane_cloud(-extent, extent, -extent, extent, res, 0.0);
    const long nz = static_cast<long>(std::floor(wall_height / res + 0.5));
    const long ny = static_cast<long>(std::floor(wall_half_len / res + 0.5));
    for (long j = -ny; j <= ny; ++j)
        for (long k = 0; k <= nz; ++k)
            cloud.points.emplace_back(wall_x, j * res, k * res);
    return cloud;
}

/// Flat plane with every point inside the open rectangle removed.
inline PointCloud make_plane_with_hole(double extent, double res, double hx0, double hx1,
                                       double hy0, double hy1) {
    PointCloud cloud;
    cloud.resolution_hint = res;
    const long n = static_cast<long>(std::floor(extent / res + 0.5));
    for (long i = -n; i <= n; ++i) {
        for (long j = -n; j <= n; ++j) {
            const double x = i * res;
            const double y = j * res;
            if (x > hx0 && x < hx1 && y > hy0 && y < hy1) continue;
            cloud.points.emplace_back(x, y, 0.0);
        }
    }
    return cloud;
}

}  // namespace patchnav::testing

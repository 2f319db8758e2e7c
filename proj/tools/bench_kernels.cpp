// Kernel benchmark: OpenMP map construction and obstacle-query batches
// against their sequential reference implementations, with an equality check
// so the comparison stays honest.

#include "patchnav/map_builder.hpp"
#include "patchnav/patch_index.hpp"
#include "patchnav/trajectory_opt.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace patchnav;

namespace {

using clock_type = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
    const auto t0 = clock_type::now();
    fn();
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) best = std::min(best, time_once(fn));
    return best;
}

bool maps_equal(const MultiLevelMap& a, const MultiLevelMap& b) {
    if (a.patches().size() != b.patches().size()) return false;
    for (std::size_t i = 0; i < a.patches().size(); ++i) {
        const Patch& pa = a.patches()[i];
        const Patch& pb = b.patches()[i];
        if (!(pa.home == pb.home) || pa.level != pb.level || pa.traversable != pb.traversable)
            return false;
        for (int v = 0; v < 3; ++v)
            if (pa.vertices[static_cast<std::size_t>(v)] != pb.vertices[static_cast<std::size_t>(v)])
                return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 3;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
#ifdef _OPENMP
        if (arg == "--threads" && i + 1 < argc) omp_set_num_threads(std::atoi(argv[++i]));
#endif
    }

#ifdef _OPENMP
    int threads = 0;
#pragma omp parallel
    {
#pragma omp single
        threads = omp_get_num_threads();
    }
    std::printf("OpenMP threads: %d, reps: %d (best-of)\n\n", threads, reps);
#else
    std::printf("built without OpenMP; both columns run serially\n\n");
#endif

    MapParams params;
    params.res_pc = 0.2;
    params.res_m = 0.6;

    SpiralSceneParams spiral;
    spiral.noise_sigma = 0.02;
    UnevenSceneParams uneven;
    uneven.extent = 60.0;
    uneven.amplitude = 1.2;
    uneven.seed = 3;

    std::printf("%-22s %10s %12s %12s %8s %s\n", "kernel", "points", "serial [s]",
                "parallel [s]", "speedup", "equal");
    for (int scene = 0; scene < 2; ++scene) {
        const PointCloud cloud =
            scene == 0 ? generate_spiral_scene(spiral) : generate_uneven_scene(uneven);
        const char* name = scene == 0 ? "build_map/spiral" : "build_map/uneven";

        MultiLevelMap serial_map, parallel_map;
        const double t_serial =
            best_of(reps, [&] { serial_map = build_map_serial(cloud, params); });
        const double t_parallel = best_of(reps, [&] { parallel_map = build_map(cloud, params); });
        std::printf("%-22s %10zu %12.4f %12.4f %7.2fx %s\n", name, cloud.size(), t_serial,
                    t_parallel, t_serial / t_parallel,
                    maps_equal(serial_map, parallel_map) ? "yes" : "NO");

        if (scene == 1) {
            OptParams opt;
            opt.r_o = 2.0;
            std::vector<Waypoint> wps;
            for (const Patch& p : parallel_map.patches()) {
                if (!p.traversable || (p.home.m + p.home.n) % 7 != 0) continue;
                Waypoint w;
                w.patch = &p;
                w.state.position = (p.vertices[0] + p.vertices[1] + p.vertices[2]) / 3.0;
                wps.push_back(w);
            }
            std::vector<std::optional<ObstacleHit>> a, b;
            const double q_serial =
                best_of(reps, [&] { a = batch_obstacles_serial(wps, parallel_map, opt); });
            const double q_parallel =
                best_of(reps, [&] { b = batch_obstacles(wps, parallel_map, opt); });
            bool equal = a.size() == b.size();
            for (std::size_t i = 0; equal && i < a.size(); ++i) {
                if (a[i].has_value() != b[i].has_value()) equal = false;
                else if (a[i] && (a[i]->m != b[i]->m || a[i]->n != b[i]->n)) equal = false;
            }
            std::printf("%-22s %10zu %12.4f %12.4f %7.2fx %s\n", "obstacle_batch/uneven",
                        wps.size(), q_serial, q_parallel, q_serial / q_parallel,
                        equal ? "yes" : "NO");
        }
    }
    return 0;
}

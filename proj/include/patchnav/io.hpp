#pragma once

#include "patchnav/eval.hpp"

#include <filesystem>
#include <string>

namespace patchnav {

/// OBJ export: three vertices and one face per patch, traversable and
/// untraversable patches in separate groups. Floats printed with 9
/// significant digits; output is byte-stable for a given map.
void write_map_obj(const std::filesystem::path& path, const MultiLevelMap& map);

/// JSON sidecar carrying params and per-patch metadata; complete enough to
/// reconstruct the map.
void write_map_json(const std::filesystem::path& path, const MultiLevelMap& map);

MultiLevelMap load_map_json(const std::filesystem::path& path);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_trajectory_json(const std::filesystem::path& path, const Trajectory& traj);

void write_opt_log_csv(const std::filesystem::path& path, std::span<const OptLogRow> stage1,
                       std::span<const OptLogRow> stage2);

void write_accuracy_json(const std::filesystem::path& path, const MapAccuracyReport& report);

void write_trajectory_report_json(const std::filesystem::path& path,
                                  const TrajectoryReport& initial,
                                  const TrajectoryReport& optimized);

void write_bench_pairs_csv(const std::filesystem::path& path,
                           std::span<const BenchPairResult> results);
void write_bench_summary_json(const std::filesystem::path& path, const BenchSummary& summary);
/// Wall-clock timings live in their own file so the other artifacts stay
/// byte-identical across runs.
void write_bench_timing_json(const std::filesystem::path& path, const BenchSummary& summary,
                             std::span<const BenchPairResult> results);

std::string format_g9(double v);
std::string format_g17(double v);

}  // namespace patchnav

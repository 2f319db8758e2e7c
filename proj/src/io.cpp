#include "patchnav/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace patchnav {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_out(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "w"));
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

}  // namespace

std::string format_g9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string format_g17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_map_obj(const std::filesystem::path& path, const MultiLevelMap& map) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "# patchnav multi-level map\n");
    std::fprintf(f.get(), "# patches %zu traversable %zu\n", map.patches().size(),
                 map.traversable_count());
    for (const Patch& p : map.patches())
        for (const Vec3& v : p.vertices)
            std::fprintf(f.get(), "v %s %s %s\n", format_g9(v.x()).c_str(),
                         format_g9(v.y()).c_str(), format_g9(v.z()).c_str());
    for (bool traversable : {true, false}) {
        std::fprintf(f.get(), "g %s\n", traversable ? "traversable" : "untraversable");
        for (std::size_t i = 0; i < map.patches().size(); ++i) {
            if (map.patches()[i].traversable != traversable) continue;
            const std::size_t base = 3 * i + 1;
            std::fprintf(f.get(), "f %zu %zu %zu\n", base, base + 1, base + 2);
        }
    }
}

void write_map_json(const std::filesystem::path& path, const MultiLevelMap& map) {
    FilePtr f = open_out(path);
    const MapParams& p = map.params();
    std::fprintf(f.get(), "{\n  \"format\": \"patchnav-map\",\n  \"version\": 1,\n");
    std::fprintf(f.get(), "  \"params\": {\n");
    std::fprintf(f.get(), "    \"res_m\": %s,\n", format_g9(p.res_m).c_str());
    std::fprintf(f.get(), "    \"thr_slice\": %s,\n", format_g9(p.thr_slice).c_str());
    std::fprintf(f.get(), "    \"least_num\": %d,\n", p.least_num);
    std::fprintf(f.get(), "    \"lambda\": %s,\n", format_g9(p.lambda).c_str());
    std::fprintf(f.get(), "    \"res_pc\": %s,\n", format_g9(p.res_pc).c_str());
    std::fprintf(f.get(), "    \"thr_rep\": %s,\n", format_g9(p.thr_rep).c_str());
    std::fprintf(f.get(), "    \"thr_slope\": %s\n  },\n", format_g9(p.thr_slope).c_str());
    std::fprintf(f.get(), "  \"patches\": [\n");
    for (std::size_t i = 0; i < map.patches().size(); ++i) {
        const Patch& patch = map.patches()[i];
        std::fprintf(f.get(), "    {\"cell\": [%d, %d], \"part\": \"%s\", \"level\": %d, ",
                     patch.home.m, patch.home.n, to_string(patch.home.part), patch.level);
        std::fprintf(f.get(), "\"traversable\": %s, \"vertices\": [",
                     patch.traversable ? "true" : "false");
        for (int v = 0; v < 3; ++v)
            std::fprintf(f.get(), "[%s, %s, %s]%s", format_g9(patch.vertices[v].x()).c_str(),
                         format_g9(patch.vertices[v].y()).c_str(),
                         format_g9(patch.vertices[v].z()).c_str(), v < 2 ? ", " : "");
        std::fprintf(f.get(), "], \"ids\": [");
        for (int v = 0; v < 3; ++v)
            std::fprintf(f.get(), "[%d, %d, %d]%s", patch.ids[v].m, patch.ids[v].n,
                         patch.ids[v].slice, v < 2 ? ", " : "");
        std::fprintf(f.get(), "]}%s\n", i + 1 < map.patches().size() ? "," : "");
    }
    std::fprintf(f.get(), "  ]\n}\n");
}

MultiLevelMap load_map_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "patchnav-map")
        throw std::runtime_error(path.string() + " is not a patchnav map file");

    MapParams params;
    const auto& jp = doc.at("params");
    params.res_m = jp.at("res_m").get<double>();
    params.thr_slice = jp.at("thr_slice").get<double>();
    params.least_num = jp.at("least_num").get<int>();
    params.lambda = jp.at("lambda").get<double>();
    params.res_pc = jp.at("res_pc").get<double>();
    params.thr_rep = jp.at("thr_rep").get<double>();
    params.thr_slope = jp.at("thr_slope").get<double>();

    std::vector<Patch> patches;
    for (const auto& item : doc.at("patches")) {
        Patch p;
        p.home.m = item.at("cell").at(0).get<int>();
        p.home.n = item.at("cell").at(1).get<int>();
        p.home.part = part_from_string(item.at("part").get<std::string>());
        const auto& verts = item.at("vertices");
        const auto& ids = item.at("ids");
        for (int v = 0; v < 3; ++v) {
            p.vertices[static_cast<std::size_t>(v)] =
                Vec3(verts.at(v).at(0).get<double>(), verts.at(v).at(1).get<double>(),
                     verts.at(v).at(2).get<double>());
            p.ids[static_cast<std::size_t>(v)] =
                VertexId{ids.at(v).at(0).get<int>(), ids.at(v).at(1).get<int>(),
                         ids.at(v).at(2).get<int>()};
        }
        patches.push_back(p);
    }
    return MultiLevelMap(params, std::move(patches));
}

namespace {

void write_waypoint_fields(std::FILE* f, const Trajectory& traj, std::size_t i, const char* sep) {
    const Waypoint& w = traj.waypoints[i];
    std::fprintf(f, "%s%s%s%s%s%s%s%s%s%s%s%s%s%s", format_g17(traj.times[i]).c_str(), sep,
                 format_g17(w.state.position.x()).c_str(), sep,
                 format_g17(w.state.position.y()).c_str(), sep,
                 format_g17(w.state.position.z()).c_str(), sep,
                 format_g17(w.state.v_left).c_str(), sep, format_g17(w.state.v_right).c_str(), sep,
                 format_g17(w.state.theta).c_str(), sep);
    if (w.patch)
        std::fprintf(f, "%d%s%d%s%s%s%d", w.patch->home.m, sep, w.patch->home.n, sep,
                     to_string(w.patch->home.part), sep, w.patch->level);
    else
        std::fprintf(f, "%s%s%s-1", sep, sep, sep);
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(),
                 "t,x,y,z,v_left,v_right,theta,patch_cell_m,patch_cell_n,patch_part,patch_level\n");
    for (std::size_t i = 0; i < traj.size(); ++i) {
        write_waypoint_fields(f.get(), traj, i, ",");
        std::fprintf(f.get(), "\n");
    }
}

void write_trajectory_json(const std::filesystem::path& path, const Trajectory& traj) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "{\n  \"waypoints\": [\n");
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Waypoint& w = traj.waypoints[i];
        std::fprintf(f.get(), "    {\"t\": %s, \"x\": %s, \"y\": %s, \"z\": %s, ",
                     format_g17(traj.times[i]).c_str(),
                     format_g17(w.state.position.x()).c_str(),
                     format_g17(w.state.position.y()).c_str(),
                     format_g17(w.state.position.z()).c_str());
        std::fprintf(f.get(), "\"v_left\": %s, \"v_right\": %s, \"theta\": %s, ",
                     format_g17(w.state.v_left).c_str(), format_g17(w.state.v_right).c_str(),
                     format_g17(w.state.theta).c_str());
        if (w.patch)
            std::fprintf(f.get(),
                         "\"patch_cell_m\": %d, \"patch_cell_n\": %d, \"patch_part\": \"%s\", "
                         "\"patch_level\": %d}",
                         w.patch->home.m, w.patch->home.n, to_string(w.patch->home.part),
                         w.patch->level);
        else
            std::fprintf(f.get(), "\"patch_level\": -1}");
        std::fprintf(f.get(), "%s\n", i + 1 < traj.size() ? "," : "");
    }
    std::fprintf(f.get(), "  ],\n  \"total_time\": %s\n}\n",
                 format_g17(traj.total_time()).c_str());
}

void write_opt_log_csv(const std::filesystem::path& path, std::span<const OptLogRow> stage1,
                       std::span<const OptLogRow> stage2) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "stage,iteration,objective,grad_norm,step\n");
    for (int stage = 1; stage <= 2; ++stage)
        for (const OptLogRow& row : (stage == 1 ? stage1 : stage2))
            std::fprintf(f.get(), "%d,%d,%s,%s,%s\n", stage, row.iteration,
                         format_g17(row.objective).c_str(), format_g17(row.grad_norm).c_str(),
                         format_g17(row.step).c_str());
}

void write_accuracy_json(const std::filesystem::path& path, const MapAccuracyReport& report) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "{\n");
    std::fprintf(f.get(), "  \"e_avg\": %s,\n", format_g9(report.e_avg).c_str());
    std::fprintf(f.get(), "  \"num_traversable\": %zu,\n", report.num_traversable);
    std::fprintf(f.get(), "  \"patches_with_points\": %zu,\n", report.patches_with_points);
    std::fprintf(f.get(), "  \"patches_without_points\": %zu\n", report.patches_without_points);
    std::fprintf(f.get(), "}\n");
}

namespace {

void write_report_fields(std::FILE* f, const TrajectoryReport& r, const char* indent) {
    std::fprintf(f, "%s\"length\": %s,\n", indent, format_g9(r.length).c_str());
    std::fprintf(f, "%s\"mean_curvature\": %s,\n", indent, format_g9(r.mean_curvature).c_str());
    std::fprintf(f, "%s\"max_curvature\": %s,\n", indent, format_g9(r.max_curvature).c_str());
    std::fprintf(f, "%s\"collision_free\": %s,\n", indent, r.collision_free ? "true" : "false");
    std::fprintf(f, "%s\"total_time\": %s,\n", indent, format_g9(r.total_time).c_str());
    std::fprintf(f, "%s\"degenerate_segments\": %d\n", indent, r.degenerate_segments);
}

}  // namespace

void write_trajectory_report_json(const std::filesystem::path& path,
                                  const TrajectoryReport& initial,
                                  const TrajectoryReport& optimized) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "{\n  \"initial\": {\n");
    write_report_fields(f.get(), initial, "    ");
    std::fprintf(f.get(), "  },\n  \"optimized\": {\n");
    write_report_fields(f.get(), optimized, "    ");
    std::fprintf(f.get(), "  }\n}\n");
}

void write_bench_pairs_csv(const std::filesystem::path& path,
                           std::span<const BenchPairResult> results) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(),
                 "index,start_x,start_y,start_z,goal_x,goal_y,goal_z,status,success,"
                 "length,mean_curvature,max_curvature,total_time\n");
    for (const BenchPairResult& r : results) {
        std::fprintf(f.get(), "%d,%s,%s,%s,%s,%s,%s,%s,%d,%s,%s,%s,%s\n", r.index,
                     format_g17(r.request.start.x()).c_str(),
                     format_g17(r.request.start.y()).c_str(),
                     format_g17(r.request.start.z()).c_str(),
                     format_g17(r.request.goal.x()).c_str(),
                     format_g17(r.request.goal.y()).c_str(),
                     format_g17(r.request.goal.z()).c_str(), to_string(r.status),
                     r.success ? 1 : 0, format_g9(r.report.length).c_str(),
                     format_g9(r.report.mean_curvature).c_str(),
                     format_g9(r.report.max_curvature).c_str(),
                     format_g9(r.report.total_time).c_str());
    }
}

void write_bench_summary_json(const std::filesystem::path& path, const BenchSummary& summary) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "{\n  \"n_pairs\": %d,\n  \"successes\": %d,\n", summary.n_pairs,
                 summary.successes);
    if (std::isnan(summary.success_rate))
        std::fprintf(f.get(), "  \"success_rate\": null,\n");
    else
        std::fprintf(f.get(), "  \"success_rate\": %s,\n", format_g9(summary.success_rate).c_str());
    std::fprintf(f.get(), "  \"mean_length\": %s,\n", format_g9(summary.mean_length).c_str());
    std::fprintf(f.get(), "  \"mean_curvature\": %s\n}\n",
                 format_g9(summary.mean_curvature).c_str());
}

void write_bench_timing_json(const std::filesystem::path& path, const BenchSummary& summary,
                             std::span<const BenchPairResult> results) {
    FilePtr f = open_out(path);
    std::fprintf(f.get(), "{\n  \"mean_seconds\": %s,\n  \"median_seconds\": %s,\n",
                 format_g9(summary.mean_seconds).c_str(),
                 format_g9(summary.median_seconds).c_str());
    std::fprintf(f.get(), "  \"pairs\": [\n");
    for (std::size_t i = 0; i < results.size(); ++i)
        std::fprintf(f.get(), "    {\"index\": %d, \"plan_seconds\": %s, \"opt_seconds\": %s}%s\n",
                     results[i].index, format_g9(results[i].plan_seconds).c_str(),
                     format_g9(results[i].opt_seconds).c_str(),
                     i + 1 < results.size() ? "," : "");
    std::fprintf(f.get(), "  ]\n}\n");
}

}  // namespace patchnav

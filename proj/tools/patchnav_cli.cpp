#include <CLI11.hpp>

#include "patchnav/config.hpp"
#include "patchnav/io.hpp"
#include "patchnav/map_builder.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace patchnav;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyMap = 3;
constexpr int kExitSnapFailure = 4;
constexpr int kExitInfeasible = 5;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    int threads = -1;
};

void add_common(CLI::App* cmd, CommonOpts* common) {
    cmd->add_option("--config", common->config_path, "configuration file (key = value lines)");
    cmd->add_option("--set", common->overrides,
                    "override a single config key, e.g. --set res_m=0.6 (repeatable)")
        ->expected(-1);
    cmd->add_option("--threads", common->threads, "cap OpenMP worker threads (0 = default)");
}

Config make_config(const CommonOpts& common) {
    Config config;
    if (!common.config_path.empty()) config = load_config(common.config_path);
    for (const std::string& kv : common.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (common.threads >= 0) config.threads = common.threads;
#ifdef _OPENMP
    if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
    return config;
}

Vec3 parse_point(const std::string& text) {
    Vec3 p;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &p.x(), &p.y(), &p.z()) != 3)
        throw std::invalid_argument("expected x,y,z but got '" + text + "'");
    return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_gen_scene(const CommonOpts& common, const std::string& out, const std::string& format) {
    const Config config = make_config(common);
    PointCloud cloud;
    if (config.scene_type == "spiral") {
        SpiralSceneParams p = config.spiral;
        p.res_pc = config.map.res_pc > 0 ? config.map.res_pc : p.res_pc;
        p.noise_sigma = config.noise_sigma;
        p.seed = config.seed;
        cloud = generate_spiral_scene(p);
    } else {
        UnevenSceneParams p = config.uneven;
        p.res_pc = config.map.res_pc > 0 ? config.map.res_pc : p.res_pc;
        p.seed = config.seed;
        cloud = generate_uneven_scene(p);
    }
    const CloudFormat fmt =
        format.empty() ? cloud_format_from_path(out) : cloud_format_from_string(format);
    save_cloud(out, cloud, fmt);
    std::printf("wrote %zu points to %s\n", cloud.size(), out.c_str());
    return kExitOk;
}

int cmd_build_map(const CommonOpts& common, const std::string& cloud_path, const std::string& out,
                  const std::string& ground_truth, bool serial) {
    Config config = make_config(common);
    const PointCloud cloud = load_cloud(cloud_path, cloud_format_from_path(cloud_path));
    config.resolve_resolutions(cloud.resolution_hint);
    config.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const MultiLevelMap map =
        serial ? build_map_serial(cloud, config.map) : build_map(cloud, config.map);
    const double tc = seconds_since(t0);
    if (map.empty()) {
        std::fprintf(stderr, "error: no patches could be built from %s\n", cloud_path.c_str());
        return kExitEmptyMap;
    }

    write_map_obj(fs::path(out + ".obj"), map);
    write_map_json(fs::path(out + ".json"), map);
    std::printf("T_c %.6f s; %zu patches (%zu traversable) from %zu points\n", tc,
                map.patches().size(), map.traversable_count(), cloud.size());

    if (!ground_truth.empty()) {
        const PointCloud truth = load_cloud(ground_truth, cloud_format_from_path(ground_truth));
        const MapAccuracyReport report = map_accuracy(map, truth);
        write_accuracy_json(fs::path(out + "_accuracy.json"), report);
        std::printf("E_avg %.6f m over %zu patches\n", report.e_avg, report.patches_with_points);
    }
    return kExitOk;
}

int cmd_plan(const CommonOpts& common, const std::string& map_path, const std::string& start_text,
             const std::string& goal_text, const std::string& out_dir) {
    const Config config = make_config(common);
    config.robot.validate();
    config.opt.validate();
    const MultiLevelMap map = load_map_json(map_path);
    const Vec3 start = parse_point(start_text);
    const Vec3 goal = parse_point(goal_text);

    const auto t0 = std::chrono::steady_clock::now();
    const PlanResult plan = search(map, start, goal, config.robot);
    if (plan.status == PlanStatus::StartSnapFailed || plan.status == PlanStatus::GoalSnapFailed) {
        std::fprintf(stderr, "error: %s\n", to_string(plan.status));
        return kExitSnapFailure;
    }
    if (plan.status == PlanStatus::Infeasible) {
        std::fprintf(stderr, "error: no feasible trajectory within the node budget\n");
        return kExitInfeasible;
    }
    const OptimizeOutcome stage1 = optimize_stage1(plan.trajectory, map, config.opt);
    const OptimizeOutcome stage2 = optimize_stage2(stage1.trajectory, map, config.opt);
    const double tp = seconds_since(t0);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_trajectory_csv(dir / "initial.csv", plan.trajectory);
    write_trajectory_json(dir / "initial.json", plan.trajectory);
    write_trajectory_csv(dir / "stage1.csv", stage1.trajectory);
    write_trajectory_csv(dir / "stage2.csv", stage2.trajectory);
    write_trajectory_json(dir / "stage2.json", stage2.trajectory);
    write_opt_log_csv(dir / "opt_log.csv", stage1.log, stage2.log);
    const TrajectoryReport initial_report = trajectory_metrics(plan.trajectory);
    const TrajectoryReport final_report =
        trajectory_metrics(stage2.trajectory, map, config.opt, config.safety_radius);
    write_trajectory_report_json(dir / "report.json", initial_report, final_report);

    std::printf("T_p %.6f s; %d expansions; time %.3f s, length %.3f m -> %.3f m\n", tp,
                plan.stats.expansions, plan.trajectory.total_time(), initial_report.length,
                final_report.length);
    return kExitOk;
}

int cmd_bench(const CommonOpts& common, const std::string& map_path, int n_pairs,
              std::uint64_t seed_flag, bool has_seed, const std::string& out_dir, bool any_pairs,
              bool parallel_pairs) {
    Config config = make_config(common);
    config.robot.validate();
    config.opt.validate();
    const MultiLevelMap map = load_map_json(map_path);
    const std::uint64_t seed = has_seed ? seed_flag : config.seed;

    const auto pairs = generate_pairs(map, n_pairs, seed, !any_pairs);
    std::vector<BenchPairResult> results;
    const BenchSummary summary =
        run_benchmark(map, pairs, config.robot, config.opt, config.safety_radius, &results,
                      parallel_pairs);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_bench_pairs_csv(dir / "pairs.csv", results);
    write_bench_summary_json(dir / "summary.json", summary);
    write_bench_timing_json(dir / "timing.json", summary, results);

    if (summary.n_pairs > 0)
        std::printf("P %.3f over %d pairs; mean T_p %.4f s, median %.4f s; mean L %.2f m\n",
                    summary.success_rate, summary.n_pairs, summary.mean_seconds,
                    summary.median_seconds, summary.mean_length);
    else
        std::printf("no pairs requested; success rate not applicable\n");
    return kExitOk;
}

int cmd_export(const std::string& map_path, const std::string& obj_out) {
    const MultiLevelMap map = load_map_json(map_path);
    write_map_obj(obj_out, map);
    std::printf("wrote %s\n", obj_out.c_str());
    return kExitOk;
}

int cmd_dump_config(const CommonOpts& common, const std::string& out) {
    const Config config = make_config(common);
    if (out.empty())
        std::fputs(dump_config_string(config).c_str(), stdout);
    else
        dump_config(out, config);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patchnav: multi-level patch maps and trajectory planning for ground robots"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* gen = app.add_subcommand("gen-scene", "generate a synthetic benchmark point cloud");
    std::string gen_out = "scene.xyz";
    std::string gen_format;
    gen->add_option("--out", gen_out, "output cloud path")->required();
    gen->add_option("--format", gen_format, "xyz, ply or pcd (default: from extension)");
    add_common(gen, &common);

    auto* build = app.add_subcommand("build-map", "build the multi-level patch map from a cloud");
    std::string cloud_path, map_out = "map", ground_truth;
    bool serial = false;
    build->add_option("--cloud", cloud_path, "input point cloud")->required();
    build->add_option("--out", map_out, "output basename (.obj and .json are appended)");
    build->add_option("--ground-truth", ground_truth, "cloud of true surface points for E_avg");
    build->add_flag("--serial", serial, "use the sequential reference builder");
    add_common(build, &common);

    auto* plan = app.add_subcommand("plan", "plan and optimize a trajectory on a built map");
    std::string map_path, start_text, goal_text, plan_dir = "plan_out";
    plan->add_option("--map", map_path, "map .json file from build-map")->required();
    plan->add_option("--start", start_text, "start as x,y,z (z picks the level)")->required();
    plan->add_option("--goal", goal_text, "goal as x,y,z")->required();
    plan->add_option("--out-dir", plan_dir, "directory for trajectory files");
    add_common(plan, &common);

    auto* bench = app.add_subcommand("bench", "batch-plan random start/goal pairs");
    std::string bench_map, bench_dir = "bench_out";
    int n_pairs = 100;
    std::uint64_t bench_seed = 0;
    bool any_pairs = false;
    bool parallel_pairs = false;
    bench->add_option("--map", bench_map, "map .json file")->required();
    bench->add_option("--pairs", n_pairs, "number of start/goal pairs");
    auto* seed_opt = bench->add_option("--seed", bench_seed, "pair-generation seed");
    bench->add_flag("--any-pairs", any_pairs,
                    "sample pairs from all traversable patches, not just the largest component");
    bench->add_flag("--parallel-pairs", parallel_pairs, "run pairs on OpenMP threads");
    bench->add_option("--out-dir", bench_dir, "directory for benchmark outputs");
    add_common(bench, &common);

    auto* exp = app.add_subcommand("export", "re-export a map .json to OBJ");
    std::string exp_map, exp_obj = "map.obj";
    exp->add_option("--map", exp_map, "map .json file")->required();
    exp->add_option("--obj", exp_obj, "output OBJ path");

    auto* dump = app.add_subcommand("dump-config", "print the effective configuration");
    std::string dump_out;
    dump->add_option("--out", dump_out, "write to a file instead of stdout");
    add_common(dump, &common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_gen_scene(common, gen_out, gen_format);
        if (build->parsed()) return cmd_build_map(common, cloud_path, map_out, ground_truth, serial);
        if (plan->parsed()) return cmd_plan(common, map_path, start_text, goal_text, plan_dir);
        if (bench->parsed())
            return cmd_bench(common, bench_map, n_pairs, bench_seed, seed_opt->count() > 0,
                             bench_dir, any_pairs, parallel_pairs);
        if (exp->parsed()) return cmd_export(exp_map, exp_obj);
        if (dump->parsed()) return cmd_dump_config(common, dump_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}

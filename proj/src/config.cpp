#include "patchnav/config.hpp"

#include "patchnav/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace patchnav {

namespace {

struct KeyEntry {
    const char* key;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
};

double to_double(const std::string& v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("expected a number, got '" + v + "'");
    return out;
}

int to_int(const std::string& v) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("expected an unsigned integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("expected true/false, got '" + v + "'");
}

#define DOUBLE_KEY(name, field)                                            \
    KeyEntry {                                                             \
        name, [](const Config& c) { return format_g17(c.field); },         \
            [](Config& c, const std::string& v) { c.field = to_double(v); } \
    }
#define INT_KEY(name, field)                                                \
    KeyEntry {                                                              \
        name, [](const Config& c) { return std::to_string(c.field); },     \
            [](Config& c, const std::string& v) { c.field = to_int(v); }   \
    }
#define BOOL_KEY(name, field)                                                  \
    KeyEntry {                                                                 \
        name, [](const Config& c) { return c.field ? "true" : "false"; },     \
            [](Config& c, const std::string& v) { c.field = to_bool(v); }     \
    }

const std::vector<KeyEntry>& registry() {
    static const std::vector<KeyEntry> entries = {
        DOUBLE_KEY("res_pc", map.res_pc),
        DOUBLE_KEY("res_m", map.res_m),
        DOUBLE_KEY("thr_slice", map.thr_slice),
        INT_KEY("least_num", map.least_num),
        DOUBLE_KEY("lambda", map.lambda),
        DOUBLE_KEY("thr_rep", map.thr_rep),
        DOUBLE_KEY("thr_slope", map.thr_slope),
        DOUBLE_KEY("track_width", robot.track_width),
        DOUBLE_KEY("a_max", robot.a_max),
        DOUBLE_KEY("v_max", robot.v_max),
        INT_KEY("accel_levels", robot.accel_levels),
        DOUBLE_KEY("dt", robot.dt),
        INT_KEY("num_iter", robot.num_iter),
        DOUBLE_KEY("voxel_size", robot.voxel_size),
        DOUBLE_KEY("goal_tol", robot.goal_tol),
        BOOL_KEY("forward_only", robot.forward_only),
        INT_KEY("max_expansions", robot.max_expansions),
        DOUBLE_KEY("w_o", opt.w_o),
        DOUBLE_KEY("w_c", opt.w_c),
        DOUBLE_KEY("w_s", opt.w_s),
        DOUBLE_KEY("r_o", opt.r_o),
        DOUBLE_KEY("c_max", opt.c_max),
        INT_KEY("max_iters_stage1", opt.max_iters_stage1),
        INT_KEY("max_iters_stage2", opt.max_iters_stage2),
        DOUBLE_KEY("grad_tol", opt.grad_tol),
        INT_KEY("interp_factor", opt.interp_factor),
        BOOL_KEY("fix_original", opt.fix_original),
        DOUBLE_KEY("safety_radius", safety_radius),
        KeyEntry{"seed", [](const Config& c) { return std::to_string(c.seed); },
                 [](Config& c, const std::string& v) { c.seed = to_u64(v); }},
        INT_KEY("threads", threads),
        KeyEntry{"scene_type", [](const Config& c) { return c.scene_type; },
                 [](Config& c, const std::string& v) {
                     if (v != "spiral" && v != "uneven")
                         throw std::invalid_argument("scene_type must be spiral or uneven");
                     c.scene_type = v;
                 }},
        DOUBLE_KEY("spiral_radius", spiral.radius),
        DOUBLE_KEY("spiral_width", spiral.width),
        DOUBLE_KEY("spiral_turns", spiral.turns),
        DOUBLE_KEY("spiral_rise", spiral.rise_per_turn),
        DOUBLE_KEY("uneven_extent", uneven.extent),
        DOUBLE_KEY("uneven_amplitude", uneven.amplitude),
        INT_KEY("uneven_octaves", uneven.octaves),
        DOUBLE_KEY("noise_sigma", noise_sigma),
    };
    return entries;
}

#undef DOUBLE_KEY
#undef INT_KEY
#undef BOOL_KEY

const KeyEntry* find_key(const std::string& key) {
    for (const KeyEntry& e : registry())
        if (key == e.key) return &e;
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void Config::resolve_resolutions(double cloud_hint) {
    if (map.res_pc <= 0.0 && cloud_hint > 0.0) map.res_pc = cloud_hint;
    if (map.res_m <= 0.0 && map.res_pc > 0.0) map.res_m = 3.0 * map.res_pc;
}

void Config::validate() const {
    map.validate();
    robot.validate();
    opt.validate();
    if (safety_radius < 0.0) throw std::invalid_argument("safety_radius must be non-negative");
    if (threads < 0) throw std::invalid_argument("threads must be non-negative");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    Config config;
    std::string lineStr;
    int line = 0;
    while (std::getline(in, lineStr)) {
        ++line;
        const auto hash = lineStr.find('#');
        if (hash != std::string::npos) lineStr.erase(hash);
        lineStr = trim(lineStr);
        if (lineStr.empty()) continue;
        if (lineStr.front() == '[') continue;  // section headers are decorative
        const auto eq = lineStr.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line);
        const std::string key = trim(lineStr.substr(0, eq));
        std::string value = trim(lineStr.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        try {
            apply_override(config, key, value);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), line);
        }
    }
    return config;
}

void apply_override(Config& config, const std::string& key, const std::string& value) {
    const KeyEntry* entry = find_key(key);
    if (!entry) throw std::invalid_argument("unknown config key '" + key + "'");
    entry->set(config, value);
}

std::string dump_config_string(const Config& config) {
    std::ostringstream out;
    out << "# patchnav configuration\n";
    for (const KeyEntry& e : registry()) {
        std::string value = e.get(config);
        if (e.key == std::string("scene_type")) value = '"' + value + '"';
        out << e.key << " = " << value << "\n";
    }
    return out.str();
}

void dump_config(const std::filesystem::path& path, const Config& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << dump_config_string(config);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const KeyEntry& e : registry()) keys.emplace_back(e.key);
    return keys;
}

}  // namespace patchnav

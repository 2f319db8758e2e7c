#include "patchnav/point_cloud.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace patchnav {

namespace {

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, int line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("invalid number '" + tok + "'", line);
    if (!std::isfinite(v)) throw ParseError("non-finite coordinate '" + tok + "'", line);
    return v;
}

long parse_long(const std::string& tok, int line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("invalid integer '" + tok + "'", line);
    return v;
}

// "# resolution <v>" comment carries the sampling hint across round trips.
bool parse_resolution_comment(const std::string& s, double* out) {
    std::istringstream iss(s);
    std::string hash, key;
    double v = 0.0;
    if (!(iss >> hash >> key >> v)) return false;
    if ((hash != "#" && hash != "comment") || key != "resolution") return false;
    *out = v;
    return true;
}

PointCloud load_xyz(std::istream& in) {
    PointCloud cloud;
    std::string lineStr;
    int line = 0;
    while (std::getline(in, lineStr)) {
        ++line;
        if (is_blank(lineStr)) continue;
        if (lineStr[0] == '#') {
            parse_resolution_comment(lineStr, &cloud.resolution_hint);
            continue;
        }
        auto toks = split_ws(lineStr);
        if (toks.size() < 3) throw ParseError("expected 3 coordinates", line);
        cloud.points.emplace_back(parse_double(toks[0], line), parse_double(toks[1], line),
                                  parse_double(toks[2], line));
    }
    return cloud;
}

PointCloud load_ply(std::istream& in) {
    std::string lineStr;
    int line = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, lineStr)) throw ParseError(std::string("unexpected end of file, expected ") + what, line + 1);
        ++line;
    };

    next_line("ply magic");
    if (lineStr.rfind("ply", 0) != 0) throw ParseError("missing 'ply' magic", line);

    PointCloud cloud;
    long vertex_count = -1;
    int prop_index = 0;
    int ix = -1, iy = -1, iz = -1;
    int nprops = 0;
    bool in_vertex_element = false;
    bool ascii = false;

    for (;;) {
        next_line("header line");
        auto toks = split_ws(lineStr);
        if (toks.empty()) continue;
        if (toks[0] == "comment") {
            parse_resolution_comment(lineStr, &cloud.resolution_hint);
            continue;
        }
        if (toks[0] == "format") {
            if (toks.size() < 2 || toks[1] != "ascii")
                throw ParseError("only ascii ply is supported", line);
            ascii = true;
        } else if (toks[0] == "element") {
            if (toks.size() < 3) throw ParseError("malformed element declaration", line);
            in_vertex_element = (toks[1] == "vertex");
            if (in_vertex_element) vertex_count = parse_long(toks[2], line);
        } else if (toks[0] == "property" && in_vertex_element) {
            if (toks.size() < 3) throw ParseError("malformed property declaration", line);
            const std::string& name = toks.back();
            if (name == "x") ix = prop_index;
            if (name == "y") iy = prop_index;
            if (name == "z") iz = prop_index;
            ++prop_index;
            ++nprops;
        } else if (toks[0] == "end_header") {
            break;
        }
    }
    if (!ascii) throw ParseError("ply format line missing", line);
    if (vertex_count < 0) throw ParseError("ply header has no vertex element", line);
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError("ply vertex element lacks x/y/z properties", line);

    cloud.points.reserve(static_cast<std::size_t>(vertex_count));
    for (long i = 0; i < vertex_count; ++i) {
        next_line("vertex row");
        auto toks = split_ws(lineStr);
        if (static_cast<int>(toks.size()) < nprops) throw ParseError("vertex row too short", line);
        cloud.points.emplace_back(parse_double(toks[ix], line), parse_double(toks[iy], line),
                                  parse_double(toks[iz], line));
    }
    return cloud;  // trailing elements (faces etc.) are ignored
}

PointCloud load_pcd(std::istream& in) {
    PointCloud cloud;
    std::string lineStr;
    int line = 0;
    long point_count = -1;
    int ix = -1, iy = -1, iz = -1;
    int nfields = 0;
    bool data_seen = false;

    while (std::getline(in, lineStr)) {
        ++line;
        if (is_blank(lineStr)) continue;
        if (lineStr[0] == '#') {
            parse_resolution_comment(lineStr, &cloud.resolution_hint);
            continue;
        }
        auto toks = split_ws(lineStr);
        if (!data_seen) {
            if (toks[0] == "FIELDS") {
                nfields = static_cast<int>(toks.size()) - 1;
                for (int i = 1; i < static_cast<int>(toks.size()); ++i) {
                    if (toks[i] == "x") ix = i - 1;
                    if (toks[i] == "y") iy = i - 1;
                    if (toks[i] == "z") iz = i - 1;
                }
            } else if (toks[0] == "POINTS") {
                if (toks.size() < 2) throw ParseError("malformed POINTS header", line);
                point_count = parse_long(toks[1], line);
            } else if (toks[0] == "DATA") {
                if (toks.size() < 2 || toks[1] != "ascii")
                    throw ParseError("only DATA ascii is supported", line);
                data_seen = true;
            }
            continue;
        }
        if (static_cast<int>(toks.size()) < nfields) throw ParseError("point row too short", line);
        cloud.points.emplace_back(parse_double(toks[ix], line), parse_double(toks[iy], line),
                                  parse_double(toks[iz], line));
    }
    if (!data_seen) throw ParseError("pcd file has no DATA section", line);
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError("pcd FIELDS lack x/y/z", line);
    if (point_count >= 0 && static_cast<long>(cloud.points.size()) != point_count)
        throw ParseError("POINTS count does not match data rows", line);
    return cloud;
}

void write_coord_row(std::FILE* f, const Vec3& p) {
    std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

}  // namespace

CloudFormat cloud_format_from_string(std::string_view name) {
    if (name == "xyz" || name == "xyz-ascii") return CloudFormat::XyzAscii;
    if (name == "ply" || name == "ply-ascii") return CloudFormat::PlyAscii;
    if (name == "pcd" || name == "pcd-ascii") return CloudFormat::PcdAscii;
    throw std::invalid_argument("unknown cloud format '" + std::string(name) + "'");
}

CloudFormat cloud_format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".ply") return CloudFormat::PlyAscii;
    if (ext == ".pcd") return CloudFormat::PcdAscii;
    return CloudFormat::XyzAscii;
}

const char* to_string(CloudFormat format) {
    switch (format) {
        case CloudFormat::XyzAscii: return "xyz";
        case CloudFormat::PlyAscii: return "ply";
        case CloudFormat::PcdAscii: return "pcd";
    }
    return "?";
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    PointCloud cloud;
    switch (format) {
        case CloudFormat::XyzAscii: cloud = load_xyz(in); break;
        case CloudFormat::PlyAscii: cloud = load_ply(in); break;
        case CloudFormat::PcdAscii: cloud = load_pcd(in); break;
    }
    if (cloud.empty()) throw std::runtime_error("empty point cloud: " + path.string());
    return cloud;
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format) {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.string().c_str(), "w"));
    if (!f) throw std::runtime_error("cannot write " + path.string());
    switch (format) {
        case CloudFormat::XyzAscii:
            if (cloud.resolution_hint > 0.0)
                std::fprintf(f.get(), "# resolution %.17g\n", cloud.resolution_hint);
            for (const Vec3& p : cloud.points) write_coord_row(f.get(), p);
            break;
        case CloudFormat::PlyAscii:
            std::fprintf(f.get(), "ply\nformat ascii 1.0\n");
            if (cloud.resolution_hint > 0.0)
                std::fprintf(f.get(), "comment resolution %.17g\n", cloud.resolution_hint);
            std::fprintf(f.get(), "element vertex %zu\n", cloud.size());
            std::fprintf(f.get(), "property double x\nproperty double y\nproperty double z\n");
            std::fprintf(f.get(), "end_header\n");
            for (const Vec3& p : cloud.points) write_coord_row(f.get(), p);
            break;
        case CloudFormat::PcdAscii:
            std::fprintf(f.get(), "# .PCD v0.7 - Point Cloud Data file format\n");
            if (cloud.resolution_hint > 0.0)
                std::fprintf(f.get(), "# resolution %.17g\n", cloud.resolution_hint);
            std::fprintf(f.get(), "VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n");
            std::fprintf(f.get(), "WIDTH %zu\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS %zu\nDATA ascii\n",
                         cloud.size(), cloud.size());
            for (const Vec3& p : cloud.points) write_coord_row(f.get(), p);
            break;
    }
}

PointCloud generate_spiral_scene(const SpiralSceneParams& p) {
    if (p.radius <= 0 || p.width <= 0 || p.turns <= 0 || p.rise_per_turn <= 0 || p.res_pc <= 0)
        throw std::invalid_argument("spiral scene dimensions must be positive");
    if (p.noise_sigma < 0) throw std::invalid_argument("noise_sigma must be >= 0");
    if (p.width >= 2.0 * p.radius) throw std::invalid_argument("ramp width exceeds its diameter");

    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> noise(0.0, p.noise_sigma);
    auto z_noise = [&]() { return p.noise_sigma > 0.0 ? noise(rng) : 0.0; };

    PointCloud cloud;
    cloud.resolution_hint = p.res_pc;

    const double r_in = p.radius - 0.5 * p.width;
    const double r_out = p.radius + 0.5 * p.width;
    const double phi_total = p.turns * 2.0 * kPi;

    // Flat apron plugging the inner hole, sampled on a square grid.
    const long k_max = static_cast<long>(std::floor(r_in / p.res_pc));
    for (long i = -k_max; i <= k_max; ++i) {
        for (long j = -k_max; j <= k_max; ++j) {
            const double x = static_cast<double>(i) * p.res_pc;
            const double y = static_cast<double>(j) * p.res_pc;
            if (x * x + y * y > r_in * r_in) continue;
            cloud.points.emplace_back(x, y, z_noise());
        }
    }

    // Helical strip: rings at radial spacing res_pc, samples at arc spacing
    // res_pc along the 3D helix of each ring.
    const int n_rings = static_cast<int>(std::floor(p.width / p.res_pc)) + 1;
    for (int ri = 0; ri < n_rings; ++ri) {
        const double r = r_in + static_cast<double>(ri) * p.res_pc;
        if (r > r_out + 1e-12) break;
        const double helix_len =
            phi_total * std::sqrt(r * r + std::pow(p.rise_per_turn / (2.0 * kPi), 2));
        const long n_samples = std::max<long>(1, static_cast<long>(std::llround(helix_len / p.res_pc)));
        const double dphi = phi_total / static_cast<double>(n_samples);
        for (long s = 0; s <= n_samples; ++s) {
            const double phi = static_cast<double>(s) * dphi;
            const double z = p.rise_per_turn * phi / (2.0 * kPi);
            cloud.points.emplace_back(r * std::cos(phi), r * std::sin(phi), z + z_noise());
        }
    }
    return cloud;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Lattice value in [-1, 1], deterministic in (cell, octave, seed).
double lattice_value(std::uint64_t seed, int octave, long ix, long iy) {
    std::uint64_t h = splitmix64(seed ^ (0x517cc1b727220a95ULL * static_cast<std::uint64_t>(octave + 1)));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) << 32));
    return 2.0 * (static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double u, double v) {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const long iu = static_cast<long>(fu);
    const long iv = static_cast<long>(fv);
    const double tu = smoothstep(u - fu);
    const double tv = smoothstep(v - fv);
    const double v00 = lattice_value(seed, octave, iu, iv);
    const double v10 = lattice_value(seed, octave, iu + 1, iv);
    const double v01 = lattice_value(seed, octave, iu, iv + 1);
    const double v11 = lattice_value(seed, octave, iu + 1, iv + 1);
    const double a = v00 + (v10 - v00) * tu;
    const double b = v01 + (v11 - v01) * tu;
    return a + (b - a) * tv;
}

}  // namespace

double uneven_scene_gain_sum(int octaves) {
    double sum = 0.0;
    double gain = 1.0;
    for (int o = 0; o < octaves; ++o, gain *= 0.5) sum += gain;
    return sum;
}

double uneven_scene_height(const UnevenSceneParams& p, double x, double y) {
    if (p.amplitude == 0.0) return 0.0;
    const double wavelength = p.base_wavelength > 0.0 ? p.base_wavelength : p.extent / 4.0;
    double z = 0.0;
    double gain = 1.0;
    double freq = 1.0 / wavelength;
    for (int o = 0; o < p.octaves; ++o, gain *= 0.5, freq *= 2.0)
        z += gain * value_noise(p.seed, o, x * freq, y * freq);
    return p.amplitude * z;
}

PointCloud generate_uneven_scene(const UnevenSceneParams& p) {
    if (p.extent <= 0 || p.res_pc <= 0 || p.amplitude < 0)
        throw std::invalid_argument("uneven scene dimensions must be positive");
    if (p.octaves < 1) throw std::invalid_argument("octaves must be >= 1");

    PointCloud cloud;
    cloud.resolution_hint = p.res_pc;
    const long n = static_cast<long>(std::floor(p.extent / p.res_pc));
    const double x0 = -0.5 * p.extent;
    cloud.points.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (long i = 0; i <= n; ++i) {
        for (long j = 0; j <= n; ++j) {
            const double x = x0 + static_cast<double>(i) * p.res_pc;
            const double y = x0 + static_cast<double>(j) * p.res_pc;
            cloud.points.emplace_back(x, y, uneven_scene_height(p, x, y));
        }
    }
    return cloud;
}

}  // namespace patchnav

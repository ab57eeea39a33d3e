#include "pointjepa/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pointjepa/errors.hpp"

namespace pointjepa::data {

namespace fs = std::filesystem;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

const char* shape_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Sphere: return "sphere";
        case ShapeKind::Cube: return "cube";
        case ShapeKind::Cylinder: return "cylinder";
        case ShapeKind::Cone: return "cone";
        case ShapeKind::Torus: return "torus";
        case ShapeKind::Plane: return "plane";
    }
    return "unknown";
}

void ShapeSpec::validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0))
        throw std::invalid_argument("ShapeSpec: size parameters must be positive");
    if (kind == ShapeKind::Torus && !(b < a))
        throw std::invalid_argument("ShapeSpec: torus needs minor radius < major radius");
}

ShapeSpec sample_shape_spec(ShapeKind kind, Rng& rng) {
    ShapeSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ShapeKind::Sphere:
            break;  // scale is normalized away
        case ShapeKind::Cube:
            spec.b = rng.uniform(0.35, 1.0);
            spec.c = rng.uniform(0.35, 1.0);
            break;
        case ShapeKind::Cylinder:
            spec.b = rng.uniform(1.0, 4.0);
            break;
        case ShapeKind::Cone:
            spec.b = rng.uniform(1.0, 3.0);
            break;
        case ShapeKind::Torus:
            spec.b = rng.uniform(0.25, 0.45);
            break;
        case ShapeKind::Plane:
            spec.b = rng.uniform(0.5, 1.0);
            break;
    }
    return spec;
}

namespace {

using dvec3 = std::array<double, 3>;

dvec3 sample_surface_point(const ShapeSpec& s, Rng& rng) {
    switch (s.kind) {
        case ShapeKind::Sphere: {
            double x, y, z, norm2;
            do {
                x = rng.gaussian();
                y = rng.gaussian();
                z = rng.gaussian();
                norm2 = x * x + y * y + z * z;
            } while (norm2 < 1e-12);
            const double inv = s.a / std::sqrt(norm2);
            return {x * inv, y * inv, z * inv};
        }
        case ShapeKind::Cube: {
            const double ax = s.b * s.c, ay = s.a * s.c, az = s.a * s.b;  // face-pair areas (scaled)
            const double total = ax + ay + az;
            const double pick = rng.uniform(0.0, total);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0);
            if (pick < ax) return {sign * s.a, u * s.b, v * s.c};
            if (pick < ax + ay) return {u * s.a, sign * s.b, v * s.c};
            return {u * s.a, v * s.b, sign * s.c};
        }
        case ShapeKind::Cylinder: {
            const double r = s.a, h = s.b;
            const double lateral = kTwoPi * r * h;
            const double caps = 2.0 * 3.14159265358979323846 * r * r;
            const double theta = rng.uniform(0.0, kTwoPi);
            if (rng.uniform(0.0, lateral + caps) < lateral)
                return {r * std::cos(theta), r * std::sin(theta), rng.uniform(-h / 2, h / 2)};
            const double rr = r * std::sqrt(rng.uniform());
            const double z = rng.uniform() < 0.5 ? -h / 2 : h / 2;
            return {rr * std::cos(theta), rr * std::sin(theta), z};
        }
        case ShapeKind::Cone: {
            const double r = s.a, h = s.b;
            const double slant = std::sqrt(r * r + h * h);
            const double lateral = 3.14159265358979323846 * r * slant;
            const double base = 3.14159265358979323846 * r * r;
            const double theta = rng.uniform(0.0, kTwoPi);
            if (rng.uniform(0.0, lateral + base) < lateral) {
                const double t = std::sqrt(rng.uniform());  // area grows linearly from the apex
                return {t * r * std::cos(theta), t * r * std::sin(theta), h * (1.0 - t)};
            }
            const double rr = r * std::sqrt(rng.uniform());
            return {rr * std::cos(theta), rr * std::sin(theta), 0.0};
        }
        case ShapeKind::Torus: {
            const double R = s.a, r = s.b;
            const double phi = rng.uniform(0.0, kTwoPi);
            double theta;
            do {  // dA is proportional to R + r*cos(theta)
                theta = rng.uniform(0.0, kTwoPi);
            } while (rng.uniform() * (R + r) > R + r * std::cos(theta));
            const double ring = R + r * std::cos(theta);
            return {ring * std::cos(phi), ring * std::sin(phi), r * std::sin(theta)};
        }
        case ShapeKind::Plane:
            return {rng.uniform(-s.a, s.a), rng.uniform(-s.b, s.b), 0.0};
    }
    throw std::invalid_argument("gen_shape: unknown shape kind");
}

}  // namespace

geom::PointCloud gen_shape(const ShapeSpec& spec, std::size_t n, Rng& rng, double jitter_sigma,
                           RotationMode rotation) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("gen_shape: need n >= 1");
    if (jitter_sigma < 0.0) throw std::invalid_argument("gen_shape: jitter must be non-negative");

    std::vector<dvec3> pts;
    pts.reserve(n);
    if (spec.kind == ShapeKind::Sphere) {
        // antithetic pairs pin the sample centroid to the origin, so the
        // radius survives centroid subtraction exactly
        while (pts.size() + 2 <= n) {
            const dvec3 p = sample_surface_point(spec, rng);
            pts.push_back(p);
            pts.push_back({-p[0], -p[1], -p[2]});
        }
        if (pts.size() < n) pts.push_back(sample_surface_point(spec, rng));
    } else {
        for (std::size_t i = 0; i < n; ++i) pts.push_back(sample_surface_point(spec, rng));
    }

    dvec3 mean{0, 0, 0};
    for (const auto& p : pts)
        for (int a = 0; a < 3; ++a) mean[a] += p[a];
    for (int a = 0; a < 3; ++a) mean[a] /= static_cast<double>(n);
    double max_r2 = 0.0;
    for (auto& p : pts) {
        for (int a = 0; a < 3; ++a) p[a] -= mean[a];
        max_r2 = std::max(max_r2, p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    }
    const double inv_r = max_r2 > 0.0 ? 1.0 / std::sqrt(max_r2) : 1.0;
    for (auto& p : pts)
        for (int a = 0; a < 3; ++a) p[a] *= inv_r;

    geom::PointCloud cloud;
    cloud.points.reserve(n);
    for (const auto& p : pts)
        cloud.points.push_back({static_cast<float>(p[0]), static_cast<float>(p[1]),
                                static_cast<float>(p[2])});
    geom::apply_jitter(cloud, jitter_sigma, rng);
    geom::apply_random_rotation(cloud, rotation, rng);
    return cloud;
}

// ---------------------------------------------------------------------------
// cloud file I/O
// ---------------------------------------------------------------------------

namespace {
constexpr char kCloudMagic[4] = {'P', 'C', 'J', '1'};
}

void write_cloud(const std::string& path, const geom::PointCloud& cloud) {
    if (cloud.points.empty()) throw std::invalid_argument("write_cloud: empty cloud");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("write_cloud: cannot open " + path);
    os.write(kCloudMagic, 4);
    const auto n = static_cast<std::uint32_t>(cloud.points.size());
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (const auto& p : cloud.points)
        os.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(float));
    os.flush();
    if (!os) throw FormatError("write_cloud: write failed: " + path);
}

geom::PointCloud read_cloud(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("read_cloud: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCloudMagic, 4) != 0)
        throw FormatError("read_cloud: bad magic in " + path);
    std::uint32_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!is || n == 0) throw FormatError("read_cloud: bad point count in " + path);
    geom::PointCloud cloud;
    cloud.points.resize(n);
    is.read(reinterpret_cast<char*>(cloud.points.data()),
            static_cast<std::streamsize>(n) * 3 * sizeof(float));
    if (!is) throw FormatError("read_cloud: truncated file " + path);
    is.peek();
    if (!is.eof()) throw FormatError("read_cloud: trailing bytes in " + path);
    for (const auto& p : cloud.points)
        for (const float v : p)
            if (!std::isfinite(v)) throw FormatError("read_cloud: non-finite coordinate in " + path);
    return cloud;
}

// ---------------------------------------------------------------------------
// dataset index
// ---------------------------------------------------------------------------

std::string DatasetIndex::resolve(const DatasetEntry& entry) const {
    if (root.empty()) return entry.path;
    return (fs::path(root) / entry.path).string();
}

void write_index(const DatasetIndex& index, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("write_index: cannot open " + path);
    os << "pcjepa-index v1\n";
    for (std::size_t i = 0; i < index.class_names.size(); ++i)
        os << "#class " << i << " " << index.class_names[i] << "\n";
    for (const auto& e : index.entries)
        os << e.path << "\t" << e.label << "\t" << (e.train_split ? "train" : "test") << "\n";
    os.flush();
    if (!os) throw FormatError("write_index: write failed: " + path);
}

DatasetIndex read_index(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("read_index: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "pcjepa-index v1")
        throw FormatError("read_index: bad header in " + path);

    DatasetIndex index;
    index.root = fs::path(path).parent_path().string();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("#class ", 0) == 0) {
            std::istringstream ss(line.substr(7));
            std::size_t id = 0;
            std::string name;
            if (!(ss >> id >> name)) throw FormatError("read_index: bad class line: " + line);
            if (id != index.class_names.size())
                throw FormatError("read_index: class ids must be dense and ordered");
            index.class_names.push_back(name);
            continue;
        }
        const auto tab1 = line.find('\t');
        const auto tab2 = line.find('\t', tab1 == std::string::npos ? tab1 : tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw FormatError("read_index: bad entry line: " + line);
        DatasetEntry e;
        e.path = line.substr(0, tab1);
        e.label = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
        const std::string split = line.substr(tab2 + 1);
        if (split == "train")
            e.train_split = true;
        else if (split == "test")
            e.train_split = false;
        else
            throw FormatError("read_index: bad split value: " + split);
        if (e.label < 0 || static_cast<std::size_t>(e.label) >= index.class_names.size())
            throw FormatError("read_index: label outside class table: " + line);
        index.entries.push_back(std::move(e));
    }
    return index;
}

DatasetIndex build_dataset(const BuildConfig& cfg) {
    if (cfg.per_class < 1 || cfg.n_points < 1)
        throw std::invalid_argument("build_dataset: per_class and n_points must be >= 1");
    if (cfg.split_ratio < 0.0 || cfg.split_ratio > 1.0)
        throw std::invalid_argument("build_dataset: split_ratio must be in [0, 1]");
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw FormatError("build_dataset: cannot create " + cfg.out_dir + ": " + ec.message());

    DatasetIndex index;
    index.root = cfg.out_dir;
    const ShapeKind kinds[kNumShapeClasses] = {ShapeKind::Sphere,   ShapeKind::Cube,
                                               ShapeKind::Cylinder, ShapeKind::Cone,
                                               ShapeKind::Torus,    ShapeKind::Plane};
    for (const auto kind : kinds) index.class_names.emplace_back(shape_name(kind));

    const auto n_train = static_cast<std::int64_t>(
        std::llround(cfg.split_ratio * static_cast<double>(cfg.per_class)));
    for (std::size_t cls = 0; cls < kNumShapeClasses; ++cls) {
        for (std::int64_t i = 0; i < cfg.per_class; ++i) {
            Rng rng = derive_stream(cfg.seed, stream_tag::data, cls, static_cast<std::uint64_t>(i));
            const ShapeSpec spec = sample_shape_spec(kinds[cls], rng);
            const geom::PointCloud cloud = gen_shape(spec, static_cast<std::size_t>(cfg.n_points),
                                                     rng, cfg.jitter_sigma, cfg.rotation);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%04lld.pcj", shape_name(kinds[cls]),
                          static_cast<long long>(i));
            write_cloud((fs::path(cfg.out_dir) / name).string(), cloud);
            index.entries.push_back({name, static_cast<int>(cls), i < n_train});
        }
    }
    write_index(index, (fs::path(cfg.out_dir) / "index.txt").string());
    return index;
}

}  // namespace pointjepa::data

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointjepa/geom.hpp"
#include "pointjepa/rng.hpp"

namespace pointjepa::data {

enum class ShapeKind { Sphere, Cube, Cylinder, Cone, Torus, Plane };

constexpr std::size_t kNumShapeClasses = 6;

const char* shape_name(ShapeKind kind);

using RotationMode = geom::RotationMode;

// One parametric surface. Parameter meaning by variant:
//   Sphere:   a = radius
//   Cube:     a, b, c = half-extents (box)
//   Cylinder: a = radius, b = height
//   Cone:     a = base radius, b = height
//   Torus:    a = major radius, b = minor radius (b < a)
//   Plane:    a, b = rectangle half-extents
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Sphere;
    double a = 1.0;
    double b = 1.0;
    double c = 1.0;

    void validate() const;
};

// Aspect-randomized instance parameters for a class; this is what keeps the
// six classes confusable under jitter instead of trivially separable.
ShapeSpec sample_shape_spec(ShapeKind kind, Rng& rng);

// n points sampled uniformly on the surface (area-weighted), then normalized
// to centroid 0 and max radius 1. Jitter is Gaussian per coordinate; rotation
// is uniform per RotationMode. Both are applied after normalization, so
// unjittered invariants hold exactly.
geom::PointCloud gen_shape(const ShapeSpec& spec, std::size_t n, Rng& rng,
                           double jitter_sigma = 0.0,
                           RotationMode rotation = RotationMode::None);

// Cloud file: magic "PCJ1", u32 point count, n x 3 fp32, little-endian.
void write_cloud(const std::string& path, const geom::PointCloud& cloud);
geom::PointCloud read_cloud(const std::string& path);

struct DatasetEntry {
    std::string path;  // relative to the index file's directory
    int label = 0;
    bool train_split = true;
};

struct DatasetIndex {
    std::string root;  // directory holding the index file
    std::vector<DatasetEntry> entries;
    std::vector<std::string> class_names;

    std::string resolve(const DatasetEntry& entry) const;
};

struct BuildConfig {
    std::string out_dir;
    std::int64_t per_class = 100;
    std::int64_t n_points = 1024;
    double split_ratio = 0.8;  // fraction of each class in the train split
    double jitter_sigma = 0.0;
    RotationMode rotation = RotationMode::None;
    std::uint64_t seed = 0;
};

// Generates per_class instances of each of the six classes, writes the cloud
// files plus index.txt under out_dir, and returns the index. Deterministic
// per seed; the split is stratified per class.
DatasetIndex build_dataset(const BuildConfig& cfg);

void write_index(const DatasetIndex& index, const std::string& path);
DatasetIndex read_index(const std::string& path);

}  // namespace pointjepa::data

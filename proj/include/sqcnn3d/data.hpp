// Copyright 2026 The sqcnn3d Authors

// Licensed under the Apache License, Version 2.0 (the License);
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

// http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an AS IS BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file data.hpp
 * @brief Dataset ingestion: OFF meshes, area-weighted surface sampling,
 * synthetic shapes, manifests and directory layouts.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "voxel.hpp"

namespace sqcnn3d {

struct Mesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
};

struct LabeledCloud {
    PointCloud cloud;
    std::size_t label = 0;
    std::string class_name;
};

struct Dataset {
    std::vector<LabeledCloud> samples;
    std::vector<std::string> class_names;

    [[nodiscard]] std::size_t num_classes() const noexcept { return class_names.size(); }
};

// ---------------------------------------------------------------------------
// OFF
// ---------------------------------------------------------------------------

namespace detail {

inline Point3 sub(const Point3 &a, const Point3 &b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline double triangle_area(const Point3 &a, const Point3 &b, const Point3 &c) {
    const Point3 u = sub(b, a), v = sub(c, a);
    const double x = u[1] * v[2] - u[2] * v[1];
    const double y = u[2] * v[0] - u[0] * v[2];
    const double z = u[0] * v[1] - u[1] * v[0];
    return 0.5 * std::sqrt(x * x + y * y + z * z);
}

/// Next line with comments stripped that still has content.
inline bool next_content_line(std::istream &is, std::string &line, std::size_t &lineno) {
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) {
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Parses an OFF mesh. Accepts the ModelNet quirk where the counts follow
/// the magic on the same line ("OFF3 1 0"). Polygons are fan-triangulated
/// and zero-area triangles dropped.
[[nodiscard]] inline Mesh parse_off(std::istream &is) {
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(is, line, lineno)) {
        throw ParseError(lineno, "empty OFF stream");
    }
    const auto start = line.find_first_not_of(" \t");
    if (line.compare(start, 3, "OFF") != 0) {
        throw ParseError(lineno, "missing OFF magic");
    }
    std::string rest = line.substr(start + 3);
    if (rest.find_first_not_of(" \t\r\n") == std::string::npos) {
        if (!detail::next_content_line(is, line, lineno)) {
            throw ParseError(lineno, "truncated OFF: missing counts");
        }
        rest = line;
    }
    long long nv = -1, nf = -1;
    {
        std::istringstream counts(rest);
        if (!(counts >> nv >> nf) || nv < 0 || nf < 0) {
            throw ParseError(lineno, "malformed counts line");
        }
    }

    Mesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        if (!detail::next_content_line(is, line, lineno)) {
            throw ParseError(lineno, "truncated OFF: expected " + std::to_string(nv) +
                                         " vertices");
        }
        std::istringstream ls(line);
        Point3 p{};
        if (!(ls >> p[0] >> p[1] >> p[2])) {
            throw ParseError(lineno, "malformed vertex");
        }
        mesh.vertices.push_back(p);
    }
    for (long long f = 0; f < nf; ++f) {
        if (!detail::next_content_line(is, line, lineno)) {
            throw ParseError(lineno, "truncated OFF: expected " + std::to_string(nf) +
                                         " faces");
        }
        std::istringstream ls(line);
        long long n = 0;
        if (!(ls >> n) || n < 3) {
            throw ParseError(lineno, "face needs at least 3 vertices");
        }
        std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
        for (auto &v : idx) {
            long long raw = -1;
            if (!(ls >> raw)) {
                throw ParseError(lineno, "face has fewer indices than declared");
            }
            if (raw < 0 || raw >= nv) {
                throw ParseError(lineno, "face index " + std::to_string(raw) +
                                             " out of range for " + std::to_string(nv) +
                                             " vertices");
            }
            v = static_cast<std::uint32_t>(raw);
        }
        for (std::size_t t = 1; t + 1 < idx.size(); ++t) {
            const std::array<std::uint32_t, 3> tri{idx[0], idx[t], idx[t + 1]};
            if (detail::triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                      mesh.vertices[tri[2]]) > 0.0) {
                mesh.faces.push_back(tri);
            }
        }
    }
    return mesh;
}

inline void write_off(std::ostream &os, const Mesh &mesh) {
    os << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
    os << std::setprecision(17);
    for (const auto &p : mesh.vertices) {
        os << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    }
    for (const auto &f : mesh.faces) {
        os << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
}

[[nodiscard]] inline Mesh load_off(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return parse_off(in);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Area-weighted, barycentric-uniform surface samples.
[[nodiscard]] inline PointCloud sample_surface(const Mesh &mesh, std::size_t n,
                                               std::uint64_t seed) {
    if (n == 0) {
        throw ConfigError("sample count must be positive");
    }
    if (mesh.faces.empty()) {
        throw DegenerateMeshError("mesh has no triangles");
    }
    std::vector<double> areas;
    areas.reserve(mesh.faces.size());
    double total = 0.0;
    for (const auto &f : mesh.faces) {
        areas.push_back(detail::triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]],
                                              mesh.vertices[f[2]]));
        total += areas.back();
    }
    if (!(total > 0.0)) {
        throw DegenerateMeshError("mesh has zero surface area");
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud cloud;
    cloud.vertices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &f = mesh.faces[pick(rng)];
        const double r1 = std::sqrt(u(rng));
        const double r2 = u(rng);
        const double wa = 1.0 - r1, wb = r1 * (1.0 - r2), wc = r1 * r2;
        const auto &a = mesh.vertices[f[0]], &b = mesh.vertices[f[1]],
                   &c = mesh.vertices[f[2]];
        cloud.vertices.push_back({wa * a[0] + wb * b[0] + wc * c[0],
                                  wa * a[1] + wb * b[1] + wc * c[1],
                                  wa * a[2] + wb * b[2] + wc * c[2]});
    }
    return cloud;
}

/// Points of an OFF file: surface samples when it has faces, else its vertices.
[[nodiscard]] inline PointCloud cloud_from_mesh(const Mesh &mesh, std::size_t n,
                                                std::uint64_t seed) {
    if (mesh.faces.empty()) {
        if (mesh.vertices.empty()) {
            throw EmptyInputError("OFF file has neither faces nor vertices");
        }
        return PointCloud{mesh.vertices, {1.0, 1.0, 1.0}};
    }
    return sample_surface(mesh, n, seed);
}

// ---------------------------------------------------------------------------
// Synthetic shapes
// ---------------------------------------------------------------------------

inline const std::vector<std::string> &synth_class_names() {
    static const std::vector<std::string> names{"sphere", "cube", "torus", "pyramid",
                                                "cylinder"};
    return names;
}

namespace detail {

inline constexpr double kTorusMajor = 1.0;
inline constexpr double kTorusMinor = 0.4;

inline Mesh pyramid_mesh() {
    Mesh m;
    m.vertices = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {0, 0, 1}};
    m.faces = {{0, 2, 1}, {0, 3, 2}, {0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
    return m;
}

template <class Rng> Point3 shape_point(const std::string &shape, Rng &rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    constexpr double tau = 2.0 * std::numbers::pi;
    if (shape == "sphere") {
        Point3 p{g(rng), g(rng), g(rng)};
        double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        while (r == 0.0) {
            p = {g(rng), g(rng), g(rng)};
            r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        return {p[0] / r, p[1] / r, p[2] / r};
    }
    if (shape == "cube") {
        const auto face = static_cast<int>(u(rng) * 6.0) % 6;
        const double a = 2.0 * u(rng) - 1.0, b = 2.0 * u(rng) - 1.0;
        const double s = (face % 2 == 0) ? 1.0 : -1.0;
        switch (face / 2) {
        case 0:
            return {s, a, b};
        case 1:
            return {a, s, b};
        default:
            return {a, b, s};
        }
    }
    if (shape == "torus") {
        // Rejection on the tube angle makes the density area-uniform.
        double v = 0.0;
        do {
            v = tau * u(rng);
        } while (u(rng) * (kTorusMajor + kTorusMinor) >
                 kTorusMajor + kTorusMinor * std::cos(v));
        const double t = tau * u(rng);
        const double ring = kTorusMajor + kTorusMinor * std::cos(v);
        return {ring * std::cos(t), ring * std::sin(t), kTorusMinor * std::sin(v)};
    }
    if (shape == "cylinder") {
        // Radius 1, height 2: side area 4 pi, caps 2 pi.
        const double t = tau * u(rng);
        if (u(rng) < 4.0 / 6.0) {
            return {std::cos(t), std::sin(t), 2.0 * u(rng) - 1.0};
        }
        const double r = std::sqrt(u(rng));
        return {r * std::cos(t), r * std::sin(t), u(rng) < 0.5 ? -1.0 : 1.0};
    }
    throw ConfigError("unknown synthetic class '" + shape + "'");
}

/// Uniform random rotation from a normalized Gaussian quaternion.
template <class Rng> std::array<double, 9> random_rotation(Rng &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    double w = 0, x = 0, y = 0, z = 0, n = 0;
    do {
        w = g(rng);
        x = g(rng);
        y = g(rng);
        z = g(rng);
        n = std::sqrt(w * w + x * x + y * y + z * z);
    } while (n < 1e-12);
    w /= n;
    x /= n;
    y /= n;
    z /= n;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
            2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
            2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
}

} // namespace detail

/// Analytic surface samples of each requested class with a random rotation
/// and a uniform scale in [0.9, 1.1] per sample. Labels follow the order of
/// `classes`.
[[nodiscard]] inline Dataset synth_dataset(const std::vector<std::string> &classes,
                                           std::size_t per_class, std::uint64_t seed,
                                           std::size_t points = 2048) {
    if (classes.empty()) {
        throw EmptyInputError("no synthetic classes requested");
    }
    if (per_class == 0 || points == 0) {
        throw ConfigError("per-class count and points must be positive");
    }
    for (const auto &c : classes) {
        if (std::find(synth_class_names().begin(), synth_class_names().end(), c) ==
            synth_class_names().end()) {
            throw ConfigError("unknown synthetic class '" + c + "'");
        }
    }
    Dataset ds;
    ds.class_names = classes;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    const Mesh pyramid = detail::pyramid_mesh();
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t label = 0; label < classes.size(); ++label) {
            const std::string &shape = classes[label];
            const auto rot = detail::random_rotation(rng);
            const double scale = jitter(rng);
            std::vector<Point3> raw;
            if (shape == "pyramid") {
                raw = sample_surface(pyramid, points, rng()).vertices;
            } else {
                raw.reserve(points);
                for (std::size_t p = 0; p < points; ++p) {
                    raw.push_back(detail::shape_point(shape, rng));
                }
            }
            LabeledCloud sample{{{}, {1.0, 1.0, 1.0}}, label, shape};
            sample.cloud.vertices.reserve(raw.size());
            for (const auto &p : raw) {
                sample.cloud.vertices.push_back(
                    {scale * (rot[0] * p[0] + rot[1] * p[1] + rot[2] * p[2]),
                     scale * (rot[3] * p[0] + rot[4] * p[1] + rot[5] * p[2]),
                     scale * (rot[6] * p[0] + rot[7] * p[1] + rot[8] * p[2])});
            }
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// First `train_per_class` samples of each class go to train, the rest to test.
[[nodiscard]] inline std::pair<Dataset, Dataset> stratified_split(const Dataset &ds,
                                                                  std::size_t train_per_class) {
    Dataset train{{}, ds.class_names}, test{{}, ds.class_names};
    std::vector<std::size_t> seen(ds.num_classes(), 0);
    for (const auto &s : ds.samples) {
        (seen.at(s.label)++ < train_per_class ? train : test).samples.push_back(s);
    }
    return {std::move(train), std::move(test)};
}

/// Seed-stable shuffle, then the first `train_fraction` of samples to train.
[[nodiscard]] inline std::pair<Dataset, Dataset> shuffle_split(const Dataset &ds,
                                                               double train_fraction,
                                                               std::uint64_t seed) {
    std::vector<std::size_t> order(ds.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto cut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(order.size())));
    Dataset train{{}, ds.class_names}, test{{}, ds.class_names};
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < cut ? train : test).samples.push_back(ds.samples[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Manifests and directory layouts
// ---------------------------------------------------------------------------

/// One record of a manifest file: `<path> <label> [class_name]`.
struct ManifestEntry {
    std::filesystem::path path;
    std::size_t label = 0;
    std::string class_name;
};

/// Relative paths resolve against the manifest's directory. Entries come
/// back sorted by path.
[[nodiscard]] inline std::vector<ManifestEntry>
read_manifest(const std::filesystem::path &manifest) {
    std::ifstream in(manifest);
    if (!in) {
        throw IoError("cannot open manifest " + manifest.string());
    }
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (detail::next_content_line(in, line, lineno)) {
        std::istringstream ls(line);
        ManifestEntry e;
        std::string path;
        long long label = -1;
        if (!(ls >> path >> label) || label < 0) {
            throw ParseError(lineno, "expected '<path> <label> [class]'");
        }
        ls >> e.class_name;
        e.path = path;
        if (e.path.is_relative()) {
            e.path = manifest.parent_path() / e.path;
        }
        e.label = static_cast<std::size_t>(label);
        if (e.class_name.empty()) {
            e.class_name = "class" + std::to_string(e.label);
        }
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(),
              [](const auto &a, const auto &b) { return a.path < b.path; });
    return out;
}

inline void write_manifest(std::ostream &os, const std::vector<ManifestEntry> &entries) {
    for (const auto &e : entries) {
        os << e.path.generic_string() << ' ' << e.label << ' ' << e.class_name << '\n';
    }
}

namespace detail {

inline std::uint64_t path_seed(std::uint64_t seed, const std::string &path) {
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (unsigned char c : path) {
        h = (h ^ c) * 1099511628211ULL;
    }
    return h;
}

inline Dataset dataset_from_entries(const std::vector<ManifestEntry> &entries,
                                    std::size_t points, std::uint64_t seed) {
    if (entries.empty()) {
        throw EmptyInputError("dataset has no entries");
    }
    Dataset ds;
    std::map<std::size_t, std::string> names;
    for (const auto &e : entries) {
        names.emplace(e.label, e.class_name);
    }
    const std::size_t classes = names.rbegin()->first + 1;
    ds.class_names.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        auto it = names.find(c);
        ds.class_names[c] = it != names.end() ? it->second : "class" + std::to_string(c);
    }
    for (const auto &e : entries) {
        const Mesh mesh = load_off(e.path);
        ds.samples.push_back({cloud_from_mesh(mesh, points,
                                              path_seed(seed, e.path.generic_string())),
                              e.label, ds.class_names[e.label]});
    }
    return ds;
}

} // namespace detail

[[nodiscard]] inline Dataset load_manifest_dataset(const std::filesystem::path &manifest,
                                                   std::size_t points, std::uint64_t seed) {
    return detail::dataset_from_entries(read_manifest(manifest), points, seed);
}

/// ModelNet / ShapeNet style layout: `<root>/<class>/<split>/*.off`. Classes
/// are labelled in sorted directory order.
[[nodiscard]] inline Dataset load_directory_dataset(const std::filesystem::path &root,
                                                    const std::string &split,
                                                    std::size_t points, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) {
        throw IoError("not a directory: " + root.string());
    }
    std::vector<std::string> classes;
    for (const auto &entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) {
            classes.push_back(entry.path().filename().string());
        }
    }
    std::sort(classes.begin(), classes.end());
    std::vector<ManifestEntry> entries;
    for (std::size_t label = 0; label < classes.size(); ++label) {
        const fs::path dir = root / classes[label] / split;
        if (!fs::is_directory(dir)) {
            continue;
        }
        for (const auto &entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".off") {
                entries.push_back({entry.path(), label, classes[label]});
            }
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto &a, const auto &b) { return a.path < b.path; });
    auto ds = detail::dataset_from_entries(entries, points, seed);
    ds.class_names = classes;
    return ds;
}

} // namespace sqcnn3d

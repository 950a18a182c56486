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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sqcnn3d/data.hpp"

namespace sqcnn3d {
namespace {

namespace fs = std::filesystem;

Mesh parse(const std::string &text) {
    std::istringstream is(text);
    return parse_off(is);
}

TEST(ParseOff, UnitTriangle) {
    const Mesh m = parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    ASSERT_EQ(m.vertices.size(), 3U);
    ASSERT_EQ(m.faces.size(), 1U);
    EXPECT_EQ(m.faces[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
    EXPECT_EQ(m.vertices[1], (Point3{1, 0, 0}));
}

TEST(ParseOff, FusedHeaderMatchesSpacedForm) {
    const std::string body = "0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
    const Mesh fused = parse("OFF3 1 0\n" + body);
    const Mesh spaced = parse("OFF\n3 1 0\n" + body);
    EXPECT_EQ(fused.vertices, spaced.vertices);
    EXPECT_EQ(fused.faces, spaced.faces);
}

TEST(ParseOff, OutOfRangeIndexNamesLine) {
    try {
        (void)parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 99\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 6U);
        EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
    }
}

TEST(ParseOff, MalformedInputs) {
    EXPECT_THROW((void)parse(""), ParseError);
    EXPECT_THROW((void)parse("PLY\n3 1 0\n"), ParseError);
    EXPECT_THROW((void)parse("OFF\nthree 1 0\n"), ParseError);
    EXPECT_THROW((void)parse("OFF\n3 1 0\n0 0 0\n1 0 0\n"), ParseError);
    EXPECT_THROW((void)parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n"), ParseError);
    EXPECT_THROW((void)parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1\n"), ParseError);
    EXPECT_THROW((void)parse("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n"), ParseError);
}

TEST(ParseOff, QuadsCommentsAndBlankLines) {
    const Mesh m = parse("# a unit square\nOFF\n\n4 1 0  # counts\n0 0 0\n1 0 0\n\n1 1 0\n0 1 0\n"
                         "4 0 1 2 3\n");
    ASSERT_EQ(m.faces.size(), 2U);
    EXPECT_EQ(m.faces[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
    EXPECT_EQ(m.faces[1], (std::array<std::uint32_t, 3>{0, 2, 3}));
}

TEST(ParseOff, DropsZeroAreaTriangles) {
    const Mesh m = parse("OFF\n4 2 0\n0 0 0\n1 0 0\n2 0 0\n0 1 0\n3 0 1 2\n3 0 1 3\n");
    ASSERT_EQ(m.faces.size(), 1U);
    EXPECT_EQ(m.faces[0], (std::array<std::uint32_t, 3>{0, 1, 3}));
}

Mesh random_mesh(std::mt19937_64 &rng, std::size_t verts, std::size_t faces) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(verts - 1));
    Mesh m;
    for (std::size_t i = 0; i < verts; ++i) {
        m.vertices.push_back({u(rng), u(rng), u(rng)});
    }
    while (m.faces.size() < faces) {
        const std::array<std::uint32_t, 3> f{pick(rng), pick(rng), pick(rng)};
        if (f[0] != f[1] && f[1] != f[2] && f[0] != f[2]) {
            m.faces.push_back(f);
        }
    }
    return m;
}

TEST(WriteOff, RoundTrip) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const Mesh m = random_mesh(rng, 12, 20);
        std::stringstream ss;
        write_off(ss, m);
        const Mesh back = parse_off(ss);
        EXPECT_EQ(back.faces, m.faces);
        ASSERT_EQ(back.vertices.size(), m.vertices.size());
        for (std::size_t i = 0; i < m.vertices.size(); ++i) {
            for (int a = 0; a < 3; ++a) {
                EXPECT_NEAR(back.vertices[i][a], m.vertices[i][a], 1e-12);
            }
        }
    }
}

TEST(SampleSurface, PointsLieOnTrianglePlane) {
    Mesh m;
    m.vertices = {{0.2, -1.0, 0.5}, {1.5, 0.3, -0.7}, {-0.4, 0.9, 1.1}};
    m.faces = {{0, 1, 2}};
    const auto cloud = sample_surface(m, 1000, 3);
    ASSERT_EQ(cloud.vertices.size(), 1000U);
    const Point3 u = detail::sub(m.vertices[1], m.vertices[0]);
    const Point3 v = detail::sub(m.vertices[2], m.vertices[0]);
    const Point3 n{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    for (const auto &p : cloud.vertices) {
        const Point3 d = detail::sub(p, m.vertices[0]);
        EXPECT_NEAR((d[0] * n[0] + d[1] * n[1] + d[2] * n[2]) / len, 0.0, 1e-9);
    }
}

TEST(SampleSurface, AreaWeighting) {
    // Two disjoint right triangles with legs 3 and 1: areas 4.5 and 0.5.
    Mesh m;
    m.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}, {10, 0, 0}, {11, 0, 0}, {10, 1, 0}};
    m.faces = {{0, 1, 2}, {3, 4, 5}};
    const auto cloud = sample_surface(m, 10000, 5);
    std::size_t big = 0;
    for (const auto &p : cloud.vertices) {
        big += p[0] < 5.0 ? 1 : 0;
    }
    const double sigma = std::sqrt(10000.0 * 0.9 * 0.1);
    EXPECT_LE(std::fabs(static_cast<double>(big) - 9000.0), 3.0 * sigma);
}

// Which face of `m` contains p (by barycentric test).
std::size_t face_of(const Mesh &m, const Point3 &p) {
    std::size_t best = 0;
    double best_err = 1e300;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const auto &a = m.vertices[m.faces[f][0]], &b = m.vertices[m.faces[f][1]],
                   &c = m.vertices[m.faces[f][2]];
        const double total = detail::triangle_area(a, b, c);
        const double err = std::fabs(detail::triangle_area(p, b, c) +
                                     detail::triangle_area(a, p, c) +
                                     detail::triangle_area(a, b, p) - total);
        if (err < best_err) {
            best_err = err;
            best = f;
        }
    }
    return best;
}

TEST(SampleSurface, ChiSquaredAgainstAreaWeights) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        // Triangles placed far apart so each sample identifies its face.
        Mesh m;
        std::uniform_real_distribution<double> u(0.2, 1.0);
        const std::size_t k = 6;
        for (std::size_t f = 0; f < k; ++f) {
            const double off = 10.0 * static_cast<double>(f);
            const auto base = static_cast<std::uint32_t>(m.vertices.size());
            m.vertices.push_back({off, 0, 0});
            m.vertices.push_back({off + u(rng), 0, 0});
            m.vertices.push_back({off, u(rng), u(rng)});
            m.faces.push_back({base, base + 1, base + 2});
        }
        const std::size_t n = 6000;
        const auto cloud = sample_surface(m, n, 100 + static_cast<std::uint64_t>(trial));
        std::vector<double> counts(k, 0.0), areas(k);
        double total = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            areas[f] = detail::triangle_area(m.vertices[m.faces[f][0]], m.vertices[m.faces[f][1]],
                                             m.vertices[m.faces[f][2]]);
            total += areas[f];
        }
        for (const auto &p : cloud.vertices) {
            counts[face_of(m, p)] += 1.0;
        }
        double chi2 = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            const double expected = static_cast<double>(n) * areas[f] / total;
            chi2 += (counts[f] - expected) * (counts[f] - expected) / expected;
        }
        // Upper 0.001 quantile of chi-squared with 5 degrees of freedom.
        EXPECT_LT(chi2, 20.515) << "trial " << trial;
    }
}

TEST(SampleSurface, DeterministicPerSeed) {
    std::mt19937_64 rng(9);
    const Mesh m = random_mesh(rng, 8, 10);
    EXPECT_EQ(sample_surface(m, 500, 42).vertices, sample_surface(m, 500, 42).vertices);
    EXPECT_NE(sample_surface(m, 500, 42).vertices, sample_surface(m, 500, 43).vertices);
}

TEST(SampleSurface, Errors) {
    Mesh flat;
    flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    EXPECT_THROW((void)sample_surface(flat, 10, 0), DegenerateMeshError);
    flat.faces = {{0, 1, 2}};
    EXPECT_THROW((void)sample_surface(flat, 10, 0), DegenerateMeshError);
    EXPECT_THROW((void)sample_surface(flat, 0, 0), ConfigError);
}

TEST(CloudFromMesh, VertexOnlyFileYieldsVertices) {
    const Mesh m = parse("OFF\n2 0 0\n1 2 3\n4 5 6\n");
    EXPECT_EQ(cloud_from_mesh(m, 100, 0).vertices, m.vertices);
    EXPECT_THROW((void)cloud_from_mesh(Mesh{}, 10, 0), EmptyInputError);
}

TEST(Synth, SphereRadiusWithinJitter) {
    const auto ds = synth_dataset({"sphere"}, 10, 3, 500);
    for (const auto &s : ds.samples) {
        const auto &v = s.cloud.vertices;
        const double r0 = std::sqrt(v[0][0] * v[0][0] + v[0][1] * v[0][1] + v[0][2] * v[0][2]);
        EXPECT_GE(r0, 0.9 - 1e-12);
        EXPECT_LE(r0, 1.1 + 1e-12);
        for (const auto &p : v) {
            EXPECT_NEAR(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]), r0, 1e-12);
        }
    }
}

TEST(Synth, BalancedLabels) {
    const auto ds = synth_dataset({"sphere", "cube", "torus", "pyramid"}, 50, 1, 64);
    ASSERT_EQ(ds.samples.size(), 200U);
    std::map<std::size_t, std::size_t> counts;
    for (const auto &s : ds.samples) {
        ++counts[s.label];
        EXPECT_EQ(s.class_name, ds.class_names[s.label]);
        EXPECT_EQ(s.cloud.vertices.size(), 64U);
    }
    for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(counts[c], 50U);
    }
}

TEST(Synth, SeedsChangeGeometryNotLabels) {
    const std::vector<std::string> classes{"cube", "torus", "cylinder"};
    const auto a = synth_dataset(classes, 5, 1, 64);
    const auto b = synth_dataset(classes, 5, 2, 64);
    const auto a2 = synth_dataset(classes, 5, 1, 64);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].label, b.samples[i].label);
        EXPECT_NE(a.samples[i].cloud.vertices, b.samples[i].cloud.vertices);
        EXPECT_EQ(a.samples[i].cloud.vertices, a2.samples[i].cloud.vertices);
    }
}

TEST(Synth, Errors) {
    EXPECT_THROW((void)synth_dataset({}, 5, 0), EmptyInputError);
    EXPECT_THROW((void)synth_dataset({"sphere"}, 0, 0), ConfigError);
    EXPECT_THROW((void)synth_dataset({"dodecahedron"}, 1, 0), ConfigError);
}

TEST(Splits, StratifiedAndShuffled) {
    const auto ds = synth_dataset({"sphere", "cube"}, 7, 1, 16);
    const auto [train, test] = stratified_split(ds, 5);
    EXPECT_EQ(train.samples.size(), 10U);
    EXPECT_EQ(test.samples.size(), 4U);
    const auto [a, b] = shuffle_split(ds, 0.8, 3);
    EXPECT_EQ(a.samples.size(), 11U);
    EXPECT_EQ(b.samples.size(), 3U);
    const auto [a2, b2] = shuffle_split(ds, 0.8, 3);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].cloud.vertices, a2.samples[i].cloud.vertices);
    }
}

class DataFiles : public ::testing::Test {
  protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("sqcnn3d_data_test_" +
                 std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    void write(const fs::path &rel, const std::string &text) {
        fs::create_directories((root_ / rel).parent_path());
        std::ofstream(root_ / rel) << text;
    }

    fs::path root_;
};

const char *kTetra = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

TEST_F(DataFiles, ManifestIsSortedByPath) {
    write("b.off", kTetra);
    write("a.off", kTetra);
    write("c.off", "OFF\n3 0 0\n0 0 0\n1 1 1\n2 2 2\n");
    write("list.txt", "# path label class\nc.off 1 cone\nb.off 0 tet\n\na.off 0 tet\n");
    const auto entries = read_manifest(root_ / "list.txt");
    ASSERT_EQ(entries.size(), 3U);
    EXPECT_EQ(entries[0].path.filename(), "a.off");
    EXPECT_EQ(entries[2].path.filename(), "c.off");
    const auto ds = load_manifest_dataset(root_ / "list.txt", 100, 4);
    ASSERT_EQ(ds.samples.size(), 3U);
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"tet", "cone"}));
    EXPECT_EQ(ds.samples[0].cloud.vertices.size(), 100U);
    EXPECT_EQ(ds.samples[2].cloud.vertices.size(), 3U);
    // Same file contents at different paths sample differently; reloads match.
    EXPECT_NE(ds.samples[0].cloud.vertices, ds.samples[1].cloud.vertices);
    EXPECT_EQ(load_manifest_dataset(root_ / "list.txt", 100, 4).samples[1].cloud.vertices,
              ds.samples[1].cloud.vertices);

    std::stringstream ss;
    write_manifest(ss, entries);
    EXPECT_NE(ss.str().find(" 1 cone"), std::string::npos);
}

TEST_F(DataFiles, ManifestErrors) {
    write("bad.txt", "a.off\n");
    EXPECT_THROW((void)read_manifest(root_ / "bad.txt"), ParseError);
    EXPECT_THROW((void)read_manifest(root_ / "missing.txt"), IoError);
    write("empty.txt", "# nothing\n");
    EXPECT_THROW((void)load_manifest_dataset(root_ / "empty.txt", 10, 0), EmptyInputError);
    write("dangling.txt", "nope.off 0\n");
    EXPECT_THROW((void)load_manifest_dataset(root_ / "dangling.txt", 10, 0), IoError);
}

TEST_F(DataFiles, DirectoryLayout) {
    write("chair/train/1.off", kTetra);
    write("chair/train/2.off", kTetra);
    write("chair/test/3.off", kTetra);
    write("airplane/train/1.off", kTetra);
    write("airplane/train/notes.txt", "ignored");
    const auto train = load_directory_dataset(root_, "train", 50, 1);
    EXPECT_EQ(train.class_names, (std::vector<std::string>{"airplane", "chair"}));
    ASSERT_EQ(train.samples.size(), 3U);
    EXPECT_EQ(train.samples[0].label, 0U);
    EXPECT_EQ(train.samples[2].label, 1U);
    const auto test = load_directory_dataset(root_, "test", 50, 1);
    EXPECT_EQ(test.samples.size(), 1U);
    EXPECT_THROW((void)load_directory_dataset(root_ / "nope", "train", 50, 1), IoError);
}

} // namespace
} // namespace sqcnn3d

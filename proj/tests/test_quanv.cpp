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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles/brute_force.hpp"
#include "oracles/finite_diff.hpp"
#include "sqcnn3d/quanv.hpp"

namespace sqcnn3d {
namespace {

VoxelGrid random_grid(Dims3 dims, double density, std::mt19937_64 &rng) {
    std::bernoulli_distribution on(density);
    VoxelGrid g(dims);
    for (std::size_t w = 0; w < dims[0]; ++w) {
        for (std::size_t h = 0; h < dims[1]; ++h) {
            for (std::size_t d = 0; d < dims[2]; ++d) {
                g.set(w, h, d, on(rng));
            }
        }
    }
    return g;
}

QuanvLayer random_layer(const std::vector<std::size_t> &kernels, std::size_t stride,
                        std::mt19937_64 &rng) {
    QuanvLayer layer;
    layer.stride = stride;
    for (std::size_t k : kernels) {
        layer.filters.push_back(FilterParams::random({k, 4}, rng));
    }
    return layer;
}

void expect_close(const FeatureTensor &a, const FeatureTensor &b, double tol) {
    ASSERT_TRUE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a.values()[i], b.values()[i], tol) << "index " << i;
    }
}

TEST(Quanvolve, ZeroGridIdentityFilter) {
    QuanvLayer layer{{FilterParams::zeros({2, 4})}, 2, 4};
    const auto t = quanvolve(VoxelGrid({4, 4, 4}), layer);
    EXPECT_EQ(t.channels(), 4U);
    EXPECT_EQ(t.dims(), (Dims3{2, 2, 2}));
    for (double v : t.values()) {
        EXPECT_EQ(v, 1.0);
    }
}

TEST(Quanvolve, SingleVoxelAffectsOneSite) {
    std::mt19937_64 rng(2);
    const QuanvLayer layer = random_layer({2}, 2, rng);
    VoxelGrid g({4, 4, 4});
    g.set(3, 0, 2, true); // inside the patch at site (1,0,1)
    const auto t = quanvolve(g, layer);
    const auto empty = run_filter(EncodingPatch::from_bits(2, 0), layer.filters[0]);
    for (std::size_t w = 0; w < 2; ++w) {
        for (std::size_t h = 0; h < 2; ++h) {
            for (std::size_t d = 0; d < 2; ++d) {
                const auto expected = run_filter(extract_patch(g, {2 * w, 2 * h, 2 * d}, 2),
                                                 layer.filters[0]);
                bool differs = false;
                for (std::size_t c = 0; c < 4; ++c) {
                    EXPECT_NEAR(t.at(c, w, h, d), expected[c], 1e-12);
                    differs |= std::fabs(t.at(c, w, h, d) - empty[c]) > 1e-12;
                }
                EXPECT_EQ(differs, w == 1 && h == 0 && d == 1);
            }
        }
    }
}

TEST(Quanvolve, MatchesNaiveOracle) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 3; ++i) {
        const auto g = random_grid({8, 8, 8}, 0.3, rng);
        const auto layer = random_layer({2, 3}, 1, rng);
        expect_close(quanvolve(g, layer), oracle::naive_quanvolve(g, layer), 1e-12);
    }
    const auto g = random_grid({9, 7, 8}, 0.4, rng);
    const auto layer = random_layer({4, 2, 3}, 2, rng);
    expect_close(quanvolve(g, layer), oracle::naive_quanvolve(g, layer), 1e-12);
}

TEST(Quanvolve, OutputDims) {
    QuanvLayer layer{{FilterParams::zeros({3, 4}), FilterParams::zeros({2, 4})}, 2, 4};
    EXPECT_EQ(layer.output_dims({8, 9, 3}), (Dims3{3, 4, 1}));
    EXPECT_THROW((void)layer.output_dims({8, 2, 8}), ShapeError);
    EXPECT_THROW((void)quanvolve(VoxelGrid({2, 2, 2}), layer), ShapeError);
}

TEST(Quanvolve, LayerValidation) {
    QuanvLayer empty{{}, 2, 4};
    EXPECT_THROW(empty.validate(), ConfigError);
    QuanvLayer big{{FilterParams::zeros({5, 4})}, 2, 4};
    EXPECT_THROW(big.validate(), ConfigError);
    QuanvLayer zero_stride{{FilterParams::zeros({2, 4})}, 0, 4};
    EXPECT_THROW(zero_stride.validate(), ConfigError);
    QuanvLayer wrong_q{{FilterParams::zeros({2, 3})}, 2, 4};
    EXPECT_THROW(wrong_q.validate(), ConfigError);
}

TEST(Quanvolve, ValuesInRange) {
    std::mt19937_64 rng(6);
    const auto t = quanvolve(random_grid({10, 10, 10}, 0.5, rng), random_layer({2, 3, 4}, 1, rng));
    for (double v : t.values()) {
        EXPECT_GE(v, -1.0 - 1e-12);
        EXPECT_LE(v, 1.0 + 1e-12);
    }
}

TEST(Quanvolve, TranslationEquivariance) {
    std::mt19937_64 rng(8);
    const auto layer = random_layer({2, 3}, 2, rng);
    const auto g = random_grid({12, 12, 12}, 0.35, rng);
    for (int axis = 0; axis < 3; ++axis) {
        VoxelGrid shifted(g.dims());
        for (std::size_t w = 0; w < 12; ++w) {
            for (std::size_t h = 0; h < 12; ++h) {
                for (std::size_t d = 0; d < 12; ++d) {
                    std::array<std::size_t, 3> src{w, h, d};
                    if (src[axis] < 2) {
                        continue;
                    }
                    src[axis] -= 2;
                    shifted.set(w, h, d, g.at(src[0], src[1], src[2]) != 0);
                }
            }
        }
        const auto a = quanvolve(g, layer);
        const auto b = quanvolve(shifted, layer);
        const Dims3 out = a.dims();
        for (std::size_t c = 0; c < a.channels(); ++c) {
            for (std::size_t w = 0; w < out[0]; ++w) {
                for (std::size_t h = 0; h < out[1]; ++h) {
                    for (std::size_t d = 0; d < out[2]; ++d) {
                        std::array<std::size_t, 3> dst{w, h, d};
                        if (++dst[axis] >= out[axis]) {
                            continue;
                        }
                        EXPECT_EQ(b.at(c, dst[0], dst[1], dst[2]), a.at(c, w, h, d));
                    }
                }
            }
        }
    }
}

TEST(Quanvolve, FilterIndependence) {
    std::mt19937_64 rng(10);
    const auto g = random_grid({8, 8, 8}, 0.3, rng);
    QuanvLayer layer = random_layer({2, 3}, 1, rng);
    const auto before = quanvolve(g, layer);
    layer.filters.push_back(FilterParams::random({4, 4}, rng));
    const auto after = quanvolve(g, layer);
    // Adding a larger kernel shrinks the lattice; compare the common sites.
    const Dims3 out = after.dims();
    for (std::size_t c = 0; c < before.channels(); ++c) {
        for (std::size_t w = 0; w < out[0]; ++w) {
            for (std::size_t h = 0; h < out[1]; ++h) {
                for (std::size_t d = 0; d < out[2]; ++d) {
                    EXPECT_EQ(after.at(c, w, h, d), before.at(c, w, h, d));
                }
            }
        }
    }
    QuanvLayer same_k = random_layer({3}, 1, rng);
    const auto one = quanvolve(g, same_k);
    same_k.filters.push_back(FilterParams::random({2, 4}, rng));
    const auto two = quanvolve(g, same_k);
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(two.values()[i], one.values()[i]);
    }
}

TEST(QuanvolveBackward, ZeroUpstreamGivesZero) {
    std::mt19937_64 rng(12);
    const auto g = random_grid({6, 6, 6}, 0.4, rng);
    const auto layer = random_layer({2, 3}, 1, rng);
    const auto t = quanvolve(g, layer);
    const auto grads = quanvolve_backward(g, layer, FeatureTensor(t.channels(), t.dims()));
    for (const auto &f : grads) {
        for (double v : f) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(QuanvolveBackward, SingleSiteMatchesPatchGradient) {
    std::mt19937_64 rng(14);
    const auto g = random_grid({6, 6, 6}, 0.5, rng);
    const auto layer = random_layer({2, 2}, 2, rng);
    const auto t = quanvolve(g, layer);
    FeatureTensor up(t.channels(), t.dims());
    up.at(4, 1, 2, 0) = 1.0; // filter 1, qubit 1
    const auto grads = quanvolve_backward(g, layer, up);
    const auto patch = extract_patch(g, {2, 4, 0}, 2);
    const auto ref = backprop_expectation(build_filter_program(patch, layer.filters[1]), 4,
                                          layer.filters[1].values, {0});
    for (double v : grads[0]) {
        EXPECT_EQ(v, 0.0);
    }
    for (std::size_t i = 0; i < ref.grads.size(); ++i) {
        EXPECT_NEAR(grads[1][i], ref.grads[i], 1e-12);
    }
}

TEST(QuanvolveBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(16);
    const auto g = random_grid({6, 6, 6}, 0.4, rng);
    const auto layer = random_layer({2, 3}, 2, rng);
    const auto t = quanvolve(g, layer);
    FeatureTensor up(t.channels(), t.dims());
    std::normal_distribution<double> n;
    for (double &v : up.values()) {
        v = n(rng);
    }
    const auto grads = quanvolve_backward(g, layer, up);
    for (std::size_t m = 0; m < layer.num_filters(); ++m) {
        const auto fd = oracle::central_difference(
            [&](const std::vector<double> &x) {
                QuanvLayer l = layer;
                l.filters[m].values = x;
                const auto out = quanvolve(g, l);
                double s = 0.0;
                for (std::size_t i = 0; i < out.size(); ++i) {
                    s += out.values()[i] * up.values()[i];
                }
                return s;
            },
            layer.filters[m].values);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            EXPECT_TRUE(oracle::close(grads[m][i], fd[i], 1e-4, 1e-7))
                << "filter " << m << " param " << i << ": " << grads[m][i] << " vs " << fd[i];
        }
    }
}

TEST(QuanvolveBackward, LinearInUpstream) {
    std::mt19937_64 rng(18);
    const auto g = random_grid({7, 7, 7}, 0.4, rng);
    const auto layer = random_layer({2, 3}, 1, rng);
    const auto t = quanvolve(g, layer);
    FeatureTensor g1(t.channels(), t.dims()), g2(t.channels(), t.dims()),
        mix(t.channels(), t.dims());
    std::normal_distribution<double> n;
    const double a = 0.7, b = -1.3;
    for (std::size_t i = 0; i < t.size(); ++i) {
        g1.values()[i] = n(rng);
        g2.values()[i] = n(rng);
        mix.values()[i] = a * g1.values()[i] + b * g2.values()[i];
    }
    const auto r1 = quanvolve_backward(g, layer, g1);
    const auto r2 = quanvolve_backward(g, layer, g2);
    const auto rm = quanvolve_backward(g, layer, mix);
    for (std::size_t m = 0; m < r1.size(); ++m) {
        for (std::size_t i = 0; i < r1[m].size(); ++i) {
            EXPECT_NEAR(rm[m][i], a * r1[m][i] + b * r2[m][i], 1e-10);
        }
    }
}

TEST(QuanvolveBackward, ShapeMismatchRaises) {
    std::mt19937_64 rng(20);
    const auto layer = random_layer({2}, 2, rng);
    EXPECT_THROW((void)quanvolve_backward(VoxelGrid({4, 4, 4}), layer,
                                          FeatureTensor(4, {3, 3, 3})),
                 ShapeError);
}

TEST(FeatureFile, RoundTripAndHeader) {
    FeatureTensor t(2, {1, 2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) {
        t.values()[i] = 0.1 * static_cast<double>(i) - 0.3;
    }
    std::stringstream ss;
    write_features(ss, t);
    EXPECT_EQ(ss.str().size(), 16U + 8U * 12U);
    EXPECT_EQ(ss.str()[0], 2);
    EXPECT_EQ(ss.str()[12], 3);
    EXPECT_EQ(read_features(ss), t);
}

TEST(Quanvolve, DedupesRepeatedPatterns) {
    QuanvLayer layer{{FilterParams::zeros({2, 4})}, 1, 4};
    const auto fwd = quanvolve_with_cache(VoxelGrid({6, 6, 6}), layer);
    EXPECT_EQ(fwd.sweeps[0].patterns.size(), 1U);
    EXPECT_EQ(fwd.num_sites(), 125U);
}

} // namespace
} // namespace sqcnn3d

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
 * @file quanv.hpp
 * @brief 3D quanvolution: sweeping filter circuits over a voxel grid.
 *
 * All filters share one origin lattice sized by the largest kernel; a filter
 * with a smaller kernel reads the low corner of each site. Output channels
 * are grouped per filter: filter m owns channels [m*q, (m+1)*q).
 *
 * Patches are binary, so each filter only runs its circuit once per distinct
 * patch pattern. The forward cache keeps those states for the backward pass
 * and for the fidelity regularizer.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "circuit.hpp"
#include "error.hpp"
#include "io.hpp"
#include "qstate.hpp"
#include "voxel.hpp"

namespace sqcnn3d {

inline constexpr std::size_t kMinKernel = 2;
inline constexpr std::size_t kMaxKernel = 4;

struct QuanvLayer {
    std::vector<FilterParams> filters;
    std::size_t stride = 2;
    std::size_t num_qubits = 4;

    [[nodiscard]] std::size_t num_filters() const noexcept { return filters.size(); }
    [[nodiscard]] std::size_t num_channels() const noexcept {
        return filters.size() * num_qubits;
    }
    [[nodiscard]] std::size_t kernel_max() const noexcept {
        std::size_t k = 0;
        for (const auto &f : filters) {
            k = std::max(k, f.layout.kernel_size);
        }
        return k;
    }

    void validate() const {
        if (filters.empty()) {
            throw ConfigError("quanvolution layer needs at least one filter");
        }
        if (stride == 0) {
            throw ConfigError("stride must be positive");
        }
        for (const auto &f : filters) {
            f.validate();
            if (f.layout.kernel_size < kMinKernel || f.layout.kernel_size > kMaxKernel) {
                throw ConfigError("kernel size must be in {2,3,4}, got " +
                                  std::to_string(f.layout.kernel_size));
            }
            if (f.layout.num_qubits != num_qubits) {
                throw ConfigError("filter qubit count does not match layer");
            }
        }
    }

    /// floor((n - k_max) / stride) + 1 per axis.
    [[nodiscard]] Dims3 output_dims(const Dims3 &grid) const {
        const std::size_t k = kernel_max();
        Dims3 out{};
        for (int a = 0; a < 3; ++a) {
            if (grid[a] < k) {
                throw ShapeError("grid axis of length " + std::to_string(grid[a]) +
                                 " is smaller than kernel " + std::to_string(k));
            }
            out[a] = (grid[a] - k) / stride + 1;
        }
        return out;
    }
};

class FeatureTensor {
  public:
    FeatureTensor() = default;
    FeatureTensor(std::size_t channels, Dims3 dims)
        : channels_(channels), dims_(dims),
          values_(channels * dims[0] * dims[1] * dims[2], 0.0) {}

    [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
    [[nodiscard]] const Dims3 &dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t num_sites() const noexcept {
        return dims_[0] * dims_[1] * dims_[2];
    }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::size_t index(std::size_t c, std::size_t site) const noexcept {
        return c * num_sites() + site;
    }
    [[nodiscard]] std::size_t index(std::size_t c, std::size_t w, std::size_t h,
                                    std::size_t d) const noexcept {
        return index(c, (w * dims_[1] + h) * dims_[2] + d);
    }
    [[nodiscard]] double at(std::size_t c, std::size_t w, std::size_t h,
                            std::size_t d) const noexcept {
        return values_[index(c, w, h, d)];
    }
    [[nodiscard]] double &at(std::size_t c, std::size_t w, std::size_t h,
                             std::size_t d) noexcept {
        return values_[index(c, w, h, d)];
    }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    /// Contiguous channel block [first, first + count).
    [[nodiscard]] std::span<const double> channel_block(std::size_t first,
                                                        std::size_t count) const {
        return std::span<const double>(values_).subspan(first * num_sites(),
                                                        count * num_sites());
    }

    [[nodiscard]] bool same_shape(const FeatureTensor &o) const noexcept {
        return channels_ == o.channels_ && dims_ == o.dims_;
    }

    friend bool operator==(const FeatureTensor &, const FeatureTensor &) = default;

  private:
    std::size_t channels_ = 0;
    Dims3 dims_{0, 0, 0};
    std::vector<double> values_;
};

// Feature file: four little-endian uint32 (C, W, H, D), then C*W*H*D IEEE-754
// binary64 values, little-endian, channel-major then w, h, d.

inline void write_features(std::ostream &os, const FeatureTensor &t) {
    io::write_u32(os, static_cast<std::uint32_t>(t.channels()));
    for (std::size_t n : t.dims()) {
        io::write_u32(os, static_cast<std::uint32_t>(n));
    }
    for (double v : t.values()) {
        io::write_f64(os, v);
    }
    if (!os) {
        throw IoError("failed to write feature tensor");
    }
}

[[nodiscard]] inline FeatureTensor read_features(std::istream &is) {
    const std::size_t channels = io::read_u32(is);
    Dims3 dims{};
    for (auto &n : dims) {
        n = io::read_u32(is);
    }
    FeatureTensor t(channels, dims);
    for (double &v : t.values()) {
        v = io::read_f64(is);
    }
    return t;
}

/// Bit i of the result is patch entry i, entries ordered w-major over the
/// k^3 cube at `origin`.
[[nodiscard]] inline std::uint64_t patch_bits(const VoxelGrid &grid,
                                              const Dims3 &origin, std::size_t k) {
    std::uint64_t bits = 0;
    std::size_t i = 0;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t c = 0; c < k; ++c, ++i) {
                if (grid.at(origin[0] + a, origin[1] + b, origin[2] + c) != 0) {
                    bits |= std::uint64_t{1} << i;
                }
            }
        }
    }
    return bits;
}

[[nodiscard]] inline EncodingPatch extract_patch(const VoxelGrid &grid,
                                                 const Dims3 &origin, std::size_t k) {
    return EncodingPatch::from_bits(k, patch_bits(grid, origin, k));
}

/// Circuit results of one filter over all lattice sites, deduplicated by
/// patch pattern.
struct FilterSweep {
    std::vector<std::uint64_t> patterns;       // distinct patches, first-seen order
    std::vector<StateVector> states;           // one per pattern
    std::vector<std::vector<double>> outputs;  // <Z_w> per pattern
    std::vector<std::uint32_t> site_pattern;   // site -> pattern slot
};

struct QuanvForward {
    Dims3 out_dims{0, 0, 0};
    std::size_t num_qubits = 0;
    FeatureTensor features;
    std::vector<FilterSweep> sweeps;
    std::vector<CompiledFilter> compiled;

    [[nodiscard]] std::size_t num_sites() const noexcept {
        return out_dims[0] * out_dims[1] * out_dims[2];
    }
    [[nodiscard]] const StateVector &state(std::size_t filter, std::size_t site) const {
        const auto &s = sweeps[filter];
        return s.states[s.site_pattern[site]];
    }
};

[[nodiscard]] inline QuanvForward quanvolve_with_cache(const VoxelGrid &grid,
                                                       const QuanvLayer &layer) {
    layer.validate();
    QuanvForward fwd;
    fwd.out_dims = layer.output_dims(grid.dims());
    fwd.num_qubits = layer.num_qubits;
    fwd.features = FeatureTensor(layer.num_channels(), fwd.out_dims);
    const std::size_t sites = fwd.num_sites();
    const std::size_t q = layer.num_qubits;

    fwd.sweeps.resize(layer.num_filters());
    for (const auto &params : layer.filters) {
        fwd.compiled.emplace_back(params);
    }
    for (std::size_t m = 0; m < layer.num_filters(); ++m) {
        const std::size_t k = layer.filters[m].layout.kernel_size;
        FilterSweep &sweep = fwd.sweeps[m];
        sweep.site_pattern.resize(sites);
        std::unordered_map<std::uint64_t, std::uint32_t> slot_of;

        std::size_t site = 0;
        for (std::size_t w = 0; w < fwd.out_dims[0]; ++w) {
            for (std::size_t h = 0; h < fwd.out_dims[1]; ++h) {
                for (std::size_t d = 0; d < fwd.out_dims[2]; ++d, ++site) {
                    const Dims3 origin{w * layer.stride, h * layer.stride,
                                       d * layer.stride};
                    const std::uint64_t bits = patch_bits(grid, origin, k);
                    auto [it, inserted] = slot_of.try_emplace(
                        bits, static_cast<std::uint32_t>(sweep.patterns.size()));
                    if (inserted) {
                        sweep.patterns.push_back(bits);
                        sweep.states.push_back(fwd.compiled[m].run(bits));
                        sweep.outputs.push_back(expectations_z(sweep.states.back()));
                    }
                    sweep.site_pattern[site] = it->second;
                    const auto &out = sweep.outputs[it->second];
                    for (std::size_t wire = 0; wire < q; ++wire) {
                        fwd.features.values()[fwd.features.index(m * q + wire, site)] =
                            out[wire];
                    }
                }
            }
        }
    }
    return fwd;
}

[[nodiscard]] inline FeatureTensor quanvolve(const VoxelGrid &grid,
                                             const QuanvLayer &layer) {
    return quanvolve_with_cache(grid, layer).features;
}

/// Per-filter, per-pattern cotangents dL/d(psi*) of a scalar loss.
struct QuanvCotangents {
    std::vector<std::vector<std::vector<complex_t>>> per_filter;

    static QuanvCotangents zeros(const QuanvForward &fwd) {
        QuanvCotangents c;
        c.per_filter.resize(fwd.sweeps.size());
        const std::size_t dim = std::size_t{1} << fwd.num_qubits;
        for (std::size_t m = 0; m < fwd.sweeps.size(); ++m) {
            c.per_filter[m].assign(fwd.sweeps[m].patterns.size(),
                                   std::vector<complex_t>(dim, complex_t{0.0, 0.0}));
        }
        return c;
    }
};

/// Adds the cotangent of L = sum(upstream * features).
inline void add_feature_cotangent(QuanvCotangents &cot, const QuanvForward &fwd,
                                  const FeatureTensor &upstream) {
    if (!upstream.same_shape(fwd.features)) {
        throw ShapeError("upstream gradient shape does not match quanvolution output");
    }
    const std::size_t q = fwd.num_qubits;
    const std::size_t dim = std::size_t{1} << q;
    std::vector<double> diag(dim);
    for (std::size_t m = 0; m < fwd.sweeps.size(); ++m) {
        const FilterSweep &sweep = fwd.sweeps[m];
        for (std::size_t site = 0; site < fwd.num_sites(); ++site) {
            std::fill(diag.begin(), diag.end(), 0.0);
            bool any = false;
            for (std::size_t wire = 0; wire < q; ++wire) {
                const double g =
                    upstream.values()[upstream.index(m * q + wire, site)];
                if (g == 0.0) {
                    continue;
                }
                any = true;
                for (std::size_t i = 0; i < dim; ++i) {
                    diag[i] += ((i >> wire) & 1U) ? -g : g;
                }
            }
            if (!any) {
                continue;
            }
            const std::uint32_t slot = sweep.site_pattern[site];
            const auto amps = sweep.states[slot].amplitudes();
            auto &target = cot.per_filter[m][slot];
            for (std::size_t i = 0; i < dim; ++i) {
                target[i] += diag[i] * amps[i];
            }
        }
    }
}

/// Parameter gradients for every filter given accumulated cotangents.
[[nodiscard]] inline std::vector<std::vector<double>>
backward_from_cotangents(const QuanvForward &fwd, const QuanvLayer &layer,
                         const QuanvCotangents &cot) {
    std::vector<std::vector<double>> grads(layer.num_filters());
    for (std::size_t m = 0; m < layer.num_filters(); ++m) {
        const FilterSweep &sweep = fwd.sweeps[m];
        grads[m].assign(layer.filters[m].values.size(), 0.0);
        for (std::size_t slot = 0; slot < sweep.patterns.size(); ++slot) {
            const auto &c = cot.per_filter[m][slot];
            if (std::all_of(c.begin(), c.end(),
                            [](const complex_t &z) { return z == complex_t{}; })) {
                continue;
            }
            fwd.compiled[m].accumulate_gradient(sweep.patterns[slot], sweep.states[slot], c,
                                                grads[m]);
        }
    }
    return grads;
}

/// dL/dparams per filter for L = sum(upstream * quanvolve(grid, layer)).
[[nodiscard]] inline std::vector<std::vector<double>>
quanvolve_backward(const VoxelGrid &grid, const QuanvLayer &layer,
                   const FeatureTensor &upstream) {
    const QuanvForward fwd = quanvolve_with_cache(grid, layer);
    auto cot = QuanvCotangents::zeros(fwd);
    add_feature_cotangent(cot, fwd, upstream);
    return backward_from_cotangents(fwd, layer, cot);
}

} // namespace sqcnn3d

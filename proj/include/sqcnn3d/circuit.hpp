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
 * @file circuit.hpp
 * @brief Data-reuploading quanvolutional filter circuits.
 *
 * A filter with kernel size k on q qubits consumes a k^3 patch in
 * ceil(k^3 / q) upload blocks. Each block encodes q patch values with
 * RY(pi * x) and is followed by a trainable layer; one more trainable layer
 * closes the circuit. A trainable layer is a ROT(phi, theta, omega) on every
 * wire followed by a ring of CRY gates (wire i controls wire i+1 mod q).
 *
 * Parameter layout, per layer l (4q values):
 *   [l*4q + 3i + s]   ROT slot s on wire i
 *   [l*4q + 3q + i]   CRY angle of ring edge i -> i+1
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "qstate.hpp"

namespace sqcnn3d {

struct FilterLayout {
    std::size_t kernel_size = 2;
    std::size_t num_qubits = 4;

    [[nodiscard]] std::size_t patch_size() const noexcept {
        return kernel_size * kernel_size * kernel_size;
    }
    [[nodiscard]] std::size_t num_upload_blocks() const noexcept {
        return (patch_size() + num_qubits - 1) / num_qubits;
    }
    [[nodiscard]] std::size_t num_layers() const noexcept {
        return num_upload_blocks() + 1;
    }
    [[nodiscard]] std::size_t params_per_layer() const noexcept {
        return 4 * num_qubits;
    }
    [[nodiscard]] std::size_t num_params() const noexcept {
        return num_layers() * params_per_layer();
    }
    [[nodiscard]] std::size_t rot_index(std::size_t layer, std::size_t wire,
                                        std::size_t slot) const noexcept {
        return layer * params_per_layer() + 3 * wire + slot;
    }
    [[nodiscard]] std::size_t cry_index(std::size_t layer,
                                        std::size_t wire) const noexcept {
        return layer * params_per_layer() + 3 * num_qubits + wire;
    }

    void validate() const {
        if (kernel_size == 0) {
            throw LayoutError("kernel size must be positive");
        }
        if (num_qubits == 0 || num_qubits > kMaxQubits) {
            throw LayoutError("qubit count must be in [1, " +
                              std::to_string(kMaxQubits) + "]");
        }
    }

    friend bool operator==(const FilterLayout &, const FilterLayout &) = default;
};

/// Trainable angles of one filter, in radians.
struct FilterParams {
    FilterLayout layout;
    std::vector<double> values;

    static FilterParams zeros(FilterLayout layout) {
        layout.validate();
        return {layout, std::vector<double>(layout.num_params(), 0.0)};
    }

    /// Uniform in [-pi/8, pi/8].
    template <class Rng> static FilterParams random(FilterLayout layout, Rng &rng) {
        auto p = zeros(layout);
        std::uniform_real_distribution<double> dist(-std::numbers::pi / 8,
                                                    std::numbers::pi / 8);
        for (auto &v : p.values) {
            v = dist(rng);
        }
        return p;
    }

    void validate() const {
        layout.validate();
        if (values.size() != layout.num_params()) {
            throw LayoutError("filter expects " + std::to_string(layout.num_params()) +
                              " parameters, got " + std::to_string(values.size()));
        }
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw LayoutError("filter parameter is not finite");
            }
        }
    }
};

/// A flattened k^3 patch of voxel occupancies (w-major, then h, then d).
struct EncodingPatch {
    std::size_t kernel_size = 2;
    std::vector<double> values;

    /// Builds the patch whose entry i is bit i of `bits`. k <= 4.
    static EncodingPatch from_bits(std::size_t kernel_size, std::uint64_t bits) {
        EncodingPatch p{kernel_size,
                        std::vector<double>(kernel_size * kernel_size * kernel_size)};
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            p.values[i] = ((bits >> i) & 1U) ? 1.0 : 0.0;
        }
        return p;
    }

    void validate() const {
        if (values.size() != kernel_size * kernel_size * kernel_size) {
            throw LayoutError("patch of kernel size " + std::to_string(kernel_size) +
                              " must have " +
                              std::to_string(kernel_size * kernel_size * kernel_size) +
                              " values, got " + std::to_string(values.size()));
        }
        for (double v : values) {
            if (v != 0.0 && v != 1.0) {
                throw LayoutError("patch values must be binary occupancies");
            }
        }
    }
};

namespace detail {

inline void append_trainable_layer(Program &program, const FilterLayout &layout,
                                   std::size_t layer) {
    const std::size_t q = layout.num_qubits;
    const auto ref = [](std::size_t i) {
        return Angle::parameter(static_cast<std::int32_t>(i));
    };
    for (std::size_t w = 0; w < q; ++w) {
        program.push_back(Gate::rot(w, ref(layout.rot_index(layer, w, 0)),
                                    ref(layout.rot_index(layer, w, 1)),
                                    ref(layout.rot_index(layer, w, 2))));
    }
    // A single wire has no ring; its CRY slots stay unused.
    if (q < 2) {
        return;
    }
    for (std::size_t w = 0; w < q; ++w) {
        program.push_back(Gate::cry(w, (w + 1) % q, ref(layout.cry_index(layer, w))));
    }
}

} // namespace detail

/// Emits the filter circuit for `patch`. Trainable angles reference
/// `params.values` by index; encoding angles are constants pi * x.
[[nodiscard]] inline Program build_filter_program(const EncodingPatch &patch,
                                                  const FilterParams &params) {
    params.validate();
    patch.validate();
    const FilterLayout &layout = params.layout;
    if (patch.kernel_size != layout.kernel_size) {
        throw LayoutError("patch kernel size " + std::to_string(patch.kernel_size) +
                          " does not match filter kernel size " +
                          std::to_string(layout.kernel_size));
    }
    const std::size_t q = layout.num_qubits;
    Program program;
    program.reserve(layout.num_upload_blocks() * 3 * q + 2 * q);
    for (std::size_t block = 0; block < layout.num_upload_blocks(); ++block) {
        for (std::size_t w = 0; w < q; ++w) {
            const std::size_t i = block * q + w;
            if (i < patch.values.size()) {
                program.push_back(Gate::ry(w, std::numbers::pi * patch.values[i]));
            }
        }
        detail::append_trainable_layer(program, layout, block);
    }
    detail::append_trainable_layer(program, layout, layout.num_upload_blocks());
    return program;
}

[[nodiscard]] inline StateVector run_filter_state(const EncodingPatch &patch,
                                                  const FilterParams &params) {
    return run_program(build_filter_program(patch, params), params.layout.num_qubits,
                       params.values);
}

/// (<Z_1>, ..., <Z_q>) of the filter's output state.
[[nodiscard]] inline std::vector<double> run_filter(const EncodingPatch &patch,
                                                    const FilterParams &params) {
    return expectations_z(run_filter_state(patch, params));
}

/// A filter with all gate matrices precomputed for one parameter set. Runs
/// the same circuit as build_filter_program on binary patches given as bit
/// masks, without re-evaluating trigonometry per patch.
class CompiledFilter {
  public:
    explicit CompiledFilter(const FilterParams &params) : layout_(params.layout) {
        params.validate();
        const std::size_t q = layout_.num_qubits;
        const auto &v = params.values;
        flip_ = gate_matrix(GateKind::RY, {std::numbers::pi, 0.0, 0.0});
        flip_adj_ = detail::adjoint(flip_);
        layers_.resize(layout_.num_layers());
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Layer &layer = layers_[l];
            for (std::size_t w = 0; w < q; ++w) {
                const std::array<double, 3> a{v[layout_.rot_index(l, w, 0)],
                                              v[layout_.rot_index(l, w, 1)],
                                              v[layout_.rot_index(l, w, 2)]};
                layer.rot.push_back(gate_matrix(GateKind::Rot, a));
                layer.rot_adj.push_back(detail::adjoint(layer.rot.back()));
                layer.drot.push_back({gate_matrix_derivative(GateKind::Rot, a, 0),
                                      gate_matrix_derivative(GateKind::Rot, a, 1),
                                      gate_matrix_derivative(GateKind::Rot, a, 2)});
                const std::array<double, 3> c{v[layout_.cry_index(l, w)], 0.0, 0.0};
                layer.cry.push_back(gate_matrix(GateKind::CRY, c));
                layer.cry_adj.push_back(detail::adjoint(layer.cry.back()));
                layer.dcry.push_back(gate_matrix_derivative(GateKind::CRY, c, 0));
            }
        }
    }

    [[nodiscard]] const FilterLayout &layout() const noexcept { return layout_; }

    /// Output state for the patch whose entry i is bit i of `bits`.
    [[nodiscard]] StateVector run(std::uint64_t bits) const {
        StateVector state(layout_.num_qubits);
        auto amps = state.mutable_amplitudes();
        const std::size_t q = layout_.num_qubits;
        for (std::size_t block = 0; block < layout_.num_upload_blocks(); ++block) {
            for (std::size_t w = 0; w < q; ++w) {
                if (encodes_one(bits, block, w)) {
                    detail::apply_matrix(amps, w, flip_, std::nullopt);
                }
            }
            apply_layer(amps, block);
        }
        apply_layer(amps, layout_.num_upload_blocks());
        return state;
    }

    /// Adds 2 Re <cotangent | d psi / d params> to `grads`, `final_state`
    /// being run(bits).
    void accumulate_gradient(std::uint64_t bits, const StateVector &final_state,
                             std::span<const complex_t> cotangent,
                             std::span<double> grads) const {
        if (grads.size() != layout_.num_params() || cotangent.size() != final_state.dim()) {
            throw ShapeError("gradient or cotangent buffer has the wrong size");
        }
        std::vector<complex_t> ket(final_state.amplitudes().begin(),
                                   final_state.amplitudes().end());
        std::vector<complex_t> bra(cotangent.begin(), cotangent.end());
        const std::size_t q = layout_.num_qubits;
        for (std::size_t l = layout_.num_layers(); l-- > 0;) {
            backprop_layer(ket, bra, l, grads);
            if (l == layout_.num_upload_blocks()) {
                continue;
            }
            for (std::size_t w = q; w-- > 0;) {
                if (encodes_one(bits, l, w)) {
                    detail::apply_matrix(ket, w, flip_adj_, std::nullopt);
                    detail::apply_matrix(bra, w, flip_adj_, std::nullopt);
                }
            }
        }
    }

  private:
    struct Layer {
        std::vector<Matrix2> rot, rot_adj, cry, cry_adj, dcry;
        std::vector<std::array<Matrix2, 3>> drot;
    };

    [[nodiscard]] bool encodes_one(std::uint64_t bits, std::size_t block,
                                   std::size_t wire) const noexcept {
        const std::size_t i = block * layout_.num_qubits + wire;
        return i < layout_.patch_size() && ((bits >> i) & 1U) != 0;
    }

    [[nodiscard]] bool has_ring() const noexcept { return layout_.num_qubits >= 2; }

    void apply_layer(std::span<complex_t> amps, std::size_t l) const {
        const std::size_t q = layout_.num_qubits;
        const Layer &layer = layers_[l];
        for (std::size_t w = 0; w < q; ++w) {
            detail::apply_matrix(amps, w, layer.rot[w], std::nullopt);
        }
        if (!has_ring()) {
            return;
        }
        for (std::size_t w = 0; w < q; ++w) {
            detail::apply_matrix(amps, (w + 1) % q, layer.cry[w], w);
        }
    }

    void backprop_layer(std::vector<complex_t> &ket, std::vector<complex_t> &bra,
                        std::size_t l, std::span<double> grads) const {
        const std::size_t q = layout_.num_qubits;
        const Layer &layer = layers_[l];
        if (has_ring()) {
            for (std::size_t w = q; w-- > 0;) {
                const std::size_t target = (w + 1) % q;
                detail::apply_matrix(ket, target, layer.cry_adj[w], w);
                grads[layout_.cry_index(l, w)] +=
                    2.0 * detail::sandwich(bra, ket, target, layer.dcry[w], w).real();
                detail::apply_matrix(bra, target, layer.cry_adj[w], w);
            }
        }
        for (std::size_t w = q; w-- > 0;) {
            detail::apply_matrix(ket, w, layer.rot_adj[w], std::nullopt);
            for (std::size_t slot = 0; slot < 3; ++slot) {
                grads[layout_.rot_index(l, w, slot)] +=
                    2.0 *
                    detail::sandwich(bra, ket, w, layer.drot[w][slot], std::nullopt).real();
            }
            detail::apply_matrix(bra, w, layer.rot_adj[w], std::nullopt);
        }
    }

    FilterLayout layout_;
    Matrix2 flip_{}, flip_adj_{};
    std::vector<Layer> layers_;
};

} // namespace sqcnn3d

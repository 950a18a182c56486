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
 * @file qstate.hpp
 * @brief Dense statevector simulator for small registers.
 *
 * Basis convention: wire w (0-based) is bit w of the basis index, so "qubit
 * k" in 1-based notation is wire k-1. The state |q0 q1 ...> with q0 = 1 and
 * all others 0 therefore has basis index 1.
 *
 * Gradients use adjoint (reverse-mode) differentiation: one backward sweep
 * over the gate list yields <bra| d psi / d theta_p> for every parameter p.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace sqcnn3d {

using complex_t = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 8;

/// Row-major 2x2 complex matrix {m00, m01, m10, m11}.
using Matrix2 = std::array<complex_t, 4>;

class StateVector {
  public:
    /// |0...0> on `num_qubits` wires.
    explicit StateVector(std::size_t num_qubits)
        : num_qubits_(checked_qubits(num_qubits)),
          amplitudes_(std::size_t{1} << num_qubits, complex_t{0.0, 0.0}) {
        amplitudes_[0] = 1.0;
    }

    StateVector(std::size_t num_qubits, std::vector<complex_t> amplitudes)
        : num_qubits_(checked_qubits(num_qubits)),
          amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != (std::size_t{1} << num_qubits_)) {
            throw ShapeError("statevector length " +
                             std::to_string(amplitudes_.size()) +
                             " does not match 2^" +
                             std::to_string(num_qubits_));
        }
    }

    static StateVector basis(std::size_t num_qubits, std::size_t index) {
        StateVector s(num_qubits);
        if (index >= s.dim()) {
            throw InvalidQubitError("basis index out of range");
        }
        s.amplitudes_[0] = 0.0;
        s.amplitudes_[index] = 1.0;
        return s;
    }

    [[nodiscard]] std::size_t num_qubits() const noexcept { return num_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amplitudes_.size(); }
    [[nodiscard]] std::span<const complex_t> amplitudes() const noexcept {
        return amplitudes_;
    }
    [[nodiscard]] const complex_t &operator[](std::size_t i) const {
        return amplitudes_[i];
    }

    [[nodiscard]] double norm_squared() const noexcept {
        double acc = 0.0;
        for (const auto &a : amplitudes_) {
            acc += std::norm(a);
        }
        return acc;
    }

    /// Raw access for the in-place kernels below. Library code only.
    [[nodiscard]] std::span<complex_t> mutable_amplitudes() noexcept {
        return amplitudes_;
    }

  private:
    static std::size_t checked_qubits(std::size_t q) {
        if (q == 0 || q > kMaxQubits) {
            throw InvalidQubitError("qubit count must be in [1, " +
                                    std::to_string(kMaxQubits) + "], got " +
                                    std::to_string(q));
        }
        return q;
    }

    std::size_t num_qubits_;
    std::vector<complex_t> amplitudes_;
};

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

enum class GateKind : std::uint8_t { RX, RY, RZ, Rot, CRY, CNOT };

[[nodiscard]] constexpr std::size_t num_angles(GateKind kind) noexcept {
    switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::CRY:
        return 1;
    case GateKind::Rot:
        return 3;
    case GateKind::CNOT:
        return 0;
    }
    return 0;
}

[[nodiscard]] constexpr bool is_controlled(GateKind kind) noexcept {
    return kind == GateKind::CRY || kind == GateKind::CNOT;
}

[[nodiscard]] inline std::string to_string(GateKind kind) {
    switch (kind) {
    case GateKind::RX:
        return "RX";
    case GateKind::RY:
        return "RY";
    case GateKind::RZ:
        return "RZ";
    case GateKind::Rot:
        return "ROT";
    case GateKind::CRY:
        return "CRY";
    case GateKind::CNOT:
        return "CNOT";
    }
    return "?";
}

/// A gate angle: either a constant, or `scale * params[param] + offset`.
struct Angle {
    double offset = 0.0;
    std::int32_t param = -1;
    double scale = 1.0;

    static constexpr Angle constant(double value) noexcept {
        return Angle{value, -1, 1.0};
    }
    static constexpr Angle parameter(std::int32_t index, double scale = 1.0,
                                     double offset = 0.0) noexcept {
        return Angle{offset, index, scale};
    }

    [[nodiscard]] constexpr bool is_parameter() const noexcept {
        return param >= 0;
    }

    [[nodiscard]] double resolve(std::span<const double> params) const {
        if (!is_parameter()) {
            return offset;
        }
        if (static_cast<std::size_t>(param) >= params.size()) {
            throw LayoutError("gate references parameter " +
                              std::to_string(param) + " but only " +
                              std::to_string(params.size()) + " supplied");
        }
        return scale * params[static_cast<std::size_t>(param)] + offset;
    }
};

struct Gate {
    GateKind kind = GateKind::RY;
    std::size_t target = 0;
    std::optional<std::size_t> control;
    std::array<Angle, 3> angles{};

    static Gate rx(std::size_t target, Angle theta) {
        return single(GateKind::RX, target, theta);
    }
    static Gate ry(std::size_t target, Angle theta) {
        return single(GateKind::RY, target, theta);
    }
    static Gate rz(std::size_t target, Angle theta) {
        return single(GateKind::RZ, target, theta);
    }
    /// RZ(omega) * RY(theta) * RZ(phi).
    static Gate rot(std::size_t target, Angle phi, Angle theta, Angle omega) {
        return Gate{GateKind::Rot, target, std::nullopt, {phi, theta, omega}};
    }
    static Gate cry(std::size_t control, std::size_t target, Angle theta) {
        check_distinct(control, target);
        return Gate{GateKind::CRY, target, control, {theta, {}, {}}};
    }
    static Gate cnot(std::size_t control, std::size_t target) {
        check_distinct(control, target);
        return Gate{GateKind::CNOT, target, control, {}};
    }

    // Convenience overloads taking constant angles.
    static Gate rx(std::size_t t, double v) { return rx(t, Angle::constant(v)); }
    static Gate ry(std::size_t t, double v) { return ry(t, Angle::constant(v)); }
    static Gate rz(std::size_t t, double v) { return rz(t, Angle::constant(v)); }
    static Gate rot(std::size_t t, double phi, double theta, double omega) {
        return rot(t, Angle::constant(phi), Angle::constant(theta),
                   Angle::constant(omega));
    }
    static Gate cry(std::size_t c, std::size_t t, double v) {
        return cry(c, t, Angle::constant(v));
    }

  private:
    static Gate single(GateKind kind, std::size_t target, Angle theta) {
        return Gate{kind, target, std::nullopt, {theta, {}, {}}};
    }
    static void check_distinct(std::size_t control, std::size_t target) {
        if (control == target) {
            throw InvalidQubitError("control and target must differ");
        }
    }
};

using Program = std::vector<Gate>;

/// Measurement of Pauli-Z on one wire (0-based).
struct Observable {
    std::size_t wire = 0;
};

// ---------------------------------------------------------------------------
// 2x2 matrices
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr complex_t kI{0.0, 1.0};

[[nodiscard]] inline Matrix2 matmul(const Matrix2 &a, const Matrix2 &b) noexcept {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

[[nodiscard]] inline Matrix2 adjoint(const Matrix2 &m) noexcept {
    return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

[[nodiscard]] inline Matrix2 rx_matrix(double t) noexcept {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return {c, -kI * s, -kI * s, c};
}
[[nodiscard]] inline Matrix2 ry_matrix(double t) noexcept {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return {c, -s, s, c};
}
[[nodiscard]] inline Matrix2 rz_matrix(double t) noexcept {
    return {std::polar(1.0, -t / 2), 0.0, 0.0, std::polar(1.0, t / 2)};
}

[[nodiscard]] inline Matrix2 drx_matrix(double t) noexcept {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return {-0.5 * s, -0.5 * kI * c, -0.5 * kI * c, -0.5 * s};
}
[[nodiscard]] inline Matrix2 dry_matrix(double t) noexcept {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return {-0.5 * s, -0.5 * c, 0.5 * c, -0.5 * s};
}
[[nodiscard]] inline Matrix2 drz_matrix(double t) noexcept {
    return {-0.5 * kI * std::polar(1.0, -t / 2), 0.0, 0.0,
            0.5 * kI * std::polar(1.0, t / 2)};
}

inline const Matrix2 kPauliX{0.0, 1.0, 1.0, 0.0};
inline const Matrix2 kHalfMinusIZ{-0.5 * kI, 0.0, 0.0, 0.5 * kI}; // d RZ / dt at 0

} // namespace detail

/// The 2x2 block acting on the target wire. For controlled kinds this is the
/// block applied on the control = 1 subspace.
[[nodiscard]] inline Matrix2 gate_matrix(GateKind kind,
                                         std::array<double, 3> a) noexcept {
    using namespace detail;
    switch (kind) {
    case GateKind::RX:
        return rx_matrix(a[0]);
    case GateKind::RY:
    case GateKind::CRY:
        return ry_matrix(a[0]);
    case GateKind::RZ:
        return rz_matrix(a[0]);
    case GateKind::Rot:
        return matmul(rz_matrix(a[2]), matmul(ry_matrix(a[1]), rz_matrix(a[0])));
    case GateKind::CNOT:
        return kPauliX;
    }
    return kPauliX;
}

/// d(block)/d(angle slot). Slot must be < num_angles(kind).
[[nodiscard]] inline Matrix2 gate_matrix_derivative(GateKind kind,
                                                    std::array<double, 3> a,
                                                    std::size_t slot) {
    using namespace detail;
    switch (kind) {
    case GateKind::RX:
        return drx_matrix(a[0]);
    case GateKind::RY:
    case GateKind::CRY:
        return dry_matrix(a[0]);
    case GateKind::RZ:
        return drz_matrix(a[0]);
    case GateKind::Rot:
        switch (slot) {
        case 0: // RZ(phi) is applied first and commutes with Z.
            return matmul(gate_matrix(kind, a), kHalfMinusIZ);
        case 1:
            return matmul(rz_matrix(a[2]), matmul(dry_matrix(a[1]), rz_matrix(a[0])));
        default:
            return matmul(kHalfMinusIZ, gate_matrix(kind, a));
        }
    case GateKind::CNOT:
        break;
    }
    throw UnsupportedGradientError("gate " + to_string(kind) +
                                   " has no differentiable angle");
}

// ---------------------------------------------------------------------------
// In-place kernels
// ---------------------------------------------------------------------------

namespace detail {

/// Applies `m` on `target`, restricted to control = 1 when `control` is set.
// Plain complex product; std::complex's operator* takes a slow NaN-recovery
// path that we never need here.
[[nodiscard]] inline complex_t cmul(const complex_t &x, const complex_t &y) noexcept {
    return {x.real() * y.real() - x.imag() * y.imag(),
            x.real() * y.imag() + x.imag() * y.real()};
}

// conj(x) * y
[[nodiscard]] inline complex_t cmul_conj(const complex_t &x, const complex_t &y) noexcept {
    return {x.real() * y.real() + x.imag() * y.imag(),
            x.real() * y.imag() - x.imag() * y.real()};
}

// k-th index with the target bit clear.
[[nodiscard]] inline std::size_t pair_base(std::size_t k, std::size_t target) noexcept {
    const std::size_t low = (std::size_t{1} << target) - 1;
    return ((k & ~low) << 1) | (k & low);
}

inline void apply_matrix(std::span<complex_t> amps, std::size_t target,
                         const Matrix2 &m, std::optional<std::size_t> control) noexcept {
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t cbit = control ? (std::size_t{1} << *control) : 0;
    const std::size_t pairs = amps.size() / 2;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t i = pair_base(k, target);
        if (cbit != 0 && (i & cbit) == 0) {
            continue;
        }
        const std::size_t j = i | tbit;
        const complex_t a = amps[i];
        const complex_t b = amps[j];
        amps[i] = cmul(m[0], a) + cmul(m[1], b);
        amps[j] = cmul(m[2], a) + cmul(m[3], b);
    }
}

/// <bra| M |ket> where M acts as `m` on `target`. With a control, M is
/// |1><1| (x) m, the derivative of a controlled rotation.
[[nodiscard]] inline complex_t sandwich(std::span<const complex_t> bra,
                                        std::span<const complex_t> ket,
                                        std::size_t target, const Matrix2 &m,
                                        std::optional<std::size_t> control) noexcept {
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t cbit = control ? (std::size_t{1} << *control) : 0;
    const std::size_t pairs = ket.size() / 2;
    complex_t acc{0.0, 0.0};
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t i = pair_base(k, target);
        if (cbit != 0 && (i & cbit) == 0) {
            continue;
        }
        const std::size_t j = i | tbit;
        const complex_t a = ket[i];
        const complex_t b = ket[j];
        acc += cmul_conj(bra[i], cmul(m[0], a) + cmul(m[1], b)) +
               cmul_conj(bra[j], cmul(m[2], a) + cmul(m[3], b));
    }
    return acc;
}

inline void check_wires(const Gate &g, std::size_t num_qubits) {
    if (g.target >= num_qubits) {
        throw InvalidQubitError("target wire " + std::to_string(g.target) +
                                " out of range for " +
                                std::to_string(num_qubits) + " qubits");
    }
    if (is_controlled(g.kind)) {
        if (!g.control) {
            throw InvalidQubitError(to_string(g.kind) + " requires a control wire");
        }
        if (*g.control >= num_qubits) {
            throw InvalidQubitError("control wire " + std::to_string(*g.control) +
                                    " out of range for " +
                                    std::to_string(num_qubits) + " qubits");
        }
        if (*g.control == g.target) {
            throw InvalidQubitError("control and target must differ");
        }
    }
}

[[nodiscard]] inline std::array<double, 3>
resolve_angles(const Gate &g, std::span<const double> params) {
    return {g.angles[0].resolve(params), g.angles[1].resolve(params),
            g.angles[2].resolve(params)};
}

[[nodiscard]] inline std::optional<std::size_t> control_of(const Gate &g) {
    return is_controlled(g.kind) ? g.control : std::nullopt;
}

inline void apply_in_place(std::span<complex_t> amps, const Gate &g,
                           std::span<const double> params) {
    apply_matrix(amps, g.target, gate_matrix(g.kind, resolve_angles(g, params)),
                 control_of(g));
}

inline void apply_adjoint_in_place(std::span<complex_t> amps, const Gate &g,
                                   std::span<const double> params) {
    apply_matrix(amps, g.target,
                 adjoint(gate_matrix(g.kind, resolve_angles(g, params))),
                 control_of(g));
}

[[nodiscard]] inline complex_t inner(std::span<const complex_t> bra,
                                     std::span<const complex_t> ket) noexcept {
    // Explicit real arithmetic keeps inner(a, b) == conj(inner(b, a)) bit-exact.
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < bra.size(); ++i) {
        const double ar = bra[i].real(), ai = bra[i].imag();
        const double br = ket[i].real(), bi = ket[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Returns `gate` applied to `state`. Parameter-referencing angles are
/// resolved against `params`.
[[nodiscard]] inline StateVector apply_gate(StateVector state, const Gate &gate,
                                            std::span<const double> params = {}) {
    detail::check_wires(gate, state.num_qubits());
    detail::apply_in_place(state.mutable_amplitudes(), gate, params);
    return state;
}

/// Runs `program` from |0...0>.
[[nodiscard]] inline StateVector run_program(const Program &program,
                                             std::size_t num_qubits,
                                             std::span<const double> params = {}) {
    StateVector state(num_qubits);
    auto amps = state.mutable_amplitudes();
    for (const auto &g : program) {
        detail::check_wires(g, num_qubits);
        detail::apply_in_place(amps, g, params);
    }
    return state;
}

[[nodiscard]] inline double expectation_z(const StateVector &state,
                                          Observable obs) {
    if (obs.wire >= state.num_qubits()) {
        throw InvalidQubitError("observable wire " + std::to_string(obs.wire) +
                                " out of range");
    }
    const std::size_t bit = std::size_t{1} << obs.wire;
    double acc = 0.0;
    const auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        acc += (i & bit) ? -p : p;
    }
    return acc;
}

/// <Z_w> for every wire w.
[[nodiscard]] inline std::vector<double> expectations_z(const StateVector &state) {
    std::vector<double> out(state.num_qubits(), 0.0);
    const auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        for (std::size_t w = 0; w < out.size(); ++w) {
            out[w] += ((i >> w) & 1U) ? -p : p;
        }
    }
    return out;
}

[[nodiscard]] inline complex_t inner_product(const StateVector &bra,
                                             const StateVector &ket) {
    if (bra.num_qubits() != ket.num_qubits()) {
        throw ShapeError("inner product of states with " +
                         std::to_string(bra.num_qubits()) + " and " +
                         std::to_string(ket.num_qubits()) + " qubits");
    }
    return detail::inner(bra.amplitudes(), ket.amplitudes());
}

/// Pure-state fidelity |<a|b>|^2.
[[nodiscard]] inline double fidelity(const StateVector &a, const StateVector &b) {
    return std::norm(inner_product(a, b));
}

// ---------------------------------------------------------------------------
// Adjoint differentiation
// ---------------------------------------------------------------------------

/// Accumulates 2 Re <cotangent | d psi / d params_p> into `grads[p]` for a
/// program whose output is `final_state`. With cotangent = dL/d(psi*), this
/// is the gradient of any real loss L(psi). Cotangent is given in the frame
/// of the final state.
inline void accumulate_adjoint_gradient(const Program &program,
                                        std::span<const double> params,
                                        const StateVector &final_state,
                                        std::span<const complex_t> cotangent,
                                        std::span<double> grads) {
    if (cotangent.size() != final_state.dim()) {
        throw ShapeError("cotangent length does not match state dimension");
    }
    if (grads.size() != params.size()) {
        throw ShapeError("gradient buffer length does not match parameters");
    }
    std::vector<complex_t> ket(final_state.amplitudes().begin(),
                               final_state.amplitudes().end());
    std::vector<complex_t> bra(cotangent.begin(), cotangent.end());

    for (auto it = program.rbegin(); it != program.rend(); ++it) {
        const Gate &g = *it;
        detail::check_wires(g, final_state.num_qubits());
        const auto angles = detail::resolve_angles(g, params);
        const Matrix2 u = gate_matrix(g.kind, angles);
        const auto control = detail::control_of(g);
        detail::apply_matrix(ket, g.target, detail::adjoint(u), control);

        for (std::size_t slot = 0; slot < g.angles.size(); ++slot) {
            const Angle &angle = g.angles[slot];
            if (!angle.is_parameter()) {
                continue;
            }
            if (slot >= num_angles(g.kind)) {
                throw UnsupportedGradientError(
                    "parameter bound to unused angle slot of " + to_string(g.kind));
            }
            const auto p = static_cast<std::size_t>(angle.param);
            const Matrix2 du = gate_matrix_derivative(g.kind, angles, slot);
            grads[p] += 2.0 * angle.scale *
                        detail::sandwich(bra, ket, g.target, du, control).real();
        }
        detail::apply_matrix(bra, g.target, detail::adjoint(u), control);
    }
}

struct ExpectationGradient {
    double value = 0.0;
    std::vector<double> grads;
};

[[nodiscard]] inline ExpectationGradient
backprop_expectation(const Program &program, std::size_t num_qubits,
                     std::span<const double> params, Observable obs) {
    const StateVector psi = run_program(program, num_qubits, params);
    ExpectationGradient out{expectation_z(psi, obs),
                            std::vector<double>(params.size(), 0.0)};
    // dL/d(psi*) for L = <psi|Z|psi> is Z psi; the factor 2 lives in the
    // accumulator.
    std::vector<complex_t> cot(psi.amplitudes().begin(), psi.amplitudes().end());
    const std::size_t bit = std::size_t{1} << obs.wire;
    for (std::size_t i = 0; i < cot.size(); ++i) {
        if (i & bit) {
            cot[i] = -cot[i];
        }
    }
    accumulate_adjoint_gradient(program, params, psi, cot, out.grads);
    return out;
}

struct FidelityGradient {
    double value = 0.0;
    std::vector<double> grads_a;
    std::vector<double> grads_b;
};

[[nodiscard]] inline FidelityGradient
backprop_fidelity(const Program &program_a, const Program &program_b,
                  std::size_t num_qubits, std::span<const double> params_a,
                  std::span<const double> params_b) {
    const StateVector a = run_program(program_a, num_qubits, params_a);
    const StateVector b = run_program(program_b, num_qubits, params_b);
    const complex_t overlap = inner_product(b, a); // <b|a>
    FidelityGradient out{std::norm(overlap),
                         std::vector<double>(params_a.size(), 0.0),
                         std::vector<double>(params_b.size(), 0.0)};
    // F = |c|^2 with c = <b|a>: dF/d(a*) = c b, dF/d(b*) = conj(c) a.
    std::vector<complex_t> cot_a(a.dim()), cot_b(b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        cot_a[i] = overlap * b[i];
        cot_b[i] = std::conj(overlap) * a[i];
    }
    accumulate_adjoint_gradient(program_a, params_a, a, cot_a, out.grads_a);
    accumulate_adjoint_gradient(program_b, params_b, b, cot_b, out.grads_b);
    return out;
}

} // namespace sqcnn3d

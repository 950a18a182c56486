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

// Random gate sequences for property and oracle tests.
#pragma once

#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "sqcnn3d/qstate.hpp"

namespace oracle {

struct RandomProgram {
    sqcnn3d::Program program;
    std::vector<double> params;
};

/// `depth` gates on `q` wires drawn from every kind. With `trainable`, each
/// rotation angle is a fresh parameter (scaled and offset at random) rather
/// than a constant; CNOT never carries parameters.
template <class Rng>
RandomProgram random_program(Rng &rng, std::size_t q, std::size_t depth, bool trainable) {
    using sqcnn3d::Angle;
    using sqcnn3d::Gate;
    std::uniform_real_distribution<double> angle(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    std::uniform_int_distribution<std::size_t> wire(0, q - 1);
    std::uniform_int_distribution<int> kind(0, q >= 2 ? 5 : 3);
    RandomProgram out;
    const auto next = [&]() {
        if (!trainable) {
            return Angle::constant(angle(rng));
        }
        out.params.push_back(angle(rng));
        return Angle::parameter(static_cast<std::int32_t>(out.params.size() - 1), scale(rng),
                                angle(rng) / 4.0);
    };
    for (std::size_t i = 0; i < depth; ++i) {
        const std::size_t t = wire(rng);
        std::size_t c = wire(rng);
        while (q >= 2 && c == t) {
            c = wire(rng);
        }
        switch (kind(rng)) {
        case 0:
            out.program.push_back(Gate::rx(t, next()));
            break;
        case 1:
            out.program.push_back(Gate::ry(t, next()));
            break;
        case 2:
            out.program.push_back(Gate::rz(t, next()));
            break;
        case 3: {
            const Angle a = next(), b = next(), d = next();
            out.program.push_back(Gate::rot(t, a, b, d));
            break;
        }
        case 4:
            out.program.push_back(Gate::cry(c, t, next()));
            break;
        default:
            out.program.push_back(Gate::cnot(c, t));
            break;
        }
    }
    return out;
}

} // namespace oracle

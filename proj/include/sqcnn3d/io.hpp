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
#pragma once

// Little-endian binary primitives shared by the grid and feature formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "error.hpp"

namespace sqcnn3d::io {

inline void write_u32(std::ostream &os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    }
    os.write(b.data(), b.size());
}

inline std::uint32_t read_u32(std::istream &is) {
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char *>(b.data()), b.size())) {
        throw IoError("truncated stream while reading header");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    }
    return v;
}

inline void write_f64(std::ostream &os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFU);
    }
    os.write(b.data(), b.size());
}

inline double read_f64(std::istream &is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char *>(b.data()), b.size())) {
        throw IoError("truncated stream while reading payload");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

} // namespace sqcnn3d::io

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
 * @file voxel.hpp
 * @brief Binary occupancy voxelization of point clouds.
 *
 * A cloud living in the box [0,W]x[0,H]x[0,D] is mapped onto a grid of
 * Wv x Hv x Dv cells whose centers sit at integer coordinates 1..Wv (and so
 * on). A point counts towards a cell when its scaled coordinate is within
 * 0.5 of the cell center on every axis, inclusive; a point on a boundary
 * therefore counts towards both neighbours. A cell is occupied when its
 * count reaches the threshold.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "error.hpp"
#include "io.hpp"

namespace sqcnn3d {

using Point3 = std::array<double, 3>;
using Dims3 = std::array<std::size_t, 3>;

struct PointCloud {
    std::vector<Point3> vertices;
    Point3 bounds{1.0, 1.0, 1.0};

    void validate() const {
        if (vertices.empty()) {
            throw EmptyInputError("point cloud has no vertices");
        }
        for (const auto &p : vertices) {
            for (double c : p) {
                if (!std::isfinite(c)) {
                    throw Error("point cloud contains a non-finite coordinate");
                }
            }
        }
    }
};

class VoxelGrid {
  public:
    VoxelGrid() = default;
    explicit VoxelGrid(Dims3 dims)
        : dims_(dims), occupancy_(dims[0] * dims[1] * dims[2], 0) {
        if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
            throw ShapeError("voxel grid dimensions must be positive");
        }
    }

    [[nodiscard]] const Dims3 &dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t size() const noexcept { return occupancy_.size(); }

    /// Flat index, w-major: (w * H + h) * D + d. Indices are 0-based.
    [[nodiscard]] std::size_t index(std::size_t w, std::size_t h,
                                    std::size_t d) const noexcept {
        return (w * dims_[1] + h) * dims_[2] + d;
    }
    [[nodiscard]] std::uint8_t at(std::size_t w, std::size_t h, std::size_t d) const {
        return occupancy_[index(w, h, d)];
    }
    void set(std::size_t w, std::size_t h, std::size_t d, bool on) {
        occupancy_[index(w, h, d)] = on ? 1 : 0;
    }
    [[nodiscard]] const std::vector<std::uint8_t> &data() const noexcept {
        return occupancy_;
    }
    [[nodiscard]] std::size_t count() const noexcept {
        return static_cast<std::size_t>(
            std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
    }

    friend bool operator==(const VoxelGrid &, const VoxelGrid &) = default;

  private:
    Dims3 dims_{0, 0, 0};
    std::vector<std::uint8_t> occupancy_;
};

namespace detail {

/// 1-based cell centers c in [1, n] with |s - c| <= 0.5.
inline std::pair<std::size_t, std::size_t> covering_cells(double s, std::size_t n) {
    const double lo_guess = std::ceil(s - 0.5) - 1.0;
    const double hi_guess = std::floor(s + 0.5) + 1.0;
    const double lo_d = std::max(lo_guess, 1.0);
    const double hi_d = std::min(hi_guess, static_cast<double>(n));
    if (lo_d > hi_d) {
        return {1, 0};
    }
    auto lo = static_cast<std::size_t>(lo_d);
    auto hi = static_cast<std::size_t>(hi_d);
    // Re-test the exact predicate so rounding in s - 0.5 cannot disagree
    // with |s - c| <= 0.5.
    while (lo <= hi && !(std::fabs(s - static_cast<double>(lo)) <= 0.5)) {
        ++lo;
    }
    while (hi >= lo && hi > 0 && !(std::fabs(s - static_cast<double>(hi)) <= 0.5)) {
        --hi;
    }
    return {lo, hi};
}

} // namespace detail

/// Per-cell vertex counts n_j, in the grid's flat layout.
[[nodiscard]] inline std::vector<std::uint32_t> voxel_counts(const PointCloud &cloud,
                                                             Dims3 dims) {
    cloud.validate();
    for (double b : cloud.bounds) {
        if (!(b > 0.0) || !std::isfinite(b)) {
            throw DegenerateBoundsError("cloud bounds must be positive and finite");
        }
    }
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
        throw ShapeError("voxel grid dimensions must be positive");
    }
    std::vector<std::uint32_t> counts(dims[0] * dims[1] * dims[2], 0);
    std::array<double, 3> scale{};
    for (int a = 0; a < 3; ++a) {
        scale[a] = static_cast<double>(dims[a]) / cloud.bounds[a];
    }
    for (const auto &p : cloud.vertices) {
        const auto [wl, wh] = detail::covering_cells(p[0] * scale[0], dims[0]);
        const auto [hl, hh] = detail::covering_cells(p[1] * scale[1], dims[1]);
        const auto [dl, dh] = detail::covering_cells(p[2] * scale[2], dims[2]);
        for (std::size_t w = wl; w <= wh; ++w) {
            for (std::size_t h = hl; h <= hh; ++h) {
                for (std::size_t d = dl; d <= dh; ++d) {
                    ++counts[((w - 1) * dims[1] + (h - 1)) * dims[2] + (d - 1)];
                }
            }
        }
    }
    return counts;
}

[[nodiscard]] inline VoxelGrid voxelize(const PointCloud &cloud, Dims3 dims,
                                        std::uint32_t threshold = 1) {
    if (threshold < 1) {
        throw ConfigError("voxel threshold must be at least 1");
    }
    const auto counts = voxel_counts(cloud, dims);
    VoxelGrid grid(dims);
    for (std::size_t w = 0; w < dims[0]; ++w) {
        for (std::size_t h = 0; h < dims[1]; ++h) {
            for (std::size_t d = 0; d < dims[2]; ++d) {
                grid.set(w, h, d, counts[grid.index(w, h, d)] >= threshold);
            }
        }
    }
    return grid;
}

/// Uniformly scales and translates the cloud so its bounding box fits the
/// cloud's (W, H, D) box, aspect ratio preserved, centered on every axis.
[[nodiscard]] inline PointCloud normalize_bounds(const PointCloud &cloud) {
    cloud.validate();
    Point3 lo{}, hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto &p : cloud.vertices) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    double scale = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double extent = hi[a] - lo[a];
        if (extent > 0.0) {
            scale = std::min(scale, cloud.bounds[a] / extent);
        }
    }
    if (!std::isfinite(scale)) {
        throw DegenerateBoundsError("all points coincide; cannot normalize");
    }
    Point3 offset{};
    for (int a = 0; a < 3; ++a) {
        offset[a] = 0.5 * (cloud.bounds[a] - (hi[a] - lo[a]) * scale);
    }
    PointCloud out{{}, cloud.bounds};
    out.vertices.reserve(cloud.vertices.size());
    for (const auto &p : cloud.vertices) {
        out.vertices.push_back({(p[0] - lo[0]) * scale + offset[0],
                                (p[1] - lo[1]) * scale + offset[1],
                                (p[2] - lo[2]) * scale + offset[2]});
    }
    return out;
}

/// One point per occupied cell, at the cell center, in `bounds` units.
[[nodiscard]] inline PointCloud voxel_centers(const VoxelGrid &grid, Point3 bounds) {
    PointCloud out{{}, bounds};
    const auto &dims = grid.dims();
    for (std::size_t w = 0; w < dims[0]; ++w) {
        for (std::size_t h = 0; h < dims[1]; ++h) {
            for (std::size_t d = 0; d < dims[2]; ++d) {
                if (grid.at(w, h, d) != 0) {
                    out.vertices.push_back(
                        {static_cast<double>(w + 1) * bounds[0] / static_cast<double>(dims[0]),
                         static_cast<double>(h + 1) * bounds[1] / static_cast<double>(dims[1]),
                         static_cast<double>(d + 1) * bounds[2] / static_cast<double>(dims[2])});
                }
            }
        }
    }
    return out;
}

// Grid file: three little-endian uint32 (W, H, D), then W*H*D bytes in
// w-major order, each 0 or 1.

inline void write_grid(std::ostream &os, const VoxelGrid &grid) {
    for (std::size_t n : grid.dims()) {
        io::write_u32(os, static_cast<std::uint32_t>(n));
    }
    os.write(reinterpret_cast<const char *>(grid.data().data()),
             static_cast<std::streamsize>(grid.size()));
    if (!os) {
        throw IoError("failed to write voxel grid");
    }
}

[[nodiscard]] inline VoxelGrid read_grid(std::istream &is) {
    Dims3 dims{};
    for (auto &n : dims) {
        n = io::read_u32(is);
    }
    VoxelGrid grid(dims);
    std::vector<char> raw(grid.size());
    if (!is.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
        throw IoError("truncated voxel grid payload");
    }
    for (std::size_t w = 0; w < dims[0]; ++w) {
        for (std::size_t h = 0; h < dims[1]; ++h) {
            for (std::size_t d = 0; d < dims[2]; ++d) {
                const char v = raw[grid.index(w, h, d)];
                if (v != 0 && v != 1) {
                    throw IoError("voxel grid payload byte is not 0 or 1");
                }
                grid.set(w, h, d, v == 1);
            }
        }
    }
    return grid;
}

} // namespace sqcnn3d

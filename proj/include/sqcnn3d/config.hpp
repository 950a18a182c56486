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
 * @file config.hpp
 * @brief Training hyperparameters and the flat key-value config format.
 *
 * Config files hold one `key = value` pair per line. `#` starts a comment,
 * blank lines are ignored, lists are comma separated. Keys are the long CLI
 * flag names without dashes (see `TrainConfig::to_pairs`).
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "voxel.hpp"

namespace sqcnn3d {

struct TrainConfig {
    std::size_t num_filters = 2;
    std::vector<std::size_t> kernel_sizes{2}; // one entry broadcasts to all filters
    double lambda = 0.1;
    double learning_rate = 0.001;
    std::size_t batch_size = 8;
    std::size_t eval_batch_size = 128;
    std::size_t epochs = 30;
    Dims3 grid{32, 32, 32};
    std::uint32_t threshold = 1;
    std::size_t stride = 2;
    std::size_t num_qubits = 4;
    std::size_t hidden_units = 128;
    std::size_t points = 2048;
    std::uint64_t seed = 0;

    /// Kernel size of each filter after broadcasting.
    [[nodiscard]] std::vector<std::size_t> filter_kernels() const {
        if (kernel_sizes.size() == 1) {
            return std::vector<std::size_t>(num_filters, kernel_sizes.front());
        }
        return kernel_sizes;
    }

    void validate() const {
        if (num_filters < 1 || num_filters > 8) {
            throw ConfigError("filters must be in [1, 8]");
        }
        if (kernel_sizes.empty() ||
            (kernel_sizes.size() != 1 && kernel_sizes.size() != num_filters)) {
            throw ConfigError("give one kernel size or one per filter");
        }
        for (std::size_t k : kernel_sizes) {
            if (k < 2 || k > 4) {
                throw ConfigError("kernel sizes must be in {2,3,4}");
            }
        }
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw ConfigError("lambda must be a finite non-negative number");
        }
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw ConfigError("learning rate must be positive");
        }
        if (batch_size == 0 || eval_batch_size == 0) {
            throw ConfigError("batch sizes must be positive");
        }
        for (std::size_t n : grid) {
            if (n == 0) {
                throw ConfigError("grid dimensions must be positive");
            }
        }
        if (threshold < 1) {
            throw ConfigError("threshold must be at least 1");
        }
        if (stride == 0) {
            throw ConfigError("stride must be positive");
        }
        if (num_qubits < 1 || num_qubits > 8) {
            throw ConfigError("qubits must be in [1, 8]");
        }
        if (hidden_units == 0) {
            throw ConfigError("hidden units must be positive");
        }
        if (points == 0) {
            throw ConfigError("points per cloud must be positive");
        }
        std::size_t kmax = 0;
        for (std::size_t k : kernel_sizes) {
            kmax = std::max(kmax, k);
        }
        for (std::size_t n : grid) {
            if (n < kmax) {
                throw ConfigError("grid is smaller than the largest kernel");
            }
        }
    }

    /// Every field as (key, value) text, in a fixed order.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> to_pairs() const {
        const auto list = [](const auto &v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) {
                s += (i ? "," : "") + std::to_string(v[i]);
            }
            return s;
        };
        const auto num = [](double v) {
            // Shortest text that reads back to the same double.
            char buf[32];
            const auto r = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, r.ptr);
        };
        return {{"filters", std::to_string(num_filters)},
                {"kernel", list(kernel_sizes)},
                {"lambda", num(lambda)},
                {"lr", num(learning_rate)},
                {"batch-size", std::to_string(batch_size)},
                {"eval-batch-size", std::to_string(eval_batch_size)},
                {"epochs", std::to_string(epochs)},
                {"grid", list(grid)},
                {"threshold", std::to_string(threshold)},
                {"stride", std::to_string(stride)},
                {"qubits", std::to_string(num_qubits)},
                {"hidden", std::to_string(hidden_units)},
                {"points", std::to_string(points)},
                {"seed", std::to_string(seed)}};
    }

    /// Sets one field from text. Unknown keys raise ConfigError.
    void set(const std::string &key, const std::string &value) {
        try {
            if (key == "filters") {
                num_filters = parse_size(value);
            } else if (key == "kernel") {
                kernel_sizes = parse_size_list(value);
            } else if (key == "lambda") {
                lambda = std::stod(value);
            } else if (key == "lr") {
                learning_rate = std::stod(value);
            } else if (key == "batch-size") {
                batch_size = parse_size(value);
            } else if (key == "eval-batch-size") {
                eval_batch_size = parse_size(value);
            } else if (key == "epochs") {
                epochs = parse_size(value);
            } else if (key == "grid") {
                const auto g = parse_size_list(value);
                if (g.size() == 1) {
                    grid = {g[0], g[0], g[0]};
                } else if (g.size() == 3) {
                    grid = {g[0], g[1], g[2]};
                } else {
                    throw ConfigError("grid takes one or three sizes");
                }
            } else if (key == "threshold") {
                threshold = static_cast<std::uint32_t>(parse_size(value));
            } else if (key == "stride") {
                stride = parse_size(value);
            } else if (key == "qubits") {
                num_qubits = parse_size(value);
            } else if (key == "hidden") {
                hidden_units = parse_size(value);
            } else if (key == "points") {
                points = parse_size(value);
            } else if (key == "seed") {
                seed = std::stoull(value);
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const std::logic_error &) {
            throw ConfigError("bad value '" + value + "' for key '" + key + "'");
        }
    }

    friend bool operator==(const TrainConfig &, const TrainConfig &) = default;

  private:
    static std::size_t parse_size(const std::string &s) {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (v < 0 || pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return static_cast<std::size_t>(v);
    }
    static std::vector<std::size_t> parse_size_list(const std::string &s) {
        std::vector<std::size_t> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            out.push_back(parse_size(item));
        }
        if (out.empty()) {
            throw std::invalid_argument(s);
        }
        return out;
    }
};

namespace detail {
inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
} // namespace detail

/// Parses `key = value` lines. Later keys override earlier ones.
[[nodiscard]] inline std::map<std::string, std::string> parse_key_values(std::istream &is) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(lineno, "expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) {
            throw ParseError(lineno, "empty key");
        }
        out[key] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

inline void write_key_values(std::ostream &os, const TrainConfig &cfg) {
    for (const auto &[k, v] : cfg.to_pairs()) {
        os << k << " = " << v << '\n';
    }
}

} // namespace sqcnn3d

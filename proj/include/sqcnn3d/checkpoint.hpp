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
 * @file checkpoint.hpp
 * @brief Versioned JSON checkpoints of a trained model and its config.
 *
 * Doubles are written in shortest round-trip form, so save/load is
 * bit-exact. See docs/FORMATS.md for the schema.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "config.hpp"
#include "error.hpp"
#include "model.hpp"

namespace sqcnn3d {

inline constexpr const char *kCheckpointFormat = "sqcnn3d-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    Model model;
    TrainConfig config;
};

inline void save_checkpoint(std::ostream &os, const Model &model, const TrainConfig &cfg) {
    using nlohmann::json;
    json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    json c = json::object();
    for (const auto &[k, v] : cfg.to_pairs()) {
        c[k] = v;
    }
    j["config"] = c;
    j["class_names"] = model.class_names;
    json filters = json::array();
    for (const auto &f : model.quanv.filters) {
        filters.push_back({{"kernel_size", f.layout.kernel_size}, {"params", f.values}});
    }
    j["quanv"] = {{"stride", model.quanv.stride},
                  {"num_qubits", model.quanv.num_qubits},
                  {"filters", filters}};
    j["head"] = {{"inputs", model.head.inputs()}, {"hidden", model.head.hidden()},
                 {"classes", model.head.classes()}, {"w1", model.head.w1},
                 {"b1", model.head.b1},         {"w2", model.head.w2},
                 {"b2", model.head.b2}};
    os << j.dump() << '\n';
    if (!os) {
        throw IoError("failed to write checkpoint");
    }
}

[[nodiscard]] inline Checkpoint load_checkpoint(std::istream &is) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception &e) {
        throw IoError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) {
            throw IoError("not a checkpoint file");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw IoError("unsupported checkpoint version " +
                          std::to_string(j.at("version").get<int>()));
        }
        Checkpoint ck;
        for (const auto &[k, v] : j.at("config").items()) {
            ck.config.set(k, v.get<std::string>());
        }
        ck.model.class_names = j.at("class_names").get<std::vector<std::string>>();
        const json &q = j.at("quanv");
        ck.model.quanv.stride = q.at("stride").get<std::size_t>();
        ck.model.quanv.num_qubits = q.at("num_qubits").get<std::size_t>();
        for (const auto &f : q.at("filters")) {
            FilterParams p{{f.at("kernel_size").get<std::size_t>(), ck.model.quanv.num_qubits},
                           f.at("params").get<std::vector<double>>()};
            ck.model.quanv.filters.push_back(std::move(p));
        }
        ck.model.quanv.validate();
        const json &h = j.at("head");
        ck.model.head = DenseHead(h.at("inputs").get<std::size_t>(),
                                  h.at("hidden").get<std::size_t>(),
                                  h.at("classes").get<std::size_t>());
        const auto fill = [&](std::vector<double> &dst, const char *key) {
            auto v = h.at(key).get<std::vector<double>>();
            if (v.size() != dst.size()) {
                throw IoError(std::string("checkpoint head field '") + key +
                              "' has the wrong length");
            }
            dst = std::move(v);
        };
        fill(ck.model.head.w1, "w1");
        fill(ck.model.head.b1, "b1");
        fill(ck.model.head.w2, "w2");
        fill(ck.model.head.b2, "b2");
        if (ck.model.class_names.size() != ck.model.head.classes()) {
            throw IoError("checkpoint class names disagree with head width");
        }
        return ck;
    } catch (const json::exception &e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const std::filesystem::path &path, const Model &model,
                            const TrainConfig &cfg) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    save_checkpoint(out, model, cfg);
}

[[nodiscard]] inline Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return load_checkpoint(in);
}

} // namespace sqcnn3d

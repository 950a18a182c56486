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
 * @file cli.hpp
 * @brief The `sqcnn3d` command line, callable in-process via run_cli().
 *
 * Every command resolves its settings as defaults < config file < flags and
 * prints the resolved set as a banner that is itself a valid config file.
 * Exit codes: 0 success, 1 runtime failure, 2 usage error.
 */
#pragma once

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "checkpoint.hpp"
#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "quanv.hpp"
#include "train.hpp"
#include "voxel.hpp"

namespace sqcnn3d::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, missing inputs and other mistakes caught before computing.
class UsageError : public Error {
  public:
    using Error::Error;
};

namespace detail {

namespace fs = std::filesystem;

/// String-valued settings of one command, resolved from defaults, an
/// optional config file and flags, in that order of precedence.
class Settings {
  public:
    void add(CLI::App &app, const std::string &key, const std::string &def,
             const std::string &help) {
        auto &e = entries_.emplace_back(Entry{key, def, def, nullptr});
        e.option = app.add_option("--" + key, e.value, help)
                       ->default_str(def.empty() ? "\"\"" : def);
    }

    void resolve(const std::string &config_path) {
        std::map<std::string, std::string> file;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                throw UsageError("cannot open config file " + config_path);
            }
            try {
                file = parse_key_values(in);
            } catch (const ParseError &e) {
                throw UsageError(config_path + ": " + e.what());
            }
        }
        for (const auto &[k, v] : file) {
            if (find(k) == nullptr) {
                throw UsageError("config key '" + k + "' is not accepted by this command");
            }
        }
        for (auto &e : entries_) {
            if (e.option->count() > 0) {
                continue;
            }
            const auto it = file.find(e.key);
            e.value = it != file.end() ? it->second : e.def;
        }
    }

    [[nodiscard]] bool has(const std::string &key) const { return find(key) != nullptr; }

    [[nodiscard]] const std::string &get(const std::string &key) const {
        const Entry *e = find(key);
        if (e == nullptr) {
            throw std::logic_error("unknown setting " + key);
        }
        return e->value;
    }

    void banner(std::ostream &os, const std::string &command) const {
        os << "# sqcnn3d " << command << " effective config\n";
        for (const auto &e : entries_) {
            os << e.key << '=' << e.value << '\n';
        }
        os << "# end config\n";
    }

    /// Applies every setting that names a TrainConfig field.
    void apply_to(TrainConfig &cfg) const {
        const TrainConfig defaults;
        for (const auto &[k, v] : defaults.to_pairs()) {
            if (const Entry *e = find(k)) {
                try {
                    cfg.set(k, e->value);
                } catch (const ConfigError &err) {
                    throw UsageError(err.what());
                }
            }
        }
    }

  private:
    struct Entry {
        std::string key, def, value;
        CLI::Option *option;
    };

    [[nodiscard]] const Entry *find(const std::string &key) const {
        for (const auto &e : entries_) {
            if (e.key == key) {
                return &e;
            }
        }
        return nullptr;
    }

    std::deque<Entry> entries_; // stable addresses: options bind to values
};

inline const std::map<std::string, std::string> &train_help() {
    static const std::map<std::string, std::string> help{
        {"filters", "number of quanvolutional filters M (1-8)"},
        {"kernel", "kernel size, or comma list with one per filter (2-4)"},
        {"lambda", "weight of the fidelity regularizer"},
        {"lr", "Adam learning rate"},
        {"batch-size", "training batch size"},
        {"eval-batch-size", "evaluation chunk size"},
        {"epochs", "training epochs"},
        {"grid", "voxel grid size, N or W,H,D"},
        {"threshold", "points needed to activate a voxel"},
        {"stride", "quanvolution stride"},
        {"qubits", "qubits per filter"},
        {"hidden", "hidden units of the dense head"},
        {"points", "points sampled per mesh"},
        {"seed", "random seed"},
    };
    return help;
}

inline void add_train_settings(CLI::App &app, Settings &s,
                               const std::vector<std::string> &only = {}) {
    for (const auto &[k, v] : TrainConfig{}.to_pairs()) {
        if (only.empty() || std::find(only.begin(), only.end(), k) != only.end()) {
            s.add(app, k, v, train_help().at(k));
        }
    }
}

inline std::string default_classes() {
    return "sphere,cube,torus,pyramid";
}

inline void add_data_settings(CLI::App &app, Settings &s) {
    s.add(app, "data", "synth",
          "'synth', a manifest file, or a <root>/<class>/<split>/*.off directory");
    s.add(app, "test-data", "", "test manifest (manifest data only; default: split --data)");
    s.add(app, "classes", default_classes(), "synthetic classes");
    s.add(app, "per-class", "50", "synthetic samples per class");
    s.add(app, "train-fraction", "0.8", "train share when splitting a single dataset");
    s.add(app, "cache-dir", "", "voxel grid cache directory (empty: no cache)");
}

inline void add_threads(CLI::App &app, Settings &s) {
    s.add(app, "threads", std::to_string(default_threads()), "worker threads");
}

inline std::vector<std::string> split_list(const std::string &text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = sqcnn3d::detail::trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline std::size_t to_size(const std::string &key, const std::string &text) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (v < 0 || pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return static_cast<std::size_t>(v);
    } catch (const std::logic_error &) {
        throw UsageError("--" + key + " expects a non-negative integer, got '" + text + "'");
    }
}

inline double to_double(const std::string &key, const std::string &text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::logic_error &) {
        throw UsageError("--" + key + " expects a number, got '" + text + "'");
    }
}

inline std::size_t threads_of(const Settings &s) {
    const std::size_t t = to_size("threads", s.get("threads"));
    if (t == 0) {
        throw UsageError("--threads must be at least 1");
    }
    return t;
}

inline void validate(const TrainConfig &cfg) {
    try {
        cfg.validate();
    } catch (const ConfigError &e) {
        throw UsageError(e.what());
    }
}

/// Result table printed aligned for people, then as CSV records.
class Table {
  public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    void print(std::ostream &os) const {
        std::vector<std::size_t> width(header_.size());
        for (std::size_t c = 0; c < header_.size(); ++c) {
            width[c] = header_[c].size();
            for (const auto &r : rows_) {
                width[c] = std::max(width[c], r[c].size());
            }
        }
        const auto line = [&](const std::vector<std::string> &r) {
            for (std::size_t c = 0; c < r.size(); ++c) {
                os << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << r[c];
            }
            os << '\n';
        };
        line(header_);
        for (const auto &r : rows_) {
            line(r);
        }
        os << "# csv\n";
        write_csv(os);
    }

    void write_csv(std::ostream &os) const {
        const auto line = [&](const std::vector<std::string> &r) {
            for (std::size_t c = 0; c < r.size(); ++c) {
                os << (c ? "," : "") << r[c];
            }
            os << '\n';
        };
        line(header_);
        for (const auto &r : rows_) {
            line(r);
        }
    }

    void save_csv(const std::string &path) const {
        if (path.empty()) {
            return;
        }
        std::ofstream out(path);
        if (!out) {
            throw IoError("cannot write " + path);
        }
        write_csv(out);
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

struct SplitData {
    Dataset train, test;
    std::string key; // identifies the source for the grid cache
};

inline void check_exists(const std::string &key, const std::string &path) {
    if (!fs::exists(path)) {
        throw UsageError("--" + key + ": no such file or directory: " + path);
    }
}

/// Resolves --data/--test-data into a train/test pair without loading yet
/// when the inputs are missing, so usage errors come before compute.
inline void check_data(const Settings &s) {
    const std::string &data = s.get("data");
    if (data != "synth") {
        check_exists("data", data);
    }
    if (!s.get("test-data").empty()) {
        check_exists("test-data", s.get("test-data"));
    }
    for (const auto &c : split_list(s.get("classes"))) {
        const auto &known = synth_class_names();
        if (std::find(known.begin(), known.end(), c) == known.end()) {
            throw UsageError("unknown synthetic class '" + c + "'");
        }
    }
    const double frac = to_double("train-fraction", s.get("train-fraction"));
    if (!(frac > 0.0 && frac < 1.0)) {
        throw UsageError("--train-fraction must be in (0, 1)");
    }
    if (to_size("per-class", s.get("per-class")) == 0) {
        throw UsageError("--per-class must be positive");
    }
}

inline SplitData load_data(const Settings &s, const TrainConfig &cfg) {
    const std::string &data = s.get("data");
    const double frac = to_double("train-fraction", s.get("train-fraction"));
    std::ostringstream key;
    key << data << '|' << cfg.points << '|' << cfg.seed << '|' << frac;
    SplitData out;
    if (data == "synth") {
        const auto classes = split_list(s.get("classes"));
        const std::size_t per_class = to_size("per-class", s.get("per-class"));
        key << '|' << s.get("classes") << '|' << per_class;
        auto ds = synth_dataset(classes, per_class, cfg.seed, cfg.points);
        std::tie(out.train, out.test) = shuffle_split(ds, frac, cfg.seed);
    } else if (fs::is_directory(data)) {
        key << '|' << fs::absolute(data).string();
        out.train = load_directory_dataset(data, "train", cfg.points, cfg.seed);
        out.test = load_directory_dataset(data, "test", cfg.points, cfg.seed);
    } else {
        key << '|' << fs::absolute(data).string();
        auto ds = load_manifest_dataset(data, cfg.points, cfg.seed);
        if (!s.get("test-data").empty()) {
            key << '|' << fs::absolute(s.get("test-data")).string();
            out.train = std::move(ds);
            out.test = load_manifest_dataset(s.get("test-data"), cfg.points, cfg.seed);
        } else {
            std::tie(out.train, out.test) = shuffle_split(ds, frac, cfg.seed);
        }
    }
    out.key = key.str();
    return out;
}

inline std::pair<GridDataset, GridDataset> voxelize_split(const SplitData &d,
                                                          const TrainConfig &cfg,
                                                          const Settings &s,
                                                          std::size_t threads) {
    const fs::path cache = s.get("cache-dir");
    return {voxelize_dataset_cached(d.train, d.key + "|train", cfg.grid, cfg.threshold, cache,
                                    threads),
            voxelize_dataset_cached(d.test, d.key + "|test", cfg.grid, cfg.threshold, cache,
                                    threads)};
}

inline std::string kernel_list(const Model &m) {
    std::string s;
    for (std::size_t i = 0; i < m.quanv.filters.size(); ++i) {
        s += (i ? "," : "") + std::to_string(m.quanv.filters[i].layout.kernel_size);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline VoxelGrid grid_from_off(const fs::path &path, const TrainConfig &cfg) {
    const Mesh mesh = load_off(path);
    const PointCloud cloud =
        cloud_from_mesh(mesh, cfg.points, sqcnn3d::detail::path_seed(cfg.seed, path.generic_string()));
    return voxelize(normalize_bounds(cloud), cfg.grid, cfg.threshold);
}

inline int cmd_voxelize(const Settings &s, std::ostream &out, std::ostream &) {
    const std::string &input = s.get("input");
    if (input.empty()) {
        throw UsageError("--input is required");
    }
    check_exists("input", input);
    TrainConfig cfg;
    s.apply_to(cfg);
    for (std::size_t n : cfg.grid) {
        if (n == 0) {
            throw UsageError("grid dimensions must be positive");
        }
    }
    if (cfg.threshold < 1 || cfg.points == 0) {
        throw UsageError("--threshold and --points must be at least 1");
    }
    std::vector<fs::path> files;
    if (fs::path(input).extension() == ".off") {
        files.push_back(input);
    } else {
        for (const auto &e : read_manifest(input)) {
            files.push_back(e.path);
        }
    }
    const fs::path dir = s.get("output");
    fs::create_directories(dir);
    Table table({"input", "output", "occupied", "voxels"});
    for (const auto &f : files) {
        const VoxelGrid grid = grid_from_off(f, cfg);
        const fs::path dst = dir / (f.stem().string() + ".grid");
        std::ofstream os(dst, std::ios::binary);
        if (!os) {
            throw IoError("cannot write " + dst.string());
        }
        write_grid(os, grid);
        table.add({f.string(), dst.string(), std::to_string(grid.count()),
                   std::to_string(grid.data().size())});
    }
    table.print(out);
    table.save_csv(s.get("table"));
    return kExitOk;
}

inline int cmd_train(const Settings &s, std::ostream &out, std::ostream &err) {
    TrainConfig cfg;
    s.apply_to(cfg);
    validate(cfg);
    check_data(s);
    const std::size_t threads = threads_of(s);
    const auto data = load_data(s, cfg);
    const auto [train_set, test_set] = voxelize_split(data, cfg, s, threads);
    out << "train samples " << train_set.size() << ", test samples " << test_set.size()
        << ", classes " << train_set.num_classes() << '\n';

    TrainOptions opts;
    opts.threads = threads;
    opts.on_epoch = [&](const EpochRecord &r) {
        err << "epoch " << r.epoch << '/' << cfg.epochs << " loss " << fmt(r.loss_total)
            << " eval_acc " << fmt(r.eval_accuracy, 4) << "% (" << fmt(r.wall_seconds, 3)
            << " s)\n";
    };
    const auto result = train(train_set, test_set, cfg, opts);

    save_checkpoint(fs::path(s.get("checkpoint")), result.model, cfg);
    if (const std::string &m = s.get("metrics"); !m.empty()) {
        std::ofstream os(m);
        if (!os) {
            throw IoError("cannot write " + m);
        }
        result.log.write_jsonl(os);
    }

    Table table({"epoch", "loss", "ce", "rf", "train_acc", "eval_acc", "feature_dist",
                 "seconds"});
    for (const auto &r : result.log.epochs) {
        table.add({std::to_string(r.epoch), fmt(r.loss_total), fmt(r.loss_ce), fmt(r.loss_rf),
                   fmt(r.train_accuracy, 4), fmt(r.eval_accuracy, 4),
                   fmt(r.inter_feature_distance), fmt(r.wall_seconds, 3)});
    }
    table.print(out);
    table.save_csv(s.get("table"));
    const auto report = evaluate_full(result.model, test_set.size() ? test_set : train_set,
                                      cfg.lambda, cfg.eval_batch_size, threads);
    out << "final test accuracy " << fmt(report.accuracy, 4) << "%, inter-feature distance "
        << fmt(report.inter_feature_distance) << '\n';
    out << "checkpoint written to " << s.get("checkpoint") << '\n';
    return kExitOk;
}

inline Checkpoint load_checked(const std::string &path) {
    check_exists("checkpoint", path);
    return load_checkpoint(fs::path(path));
}

inline int cmd_eval(const Settings &s, std::ostream &out, std::ostream &) {
    const Checkpoint ck = load_checked(s.get("checkpoint"));
    check_data(s);
    const std::size_t threads = threads_of(s);
    const auto data = load_data(s, ck.config);
    const auto [train_set, test_set] = voxelize_split(data, ck.config, s, threads);
    const std::string &split = s.get("split");
    if (split != "train" && split != "test") {
        throw UsageError("--split must be 'train' or 'test'");
    }
    const GridDataset &set = split == "train" ? train_set : test_set;
    if (set.num_classes() != ck.model.num_classes()) {
        throw UsageError("dataset has " + std::to_string(set.num_classes()) +
                         " classes but the checkpoint has " +
                         std::to_string(ck.model.num_classes()));
    }
    const auto report =
        evaluate_full(ck.model, set, ck.config.lambda, ck.config.eval_batch_size, threads);
    Table table({"split", "samples", "accuracy", "ce", "rf", "feature_dist"});
    table.add({split, std::to_string(set.size()), fmt(report.accuracy, 4), fmt(report.ce),
               fmt(report.rf), fmt(report.inter_feature_distance)});
    table.print(out);
    table.save_csv(s.get("table"));
    return kExitOk;
}

inline int cmd_features(const Settings &s, std::ostream &out, std::ostream &) {
    const Checkpoint ck = load_checked(s.get("checkpoint"));
    const TrainConfig &cfg = ck.config;
    VoxelGrid grid;
    std::string source;
    if (const std::string &input = s.get("input"); !input.empty()) {
        check_exists("input", input);
        if (fs::path(input).extension() == ".off") {
            grid = grid_from_off(input, cfg);
        } else {
            std::ifstream in(input, std::ios::binary);
            grid = read_grid(in);
        }
        source = input;
    } else {
        check_data(s);
        const std::size_t index = to_size("sample", s.get("sample"));
        const auto data = load_data(s, cfg);
        if (index >= data.test.samples.size()) {
            throw UsageError("--sample " + std::to_string(index) + " is out of range (" +
                             std::to_string(data.test.samples.size()) + " test samples)");
        }
        grid = voxelize(normalize_bounds(data.test.samples[index].cloud), cfg.grid,
                        cfg.threshold);
        source = "test sample " + std::to_string(index) + " (" +
                 data.test.samples[index].class_name + ")";
    }
    const FeatureTensor features = quanvolve(grid, ck.model.quanv);
    const std::string &dst = s.get("output");
    {
        std::ofstream os(dst, std::ios::binary);
        if (!os) {
            throw IoError("cannot write " + dst);
        }
        write_features(os, features);
    }
    const std::size_t q = ck.model.quanv.num_qubits;
    Table table({"filter", "kernel", "mean", "min", "max"});
    for (std::size_t m = 0; m < ck.model.quanv.num_filters(); ++m) {
        const auto block = features.channel_block(m * q, q);
        double sum = 0.0;
        for (double v : block) {
            sum += v;
        }
        const auto [lo, hi] = std::minmax_element(block.begin(), block.end());
        table.add({std::to_string(m), std::to_string(ck.model.quanv.filters[m].layout.kernel_size),
                   fmt(sum / static_cast<double>(block.size())), fmt(*lo), fmt(*hi)});
    }
    out << "source " << source << ", output dims " << features.dims()[0] << 'x'
        << features.dims()[1] << 'x' << features.dims()[2] << ", channels "
        << features.channels() << '\n';
    table.print(out);
    if (ck.model.quanv.num_filters() >= 2) {
        out << "inter_feature_distance="
            << fmt(inter_feature_distance(features, ck.model.quanv.num_filters(), q), 12)
            << '\n';
    }
    out << "features written to " << dst << '\n';
    return kExitOk;
}

inline int cmd_sweep(const Settings &s, std::ostream &out, std::ostream &err) {
    TrainConfig cfg;
    s.apply_to(cfg);
    validate(cfg);
    check_data(s);
    std::vector<double> lambdas;
    for (const auto &t : split_list(s.get("lambdas"))) {
        const double l = to_double("lambdas", t);
        if (!(l >= 0.0)) {
            throw UsageError("--lambdas must be non-negative");
        }
        lambdas.push_back(l);
    }
    if (lambdas.empty()) {
        throw UsageError("--lambdas is empty");
    }
    const std::size_t threads = threads_of(s);
    const auto data = load_data(s, cfg);
    const auto [train_set, test_set] = voxelize_split(data, cfg, s, threads);
    std::vector<std::string> warnings;
    const auto rows =
        run_lambda_sweep(train_set, test_set, cfg, lambdas, TrainOptions{threads, {}}, &warnings);
    for (const auto &w : warnings) {
        err << "warning: " << w << '\n';
    }
    Table table({"lambda", "accuracy", "feature_dist"});
    for (const auto &r : rows) {
        table.add({fmt(r.lambda, 17), fmt(r.accuracy, 4), fmt(r.inter_feature_distance, 12)});
    }
    table.print(out);
    table.save_csv(s.get("table"));
    return kExitOk;
}

inline int cmd_scale(const Settings &s, std::ostream &out, std::ostream &) {
    TrainConfig cfg;
    s.apply_to(cfg);
    check_data(s);
    std::vector<std::size_t> counts;
    for (const auto &t : split_list(s.get("counts"))) {
        counts.push_back(to_size("counts", t));
    }
    for (std::size_t m : counts) {
        if (m != 1 && m != 2 && m != 4 && m != 6 && m != 8) {
            throw UsageError("--counts entries must be drawn from {1,2,4,6,8}");
        }
    }
    if (counts.empty()) {
        throw UsageError("--counts is empty");
    }
    std::vector<KernelStrategy> strategies;
    const std::string &strategy = s.get("strategy");
    if (strategy == "fixed" || strategy == "both") {
        strategies.push_back(KernelStrategy::Fixed);
    }
    if (strategy == "mixed" || strategy == "both") {
        strategies.push_back(KernelStrategy::Mixed);
    }
    if (strategies.empty()) {
        throw UsageError("--strategy must be fixed, mixed or both");
    }
    for (auto st : strategies) {
        for (std::size_t m : counts) {
            TrainConfig c = cfg;
            c.num_filters = m;
            c.kernel_sizes = strategy_kernels(m, st);
            validate(c);
        }
    }
    const std::size_t threads = threads_of(s);
    const auto data = load_data(s, cfg);
    const auto [train_set, test_set] = voxelize_split(data, cfg, s, threads);
    Table table({"filters", "strategy", "kernels", "accuracy"});
    for (auto st : strategies) {
        for (const auto &r :
             run_scaling_experiment(train_set, test_set, cfg, counts, st, {threads, {}})) {
            std::string kernels;
            for (std::size_t k : strategy_kernels(r.filters, st)) {
                kernels += (kernels.empty() ? "" : ";") + std::to_string(k);
            }
            table.add({std::to_string(r.filters), st == KernelStrategy::Fixed ? "fixed" : "mixed",
                       kernels, fmt(r.accuracy, 4)});
        }
    }
    table.print(out);
    table.save_csv(s.get("table"));
    return kExitOk;
}

inline int cmd_synth(const Settings &s, std::ostream &out, std::ostream &) {
    const auto classes = split_list(s.get("classes"));
    const std::size_t per_class = to_size("per-class", s.get("per-class"));
    const std::size_t points = to_size("points", s.get("points"));
    if (classes.empty() || per_class == 0 || points == 0) {
        throw UsageError("--classes, --per-class and --points must be non-empty/positive");
    }
    for (const auto &c : classes) {
        const auto &known = synth_class_names();
        if (std::find(known.begin(), known.end(), c) == known.end()) {
            throw UsageError("unknown synthetic class '" + c + "'");
        }
    }
    const std::uint64_t seed = to_size("seed", s.get("seed"));
    const auto ds = synth_dataset(classes, per_class, seed, points);
    const fs::path dir = s.get("output");
    fs::create_directories(dir);
    std::vector<ManifestEntry> entries;
    std::vector<std::size_t> seen(classes.size(), 0);
    for (const auto &sample : ds.samples) {
        std::ostringstream name;
        name << sample.class_name << '_' << std::setw(4) << std::setfill('0')
             << seen[sample.label]++ << ".off";
        std::ofstream off(dir / name.str());
        if (!off) {
            throw IoError("cannot write " + (dir / name.str()).string());
        }
        write_off(off, Mesh{sample.cloud.vertices, {}});
        entries.push_back({name.str(), sample.label, sample.class_name});
    }
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) {
        throw IoError("cannot write manifest in " + dir.string());
    }
    write_manifest(manifest, entries);
    Table table({"class", "label", "samples"});
    for (std::size_t c = 0; c < classes.size(); ++c) {
        table.add({classes[c], std::to_string(c), std::to_string(seen[c])});
    }
    table.print(out);
    out << "manifest written to " << (dir / "manifest.txt").string() << '\n';
    return kExitOk;
}

} // namespace detail

/// Runs the command line `args` (without the program name).
inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    using namespace detail;
    CLI::App app{"sqcnn3d: scalable 3D quanvolutional classifiers", "sqcnn3d"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every command");

    struct Command {
        CLI::App *app;
        Settings settings;
        std::string config;
        int (*run)(const Settings &, std::ostream &, std::ostream &);
    };
    std::deque<Command> commands;
    const auto add = [&](const char *name, const char *about, auto run) -> Command & {
        auto &c = commands.emplace_back(Command{app.add_subcommand(name, about), {}, {}, run});
        c.app->add_option("--config", c.config, "key=value config file (flags override it)")
            ->default_str("\"\"");
        return c;
    };

    {
        auto &c = add("voxelize", "voxelize an OFF file or every mesh in a manifest",
                      cmd_voxelize);
        c.settings.add(*c.app, "input", "", "OFF file or manifest");
        c.settings.add(*c.app, "output", "grids", "output directory for .grid files");
        add_train_settings(*c.app, c.settings, {"grid", "threshold", "points", "seed"});
        c.settings.add(*c.app, "table", "", "also write the result table as CSV here");
    }
    {
        auto &c = add("train", "train a model and write a checkpoint and metrics log",
                      cmd_train);
        add_train_settings(*c.app, c.settings);
        add_data_settings(*c.app, c.settings);
        c.settings.add(*c.app, "checkpoint", "model.ckpt", "checkpoint output path");
        c.settings.add(*c.app, "metrics", "metrics.jsonl", "JSONL metrics path (empty: none)");
        c.settings.add(*c.app, "table", "", "also write the epoch table as CSV here");
        add_threads(*c.app, c.settings);
    }
    {
        auto &c = add("eval", "top-1 accuracy of a checkpoint", cmd_eval);
        c.settings.add(*c.app, "checkpoint", "model.ckpt", "checkpoint to evaluate");
        add_data_settings(*c.app, c.settings);
        c.settings.add(*c.app, "split", "test", "which split to evaluate: train or test");
        c.settings.add(*c.app, "table", "", "also write the result table as CSV here");
        add_threads(*c.app, c.settings);
    }
    {
        auto &c = add("features", "export the feature maps of one sample", cmd_features);
        c.settings.add(*c.app, "checkpoint", "model.ckpt", "checkpoint to use");
        c.settings.add(*c.app, "input", "", "OFF or .grid file (empty: a test sample of --data)");
        c.settings.add(*c.app, "sample", "0", "test sample index when --input is empty");
        c.settings.add(*c.app, "output", "features.bin", "feature tensor output path");
        add_data_settings(*c.app, c.settings);
    }
    {
        auto &c = add("sweep-lambda", "train once per regularizer weight", cmd_sweep);
        c.settings.add(*c.app, "lambdas", "0,0.01,0.1", "comma-separated lambda values");
        add_train_settings(*c.app, c.settings);
        add_data_settings(*c.app, c.settings);
        c.settings.add(*c.app, "table", "", "also write the result table as CSV here");
        add_threads(*c.app, c.settings);
    }
    {
        auto &c = add("scale", "accuracy against filter count for fixed/mixed kernels",
                      cmd_scale);
        c.settings.add(*c.app, "counts", "2,4,6", "filter counts, each from {1,2,4,6,8}");
        c.settings.add(*c.app, "strategy", "both", "fixed (all kernel 4), mixed, or both");
        add_train_settings(*c.app, c.settings);
        add_data_settings(*c.app, c.settings);
        c.settings.add(*c.app, "table", "", "also write the result table as CSV here");
        add_threads(*c.app, c.settings);
    }
    {
        auto &c = add("synth", "write a synthetic OFF dataset and manifest", cmd_synth);
        c.settings.add(*c.app, "output", "synth", "output directory");
        c.settings.add(*c.app, "classes", default_classes(), "shapes to generate");
        c.settings.add(*c.app, "per-class", "50", "samples per class");
        c.settings.add(*c.app, "points", "2048", "points per sample");
        c.settings.add(*c.app, "seed", "0", "random seed");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\nrun with --help for usage\n";
        return kExitUsage;
    }

    for (auto &c : commands) {
        if (!c.app->parsed()) {
            continue;
        }
        try {
            c.settings.resolve(c.config);
            c.settings.banner(out, c.app->get_name());
            return c.run(c.settings, out, err);
        } catch (const UsageError &e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const std::exception &e) {
            err << "error: " << e.what() << '\n';
            return kExitFailure;
        }
    }
    return kExitUsage;
}

} // namespace sqcnn3d::cli

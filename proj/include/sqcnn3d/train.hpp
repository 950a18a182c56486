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
 * @file train.hpp
 * @brief Training with the reverse-fidelity regularizer, evaluation and the
 * experiment drivers (lambda sweep, filter-count scaling).
 *
 * Per batch every sample is processed independently (possibly on worker
 * threads) into its own gradient buffer; buffers are then summed in sample
 * order, so results do not depend on the thread count.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "circuit.hpp"
#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "quanv.hpp"
#include "voxel.hpp"

namespace sqcnn3d {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction over one parameter block.
class Adam {
  public:
    Adam(std::size_t size, AdamOptions opts) : opts_(opts), m_(size, 0.0), v_(size, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads) {
        if (params.size() != m_.size() || grads.size() != m_.size()) {
            throw ShapeError("Adam block size mismatch");
        }
        ++t_;
        const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
            v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g * g;
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= opts_.learning_rate * mhat / (std::sqrt(vhat) + opts_.epsilon);
        }
    }

    [[nodiscard]] std::size_t steps() const noexcept { return t_; }

  private:
    AdamOptions opts_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Prepared data
// ---------------------------------------------------------------------------

/// Voxelized samples ready for training.
struct GridDataset {
    std::vector<VoxelGrid> grids;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;

    [[nodiscard]] std::size_t size() const noexcept { return grids.size(); }
    [[nodiscard]] std::size_t num_classes() const noexcept { return class_names.size(); }
};

/// normalize_bounds then voxelize, per sample.
[[nodiscard]] inline GridDataset voxelize_dataset(const Dataset &ds, const Dims3 &dims,
                                                  std::uint32_t threshold,
                                                  std::size_t threads = 1) {
    GridDataset out;
    out.class_names = ds.class_names;
    out.grids.resize(ds.samples.size());
    out.labels.resize(ds.samples.size());
    parallel_for(ds.samples.size(), threads, [&](std::size_t i) {
        out.grids[i] = voxelize(normalize_bounds(ds.samples[i].cloud), dims, threshold);
        out.labels[i] = ds.samples[i].label;
    });
    return out;
}

// Grid cache file: u32 magic "SQGC", u32 count, u32 class count, class names
// (u32 length + bytes each), then per sample u32 label followed by a grid
// record in the voxel grid format.

inline void write_grid_dataset(std::ostream &os, const GridDataset &ds) {
    io::write_u32(os, 0x43475153U);
    io::write_u32(os, static_cast<std::uint32_t>(ds.size()));
    io::write_u32(os, static_cast<std::uint32_t>(ds.class_names.size()));
    for (const auto &name : ds.class_names) {
        io::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        io::write_u32(os, static_cast<std::uint32_t>(ds.labels[i]));
        write_grid(os, ds.grids[i]);
    }
}

[[nodiscard]] inline GridDataset read_grid_dataset(std::istream &is) {
    if (io::read_u32(is) != 0x43475153U) {
        throw IoError("not a grid cache file");
    }
    GridDataset ds;
    const std::size_t n = io::read_u32(is);
    ds.class_names.resize(io::read_u32(is));
    for (auto &name : ds.class_names) {
        name.resize(io::read_u32(is));
        if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) {
            throw IoError("truncated grid cache");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels.push_back(io::read_u32(is));
        ds.grids.push_back(read_grid(is));
    }
    return ds;
}

/// voxelize_dataset, memoized on disk under `cache_dir` keyed by
/// (dataset_key, dims, threshold). An empty cache_dir disables caching.
[[nodiscard]] inline GridDataset
voxelize_dataset_cached(const Dataset &ds, const std::string &dataset_key, const Dims3 &dims,
                        std::uint32_t threshold, const std::filesystem::path &cache_dir,
                        std::size_t threads = 1) {
    if (cache_dir.empty()) {
        return voxelize_dataset(ds, dims, threshold, threads);
    }
    std::ostringstream key;
    key << dataset_key << '|' << dims[0] << 'x' << dims[1] << 'x' << dims[2] << '|'
        << threshold;
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : key.str()) {
        h = (h ^ c) * 1099511628211ULL;
    }
    std::ostringstream name;
    name << "grids-" << std::hex << std::setw(16) << std::setfill('0') << h << ".bin";
    const auto path = cache_dir / name.str();
    if (std::ifstream in(path, std::ios::binary); in) {
        auto cached = read_grid_dataset(in);
        if (cached.size() == ds.samples.size()) {
            return cached;
        }
    }
    auto fresh = voxelize_dataset(ds, dims, threshold, threads);
    std::filesystem::create_directories(cache_dir);
    std::ofstream out(path, std::ios::binary);
    write_grid_dataset(out, fresh);
    return fresh;
}

// ---------------------------------------------------------------------------
// Model construction and per-sample passes
// ---------------------------------------------------------------------------

[[nodiscard]] inline Model make_model(const TrainConfig &cfg,
                                      const std::vector<std::string> &class_names) {
    cfg.validate();
    if (class_names.size() < 2) {
        throw ConfigError("need at least two classes");
    }
    std::mt19937_64 rng(cfg.seed);
    Model model;
    model.class_names = class_names;
    model.quanv.stride = cfg.stride;
    model.quanv.num_qubits = cfg.num_qubits;
    for (std::size_t k : cfg.filter_kernels()) {
        model.quanv.filters.push_back(FilterParams::random({k, cfg.num_qubits}, rng));
    }
    model.head = DenseHead(head_inputs(model.quanv, cfg.grid), cfg.hidden_units,
                           class_names.size());
    model.head.initialize(rng);
    return model;
}

struct ModelGradients {
    std::vector<std::vector<double>> filters;
    DenseHead::Gradients head;

    static ModelGradients zeros_like(const Model &m) {
        ModelGradients g;
        for (const auto &f : m.quanv.filters) {
            g.filters.emplace_back(f.values.size(), 0.0);
        }
        g.head = DenseHead::Gradients::zeros_like(m.head);
        return g;
    }

    void clear() {
        for (auto &f : filters) {
            std::fill(f.begin(), f.end(), 0.0);
        }
        for (auto *v : {&head.w1, &head.b1, &head.w2, &head.b2, &head.input}) {
            std::fill(v->begin(), v->end(), 0.0);
        }
    }

    void add(const ModelGradients &o) {
        for (std::size_t m = 0; m < filters.size(); ++m) {
            for (std::size_t i = 0; i < filters[m].size(); ++i) {
                filters[m][i] += o.filters[m][i];
            }
        }
        const auto acc = [](std::vector<double> &a, const std::vector<double> &b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] += b[i];
            }
        };
        acc(head.w1, o.head.w1);
        acc(head.b1, o.head.b1);
        acc(head.w2, o.head.w2);
        acc(head.b2, o.head.b2);
    }
};

struct SampleOutcome {
    double ce = 0.0;
    double rf = 0.0;
    double inter_feature_distance = 0.0;
    std::size_t predicted = 0;
    std::vector<double> probabilities;
};

namespace detail {
inline void check_grid(const Model &model, const VoxelGrid &grid) {
    if (head_inputs(model.quanv, grid.dims()) != model.head.inputs()) {
        throw ConfigError("grid shape does not match the model's head");
    }
}
} // namespace detail

/// Forward pass on one sample; with `grads`, also backpropagates
/// ce + lambda * rf into it (overwriting its contents).
inline SampleOutcome sample_pass(const Model &model, const VoxelGrid &grid, std::size_t label,
                                 double lambda, ModelGradients *grads) {
    detail::check_grid(model, grid);
    if (label >= model.num_classes()) {
        throw ConfigError("label " + std::to_string(label) + " exceeds the model's " +
                          std::to_string(model.num_classes()) + " classes");
    }
    const QuanvForward fwd = quanvolve_with_cache(grid, model.quanv);
    const auto x = fwd.features.values();
    const auto act = model.head.forward(x);

    SampleOutcome out;
    out.ce = ce_loss(act.probabilities, label);
    out.rf = sample_rf(fwd);
    out.predicted = static_cast<std::size_t>(
        std::max_element(act.probabilities.begin(), act.probabilities.end()) -
        act.probabilities.begin());
    if (model.quanv.num_filters() >= 2) {
        out.inter_feature_distance = inter_feature_distance(
            fwd.features, model.quanv.num_filters(), model.quanv.num_qubits);
    }
    out.probabilities = act.probabilities;

    if (grads != nullptr) {
        grads->clear();
        model.head.backward(act, x, ce_logit_gradient(act.probabilities, label), grads->head);
        FeatureTensor upstream(fwd.features.channels(), fwd.features.dims());
        std::copy(grads->head.input.begin(), grads->head.input.end(),
                  upstream.values().begin());
        auto cot = QuanvCotangents::zeros(fwd);
        add_feature_cotangent(cot, fwd, upstream);
        add_rf_cotangent(cot, fwd, lambda);
        grads->filters = backward_from_cotangents(fwd, model.quanv, cot);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalReport {
    double accuracy = 0.0; // percent
    double ce = 0.0;
    double rf = 0.0;
    double total = 0.0;
    double inter_feature_distance = 0.0;
    std::vector<std::size_t> predictions;
};

/// Top-1 accuracy and mean losses over `data`, processed in chunks of
/// `batch_size` samples.
[[nodiscard]] inline EvalReport evaluate_full(const Model &model, const GridDataset &data,
                                              double lambda, std::size_t batch_size = 128,
                                              std::size_t threads = 1) {
    if (data.size() == 0) {
        throw EmptyInputError("evaluation dataset is empty");
    }
    if (data.num_classes() != 0 && data.num_classes() != model.num_classes()) {
        throw ConfigError("dataset has " + std::to_string(data.num_classes()) +
                          " classes but the model predicts " +
                          std::to_string(model.num_classes()));
    }
    std::vector<SampleOutcome> outcomes(data.size());
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, data.size() - start);
        parallel_for(n, threads, [&](std::size_t i) {
            outcomes[start + i] =
                sample_pass(model, data.grids[start + i], data.labels[start + i], lambda, nullptr);
        });
    }
    EvalReport r;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto &o = outcomes[i];
        correct += o.predicted == data.labels[i] ? 1 : 0;
        r.ce += o.ce;
        r.rf += o.rf;
        r.total += o.ce + lambda * o.rf;
        r.inter_feature_distance += o.inter_feature_distance;
        r.predictions.push_back(o.predicted);
    }
    const auto n = static_cast<double>(outcomes.size());
    r.accuracy = 100.0 * static_cast<double>(correct) / n;
    r.ce /= n;
    r.rf /= n;
    r.total /= n;
    r.inter_feature_distance /= n;
    return r;
}

[[nodiscard]] inline double evaluate(const Model &model, const GridDataset &data,
                                     std::size_t threads = 1) {
    return evaluate_full(model, data, 0.0, 128, threads).accuracy;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;
    double loss_total = 0.0;
    double loss_ce = 0.0;
    double loss_rf = 0.0;
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
    double inter_feature_distance = 0.0;
    double wall_seconds = 0.0;

    /// Field-wise equality ignoring wall-clock time.
    [[nodiscard]] bool same_result(const EpochRecord &o) const noexcept {
        return epoch == o.epoch && loss_total == o.loss_total && loss_ce == o.loss_ce &&
               loss_rf == o.loss_rf && train_accuracy == o.train_accuracy &&
               eval_accuracy == o.eval_accuracy &&
               inter_feature_distance == o.inter_feature_distance;
    }
};

struct MetricsLog {
    std::vector<EpochRecord> epochs;

    [[nodiscard]] bool same_results(const MetricsLog &o) const noexcept {
        return epochs.size() == o.epochs.size() &&
               std::equal(epochs.begin(), epochs.end(), o.epochs.begin(),
                          [](const auto &a, const auto &b) { return a.same_result(b); });
    }

    /// One JSON object per epoch, one per line. Doubles keep 17 digits.
    void write_jsonl(std::ostream &os, bool include_timing = true) const {
        const auto old = os.precision(17);
        for (const auto &e : epochs) {
            os << "{\"epoch\":" << e.epoch << ",\"loss\":" << e.loss_total
               << ",\"ce\":" << e.loss_ce << ",\"rf\":" << e.loss_rf
               << ",\"train_accuracy\":" << e.train_accuracy
               << ",\"eval_accuracy\":" << e.eval_accuracy
               << ",\"inter_feature_distance\":" << e.inter_feature_distance;
            if (include_timing) {
                os << ",\"wall_seconds\":" << e.wall_seconds;
            }
            os << "}\n";
        }
        os.precision(old);
    }
};

struct TrainResult {
    Model model;
    MetricsLog log;
};

struct TrainOptions {
    std::size_t threads = 1;
    /// Called after every epoch.
    std::function<void(const EpochRecord &)> on_epoch;
};

/// Trains a fresh model. When `eval` is non-empty, per-epoch accuracy and
/// inter-feature distance are measured on it, otherwise on `train_set`.
[[nodiscard]] inline TrainResult train(const GridDataset &train_set, const GridDataset &eval,
                                       const TrainConfig &cfg, const TrainOptions &opts = {}) {
    cfg.validate();
    if (train_set.size() == 0) {
        throw EmptyInputError("training set is empty");
    }
    for (std::size_t label : train_set.labels) {
        if (label >= train_set.num_classes()) {
            throw ConfigError("label exceeds class count");
        }
    }
    for (const auto &g : train_set.grids) {
        if (g.dims() != cfg.grid) {
            throw ConfigError("grid dimensions differ from the configuration");
        }
    }
    TrainResult result{make_model(cfg, train_set.class_names), {}};
    Model &model = result.model;
    const GridDataset &eval_set = eval.size() > 0 ? eval : train_set;

    const AdamOptions adam_opts{cfg.learning_rate};
    std::vector<Adam> filter_opt;
    for (const auto &f : model.quanv.filters) {
        filter_opt.emplace_back(f.values.size(), adam_opts);
    }
    Adam w1_opt(model.head.w1.size(), adam_opts), b1_opt(model.head.b1.size(), adam_opts),
        w2_opt(model.head.w2.size(), adam_opts), b2_opt(model.head.b2.size(), adam_opts);

    std::vector<ModelGradients> per_sample(cfg.batch_size, ModelGradients::zeros_like(model));
    ModelGradients total = ModelGradients::zeros_like(model);
    std::vector<SampleOutcome> outcomes(cfg.batch_size);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum_ce = 0.0, sum_rf = 0.0, sum_total = 0.0;
        std::size_t correct = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            parallel_for(n, opts.threads, [&](std::size_t i) {
                const std::size_t s = order[start + i];
                outcomes[i] = sample_pass(model, train_set.grids[s], train_set.labels[s],
                                          cfg.lambda, &per_sample[i]);
            });
            total.clear();
            for (std::size_t i = 0; i < n; ++i) {
                total.add(per_sample[i]);
                sum_ce += outcomes[i].ce;
                sum_rf += outcomes[i].rf;
                sum_total += outcomes[i].ce + cfg.lambda * outcomes[i].rf;
                correct += outcomes[i].predicted == train_set.labels[order[start + i]] ? 1 : 0;
            }
            const double inv = 1.0 / static_cast<double>(n);
            const auto scale = [inv](std::vector<double> &v) {
                for (double &x : v) {
                    x *= inv;
                }
            };
            for (std::size_t m = 0; m < total.filters.size(); ++m) {
                scale(total.filters[m]);
                filter_opt[m].step(model.quanv.filters[m].values, total.filters[m]);
            }
            scale(total.head.w1);
            scale(total.head.b1);
            scale(total.head.w2);
            scale(total.head.b2);
            w1_opt.step(model.head.w1, total.head.w1);
            b1_opt.step(model.head.b1, total.head.b1);
            w2_opt.step(model.head.w2, total.head.w2);
            b2_opt.step(model.head.b2, total.head.b2);
        }

        const auto n = static_cast<double>(order.size());
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss_ce = sum_ce / n;
        rec.loss_rf = sum_rf / n;
        rec.loss_total = sum_total / n;
        rec.train_accuracy = 100.0 * static_cast<double>(correct) / n;
        const EvalReport ev =
            evaluate_full(model, eval_set, cfg.lambda, cfg.eval_batch_size, opts.threads);
        rec.eval_accuracy = ev.accuracy;
        rec.inter_feature_distance = ev.inter_feature_distance;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.epochs.push_back(rec);
        if (opts.on_epoch) {
            opts.on_epoch(rec);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Experiment drivers
// ---------------------------------------------------------------------------

struct SweepRow {
    double lambda = 0.0;
    double accuracy = 0.0;
    double inter_feature_distance = 0.0;
};

/// Trains once per distinct lambda (first occurrence order). Duplicates are
/// dropped and reported through `warnings`.
[[nodiscard]] inline std::vector<SweepRow>
run_lambda_sweep(const GridDataset &train_set, const GridDataset &test_set,
                 const TrainConfig &base, const std::vector<double> &lambdas,
                 const TrainOptions &opts = {}, std::vector<std::string> *warnings = nullptr) {
    if (lambdas.empty()) {
        throw ConfigError("lambda list is empty");
    }
    std::vector<double> unique;
    for (double l : lambdas) {
        if (std::find(unique.begin(), unique.end(), l) != unique.end()) {
            if (warnings != nullptr) {
                std::ostringstream os;
                os << "duplicate lambda " << l << " ignored";
                warnings->push_back(os.str());
            }
            continue;
        }
        unique.push_back(l);
    }
    std::vector<SweepRow> rows;
    for (double l : unique) {
        TrainConfig cfg = base;
        cfg.lambda = l;
        const auto res = train(train_set, test_set, cfg, opts);
        if (!res.log.epochs.empty()) {
            const EpochRecord &last = res.log.epochs.back();
            rows.push_back({l, last.eval_accuracy, last.inter_feature_distance});
            continue;
        }
        const GridDataset &ev = test_set.size() > 0 ? test_set : train_set;
        const auto report = evaluate_full(res.model, ev, l, cfg.eval_batch_size, opts.threads);
        rows.push_back({l, report.accuracy, report.inter_feature_distance});
    }
    return rows;
}

enum class KernelStrategy { Fixed, Mixed };

/// Fixed: every filter uses kernel 4. Mixed: round-robin over {2, 3, 4}.
[[nodiscard]] inline std::vector<std::size_t> strategy_kernels(std::size_t filters,
                                                               KernelStrategy strategy) {
    std::vector<std::size_t> k(filters);
    for (std::size_t i = 0; i < filters; ++i) {
        k[i] = strategy == KernelStrategy::Fixed ? 4 : 2 + i % 3;
    }
    return k;
}

struct ScalingRow {
    std::size_t filters = 0;
    KernelStrategy strategy = KernelStrategy::Mixed;
    double accuracy = 0.0;
};

[[nodiscard]] inline std::vector<ScalingRow>
run_scaling_experiment(const GridDataset &train_set, const GridDataset &test_set,
                       const TrainConfig &base, const std::vector<std::size_t> &counts,
                       KernelStrategy strategy, const TrainOptions &opts = {}) {
    static const std::set<std::size_t> allowed{1, 2, 4, 6, 8};
    for (std::size_t m : counts) {
        if (!allowed.contains(m)) {
            throw ConfigError("filter counts must be drawn from {1,2,4,6,8}");
        }
    }
    std::vector<ScalingRow> rows;
    for (std::size_t m : counts) {
        TrainConfig cfg = base;
        cfg.num_filters = m;
        cfg.kernel_sizes = strategy_kernels(m, strategy);
        const auto res = train(train_set, test_set, cfg, opts);
        if (!res.log.epochs.empty()) {
            rows.push_back({m, strategy, res.log.epochs.back().eval_accuracy});
            continue;
        }
        const GridDataset &ev = test_set.size() > 0 ? test_set : train_set;
        rows.push_back({m, strategy, evaluate(res.model, ev, opts.threads)});
    }
    return rows;
}

} // namespace sqcnn3d

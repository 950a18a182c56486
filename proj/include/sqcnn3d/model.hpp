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
 * @file model.hpp
 * @brief Hybrid classifier: quanvolution features into a dense softmax head,
 * plus the classification loss, the reverse-fidelity regularizer and the
 * inter-feature distance metric.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "qstate.hpp"
#include "quanv.hpp"

namespace sqcnn3d {

// ---------------------------------------------------------------------------
// Reverse-fidelity regularizer
// ---------------------------------------------------------------------------

/// Mean fidelity over ordered pairs (m, m'), m != m'.
[[nodiscard]] inline double rf_loss(std::span<const StateVector> states) {
    const std::size_t m = states.size();
    if (m < 2) {
        throw InsufficientFiltersError("reverse-fidelity loss needs at least two states");
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            if (a != b) {
                acc += fidelity(states[a], states[b]);
            }
        }
    }
    return acc / static_cast<double>(m * (m - 1));
}

/// Mean over lattice sites of rf_loss across the filters' states at that
/// site. Zero for a single-filter layer.
[[nodiscard]] inline double sample_rf(const QuanvForward &fwd) {
    const std::size_t filters = fwd.sweeps.size();
    if (filters < 2 || fwd.num_sites() == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t site = 0; site < fwd.num_sites(); ++site) {
        double pair_sum = 0.0;
        for (std::size_t a = 0; a < filters; ++a) {
            for (std::size_t b = a + 1; b < filters; ++b) {
                pair_sum += fidelity(fwd.state(a, site), fwd.state(b, site));
            }
        }
        acc += 2.0 * pair_sum / static_cast<double>(filters * (filters - 1));
    }
    return acc / static_cast<double>(fwd.num_sites());
}

/// Adds the cotangent of `weight * sample_rf(fwd)`.
inline void add_rf_cotangent(QuanvCotangents &cot, const QuanvForward &fwd,
                             double weight) {
    const std::size_t filters = fwd.sweeps.size();
    if (filters < 2 || weight == 0.0) {
        return;
    }
    const double coeff = weight * 2.0 /
                         (static_cast<double>(filters * (filters - 1)) *
                          static_cast<double>(fwd.num_sites()));
    for (std::size_t site = 0; site < fwd.num_sites(); ++site) {
        for (std::size_t a = 0; a < filters; ++a) {
            const StateVector &psi_a = fwd.state(a, site);
            auto &target = cot.per_filter[a][fwd.sweeps[a].site_pattern[site]];
            for (std::size_t b = 0; b < filters; ++b) {
                if (a == b) {
                    continue;
                }
                const StateVector &psi_b = fwd.state(b, site);
                const complex_t overlap = coeff * inner_product(psi_b, psi_a);
                for (std::size_t i = 0; i < target.size(); ++i) {
                    target[i] += overlap * psi_b[i];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Classification loss
// ---------------------------------------------------------------------------

inline constexpr double kMinProbability = 1e-12;

/// -log p(true_class). A zero probability is clamped to 1e-12 and reported
/// through `warnings` when provided.
[[nodiscard]] inline double ce_loss(std::span<const double> probabilities,
                                    std::size_t true_class,
                                    std::vector<std::string> *warnings = nullptr) {
    if (true_class >= probabilities.size()) {
        throw ShapeError("class index " + std::to_string(true_class) +
                         " out of range for " + std::to_string(probabilities.size()) +
                         " classes");
    }
    double p = probabilities[true_class];
    if (p < kMinProbability) {
        if (warnings != nullptr) {
            warnings->push_back("probability of true class " +
                                std::to_string(true_class) + " clamped to 1e-12");
        }
        p = kMinProbability;
    }
    return -std::log(p);
}

[[nodiscard]] inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    const double mx = *std::max_element(out.begin(), out.end());
    double sum = 0.0;
    for (double &v : out) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double &v : out) {
        v /= sum;
    }
    return out;
}

struct LossReport {
    double ce = 0.0;
    double rf = 0.0;
    double total = 0.0;
    double lambda = 0.0;
};

/// Batch mean of ce_i + lambda * rf_i.
[[nodiscard]] inline LossReport total_loss(const std::vector<std::vector<double>> &probabilities,
                                           std::span<const std::size_t> labels,
                                           std::span<const double> sample_rf_terms,
                                           double lambda) {
    if (probabilities.empty()) {
        throw EmptyInputError("loss over an empty batch");
    }
    if (labels.size() != probabilities.size() ||
        sample_rf_terms.size() != probabilities.size()) {
        throw ShapeError("batch outputs, labels and rf terms differ in length");
    }
    if (lambda < 0.0) {
        throw ConfigError("lambda must be non-negative");
    }
    LossReport r;
    r.lambda = lambda;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double ce = ce_loss(probabilities[i], labels[i]);
        r.ce += ce;
        r.rf += sample_rf_terms[i];
        r.total += ce + lambda * sample_rf_terms[i];
    }
    const auto n = static_cast<double>(probabilities.size());
    r.ce /= n;
    r.rf /= n;
    r.total /= n;
    return r;
}

/// Mean of rf_loss over the patches of one sample; each entry of
/// `patch_states` holds the M filter states for one patch.
[[nodiscard]] inline double
mean_patch_rf(const std::vector<std::vector<StateVector>> &patch_states) {
    if (patch_states.empty()) {
        throw EmptyInputError("no patches");
    }
    double acc = 0.0;
    for (const auto &states : patch_states) {
        acc += rf_loss(states);
    }
    return acc / static_cast<double>(patch_states.size());
}

// ---------------------------------------------------------------------------
// Inter-feature distance
// ---------------------------------------------------------------------------

/// Mean over unordered filter pairs of ||block_a - block_b||_2 / N, where a
/// block is one filter's q channels flattened (N values).
[[nodiscard]] inline double inter_feature_distance(const FeatureTensor &features,
                                                   std::size_t num_filters,
                                                   std::size_t num_qubits) {
    if (num_filters < 2) {
        throw InsufficientFiltersError("inter-feature distance needs two filters");
    }
    if (features.channels() != num_filters * num_qubits) {
        throw ShapeError("feature channels do not match filters * qubits");
    }
    const std::size_t n = num_qubits * features.num_sites();
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < num_filters; ++a) {
        const auto block_a = features.channel_block(a * num_qubits, num_qubits);
        for (std::size_t b = a + 1; b < num_filters; ++b) {
            const auto block_b = features.channel_block(b * num_qubits, num_qubits);
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double diff = block_a[i] - block_b[i];
                sq += diff * diff;
            }
            acc += std::sqrt(sq) / static_cast<double>(n);
            ++pairs;
        }
    }
    return acc / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Dense head
// ---------------------------------------------------------------------------

/// inputs -> hidden (ReLU) -> classes (softmax). Weights are row-major
/// (out x in).
class DenseHead {
  public:
    DenseHead() = default;
    DenseHead(std::size_t inputs, std::size_t hidden, std::size_t classes)
        : w1(hidden * inputs, 0.0), b1(hidden, 0.0), w2(classes * hidden, 0.0),
          b2(classes, 0.0), inputs_(inputs), hidden_(hidden), classes_(classes) {
        if (inputs == 0 || hidden == 0 || classes < 2) {
            throw ConfigError("dense head needs positive widths and at least two classes");
        }
    }

    /// He-uniform hidden weights, Glorot-uniform output weights, zero biases.
    template <class Rng> void initialize(Rng &rng) {
        const double l1 = std::sqrt(6.0 / static_cast<double>(inputs_));
        const double l2 = std::sqrt(6.0 / static_cast<double>(hidden_ + classes_));
        std::uniform_real_distribution<double> d1(-l1, l1), d2(-l2, l2);
        for (double &v : w1) {
            v = d1(rng);
        }
        for (double &v : w2) {
            v = d2(rng);
        }
        std::fill(b1.begin(), b1.end(), 0.0);
        std::fill(b2.begin(), b2.end(), 0.0);
    }

    [[nodiscard]] std::size_t inputs() const noexcept { return inputs_; }
    [[nodiscard]] std::size_t hidden() const noexcept { return hidden_; }
    [[nodiscard]] std::size_t classes() const noexcept { return classes_; }

    struct Activations {
        std::vector<double> hidden;  // post-ReLU
        std::vector<double> logits;
        std::vector<double> probabilities;
    };

    struct Gradients {
        std::vector<double> w1, b1, w2, b2;
        std::vector<double> input;

        static Gradients zeros_like(const DenseHead &h) {
            return {std::vector<double>(h.w1.size(), 0.0),
                    std::vector<double>(h.b1.size(), 0.0),
                    std::vector<double>(h.w2.size(), 0.0),
                    std::vector<double>(h.b2.size(), 0.0),
                    std::vector<double>(h.inputs(), 0.0)};
        }
    };

    [[nodiscard]] Activations forward(std::span<const double> x) const {
        check_input(x);
        Activations a;
        a.hidden.resize(hidden_);
        for (std::size_t j = 0; j < hidden_; ++j) {
            const double *row = w1.data() + j * inputs_;
            double acc = b1[j];
            for (std::size_t i = 0; i < inputs_; ++i) {
                acc += row[i] * x[i];
            }
            a.hidden[j] = acc > 0.0 ? acc : 0.0;
        }
        a.logits.resize(classes_);
        for (std::size_t c = 0; c < classes_; ++c) {
            const double *row = w2.data() + c * hidden_;
            double acc = b2[c];
            for (std::size_t j = 0; j < hidden_; ++j) {
                acc += row[j] * a.hidden[j];
            }
            a.logits[c] = acc;
        }
        a.probabilities = softmax(a.logits);
        return a;
    }

    /// Accumulates parameter and input gradients for upstream dL/dlogits.
    void backward(const Activations &act, std::span<const double> x,
                  std::span<const double> dlogits, Gradients &g) const {
        check_input(x);
        if (dlogits.size() != classes_) {
            throw ShapeError("logit gradient has wrong length");
        }
        std::vector<double> dhidden(hidden_, 0.0);
        for (std::size_t c = 0; c < classes_; ++c) {
            const double dc = dlogits[c];
            g.b2[c] += dc;
            const double *row = w2.data() + c * hidden_;
            double *grow = g.w2.data() + c * hidden_;
            for (std::size_t j = 0; j < hidden_; ++j) {
                grow[j] += dc * act.hidden[j];
                dhidden[j] += dc * row[j];
            }
        }
        for (std::size_t j = 0; j < hidden_; ++j) {
            if (act.hidden[j] <= 0.0) {
                continue;
            }
            const double dj = dhidden[j];
            g.b1[j] += dj;
            const double *row = w1.data() + j * inputs_;
            double *grow = g.w1.data() + j * inputs_;
            for (std::size_t i = 0; i < inputs_; ++i) {
                grow[i] += dj * x[i];
                g.input[i] += dj * row[i];
            }
        }
    }

    std::vector<double> w1, b1, w2, b2;

  private:
    std::size_t inputs_ = 0;
    std::size_t hidden_ = 0;
    std::size_t classes_ = 0;

    void check_input(std::span<const double> x) const {
        if (x.size() != inputs_) {
            throw ShapeError("head expects " + std::to_string(inputs_) +
                             " features, got " + std::to_string(x.size()));
        }
    }
};

/// dL/dlogits of -log softmax(logits)[label]: p - onehot.
[[nodiscard]] inline std::vector<double> ce_logit_gradient(std::span<const double> probabilities,
                                                           std::size_t label) {
    std::vector<double> g(probabilities.begin(), probabilities.end());
    g.at(label) -= 1.0;
    return g;
}

/// The full classifier.
struct Model {
    QuanvLayer quanv;
    DenseHead head;
    std::vector<std::string> class_names;

    [[nodiscard]] std::size_t num_classes() const noexcept { return head.classes(); }
};

/// Input width of the head for a grid of `grid_dims`.
[[nodiscard]] inline std::size_t head_inputs(const QuanvLayer &layer, const Dims3 &grid_dims) {
    const Dims3 out = layer.output_dims(grid_dims);
    return layer.num_channels() * out[0] * out[1] * out[2];
}

} // namespace sqcnn3d

#pragma once
// Seeded toy world producing prediction records with known ground truth.
//
// Each class is a Gaussian blob. Coordinates 0-1 hold a ring of class centers
// (the "shape" signal). When dim >= 4, coordinates 2-3 hold a second ring of
// class-specific "context" centers that are tight in training, so the trained
// model leans on context as a shortcut. Evaluation points are drawn under
// shifted conditions: wider shape spread, and with probability
// context_mismatch a context borrowed from a random class. The default
// augmentation ops act on the context plane, which is where a shortcut-driven
// confident prediction is fragile: they fade the context toward zero and
// nudge the shape coordinates. Remaining coordinates are pure noise.
//
// A multinomial logistic regression is trained on the training blobs plus
// their augmented copies, then every evaluation point and its augmented
// variants are pushed through the model.
//
// All randomness comes from std::mt19937_64 with hand-written transforms, so
// (config, seed) fixes every emitted byte on any conforming platform.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "a3rank/error.hpp"
#include "a3rank/parallel.hpp"
#include "a3rank/record.hpp"

namespace a3rank::synth {

// Portable sampler: uniform doubles from the top 53 bits, normals by Box-Muller.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (spare_) {
            const double z = *spare_;
            spare_.reset();
            return z;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
        return mag * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 gen_;
    std::optional<double> spare_;
};

// splitmix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// An augmentation: x' = scale * x + shift + N(0, noise_sigma^2), per coordinate.
// An empty scale means 1 everywhere.
struct AugmentOp {
    std::string op_id;
    std::vector<double> shift;
    double noise_sigma = 0.0;
    std::vector<double> scale;
};

struct WorldConfig {
    std::size_t num_classes = 10;
    std::size_t per_class = 500;       // points per class, in each of train and eval
    std::size_t dim = 4;
    double spread = 0.8;               // shape-plane blob std of training points
    double eval_spread = 1.0;          // shape-plane blob std of evaluation points
    double ring_radius = 4.0;
    double context_radius = 6.0;
    double context_spread = 0.3;       // context-plane std (train and eval)
    double context_mismatch = 0.2;     // eval probability of a random class's context
    double op_magnitude = 0.5;         // length of the default shape-plane nudges
    double context_fade = 0.1;         // context multiplier applied by the default ops
    std::size_t num_ops = 8;
    std::vector<AugmentOp> ops;        // empty: num_ops shifts evenly spaced on a circle
    std::size_t epochs = 500;
    double learning_rate = 2.0;
    std::uint64_t seed = 42;

    void validate() const {
        if (num_classes < 2) throw Error(ErrorKind::InvariantViolation, "world needs at least 2 classes");
        if (dim < 2) throw Error(ErrorKind::InvariantViolation, "world needs at least 2 dimensions");
        if (!(spread > 0.0) || !(eval_spread > 0.0))
            throw Error(ErrorKind::InvariantViolation, "spread must be positive");
        if (!(context_spread > 0.0)) throw Error(ErrorKind::InvariantViolation, "context spread must be positive");
        if (!(context_mismatch >= 0.0 && context_mismatch <= 1.0))
            throw Error(ErrorKind::InvariantViolation, "context mismatch must lie in [0, 1]");
        if (per_class < 1) throw Error(ErrorKind::InvariantViolation, "per_class must be at least 1");
        if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvariantViolation, "learning rate must be positive");
        for (const auto& op : ops) {
            if (op.shift.size() != dim) throw Error(ErrorKind::InvariantViolation, "op shift has wrong dimension");
            if (!op.scale.empty() && op.scale.size() != dim)
                throw Error(ErrorKind::InvariantViolation, "op scale has wrong dimension");
        }
    }

    bool has_context() const noexcept { return dim >= 4; }

    // Default ops: num_ops shape-plane nudges evenly spaced on a circle, each
    // also fading the context plane by context_fade when there is one.
    std::vector<AugmentOp> resolved_ops() const {
        if (!ops.empty()) return ops;
        std::vector<AugmentOp> out;
        for (std::size_t k = 0; k < num_ops; ++k) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_ops);
            AugmentOp op;
            op.op_id = (has_context() ? "fade:" : "shift:") + std::to_string(k);
            op.shift.assign(dim, 0.0);
            op.shift[0] = op_magnitude * std::cos(a);
            op.shift[1] = op_magnitude * std::sin(a);
            if (has_context()) {
                op.scale.assign(dim, 1.0);
                op.scale[2] = context_fade;
                op.scale[3] = context_fade;
            }
            out.push_back(std::move(op));
        }
        return out;
    }

    double angle(std::size_t cls) const {
        return 2.0 * std::numbers::pi * static_cast<double>(cls) / static_cast<double>(num_classes);
    }

    // Shape-plane center of a class, zero elsewhere.
    std::vector<double> center(std::size_t cls) const {
        std::vector<double> c(dim, 0.0);
        c[0] = ring_radius * std::cos(angle(cls));
        c[1] = ring_radius * std::sin(angle(cls));
        return c;
    }

    std::array<double, 2> context_center(std::size_t cls) const {
        return {context_radius * std::cos(angle(cls)), context_radius * std::sin(angle(cls))};
    }
};

struct LabeledPoints {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> y;

    std::size_t size() const noexcept { return x.size(); }
};

struct World {
    LabeledPoints train;
    LabeledPoints eval;
};

// Train and eval sets, each with per_class points per class in class-major order.
inline World generate_world(const WorldConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    auto sample = [&](LabeledPoints& out, double spread, double mismatch) {
        for (std::size_t k = 0; k < cfg.num_classes; ++k) {
            const auto c = cfg.center(k);
            for (std::size_t i = 0; i < cfg.per_class; ++i) {
                std::vector<double> p(cfg.dim);
                for (std::size_t j = 0; j < cfg.dim; ++j) p[j] = c[j] + spread * rng.normal();
                if (cfg.has_context()) {
                    std::size_t ctx = k;
                    if (mismatch > 0.0 && rng.uniform() < mismatch)
                        ctx = std::min(cfg.num_classes - 1,
                                       static_cast<std::size_t>(rng.uniform() * static_cast<double>(cfg.num_classes)));
                    const auto cc = cfg.context_center(ctx);
                    p[2] = cc[0] + cfg.context_spread * rng.normal();
                    p[3] = cc[1] + cfg.context_spread * rng.normal();
                }
                out.x.push_back(std::move(p));
                out.y.push_back(k);
            }
        }
    };
    World w;
    sample(w.train, cfg.spread, 0.0);
    sample(w.eval, cfg.eval_spread, cfg.context_mismatch);
    return w;
}

// Linear softmax classifier: logits = W x + b, W stored row-major C x d.
struct SoftmaxClassifier {
    std::size_t num_classes = 0;
    std::size_t dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    SoftmaxClassifier() = default;
    SoftmaxClassifier(std::size_t c, std::size_t d) : num_classes(c), dim(d), weights(c * d, 0.0), bias(c, 0.0) {}

    std::vector<double> predict(std::span<const double> x) const {
        std::vector<double> z(num_classes);
        for (std::size_t k = 0; k < num_classes; ++k) {
            double s = bias[k];
            for (std::size_t j = 0; j < dim; ++j) s += weights[k * dim + j] * x[j];
            z[k] = s;
        }
        const double zmax = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (auto& v : z) {
            v = std::exp(v - zmax);
            total += v;
        }
        for (auto& v : z) v /= total;
        return z;
    }
};

struct LossGradient {
    double loss = 0.0;
    std::vector<double> d_weights;
    std::vector<double> d_bias;
};

// Mean cross-entropy over the set and its gradient.
inline LossGradient loss_and_gradient(const SoftmaxClassifier& m, const LabeledPoints& data) {
    LossGradient g;
    g.d_weights.assign(m.weights.size(), 0.0);
    g.d_bias.assign(m.bias.size(), 0.0);
    if (data.size() == 0) return g;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto p = m.predict(data.x[i]);
        const auto y = data.y[i];
        g.loss -= std::log(std::max(p[y], std::numeric_limits<double>::min()));
        for (std::size_t k = 0; k < m.num_classes; ++k) {
            const double err = p[k] - (k == y ? 1.0 : 0.0);
            g.d_bias[k] += err;
            for (std::size_t j = 0; j < m.dim; ++j) g.d_weights[k * m.dim + j] += err * data.x[i][j];
        }
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    g.loss *= inv;
    for (auto& v : g.d_weights) v *= inv;
    for (auto& v : g.d_bias) v *= inv;
    return g;
}

inline std::vector<double> apply_op(const AugmentOp& op, std::span<const double> x, Rng& rng) {
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!op.scale.empty()) out[j] *= op.scale[j];
        out[j] += op.shift[j];
        if (op.noise_sigma > 0.0) out[j] += op.noise_sigma * rng.normal();
    }
    return out;
}

// Training points followed by every op applied to every training point.
inline LabeledPoints augmented_training_set(const LabeledPoints& train, const WorldConfig& cfg) {
    LabeledPoints out = train;
    Rng rng(mix_seed(cfg.seed, 0xa11ce));
    for (const auto& op : cfg.resolved_ops()) {
        for (std::size_t i = 0; i < train.size(); ++i) {
            out.x.push_back(apply_op(op, train.x[i], rng));
            out.y.push_back(train.y[i]);
        }
    }
    return out;
}

struct TrainingTrace {
    std::vector<double> loss;  // loss after each accepted step, starting with the initial loss
    std::size_t halvings = 0;
};

// Full-batch gradient descent. A step that raises the loss by more than 1e-6 is
// undone and the learning rate halved.
inline SoftmaxClassifier train_classifier(const LabeledPoints& train, const WorldConfig& cfg,
                                          TrainingTrace* trace = nullptr) {
    const auto data = augmented_training_set(train, cfg);
    SoftmaxClassifier m(cfg.num_classes, cfg.dim);
    double lr = cfg.learning_rate;
    auto current = loss_and_gradient(m, data);
    if (trace) trace->loss.push_back(current.loss);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        SoftmaxClassifier next = m;
        for (std::size_t i = 0; i < next.weights.size(); ++i) next.weights[i] -= lr * current.d_weights[i];
        for (std::size_t k = 0; k < next.bias.size(); ++k) next.bias[k] -= lr * current.d_bias[k];
        auto candidate = loss_and_gradient(next, data);
        if (!std::isfinite(candidate.loss)) throw Error(ErrorKind::DivergedTraining, "loss became non-finite");
        if (candidate.loss > current.loss + 1e-6) {
            lr *= 0.5;
            if (trace) ++trace->halvings;
            continue;
        }
        m = std::move(next);
        current = std::move(candidate);
        if (trace) trace->loss.push_back(current.loss);
    }
    return m;
}

inline double accuracy(const SoftmaxClassifier& m, const LabeledPoints& data) {
    if (data.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto p = m.predict(data.x[i]);
        hits += static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == data.y[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

// One labeled record per point with a variant per op. Noise for point i is
// drawn from its own stream, so emission order and parallelism do not matter.
inline Dataset emit_records(const SoftmaxClassifier& m, const LabeledPoints& points,
                            const std::vector<AugmentOp>& ops, const std::string& id_prefix,
                            std::uint64_t seed, std::size_t parallelism = 1) {
    const auto width = std::to_string(points.size()).size();
    auto records = parallel_map(points.size(), parallelism, [&](std::size_t i) {
        Rng rng(mix_seed(seed, i));
        PredictionRecord r;
        auto id = std::to_string(i);
        r.sample_id = id_prefix + std::string(width - std::min(width, id.size()), '0') + id;
        r.probs = PredictionVector(m.predict(points.x[i]));
        r.variants.reserve(ops.size());
        for (const auto& op : ops)
            r.variants.push_back({op.op_id, PredictionVector(m.predict(apply_op(op, points.x[i], rng)))});
        r.label = points.y[i];
        return r;
    });
    return Dataset(std::move(records));
}

struct WorldOutput {
    SoftmaxClassifier classifier;
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
    Dataset train;
    Dataset eval;
};

inline WorldOutput build_world(const WorldConfig& cfg, std::size_t parallelism = 1) {
    const auto world = generate_world(cfg);
    WorldOutput out;
    out.classifier = train_classifier(world.train, cfg);
    out.train_accuracy = accuracy(out.classifier, world.train);
    out.eval_accuracy = accuracy(out.classifier, world.eval);
    const auto ops = cfg.resolved_ops();
    out.train = emit_records(out.classifier, world.train, ops, "train-", mix_seed(cfg.seed, 1), parallelism);
    out.eval = emit_records(out.classifier, world.eval, ops, "eval-", mix_seed(cfg.seed, 2), parallelism);
    return out;
}

inline nlohmann::ordered_json config_json(const WorldConfig& cfg) {
    nlohmann::ordered_json j;
    j["num_classes"] = cfg.num_classes;
    j["per_class"] = cfg.per_class;
    j["dim"] = cfg.dim;
    j["spread"] = cfg.spread;
    j["eval_spread"] = cfg.eval_spread;
    j["context_radius"] = cfg.context_radius;
    j["context_spread"] = cfg.context_spread;
    j["context_mismatch"] = cfg.context_mismatch;
    j["context_fade"] = cfg.context_fade;
    j["op_magnitude"] = cfg.op_magnitude;
    j["ring_radius"] = cfg.ring_radius;
    j["epochs"] = cfg.epochs;
    j["learning_rate"] = cfg.learning_rate;
    j["seed"] = cfg.seed;
    auto ops = nlohmann::ordered_json::array();
    for (const auto& op : cfg.resolved_ops()) {
        nlohmann::ordered_json o;
        o["op_id"] = op.op_id;
        o["shift"] = op.shift;
        o["noise_sigma"] = op.noise_sigma;
        if (!op.scale.empty()) o["scale"] = op.scale;
        ops.push_back(std::move(o));
    }
    j["ops"] = std::move(ops);
    return j;
}

}  // namespace a3rank::synth

#pragma once
// One-class detector fitted on subtle samples.
//
// Features are z-scored per dimension (std floored at kStdFloor), and the
// detector is the closed ball around the standardized training mean whose
// radius is the nearest-rank `quantile` of training distances. A sample inside
// the ball resembles the known subtle samples and is rejected.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a3rank/alignment.hpp"
#include "a3rank/error.hpp"
#include "a3rank/record.hpp"
#include "a3rank/rejection.hpp"

namespace a3rank {

inline constexpr double kStdFloor = 1e-8;
inline constexpr std::size_t kDefaultMinTrain = 20;
inline constexpr int kDetectorFormatVersion = 1;

using FeatureVector = std::vector<double>;

enum class FeatureSchema { External, Derived };

constexpr std::string_view to_string(FeatureSchema s) {
    return s == FeatureSchema::External ? "external" : "derived";
}

// Fixed-length summary of a record for detectors without model internals:
//   probs sorted descending                    C values
//   component-wise mean of variant vectors     C values (zeros if none)
//   dominator, supporter, distractor fraction  3 values
//   sum_g1, sum_g2, sum_g3, score              4 values
inline FeatureVector derive_features(const PredictionRecord& r) {
    const std::size_t c = r.num_classes();
    FeatureVector f;
    f.reserve(2 * c + 7);

    std::vector<double> sorted = r.probs.vector();
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    f.insert(f.end(), sorted.begin(), sorted.end());

    std::vector<double> mean(c, 0.0);
    for (const auto& v : r.variants)
        for (std::size_t i = 0; i < c; ++i) mean[i] += v.probs[i];
    if (!r.variants.empty())
        for (auto& x : mean) x /= static_cast<double>(r.variants.size());
    f.insert(f.end(), mean.begin(), mean.end());

    const auto b = a3_score(r);
    const double n = r.variants.empty() ? 1.0 : static_cast<double>(r.variants.size());
    f.push_back(static_cast<double>(b.dominator_count()) / n);
    f.push_back(static_cast<double>(b.supporter_count()) / n);
    f.push_back(static_cast<double>(b.distractor_count()) / n);

    f.push_back(b.sum_g1);
    f.push_back(b.sum_g2);
    f.push_back(b.sum_g3);
    f.push_back(b.score);
    return f;
}

// Feature vector of `r` under `schema`. External features must be present.
inline FeatureVector features_for(const PredictionRecord& r, FeatureSchema schema) {
    if (schema == FeatureSchema::Derived) return derive_features(r);
    if (!r.features)
        throw Error(ErrorKind::FeatureSchemaMismatch, "detector expects external features", r.sample_id);
    return *r.features;
}

struct DetectorModel {
    std::size_t dim = 0;
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<double> center;
    double radius = 0.0;
    double quantile = 0.95;
    FeatureSchema feature_schema = FeatureSchema::Derived;
    std::size_t train_count = 0;

    friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

namespace detail {

inline std::vector<double> standardize(const DetectorModel& m, std::span<const double> x) {
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m.mean[i]) / m.std[i];
    return z;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace detail

// 1-based nearest-rank index ceil(q * n), clamped to [1, n].
inline std::size_t nearest_rank(double quantile, std::size_t n) {
    auto k = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

// Distance of a raw feature vector to the model's center in standardized space.
inline double center_distance(const DetectorModel& m, std::span<const double> feature) {
    if (feature.size() != m.dim)
        throw Error(ErrorKind::FeatureSchemaMismatch,
                    "feature has dimension " + std::to_string(feature.size()) + ", detector expects " +
                        std::to_string(m.dim));
    return detail::distance(detail::standardize(m, feature), m.center);
}

inline DetectorModel fit_detector(std::span<const FeatureVector> features, double quantile,
                                  FeatureSchema schema = FeatureSchema::Derived,
                                  std::size_t min_train = kDefaultMinTrain) {
    if (!(quantile > 0.0 && quantile <= 1.0))
        throw Error(ErrorKind::InvariantViolation, "quantile must lie in (0, 1]");
    const std::size_t n = features.size();
    if (n < min_train || n == 0)
        throw Error(ErrorKind::InsufficientSubtleSamples,
                    std::to_string(n) + " training samples, need at least " + std::to_string(min_train));
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
        if (f.size() != dim) throw Error(ErrorKind::FeatureSchemaMismatch, "training features differ in dimension");
        for (double x : f)
            if (!std::isfinite(x)) throw Error(ErrorKind::InvariantViolation, "non-finite training feature");
    }

    DetectorModel m;
    m.dim = dim;
    m.quantile = quantile;
    m.feature_schema = schema;
    m.train_count = n;
    m.mean.assign(dim, 0.0);
    m.std.assign(dim, 0.0);
    for (const auto& f : features)
        for (std::size_t i = 0; i < dim; ++i) m.mean[i] += f[i];
    for (auto& x : m.mean) x /= static_cast<double>(n);
    for (const auto& f : features)
        for (std::size_t i = 0; i < dim; ++i) m.std[i] += (f[i] - m.mean[i]) * (f[i] - m.mean[i]);
    for (auto& s : m.std) s = std::max(std::sqrt(s / static_cast<double>(n)), kStdFloor);

    std::vector<std::vector<double>> z;
    z.reserve(n);
    for (const auto& f : features) z.push_back(detail::standardize(m, f));
    m.center.assign(dim, 0.0);
    for (const auto& zi : z)
        for (std::size_t i = 0; i < dim; ++i) m.center[i] += zi[i];
    for (auto& x : m.center) x /= static_cast<double>(n);

    std::vector<double> dist;
    dist.reserve(n);
    for (const auto& zi : z) dist.push_back(detail::distance(zi, m.center));
    std::sort(dist.begin(), dist.end());
    m.radius = dist[nearest_rank(quantile, n) - 1];
    return m;
}

// True when the feature lies inside the closed ball, i.e. the sample is rejected.
inline bool detector_decide(const DetectorModel& m, std::span<const double> feature) {
    return center_distance(m, feature) <= m.radius;
}

inline bool detector_decide(const DetectorModel& m, const PredictionRecord& r) {
    return detector_decide(m, features_for(r, m.feature_schema));
}

struct DefenseStats {
    std::size_t subtle_total = 0;     // failing and passing R
    std::size_t subtle_rejected = 0;  // of those, rejected by D
    std::size_t correct_total = 0;    // correct and passing R
    std::size_t correct_rejected = 0;

    double success_rate() const {
        if (subtle_total == 0) throw Error(ErrorKind::EmptyEvaluationSet, "no failing samples pass the rejector");
        return static_cast<double>(subtle_rejected) / static_cast<double>(subtle_total);
    }
    double false_rejection_rate() const {
        if (correct_total == 0) throw Error(ErrorKind::EmptyEvaluationSet, "no correct samples pass the rejector");
        return static_cast<double>(correct_rejected) / static_cast<double>(correct_total);
    }
};

inline DefenseStats defense_stats(const DetectorModel& m, const Dataset& benchmark, const RejectorSpec& spec) {
    DefenseStats s;
    for (const auto& r : benchmark) {
        auto failing = is_failing(r);
        if (!failing) throw Error(ErrorKind::UnlabeledRecords, "benchmark record has no label", r.sample_id);
        if (!passes(r, spec)) continue;
        const bool rejected = detector_decide(m, r);
        if (*failing) {
            ++s.subtle_total;
            s.subtle_rejected += rejected ? 1 : 0;
        } else {
            ++s.correct_total;
            s.correct_rejected += rejected ? 1 : 0;
        }
    }
    return s;
}

// Fraction of failing, R-passing benchmark samples that the detector rejects.
inline double defense_success_rate(const DetectorModel& m, const Dataset& benchmark, const RejectorSpec& spec) {
    return defense_stats(m, benchmark, spec).success_rate();
}

inline nlohmann::ordered_json to_json(const DetectorModel& m) {
    nlohmann::ordered_json j;
    j["dim"] = m.dim;
    j["mean"] = m.mean;
    j["std"] = m.std;
    j["center"] = m.center;
    j["radius"] = m.radius;
    j["quantile"] = m.quantile;
    j["feature_schema"] = std::string(to_string(m.feature_schema));
    j["train_count"] = m.train_count;
    j["version"] = kDetectorFormatVersion;
    return j;
}

inline void save_detector(std::ostream& out, const DetectorModel& m) { out << to_json(m).dump(2) << '\n'; }

inline DetectorModel detector_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != kDetectorFormatVersion)
            throw Error(ErrorKind::SchemaViolation, "unsupported detector version");
        DetectorModel m;
        m.dim = j.at("dim").get<std::size_t>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.std = j.at("std").get<std::vector<double>>();
        m.center = j.at("center").get<std::vector<double>>();
        m.radius = j.at("radius").get<double>();
        m.quantile = j.at("quantile").get<double>();
        const auto schema = j.at("feature_schema").get<std::string>();
        if (schema == "external") m.feature_schema = FeatureSchema::External;
        else if (schema == "derived") m.feature_schema = FeatureSchema::Derived;
        else throw Error(ErrorKind::SchemaViolation, "unknown feature_schema '" + schema + "'");
        m.train_count = j.at("train_count").get<std::size_t>();
        if (m.mean.size() != m.dim || m.std.size() != m.dim || m.center.size() != m.dim)
            throw Error(ErrorKind::SchemaViolation, "detector arrays disagree with dim");
        for (double s : m.std)
            if (!(s >= kStdFloor)) throw Error(ErrorKind::InvariantViolation, "std below floor");
        if (!(m.radius >= 0.0)) throw Error(ErrorKind::InvariantViolation, "negative radius");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaViolation, std::string("detector model: ") + e.what());
    }
}

inline DetectorModel load_detector(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedJson, e.what());
    }
    return detector_from_json(j);
}

}  // namespace a3rank

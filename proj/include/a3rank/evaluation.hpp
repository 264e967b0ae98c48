#pragma once
// Experiment metrics over labeled datasets and rankings.
//
// "Passes R" means confidence >= theta everywhere in this file.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "a3rank/alignment.hpp"
#include "a3rank/baselines.hpp"
#include "a3rank/error.hpp"
#include "a3rank/record.hpp"
#include "a3rank/rejection.hpp"

namespace a3rank {

// Labeling budget. TOP selects a fraction of the dataset; CUT selects as many
// samples as the dataset has failing samples.
class Budget {
public:
    enum class Mode { Top, Cut };

    static Budget top(double fraction) {
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw Error(ErrorKind::InvariantViolation, "TOP fraction must lie in (0, 1]");
        return Budget(Mode::Top, fraction);
    }
    static Budget cut() { return Budget(Mode::Cut, 0.0); }

    Mode mode() const noexcept { return mode_; }
    double fraction() const noexcept { return fraction_; }

    // TOP rounds fraction * size to the nearest integer (at least 1 for a
    // non-empty dataset); CUT needs labels.
    std::size_t resolve(const Dataset& d) const;

    std::string describe() const {
        return mode_ == Mode::Cut ? std::string("cut") : "top:" + csv::format_double(fraction_);
    }

private:
    Budget(Mode m, double f) : mode_(m), fraction_(f) {}
    Mode mode_;
    double fraction_;
};

inline std::optional<Budget> parse_budget(std::string_view s) {
    if (s == "cut") return Budget::cut();
    if (s.starts_with("top:")) {
        try {
            return Budget::top(csv::parse_double(s.substr(4)));
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

inline std::size_t failing_count(const Dataset& d) {
    std::size_t n = 0;
    for (const auto& r : d) {
        auto f = is_failing(r);
        if (!f) throw Error(ErrorKind::UnlabeledRecords, "record has no label", r.sample_id);
        n += *f ? 1 : 0;
    }
    return n;
}

inline std::size_t Budget::resolve(const Dataset& d) const {
    if (mode_ == Mode::Cut) {
        const auto n = failing_count(d);
        if (n == 0) throw Error(ErrorKind::NoFailingSamples, "CUT budget on a dataset without failing samples");
        return n;
    }
    if (d.empty()) return 0;
    const auto omega = static_cast<std::size_t>(std::llround(fraction_ * static_cast<double>(d.size())));
    return std::clamp<std::size_t>(omega, 1, d.size());
}

struct ThetaStats {
    std::size_t passing = 0;  // confidence >= theta
    std::size_t subtle = 0;   // failing and passing
    double subtle_ratio = 0.0;
};

struct DatasetStats {
    std::size_t size = 0;
    std::size_t failing = 0;
    double failing_ratio = 0.0;
    std::map<double, ThetaStats> by_theta;
};

// Failing ratio = failing / samples; subtle ratio = subtle / samples passing R
// (0 when nothing passes).
inline DatasetStats dataset_stats(const Dataset& d, std::span<const double> thetas) {
    DatasetStats s;
    s.size = d.size();
    s.failing = failing_count(d);
    s.failing_ratio = d.empty() ? 0.0 : static_cast<double>(s.failing) / static_cast<double>(d.size());
    for (double theta : thetas) {
        const RejectorSpec spec(theta);
        ThetaStats t;
        for (const auto& r : d) {
            if (!passes(r, spec)) continue;
            ++t.passing;
            t.subtle += *is_failing(r) ? 1 : 0;
        }
        t.subtle_ratio = t.passing == 0 ? 0.0 : static_cast<double>(t.subtle) / static_cast<double>(t.passing);
        s.by_theta[theta] = t;
    }
    return s;
}

struct DiscoveredCounts {
    std::size_t failing = 0;
    std::size_t subtle = 0;

    friend bool operator==(const DiscoveredCounts&, const DiscoveredCounts&) = default;
};

inline const PredictionRecord& lookup(const Dataset& d, const std::string& id) {
    const auto* r = d.find(id);
    if (!r) throw Error(ErrorKind::SchemaViolation, "ranked sample_id not in dataset", id);
    return *r;
}

// Failing and subtle samples among the first `omega` entries of the ranking.
inline DiscoveredCounts discovered_counts(const RankedList& ranked, const Dataset& d, std::size_t omega,
                                          const RejectorSpec& spec) {
    if (omega == 0) throw Error(ErrorKind::InvariantViolation, "budget must select at least one sample");
    if (omega > ranked.size() || omega > d.size())
        throw Error(ErrorKind::BudgetExceedsDataset,
                    "budget " + std::to_string(omega) + " exceeds " + std::to_string(ranked.size()) + " ranked samples");
    DiscoveredCounts c;
    for (std::size_t i = 0; i < omega; ++i) {
        const auto& r = lookup(d, ranked[i].sample_id);
        auto failing = is_failing(r);
        if (!failing) throw Error(ErrorKind::UnlabeledRecords, "ranked record has no label", r.sample_id);
        if (!*failing) continue;
        ++c.failing;
        c.subtle += passes(r, spec) ? 1 : 0;
    }
    return c;
}

// Discovered subtle samples over all failing samples in the dataset.
inline double throughput_ratio(std::size_t discovered_subtle, const Dataset& d) {
    const auto failing = failing_count(d);
    if (failing == 0) throw Error(ErrorKind::NoFailingSamples, "dataset has no failing samples");
    return static_cast<double>(discovered_subtle) / static_cast<double>(failing);
}

// Discovered failing samples over the count a uniformly random ranking is
// expected to find in the same budget, omega * failing_ratio.
inline double improvement_over_random(std::size_t discovered_failing, std::size_t omega, const Dataset& d) {
    const auto failing = failing_count(d);
    if (failing == 0) throw Error(ErrorKind::NoFailingSamples, "dataset has no failing samples");
    if (omega == 0) throw Error(ErrorKind::InvariantViolation, "budget must select at least one sample");
    const double failing_ratio = static_cast<double>(failing) / static_cast<double>(d.size());
    return static_cast<double>(discovered_failing) / (static_cast<double>(omega) * failing_ratio);
}

struct FailingConfidence {
    std::size_t rank = 0;  // 1-based position in the full ranking
    std::string sample_id;
    double confidence = 0.0;
};

// Confidences of the first k failing samples in ranking order.
inline std::vector<FailingConfidence> top_failing_confidences(const RankedList& ranked, const Dataset& d,
                                                              std::size_t k) {
    std::vector<FailingConfidence> out;
    for (std::size_t i = 0; i < ranked.size() && out.size() < k; ++i) {
        const auto& r = lookup(d, ranked[i].sample_id);
        auto failing = is_failing(r);
        if (!failing) throw Error(ErrorKind::UnlabeledRecords, "ranked record has no label", r.sample_id);
        if (*failing) out.push_back({i + 1, r.sample_id, max_component(r.probs)});
    }
    return out;
}

// Case accounting of a model with reject option:
//   A correct & passes R, B failing & passes R, C correct & rejected, D failing & rejected.
// For the two-stage model, samples the detector rejects leave A and B and are
// counted in the *_rejected_by_detector fields.
struct QuadrantCounts {
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t c = 0;
    std::size_t d = 0;
    std::size_t correct_rejected_by_detector = 0;
    std::size_t failing_rejected_by_detector = 0;

    // Accuracy over samples that are not rejected, A / (A + B).
    std::optional<double> accepted_accuracy() const {
        if (a + b == 0) return std::nullopt;
        return static_cast<double>(a) / static_cast<double>(a + b);
    }
    double model_accuracy() const {
        const auto total = a + b + c + d + correct_rejected_by_detector + failing_rejected_by_detector;
        return total == 0 ? 0.0
                          : static_cast<double>(a + c + correct_rejected_by_detector) / static_cast<double>(total);
    }
};

}  // namespace a3rank

#pragma once
// Augmentation alignment analysis of a sample against its variants.
//
// The sample s is predicted to class p with confidence M(s)_p. Its variants
// vote for a majority class m. Each variant takes one or two roles:
//   dominator   predicted to m
//   supporter   predicted to p
//   distractor  predicted to neither
// and contributes an alignment term per role:
//   g1(dis) = max_i M(v)_i - M(v)_p
//   g2(sup) = M(v)_p - M(v)_m
//   g3(dom) = [M(v)_p - M(v)_m] + [M(s)_m - M(s)_p]
// score = M(s)_p - sum g1 + sum g2 + sum g3. Lower scores are less reliable.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "a3rank/record.hpp"

namespace a3rank {

// Argmax with the smallest index winning ties.
inline ClassIndex argmax(std::span<const double> v) {
    ClassIndex best = 0;
    for (ClassIndex i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline ClassIndex predicted_class(const PredictionVector& v) { return argmax(v.values()); }

inline double max_component(const PredictionVector& v) { return v[predicted_class(v)]; }

namespace detail {

// Sums in ascending order so the result does not depend on variant order.
inline double ordered_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

}  // namespace detail

// Class predicted by the most variants. Count ties go to the class whose
// variants have the higher mean confidence, then to the smaller index. With no
// variants the sample's own prediction is returned.
inline ClassIndex majority_class(const PredictionRecord& r) {
    if (r.variants.empty()) return predicted_class(r.probs);
    const std::size_t c = r.num_classes();
    std::vector<std::vector<double>> confidences(c);
    for (const auto& v : r.variants) {
        const ClassIndex q = predicted_class(v.probs);
        confidences[q].push_back(v.probs[q]);
    }
    std::vector<std::size_t> votes(c, 0);
    std::vector<double> confidence_sum(c, 0.0);
    for (ClassIndex j = 0; j < c; ++j) {
        votes[j] = confidences[j].size();
        confidence_sum[j] = detail::ordered_sum(std::move(confidences[j]));
    }
    ClassIndex best = 0;
    for (ClassIndex j = 1; j < c; ++j) {
        if (votes[j] > votes[best]) {
            best = j;
        } else if (votes[j] == votes[best] && votes[j] > 0) {
            const double mean_j = confidence_sum[j] / static_cast<double>(votes[j]);
            const double mean_best = confidence_sum[best] / static_cast<double>(votes[best]);
            if (mean_j > mean_best) best = j;
        }
    }
    return best;
}

struct VariantRole {
    bool is_dominator = false;
    bool is_supporter = false;
    bool is_distractor = false;

    friend bool operator==(const VariantRole&, const VariantRole&) = default;
};

inline VariantRole classify_role(const VariantPrediction& variant, ClassIndex p, ClassIndex m) {
    const ClassIndex q = predicted_class(variant.probs);
    VariantRole role;
    role.is_dominator = q == m;
    role.is_supporter = q == p;
    role.is_distractor = !role.is_dominator && !role.is_supporter;
    return role;
}

inline double g1(const VariantPrediction& variant, ClassIndex p) {
    return max_component(variant.probs) - variant.probs[p];
}

inline double g2(const VariantPrediction& variant, ClassIndex p, ClassIndex m) {
    return variant.probs[p] - variant.probs[m];
}

inline double g3(const VariantPrediction& variant, const PredictionVector& sample_probs, ClassIndex p,
                 ClassIndex m) {
    return (variant.probs[p] - variant.probs[m]) + (sample_probs[m] - sample_probs[p]);
}

struct VariantTerms {
    std::string op_id;
    VariantRole role;
    std::optional<double> g1;
    std::optional<double> g2;
    std::optional<double> g3;
};

struct AlignmentBreakdown {
    ClassIndex predicted_class = 0;
    double confidence = 0.0;
    ClassIndex majority_class = 0;
    std::vector<VariantTerms> per_variant;
    double sum_g1 = 0.0;
    double sum_g2 = 0.0;
    double sum_g3 = 0.0;
    double score = 0.0;

    std::size_t dominator_count() const {
        return static_cast<std::size_t>(std::count_if(per_variant.begin(), per_variant.end(),
                                                      [](const auto& t) { return t.role.is_dominator; }));
    }
    std::size_t supporter_count() const {
        return static_cast<std::size_t>(std::count_if(per_variant.begin(), per_variant.end(),
                                                      [](const auto& t) { return t.role.is_supporter; }));
    }
    std::size_t distractor_count() const {
        return static_cast<std::size_t>(std::count_if(per_variant.begin(), per_variant.end(),
                                                      [](const auto& t) { return t.role.is_distractor; }));
    }
};

// Which term sums to zero out when scoring; all false reproduces the full score.
struct TermMask {
    bool drop_g1 = false;
    bool drop_g2 = false;
    bool drop_g3 = false;
};

inline double combine(const AlignmentBreakdown& b, TermMask drop = {}) {
    return b.confidence - (drop.drop_g1 ? 0.0 : b.sum_g1) + (drop.drop_g2 ? 0.0 : b.sum_g2) +
           (drop.drop_g3 ? 0.0 : b.sum_g3);
}

inline AlignmentBreakdown a3_score(const PredictionRecord& r) {
    AlignmentBreakdown b;
    b.predicted_class = predicted_class(r.probs);
    b.confidence = r.probs[b.predicted_class];
    b.majority_class = majority_class(r);
    const ClassIndex p = b.predicted_class;
    const ClassIndex m = b.majority_class;

    std::vector<double> t1, t2, t3;
    b.per_variant.reserve(r.variants.size());
    for (const auto& v : r.variants) {
        VariantTerms t{v.op_id, classify_role(v, p, m), {}, {}, {}};
        if (t.role.is_distractor) {
            t.g1 = g1(v, p);
            t1.push_back(*t.g1);
        }
        if (t.role.is_supporter) {
            t.g2 = g2(v, p, m);
            t2.push_back(*t.g2);
        }
        if (t.role.is_dominator) {
            t.g3 = g3(v, r.probs, p, m);
            t3.push_back(*t.g3);
        }
        b.per_variant.push_back(std::move(t));
    }
    b.sum_g1 = detail::ordered_sum(std::move(t1));
    b.sum_g2 = detail::ordered_sum(std::move(t2));
    b.sum_g3 = detail::ordered_sum(std::move(t3));
    b.score = combine(b);
    return b;
}

inline double ablated_score(const PredictionRecord& r, TermMask drop) { return combine(a3_score(r), drop); }

}  // namespace a3rank

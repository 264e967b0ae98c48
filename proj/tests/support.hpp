#pragma once
// Random record generators and independent reference implementations for tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "a3rank/a3rank.hpp"

namespace testing_support {

using a3rank::PredictionRecord;
using a3rank::PredictionVector;

// Continuous probabilities; ties between components are practically impossible.
inline std::vector<double> random_probs(std::mt19937_64& gen, std::size_t c) {
    std::exponential_distribution<double> ex(1.0);
    std::uniform_real_distribution<double> peak(0.0, 6.0);
    std::vector<double> v(c);
    const std::size_t hot = std::uniform_int_distribution<std::size_t>(0, c - 1)(gen);
    double total = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        v[i] = ex(gen) + (i == hot ? peak(gen) : 0.0);
        total += v[i];
    }
    for (auto& x : v) x /= total;
    return v;
}

// Multiples of 1/16 summing to exactly 1. Arithmetic on these values is exact,
// and ties in argmax and in majority votes are frequent.
inline std::vector<double> dyadic_probs(std::mt19937_64& gen, std::size_t c) {
    std::vector<int> counts(c, 0);
    std::uniform_int_distribution<std::size_t> pick(0, c - 1);
    const std::size_t hot = pick(gen);
    for (int i = 0; i < 16; ++i) {
        const bool to_hot = std::uniform_int_distribution<int>(0, 2)(gen) == 0;
        ++counts[to_hot ? hot : pick(gen)];
    }
    std::vector<double> v(c);
    for (std::size_t i = 0; i < c; ++i) v[i] = counts[i] / 16.0;
    return v;
}

struct RecordShape {
    std::size_t max_classes = 10;
    std::size_t max_variants = 20;
    bool dyadic = false;
};

inline PredictionRecord random_record(std::mt19937_64& gen, const RecordShape& shape, const std::string& id) {
    const std::size_t c = std::uniform_int_distribution<std::size_t>(2, shape.max_classes)(gen);
    const std::size_t nv = std::uniform_int_distribution<std::size_t>(0, shape.max_variants)(gen);
    auto draw = [&] { return shape.dyadic ? dyadic_probs(gen, c) : random_probs(gen, c); };
    PredictionRecord r;
    r.sample_id = id;
    r.probs = PredictionVector(draw());
    for (std::size_t k = 0; k < nv; ++k) r.variants.push_back({"op:" + std::to_string(k), PredictionVector(draw())});
    r.label = std::uniform_int_distribution<std::size_t>(0, c - 1)(gen);
    return r;
}

inline PredictionRecord random_record(std::mt19937_64& gen, const std::string& id = "s") {
    RecordShape shape;
    shape.dyadic = std::uniform_int_distribution<int>(0, 1)(gen) == 0;
    return random_record(gen, shape, id);
}

// ---- reference implementations -------------------------------------------

inline std::size_t ref_argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// Majority by brute force over (votes, mean confidence, -index) tuples.
inline std::size_t ref_majority(const PredictionRecord& r) {
    const std::size_t c = r.num_classes();
    if (r.variants.empty()) return ref_argmax(r.probs.vector());
    std::size_t best = c;
    std::size_t best_votes = 0;
    double best_mean = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t votes = 0;
        double sum = 0.0;
        for (const auto& v : r.variants) {
            const auto& p = v.probs.vector();
            if (ref_argmax(p) == k) {
                ++votes;
                sum += p[k];
            }
        }
        if (votes == 0) continue;
        const double mean = sum / static_cast<double>(votes);
        if (best == c || votes > best_votes || (votes == best_votes && mean > best_mean)) {
            best = k;
            best_votes = votes;
            best_mean = mean;
        }
    }
    return best;
}

struct RefScore {
    std::size_t p = 0;
    std::size_t m = 0;
    double g1 = 0.0;
    double g2 = 0.0;
    double g3 = 0.0;
    double score = 0.0;
};

// Straight-line evaluation of the score definition, summing in variant order.
inline RefScore ref_score(const PredictionRecord& r) {
    RefScore out;
    const auto& s = r.probs.vector();
    out.p = ref_argmax(s);
    out.m = ref_majority(r);
    for (const auto& v : r.variants) {
        const auto& q = v.probs.vector();
        const std::size_t pred = ref_argmax(q);
        if (pred != out.p && pred != out.m) out.g1 += *std::max_element(q.begin(), q.end()) - q[out.p];
        if (pred == out.p) out.g2 += q[out.p] - q[out.m];
        if (pred == out.m) out.g3 += (q[out.p] - q[out.m]) + (s[out.m] - s[out.p]);
    }
    out.score = s[out.p] - out.g1 + out.g2 + out.g3;
    return out;
}

// Nearest-rank radius computed from scratch: z-score, centroid, sorted distances.
inline double ref_radius(const std::vector<std::vector<double>>& x, double q) {
    const std::size_t n = x.size(), d = x.front().size();
    std::vector<double> mu(d, 0.0), sd(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) mu[j] += row[j] / static_cast<double>(n);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (row[j] - mu[j]) * (row[j] - mu[j]) / static_cast<double>(n);
    for (auto& s : sd) s = std::max(std::sqrt(s), 1e-8);
    std::vector<std::vector<double>> z(n, std::vector<double>(d));
    std::vector<double> center(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            z[i][j] = (x[i][j] - mu[j]) / sd[j];
            center[j] += z[i][j] / static_cast<double>(n);
        }
    std::vector<double> dist;
    for (const auto& zi : z) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (zi[j] - center[j]) * (zi[j] - center[j]);
        dist.push_back(std::sqrt(s));
    }
    std::sort(dist.begin(), dist.end());
    std::size_t k = 0;
    while (static_cast<double>(k) < q * static_cast<double>(n)) ++k;
    k = std::clamp<std::size_t>(k, 1, n);
    return dist[k - 1];
}

// Exact two-sided p-value of the signed-rank statistic by enumerating all 2^n
// sign patterns over the (average) ranks of |a - b|, zero differences dropped.
inline double exact_wilcoxon_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> mags, signs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;
        mags.push_back(std::abs(d));
        signs.push_back(d > 0 ? 1.0 : -1.0);
    }
    const std::size_t n = mags.size();
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (mags[j] < mags[i]) ++less;
            if (mags[j] == mags[i]) ++equal;
        }
        ranks[i] = less + (equal + 1.0) / 2.0;
    }
    double total = 0.0, w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (signs[i] > 0) w_obs += ranks[i];
    }
    const double mean = total / 2.0;
    const double dev_obs = std::abs(w_obs - mean);
    std::size_t extreme = 0;
    const std::size_t patterns = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) w += ranks[i];
        if (std::abs(w - mean) >= dev_obs - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(patterns);
}

// Permutes class indices of every probability vector in the record.
inline PredictionRecord relabel_classes(const PredictionRecord& r, const std::vector<std::size_t>& perm) {
    auto apply = [&](const PredictionVector& v) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[perm[i]] = v[i];
        return PredictionVector(out);
    };
    PredictionRecord out = r;
    out.probs = apply(r.probs);
    for (auto& v : out.variants) v.probs = apply(v.probs);
    if (r.label) out.label = perm[*r.label];
    return out;
}

// True when no probability vector has a tied maximum and no two classes tie
// on majority votes, i.e. no tie-break rule is exercised.
inline bool tie_free(const PredictionRecord& r) {
    auto unique_max = [](const PredictionVector& v) {
        const auto& p = v.vector();
        const double mx = *std::max_element(p.begin(), p.end());
        return std::count(p.begin(), p.end(), mx) == 1;
    };
    if (!unique_max(r.probs)) return false;
    std::vector<std::size_t> votes(r.num_classes(), 0);
    for (const auto& v : r.variants) {
        if (!unique_max(v.probs)) return false;
        ++votes[ref_argmax(v.probs.vector())];
    }
    const auto mx = *std::max_element(votes.begin(), votes.end());
    return r.variants.empty() || std::count(votes.begin(), votes.end(), mx) == 1;
}

inline a3rank::Dataset random_dataset(std::mt19937_64& gen, std::size_t n, std::size_t c, std::size_t nv) {
    a3rank::Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        PredictionRecord r;
        r.sample_id = "r" + std::to_string(i);
        r.probs = PredictionVector(random_probs(gen, c));
        for (std::size_t k = 0; k < nv; ++k) r.variants.push_back({"op:" + std::to_string(k), PredictionVector(random_probs(gen, c))});
        r.label = std::uniform_int_distribution<std::size_t>(0, c - 1)(gen);
        d.push_back(std::move(r));
    }
    return d;
}

}  // namespace testing_support

#pragma once
// Rankers: A3 score, DeepGini, maximum softmax probability, and seeded Random.
//
// Ordering directions:
//   a3      ascending score (least reliable first)
//   gini    descending impurity (most uncertain first)
//   msp     ascending confidence
//   random  ascending uniform key drawn per sample
// Equal keys are ordered by sample_id ascending.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "a3rank/alignment.hpp"
#include "a3rank/csv.hpp"
#include "a3rank/parallel.hpp"
#include "a3rank/record.hpp"

namespace a3rank {

inline double deep_gini(const PredictionVector& v) {
    double sq = 0.0;
    for (double p : v.values()) sq += p * p;
    return 1.0 - sq;
}

inline double msp_confidence(const PredictionVector& v) { return max_component(v); }

enum class RankMethod { A3, DeepGini, MSP, Random };

constexpr std::string_view to_string(RankMethod m) {
    switch (m) {
        case RankMethod::A3: return "a3";
        case RankMethod::DeepGini: return "gini";
        case RankMethod::MSP: return "msp";
        case RankMethod::Random: return "random";
    }
    return "?";
}

inline std::optional<RankMethod> parse_rank_method(std::string_view s) {
    if (s == "a3") return RankMethod::A3;
    if (s == "gini") return RankMethod::DeepGini;
    if (s == "msp") return RankMethod::MSP;
    if (s == "random") return RankMethod::Random;
    return std::nullopt;
}

// Seed is present exactly when the method is Random.
class RankerSpec {
public:
    static RankerSpec a3() { return RankerSpec(RankMethod::A3, std::nullopt); }
    static RankerSpec gini() { return RankerSpec(RankMethod::DeepGini, std::nullopt); }
    static RankerSpec msp() { return RankerSpec(RankMethod::MSP, std::nullopt); }
    static RankerSpec random(std::uint64_t seed) { return RankerSpec(RankMethod::Random, seed); }

    static RankerSpec of(RankMethod m, std::uint64_t seed) {
        return m == RankMethod::Random ? random(seed) : RankerSpec(m, std::nullopt);
    }

    RankMethod method() const noexcept { return method_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }
    bool descending() const noexcept { return method_ == RankMethod::DeepGini; }

private:
    RankerSpec(RankMethod m, std::optional<std::uint64_t> seed) : method_(m), seed_(seed) {}
    RankMethod method_;
    std::optional<std::uint64_t> seed_;
};

struct RankedEntry {
    std::string sample_id;
    double key = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

using RankedList = std::vector<RankedEntry>;

// Uniform double in [0, 1) from the top 53 bits of a 64-bit Mersenne Twister
// draw. std::mt19937_64's output sequence is fixed by the standard, so keys
// reproduce across compilers and platforms.
inline std::vector<double> random_keys(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<double> keys(n);
    for (auto& k : keys) k = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return keys;
}

inline double ranking_key(const PredictionRecord& r, RankMethod m) {
    switch (m) {
        case RankMethod::A3: return a3_score(r).score;
        case RankMethod::DeepGini: return deep_gini(r.probs);
        case RankMethod::MSP: return msp_confidence(r.probs);
        case RankMethod::Random: break;
    }
    return 0.0;
}

// Orders (sample_id, key) pairs by the method's direction, ties by sample_id.
inline RankedList order_by_key(RankedList entries, bool descending) {
    std::sort(entries.begin(), entries.end(), [descending](const RankedEntry& a, const RankedEntry& b) {
        if (a.key != b.key) return descending ? a.key > b.key : a.key < b.key;
        return a.sample_id < b.sample_id;
    });
    return entries;
}

inline RankedList rank(const Dataset& d, const RankerSpec& spec, std::size_t parallelism = 1) {
    std::vector<double> keys;
    if (spec.method() == RankMethod::Random) {
        keys = random_keys(d.size(), *spec.seed());
    } else {
        keys = parallel_map(d.size(), parallelism,
                            [&](std::size_t i) { return ranking_key(d[i], spec.method()); });
    }
    RankedList entries;
    entries.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) entries.push_back({d[i].sample_id, keys[i]});
    return order_by_key(std::move(entries), spec.descending());
}

// Rank score with selected alignment terms removed; used for ablation runs.
inline RankedList rank_ablated(const Dataset& d, TermMask drop, std::size_t parallelism = 1) {
    auto keys = parallel_map(d.size(), parallelism, [&](std::size_t i) { return ablated_score(d[i], drop); });
    RankedList entries;
    entries.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) entries.push_back({d[i].sample_id, keys[i]});
    return order_by_key(std::move(entries), false);
}

inline void write_ranked_csv(std::ostream& out, const RankedList& list) {
    out << "rank,sample_id,key\n";
    for (std::size_t i = 0; i < list.size(); ++i)
        out << (i + 1) << ',' << csv::field(list[i].sample_id) << ',' << csv::format_double(list[i].key) << '\n';
}

// Reads `rank,sample_id,key`; rows are returned in file order.
inline RankedList read_ranked_csv(std::istream& in) {
    auto table = csv::read_table(in);
    const auto id_col = table.column("sample_id");
    const auto key_col = table.column("key");
    RankedList out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) out.push_back({row[id_col], csv::parse_double(row[key_col])});
    return out;
}

}  // namespace a3rank

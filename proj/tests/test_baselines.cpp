#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace a3rank;
namespace ts = testing_support;

namespace {

PredictionRecord rec(const std::string& id, std::vector<double> p) {
    PredictionRecord r;
    r.sample_id = id;
    r.probs = PredictionVector(std::move(p));
    return r;
}

}  // namespace

TEST(DeepGini, KnownValues) {
    EXPECT_NEAR(deep_gini(PredictionVector({1, 0, 0, 0, 0, 0, 0, 0, 0, 0})), 0.0, 1e-12);
    EXPECT_NEAR(deep_gini(PredictionVector(std::vector<double>(10, 0.1))), 0.9, 1e-12);
    EXPECT_NEAR(deep_gini(PredictionVector({0.5, 0.5})), 0.5, 1e-12);
}

TEST(DeepGini, MatchesDirectFormula) {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 1000; ++i) {
        auto p = ts::random_probs(gen, 2 + i % 9);
        double s = 0;
        for (double x : p) s += x * x;
        EXPECT_NEAR(deep_gini(PredictionVector(p)), 1.0 - s, 1e-12);
    }
}

TEST(RankMethod, NamesRoundTrip) {
    for (auto m : {RankMethod::A3, RankMethod::DeepGini, RankMethod::MSP, RankMethod::Random})
        EXPECT_EQ(parse_rank_method(to_string(m)), m);
    EXPECT_FALSE(parse_rank_method("lof"));
}

TEST(Rank, DirectionsAndTieBreaks) {
    Dataset d;
    d.push_back(rec("c", {0.9, 0.1}));
    d.push_back(rec("a", {0.6, 0.4}));
    d.push_back(rec("b", {0.4, 0.6}));
    const auto msp = rank(d, RankerSpec::msp());
    ASSERT_EQ(msp.size(), 3u);
    EXPECT_EQ(msp[0].sample_id, "a");  // 0.6 ties with b, id order
    EXPECT_EQ(msp[1].sample_id, "b");
    EXPECT_EQ(msp[2].sample_id, "c");
    const auto gini = rank(d, RankerSpec::gini());
    EXPECT_EQ(gini[0].sample_id, "a");
    EXPECT_EQ(gini[2].sample_id, "c");
}

TEST(Rank, A3KeysAreScores) {
    std::mt19937_64 gen(2);
    auto d = ts::random_dataset(gen, 200, 6, 5);
    const auto ranked = rank(d, RankerSpec::a3());
    for (std::size_t i = 1; i < ranked.size(); ++i) EXPECT_LE(ranked[i - 1].key, ranked[i].key);
    for (const auto& e : ranked) EXPECT_EQ(e.key, a3_score(*d.find(e.sample_id)).score);
}

TEST(Rank, IsAPermutationAndIndependentOfParallelism) {
    std::mt19937_64 gen(3);
    auto d = ts::random_dataset(gen, 300, 4, 6);
    for (auto spec : {RankerSpec::a3(), RankerSpec::gini(), RankerSpec::msp(), RankerSpec::random(9)}) {
        const auto one = rank(d, spec, 1);
        const auto many = rank(d, spec, 8);
        EXPECT_EQ(one, many);
        std::set<std::string> ids;
        for (const auto& e : one) ids.insert(e.sample_id);
        EXPECT_EQ(ids.size(), d.size());
    }
}

TEST(Rank, RandomIsSeeded) {
    std::mt19937_64 gen(4);
    auto d = ts::random_dataset(gen, 100, 3, 0);
    EXPECT_EQ(rank(d, RankerSpec::random(1)), rank(d, RankerSpec::random(1)));
    EXPECT_NE(rank(d, RankerSpec::random(1)), rank(d, RankerSpec::random(2)));
    for (double k : random_keys(1000, 5)) {
        EXPECT_GE(k, 0.0);
        EXPECT_LT(k, 1.0);
    }
}

TEST(Rank, AblationWithEmptyMaskEqualsA3) {
    std::mt19937_64 gen(5);
    auto d = ts::random_dataset(gen, 100, 5, 4);
    EXPECT_EQ(rank_ablated(d, {}), rank(d, RankerSpec::a3()));
}

TEST(RankedCsv, RoundTrip) {
    std::mt19937_64 gen(6);
    auto d = ts::random_dataset(gen, 50, 5, 4);
    const auto ranked = rank(d, RankerSpec::a3());
    std::stringstream s;
    write_ranked_csv(s, ranked);
    EXPECT_EQ(s.str().substr(0, 18), "rank,sample_id,key");
    EXPECT_EQ(read_ranked_csv(s), ranked);
}

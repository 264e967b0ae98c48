#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace a3rank;
namespace ts = testing_support;

namespace {

PredictionRecord rec(std::vector<double> p, std::optional<std::size_t> label = std::nullopt) {
    PredictionRecord r;
    r.sample_id = "x";
    r.probs = PredictionVector(std::move(p));
    r.label = label;
    return r;
}

}  // namespace

TEST(Rejector, ThetaMustBeInOpenInterval) {
    EXPECT_THROW(RejectorSpec(0.0), Error);
    EXPECT_THROW(RejectorSpec(1.0), Error);
    EXPECT_THROW(RejectorSpec(-0.5), Error);
    EXPECT_NO_THROW(RejectorSpec(0.5));
}

TEST(Rejector, ConfidenceAtThetaPasses) {
    const RejectorSpec spec(0.75);
    EXPECT_FALSE(confidence_reject(rec({0.75, 0.25}), spec));
    EXPECT_TRUE(passes(rec({0.75, 0.25}), spec));
    EXPECT_TRUE(confidence_reject(rec({0.7, 0.3}), spec));
}

TEST(Subtle, NeedsLabel) {
    const RejectorSpec spec(0.5);
    EXPECT_FALSE(subtle_flag(rec({0.9, 0.1}), spec));
    EXPECT_EQ(subtle_flag(rec({0.9, 0.1}, 1), spec), true);
    EXPECT_EQ(subtle_flag(rec({0.9, 0.1}, 0), spec), false);
    EXPECT_EQ(subtle_flag(rec({0.4, 0.3, 0.3}, 1), spec), false);
}

TEST(Properties, ThetaMonotonicity) {
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 1000; ++i) {
        const auto r = ts::random_record(gen);
        double t1 = u(gen), t2 = u(gen);
        if (t1 > t2) std::swap(t1, t2);
        const RejectorSpec lo(t1), hi(t2);
        if (confidence_reject(r, lo)) {
            EXPECT_TRUE(confidence_reject(r, hi));
        }
        if (*subtle_flag(r, hi)) {
            EXPECT_TRUE(*subtle_flag(r, lo));
        }
    }
}

TEST(TwoStage, RejectorThenDetector) {
    const RejectorSpec spec(0.8);
    const auto low = rec({0.6, 0.4});
    EXPECT_EQ(two_stage_decide(low, spec).outcome, Outcome::RejectedByR);
    const auto high = rec({0.1, 0.9});
    const auto d = two_stage_decide(high, spec);
    EXPECT_EQ(d.outcome, Outcome::Predicted);
    EXPECT_EQ(d.predicted, 1u);

    // A detector whose ball covers everything rejects every passing sample.
    DetectorModel m;
    m.dim = derive_features(high).size();
    m.mean.assign(m.dim, 0.0);
    m.std.assign(m.dim, 1.0);
    m.center.assign(m.dim, 0.0);
    m.radius = 1e9;
    EXPECT_EQ(two_stage_decide(high, spec, &m).outcome, Outcome::RejectedByD);
    EXPECT_EQ(two_stage_decide(low, spec, &m).outcome, Outcome::RejectedByR);
    m.radius = 0.0;
    EXPECT_EQ(two_stage_decide(high, spec, &m).outcome, Outcome::Predicted);
}

TEST(TwoStage, OutcomeNames) {
    EXPECT_EQ(to_string(Outcome::Predicted), "predicted");
    EXPECT_EQ(to_string(Outcome::RejectedByR), "rejected_r");
    EXPECT_EQ(to_string(Outcome::RejectedByD), "rejected_d");
}

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace a3rank;
namespace ts = testing_support;

TEST(AverageRanks, TiesShareMean) {
    std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    const auto r = average_ranks(v);
    EXPECT_EQ(r, (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Wilcoxon, KnownSmallCase) {
    // Differences 1..6 all positive: W+ = 21, W- = 0.
    std::vector<double> a{1, 2, 3, 4, 5, 6}, b(6, 0.0);
    const auto w = wilcoxon_signed_rank(a, b);
    EXPECT_EQ(w.n, 6u);
    EXPECT_DOUBLE_EQ(w.w_plus, 21.0);
    EXPECT_DOUBLE_EQ(w.w_minus, 0.0);
    EXPECT_DOUBLE_EQ(w.statistic, 0.0);
    EXPECT_NEAR(w.z, 10.0 / std::sqrt(22.75), 1e-12);
}

TEST(Wilcoxon, ZeroDifferencesAreDropped) {
    std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 7}, b{0, 0, 0, 0, 0, 0, 7, 7};
    EXPECT_EQ(wilcoxon_signed_rank(a, b).n, 6u);
}

TEST(Wilcoxon, Errors) {
    std::vector<double> a{1, 2, 3, 4, 5}, b(5, 0.0), c(4, 0.0);
    try {
        wilcoxon_signed_rank(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewPairs);
    }
    EXPECT_THROW(wilcoxon_signed_rank(a, c), Error);
}

TEST(Wilcoxon, IdenticalSamplesAreTooFew) {
    std::vector<double> a{1, 2, 3, 4, 5, 6, 7};
    EXPECT_THROW(wilcoxon_signed_rank(a, a), Error);
}

TEST(Wilcoxon, NormalApproximationNearExact) {
    std::mt19937_64 gen(2024);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> shift(-1.5, 1.5);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 6 + t % 5;
        const double s = shift(gen);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = nd(gen) + s;
            b[i] = nd(gen);
        }
        const auto w = wilcoxon_signed_rank(a, b);
        EXPECT_NEAR(w.p_two_sided, ts::exact_wilcoxon_p(a, b), 0.02) << "n=" << n;
    }
}

TEST(Wilcoxon, SwapLeavesPUnchanged) {
    std::mt19937_64 gen(2025);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 6 + t % 20;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = nd(gen) + 0.5;
            b[i] = nd(gen);
        }
        // Coarse values produce tied magnitudes.
        if (t % 2) {
            for (auto& x : a) x = std::round(x * 2) / 2;
            for (auto& x : b) x = std::round(x * 2) / 2;
        }
        try {
            const auto ab = wilcoxon_signed_rank(a, b);
            const auto ba = wilcoxon_signed_rank(b, a);
            EXPECT_EQ(ab.p_two_sided, ba.p_two_sided);
            EXPECT_EQ(ab.w_plus, ba.w_minus);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::TooFewPairs);
        }
    }
}

TEST(Wilcoxon, PValueInRange) {
    std::vector<double> a(30), b(30, 0.0);
    for (int i = 0; i < 30; ++i) a[i] = 1.0 + i;
    const auto w = wilcoxon_signed_rank(a, b);
    EXPECT_GT(w.p_two_sided, 0.0);
    EXPECT_LT(w.p_two_sided, 1e-5);
}

TEST(Wilcoxon, ExhaustiveErrorForNineAndTen) {
    for (std::size_t n : {9u, 10u}) {
        std::vector<double> b(n, 0.0);
        double worst = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            std::vector<double> a(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = (mask >> i & 1) ? double(i + 1) : -double(i + 1);
            worst = std::max(worst, std::abs(wilcoxon_signed_rank(a, b).p_two_sided - ts::exact_wilcoxon_p(a, b)));
        }
        EXPECT_LE(worst, 0.02) << "n=" << n;
    }
}

TEST(Wilcoxon, DetectsShiftAtThirty) {
    std::mt19937_64 gen(31);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
        a[i] = nd(gen) + 2.0;
        b[i] = nd(gen);
    }
    EXPECT_LT(wilcoxon_signed_rank(a, b).p_two_sided, 0.05);
}

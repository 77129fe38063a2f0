#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spr/error.hpp"
#include "spr/smoother.hpp"

using namespace spr;

namespace {

SmoothedMean fit(std::vector<double> s, std::vector<double> y, std::optional<double> h = std::nullopt) {
    return SmoothedMean::fit(GroupSample{std::move(s), std::move(y), 0}, h);
}

} // namespace

TEST_CASE("constant outcome gives the constant everywhere in support") {
    const auto m = fit({1, 2, 3}, {2, 2, 2}, 1.0);
    for (double s : {1.0, 1.3, 2.0, 2.5, 3.0}) CHECK(m.evaluate(s) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("two-point hand evaluations") {
    const auto m = fit({0, 2}, {0, 4}, 2.0);
    CHECK(m.evaluate(1.0) == doctest::Approx(2.0).epsilon(1e-15));
    // K(0.75) = 0.328125 and K(0.25) = 0.703125, so 4 * 0.703125 / 1.03125 = 30/11.
    CHECK(oracle::epanechnikov(0.75) == 0.328125);
    CHECK(oracle::epanechnikov(0.25) == 0.703125);
    CHECK(m.evaluate(1.5) == doctest::Approx(30.0 / 11.0).epsilon(1e-14));

    const auto narrow = fit({0, 2}, {0, 4}, 0.5);
    CHECK(narrow.evaluate(0.0) == 0.0);
    CHECK_FALSE(narrow.evaluate_flagged(0.0).extrapolated);
}

TEST_CASE("matches brute-force summation on random datasets") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(-4.0, 4.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> s(20), y(20);
        for (auto& v : s) v = nd(gen);
        for (auto& v : y) v = 3.0 * nd(gen);
        const double h = 0.05 + 0.5 * std::fabs(nd(gen));
        const auto m = fit(s, y, h);
        for (int k = 0; k < 25; ++k) {
            const double x = ud(gen);
            CHECK(std::fabs(m.evaluate(x) - oracle::nadaraya_watson(s, y, h, x)) <= 1e-12);
        }
    }
}

TEST_CASE("default bandwidth rule") {
    std::vector<double> s{0.0, 1.0, 2.0, 3.0, 4.0};
    const double sd = std::sqrt(2.5);
    CHECK(BandwidthRule{}(s) == doctest::Approx(1.06 * sd * std::pow(5.0, -0.3)).epsilon(1e-14));
    const auto m = fit(s, {1, 2, 3, 4, 5});
    CHECK(m.bandwidth() == doctest::Approx(1.06 * sd * std::pow(5.0, -0.3)).epsilon(1e-14));
    CHECK(calibrated_simulation_bandwidth()(s) ==
          doctest::Approx(std::sqrt(5.0) * 1.06 * sd * std::pow(5.0, -0.2)).epsilon(1e-14));
}

TEST_CASE("fit errors") {
    CHECK_THROWS_AS(SmoothedMean::fit(GroupSample{{1, 2, 3}, std::nullopt, 0}), MissingOutcomes);
    CHECK_THROWS_AS(fit({1}, {1}), DegenerateSample);
    CHECK_THROWS_AS(fit({2, 2, 2}, {1, 2, 3}), DegenerateSample);
    CHECK_THROWS_AS(fit({1, 2}, {1, 2}, 0.0), ConfigError);
    CHECK_THROWS_AS(fit({1, 2}, {1, 2}, -1.0), ConfigError);
    CHECK_THROWS_AS(fit({1, NAN}, {1, 2}, 1.0), SchemaError);
}

TEST_CASE("empty window falls back and flags") {
    const auto m = fit({0, 1}, {5, 7}, 0.1);
    // 0.1 * 2^k reaches the nearest point (distance 2) at k = 5.
    const auto v = m.evaluate_flagged(3.0);
    CHECK(v.extrapolated);
    CHECK(v.value == doctest::Approx(oracle::nadaraya_watson({0, 1}, {5, 7}, 0.1, 3.0)));
    // Beyond 0.1 * 2^10 = 102.4 only the nearest neighbour is left.
    const auto far = m.evaluate_flagged(500.0);
    CHECK(far.extrapolated);
    CHECK(far.value == 7.0);
    CHECK(m.evaluate(-500.0) == 5.0);
    // Equidistant: the lower surrogate wins.
    CHECK(fit({-1, 1}, {3, 9}, 0.0001).evaluate(0.0) == 3.0);
}

TEST_CASE("properties: shift equivariance, locality, range, weight scale") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> s(30), y(30);
        for (auto& v : s) v = nd(gen);
        for (auto& v : y) v = nd(gen);
        const double h = 0.4;
        const double c = 3.7 * nd(gen);
        auto y_shift = y;
        for (auto& v : y_shift) v += c;
        const auto base = fit(s, y, h);
        const auto shifted = fit(s, y_shift, h);
        const double x = nd(gen);
        CHECK(std::fabs(shifted.evaluate(x) - base.evaluate(x) - c) <= 1e-12);

        // Move points outside the window further away: no change.
        auto s_far = s;
        auto y_far = y;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::fabs(s[i] - x) > h) {
                s_far[i] += s[i] > x ? 10.0 : -10.0;
                y_far[i] += 100.0;
            }
        const auto flagged = base.evaluate_flagged(x);
        if (!flagged.extrapolated) {
            CHECK(fit(s_far, y_far, h).evaluate(x) == doctest::Approx(flagged.value).epsilon(1e-13));
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t i = 0; i < s.size(); ++i)
                if (std::fabs(s[i] - x) < h) {
                    lo = std::min(lo, y[i]);
                    hi = std::max(hi, y[i]);
                }
            CHECK(flagged.value >= lo - 1e-12);
            CHECK(flagged.value <= hi + 1e-12);
        }
        CHECK(std::fabs(oracle::nadaraya_watson(s, y, h, x, 10, 17.5) - base.evaluate(x)) <= 1e-12);
    }
}

TEST_CASE("vector evaluation matches scalar") {
    const auto m = fit({0, 1, 2, 3}, {1, 0, 1, 0}, 0.8);
    const std::vector<double> xs{-1, 0.2, 1.7, 9};
    const auto v = m.evaluate(xs);
    const auto f = m.evaluate_flagged(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(v[i] == m.evaluate(xs[i]));
        CHECK(f[i].value == v[i]);
    }
    CHECK(f[3].extrapolated);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spr/error.hpp"
#include "spr/normal.hpp"
#include "spr/resilience.hpp"

using namespace spr;

namespace {

/// Study A with constant outcomes c0 / c1, so that mu-hat is flat.
StudyAData flat_study_a(double c0, double c1) {
    StudyAData a;
    a.arms[0] = {{0, 1, 2, 3, 4}, std::vector<double>(5, c0)};
    a.arms[1] = {{0, 1, 2, 3, 4}, std::vector<double>(5, c1)};
    return a;
}

AnalysisContext random_context(std::uint64_t seed, std::size_t n_a = 60, std::size_t n_b = 25) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    StudyAData a;
    StudyBData b;
    for (int g : kArms) {
        for (std::size_t i = 0; i < n_a; ++i) {
            const double s = nd(gen) + g;
            a.arms[g].surrogates.push_back(s);
            a.arms[g].outcomes.push_back((1.0 + g) * s + 0.5 * nd(gen));
        }
        for (std::size_t i = 0; i < n_b; ++i) b.surrogates[g].push_back(0.7 * nd(gen) + 0.5 * g);
    }
    return make_context(a, b, SmootherConfig{});
}

} // namespace

TEST_CASE("delta_hat") {
    CHECK(delta_hat(std::vector<double>{1, 3}, std::vector<double>{2}) == 0.0);
    CHECK(delta_hat(std::vector<double>{1.5, 2.5}, std::vector<double>{1.5, 2.5}) == 0.0);
    CHECK(delta_hat(std::vector<double>{5, 7, 9}, std::vector<double>{1, 2}) == 5.5);
    CHECK_THROWS_AS(delta_hat(std::vector<double>{}, std::vector<double>{1}), EmptyGroup);
}

TEST_CASE("resilience probability counts strictly negative draws") {
    CHECK(resilience_probability(std::vector<double>{-1, 1, 2, 3}) == 0.25);
    CHECK(resilience_probability(std::vector<double>{1, 2, 3}) == 0.0);
    CHECK(resilience_probability(std::vector<double>{0.0, -0.0, 1.0}) == 0.0);
}

TEST_CASE("resilience bound is the ceil(alpha J)-th order statistic") {
    std::vector<double> d;
    for (int i = 10; i <= 100; i += 10) d.push_back(i);
    CHECK(resilience_bound(d, 0.1) == 10.0);
    CHECK(resilience_bound(d, 0.5) == 50.0);
    CHECK(resilience_bound(d, 0.11) == 20.0);
    CHECK(quantile_rank(10, 0.1) == 1);
    CHECK(quantile_rank(500, 0.1) == 50);
    CHECK(quantile_rank(3, 0.999) == 3);
    const std::vector<double> sym{-2, -1, 0, 1, 2};
    CHECK(resilience_bound(sym, 0.5) == 0.0);

    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(97 + rep);
        for (auto& v : x) v = nd(gen);
        double previous = -INFINITY;
        for (int k = 1; k < 100; ++k) {
            const double alpha = k / 100.0;
            const double q = resilience_bound(x, alpha);
            CHECK(q == oracle::sorted_quantile(x, alpha));
            CHECK(q >= previous);
            previous = q;
        }
    }
}

TEST_CASE("closed-form values") {
    CHECK(closed_form_bound({1.0, 1.0}, 0.1) == doctest::Approx(1.0 - 1.2815515655446004).epsilon(1e-12));
    CHECK(closed_form_bound({1.0, 1.0}, 0.1) == doctest::Approx(-0.28155).epsilon(1e-4));
    CHECK(closed_form_probability({1.0, 4.0}) == doctest::Approx(oracle::phi_cdf(-0.5)).epsilon(1e-12));
    CHECK(closed_form_probability({-1.0, 0.0}) == 1.0);
    CHECK(closed_form_probability({1.0, 0.0}) == 0.0);
    CHECK(closed_form_bound({2.0, 0.0}, 0.1) == 2.0);
    CHECK(normal_quantile(0.1) == doctest::Approx(oracle::phi_quantile(0.1)).epsilon(1e-10));
}

TEST_CASE("degenerate class: p-hat 0 and q-hat mu_B") {
    StudyBData b;
    b.surrogates = {{{0.5, 1.5, 2.5}, {1.0, 2.0}}};
    const auto ctx = make_context(flat_study_a(1.0, 3.0), b, SmootherConfig{});
    for (const PerturbationClass& cls :
         {PerturbationClass(GaussianProcessClass::shared(0.0, 1.0)),
          realize(ClassSpec::polynomial({0, 0, 0, 0}), flat_study_a(1.0, 3.0))}) {
        const auto est = estimate(ctx, cls, EstimateOptions{200, 0.1, 1}, Seed(1));
        CHECK(est.report.p_hat == 0.0);
        CHECK(est.report.q_alpha_hat == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(est.report.p_closed == 0.0);
        CHECK(est.report.q_closed == doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_CASE("Monte Carlo p-hat converges to the closed form") {
    const auto ctx = random_context(17);
    const StudyAData dummy = flat_study_a(0, 0);
    for (const PerturbationClass& cls :
         {PerturbationClass(GaussianProcessClass::shared(2.0, 0.6)), realize(ClassSpec::polynomial({1, 1, 0.5, 0.5}), dummy),
          realize(ClassSpec::fourier({1, 1, 0.5, 0.5}), dummy)}) {
        const auto est = estimate(ctx, cls, EstimateOptions{100000, 0.1, 1}, Seed(99));
        const double p = est.report.p_closed;
        CHECK(p > 0.01);
        CHECK(std::fabs(est.report.p_hat - p) <= 3 * std::sqrt(p * (1 - p) / 100000) + 0.002);
        // Report consistency: p-hat is the ECDF just below zero.
        const auto& d = est.distribution.deltas;
        CHECK(est.report.p_hat == resilience_probability(d));
        if (est.report.p_hat < 1.0) CHECK(resilience_bound(d, est.report.p_hat + 1.0 / d.size()) >= 0.0);
    }
}

TEST_CASE("estimate is identical for any worker count") {
    const auto ctx = random_context(4);
    const auto cls = GaussianProcessClass::shared(0.5, 1.0);
    const auto one = estimate(ctx, cls, EstimateOptions{1500, 0.1, 1}, Seed(5));
    const auto many = estimate(ctx, cls, EstimateOptions{1500, 0.1, 4}, Seed(5));
    CHECK(one.distribution.deltas == many.distribution.deltas);
    const auto other = estimate(ctx, cls, EstimateOptions{1500, 0.1, 1}, Seed(6));
    CHECK(one.distribution.deltas != other.distribution.deltas);
}

TEST_CASE("location equivariance in the treated-arm outcomes") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> nd;
    StudyAData a;
    StudyBData b;
    for (int g : kArms) {
        for (int i = 0; i < 40; ++i) {
            a.arms[g].surrogates.push_back(nd(gen));
            a.arms[g].outcomes.push_back(nd(gen));
        }
        for (int i = 0; i < 15; ++i) b.surrogates[g].push_back(0.5 * nd(gen));
    }
    auto shifted = a;
    const double c = 1.75;
    for (auto& y : shifted.arms[1].outcomes) y += c;
    const auto cls = GaussianProcessClass::shared(0.4, 0.8);
    const EstimateOptions opt{800, 0.1, 1};
    const auto base = estimate(make_context(a, b, {}), cls, opt, Seed(2));
    const auto moved = estimate(make_context(shifted, b, {}), cls, opt, Seed(2));
    for (std::size_t j = 0; j < base.distribution.deltas.size(); ++j)
        CHECK(std::fabs(moved.distribution.deltas[j] - base.distribution.deltas[j] - c) < 1e-12);
    CHECK(std::fabs(moved.report.q_alpha_hat - base.report.q_alpha_hat - c) < 1e-12);
}

TEST_CASE("sample_curves replays the estimate draws") {
    const auto ctx = random_context(12, 50, 8);
    const auto cls = GaussianProcessClass::shared(0.6, 0.9);
    const auto curves = sample_curves(ctx, cls, Seed(3), 10, 50);
    const auto arms = make_perturbations(ctx, cls);
    // The grid spans the Study B support, so its end points are observed
    // surrogates and the kriging curve passes through the draw there.
    for (int g : kArms) {
        const auto& s = ctx.s_b[g];
        const auto lo = std::min_element(s.begin(), s.end()) - s.begin();
        CHECK(curves[g].grid.front() == s[lo]);
        CHECK(curves[g].draws.size() == 10);
    }
    std::array<std::vector<std::vector<double>>, 2> replay;
    Stream stream(Seed(3).child(0));
    for (int j = 0; j < 10; ++j)
        for (int g : kArms) replay[g].push_back(arms[g].draw(stream));
    for (int g : kArms) {
        const auto& s = ctx.s_b[g];
        const auto lo = std::min_element(s.begin(), s.end()) - s.begin();
        for (int j = 0; j < 10; ++j) CHECK(curves[g].draws[j].front() == doctest::Approx(replay[g][j][lo]).epsilon(1e-5));
    }

    const auto flat = sample_curves(ctx, GaussianProcessClass::shared(0.0, 1.0), Seed(3), 4, 20);
    for (int g : kArms)
        for (const auto& d : flat[g].draws) CHECK(d == flat[g].fitted);
}

TEST_CASE("resilience set: negative mu_B has no members with positive variance") {
    StudyBData b;
    b.surrogates = {{{1.0, 2.0}, {1.5}}};
    const auto ctx = make_context(flat_study_a(1.0, 0.5), b, SmootherConfig{});
    const GridSpec grid{{0.1, 10, 12, true}, {0.01, 5, 15, true}};
    const auto set = resilience_set(ctx, GaussianProcessClass::shared(1, 1), grid, SetOptions{}, Seed(1));
    CHECK(set.grid.size() == 180);
    for (const auto& p : set.grid) CHECK_FALSE(p.member);
    CHECK(set.boundary.empty());
}

TEST_CASE("resilience set: single Study B point per arm, GP boundary") {
    StudyBData b;
    b.surrogates = {{{2.0}, {2.5}}};
    const auto ctx = make_context(flat_study_a(0.0, 1.0), b, SmootherConfig{});
    const GridSpec grid{{0.1, 10, 20, true}, {0.01, 2, 40, true}};
    const auto set = resilience_set(ctx, GaussianProcessClass::shared(1, 1), grid, SetOptions{}, Seed(1));
    const double z = oracle::phi_quantile(0.1);
    const double sigma_star = 1.0 / (-z * std::sqrt(2.0));
    CHECK(sigma_star == doctest::Approx(0.5517).epsilon(1e-3));
    REQUIRE(set.boundary.size() == 20);
    for (const auto& bp : set.boundary) CHECK(bp.y == doctest::Approx(sigma_star * sigma_star).epsilon(2e-4));
    CHECK(set.boundary.front().y == doctest::Approx(0.3044).epsilon(1e-3));
    for (const auto& p : set.grid) {
        const double q = 1.0 + std::sqrt(2.0 * p.y) * z;
        CHECK(p.q_alpha == doctest::Approx(q).epsilon(1e-12));
        CHECK(p.member == (q >= 0.0));
    }
}

TEST_CASE("resilience set properties on random data") {
    const auto ctx = random_context(31);
    const StudyAData dummy = flat_study_a(0, 0);
    const GridSpec grid{{0.05, 5, 15, true}, {0.01, 20, 25, true}};
    for (const PerturbationClass& base :
         {PerturbationClass(GaussianProcessClass::shared(1, 1)), realize(ClassSpec::polynomial({1, 1, 1, 1}), dummy),
          realize(ClassSpec::fourier({1, 1, 1, 1}), dummy)}) {
        const auto set = resilience_set(ctx, base, grid, SetOptions{}, Seed(1));
        const auto ys = grid.y.values();
        const auto xs = grid.x.values();
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            // Monotone in y: membership can only switch off as y grows.
            for (std::size_t iy = 1; iy < ys.size(); ++iy)
                if (set.grid[ix * ys.size() + iy].member) CHECK(set.grid[ix * ys.size() + iy - 1].member);
            const auto b = std::find_if(set.boundary.begin(), set.boundary.end(),
                                        [&](const BoundaryPoint& p) { return p.x == xs[ix]; });
            for (std::size_t iy = 0; iy < ys.size(); ++iy) {
                const auto& p = set.grid[ix * ys.size() + iy];
                if (b == set.boundary.end()) {
                    CHECK(p.member == set.grid[ix * ys.size()].member);
                } else if (std::fabs(p.y - b->y) > 2e-4 * b->y) {
                    CHECK(p.member == (p.y < b->y));
                }
            }
        }
    }
}

TEST_CASE("resilience set Monte Carlo mode agrees away from the boundary and is worker independent") {
    const auto ctx = random_context(44, 60, 20);
    const GridSpec grid{{0.2, 3, 5, true}, {0.01, 10, 6, true}};
    const auto base = GaussianProcessClass::shared(1, 1);
    const auto closed = resilience_set(ctx, base, grid, SetOptions{}, Seed(1));
    SetOptions mc;
    mc.mode = SetMode::MonteCarlo;
    mc.draws = 4000;
    const auto one = resilience_set(ctx, base, grid, mc, Seed(2));
    mc.workers = 3;
    const auto three = resilience_set(ctx, base, grid, mc, Seed(2));
    for (std::size_t i = 0; i < closed.grid.size(); ++i) {
        CHECK(one.grid[i].q_alpha == three.grid[i].q_alpha);
        if (std::fabs(closed.grid[i].q_alpha) > 0.1) CHECK(one.grid[i].member == closed.grid[i].member);
    }
    REQUIRE(one.boundary.size() == three.boundary.size());
    for (std::size_t i = 0; i < one.boundary.size(); ++i) CHECK(one.boundary[i].y == three.boundary[i].y);
}

TEST_CASE("grid axis values") {
    const auto v = GridAxis{0.1, 10, 3, true}.values();
    CHECK(v[0] == 0.1);
    CHECK(v[1] == doctest::Approx(1.0));
    CHECK(v[2] == 10);
    CHECK(GridAxis{0, 1, 5, false}.values()[1] == 0.25);
    CHECK_THROWS_AS(GridAxis({0, 1, 5, true}).values(), ConfigError);
    CHECK(axis_names(ClassFamily::GaussianProcess)[0] == "theta");
    CHECK(axis_names(ClassFamily::Fourier)[1] == "sigma22_sq");
}

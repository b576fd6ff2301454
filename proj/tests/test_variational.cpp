#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fracflow/fracflow.hpp"

using namespace fracflow;

namespace {

ModelParams<double> params(double s, double p, int n) {
    ModelParams<double> m;
    m.s = s;
    m.p = p;
    m.n = n;
    return m;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

// Root of λ ↦ I(λu) by bisection in log λ.
double lambda_by_bisection(const Grid<double>& g, const Vector<double>& u) {
    double lo = -200.0, hi = 200.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (nehari(g, (std::exp(mid) * u).eval()) > 0) lo = mid;
        else hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

} // namespace

TEST_CASE("lambda_star matches bisection on the Nehari functional") {
    for (double p : {2.0, 3.0, 4.0}) {
        const auto g = build_grid(params(0.25, p, 12));
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Vector<double> u = smoothed_random_field(g, seed, 2);
            REQUIRE(std::abs(std::log(lambda_star(g, u))) < 150.0);
            CAPTURE(p);
            CHECK(rel(lambda_star(g, u), lambda_by_bisection(g, u)) < 1e-10);
        }
    }
}

TEST_CASE("lambda_star is covariant under scaling and fixes Nehari points") {
    const auto g = build_grid(params(0.5, 3.0, 20));
    const Vector<double> u = bump_profile(g);
    const double lam = lambda_star(g, u);
    for (double c : {1e-3, 0.5, 7.0}) CHECK(rel(lambda_star(g, (c * u).eval()), lam / c) < 1e-12);
    const Vector<double> w = project_nehari(g, u);
    CHECK(lambda_star(g, w) == doctest::Approx(1.0).epsilon(1e-12));
    const auto r = report(g, w);
    CHECK(std::abs(r.nehari) <= nehari_tolerance(r));
    CHECK(rel(r.energy, nehari_depth(g, w)) < 1e-10);
}

TEST_CASE("lambda_star of zero is rejected") {
    const auto g = build_grid(params(0.5, 3.0, 8));
    try {
        lambda_star(g, Vector<double>::Zero(8).eval());
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotInX0);
    }
}

TEST_CASE("fibering map rises to lambda_star and falls after it") {
    const auto g = build_grid(params(0.5, 3.0, 24));
    const Vector<double> u = sine_mode(g, 1) + 0.3 * sine_mode(g, 2);
    const double lam = lambda_star(g, u);
    const auto prof = fibering_profile(g, u, lam * 1e-3, lam * 1e2, 201);
    CHECK(prof.lambda_star == lam);
    REQUIRE(prof.lambdas.size() == 201);
    const auto peak = std::max_element(prof.j_values.begin(), prof.j_values.end()) - prof.j_values.begin();
    CHECK(std::abs(std::log(prof.lambdas[peak] / lam)) <= std::log(1e5) / 200 + 1e-12);
    for (std::size_t k = 0; k + 1 < prof.lambdas.size(); ++k) {
        if (prof.lambdas[k + 1] <= lam) CHECK(prof.j_values[k + 1] > prof.j_values[k]);
        if (prof.lambdas[k] >= lam) CHECK(prof.j_values[k + 1] < prof.j_values[k]);
        if (std::abs(std::log(prof.lambdas[k] / lam)) <= 1e-12) continue;
        if (prof.lambdas[k] < lam) CHECK(prof.nehari_values[k] > 0);
        if (prof.lambdas[k] > lam) CHECK(prof.nehari_values[k] < 0);
    }
    CHECK(prof.j_values.front() > 0);
    CHECK(prof.j_values.back() < 0);
    CHECK_THROWS_AS(fibering_profile(g, u, 1.0, 0.5, 32), Error);
    CHECK_THROWS_AS(fibering_profile(g, u, 0.5, 1.0, 8), Error);
}

TEST_CASE("growth exponents") {
    const auto e = growth_exponents(params(0.5, 3.0, 8));
    CHECK(e.rho == doctest::Approx(0.5));
    CHECK(e.theta == doctest::Approx(0.5 * 0.5 / (3.0 * 3.5)));
    CHECK(e.gamma > 1.0);
    const auto small = growth_exponents(params(0.2, 2.0, 8));
    CHECK(small.rho == doctest::Approx(0.08));
}

TEST_CASE("a single sample gives a Nehari point") {
    const auto g = build_grid(params(0.5, 3.0, 32));
    WellSamplerConfig cfg;
    cfg.samples = 1;
    cfg.descent_iters = 0;
    const auto est = estimate_well_depth(g, cfg);
    CHECK(est.samples == 1);
    CHECK(est.d_hat > 0);
    CHECK(est.d_hat == doctest::Approx(est.best_sample_depth).epsilon(1e-10));
    const auto r = report(g, est.minimizer);
    CHECK(std::abs(r.nehari) <= nehari_tolerance(r));
}

TEST_CASE("descent never raises the estimate") {
    const auto g = build_grid(params(0.5, 3.0, 32));
    WellSamplerConfig cfg;
    cfg.samples = 12;
    const auto est = estimate_well_depth(g, cfg);
    CHECK(est.d_hat <= est.best_sample_depth);
    CHECK(est.descent_steps > 0);
    const auto r = report(g, est.minimizer);
    CHECK(std::abs(r.nehari) <= nehari_tolerance(r));
    CHECK(est.gradient_norm < 1e-6 * (1.0 + r.seminorm_p));
}

TEST_CASE("the estimate ignores the scale of the trial functions") {
    const auto g = build_grid(params(0.5, 3.0, 24));
    auto trials = well_trial_functions(g, 9, 4);
    WellSamplerConfig cfg;
    cfg.descent_iters = 0;
    const double base = estimate_well_depth(g, trials, cfg).d_hat;
    for (auto& t : trials) t *= 123.0;
    CHECK(rel(estimate_well_depth(g, trials, cfg).d_hat, base) < 1e-10);
}

TEST_CASE("estimates agree across seeds") {
    const auto g = build_grid(params(0.5, 3.0, 32));
    std::vector<double> d;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        WellSamplerConfig cfg;
        cfg.samples = 60;
        cfg.seed = seed;
        d.push_back(estimate_well_depth(g, cfg).d_hat);
    }
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    CHECK((*hi - *lo) / *lo < 0.05);
}

TEST_CASE("degenerate trials are reported") {
    const auto g = build_grid(params(0.5, 3.0, 8));
    std::vector<Vector<double>> trials{Vector<double>::Zero(8)};
    try {
        estimate_well_depth(g, trials, WellSamplerConfig{});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SamplerFailure);
    }
}

TEST_CASE("classification of initial data") {
    const auto g = build_grid(params(0.5, 3.0, 32));
    WellSamplerConfig cfg;
    cfg.samples = 30;
    const auto est = estimate_well_depth(g, cfg);
    const Vector<double> w = est.minimizer;
    CHECK(classify(g, (0.5 * w).eval(), est.d_hat) == WellClassification::InsideWell);
    CHECK(classify(g, (1.5 * w).eval(), est.d_hat) == WellClassification::Exterior);
    CHECK(classify(g, w, est.d_hat) == WellClassification::OnNehari);
    CHECK(classify(g, (0.999 * w).eval(), est.d_hat) == WellClassification::Indeterminate);
    CHECK(classify(g, (3.0 * w).eval(), est.d_hat) == WellClassification::Exterior);
    CHECK(std::string(to_string(WellClassification::InsideWell)) == "InsideWell");
}

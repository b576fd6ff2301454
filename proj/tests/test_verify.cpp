#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fracflow/fracflow.hpp"

using namespace fracflow;

namespace {

ModelParams<double> params(double p, double a = 0.0, double b = 1.0) {
    ModelParams<double> m;
    m.s = 0.5;
    m.p = p;
    m.a = a;
    m.b = b;
    m.n = 8;
    return m;
}

TraceRow<double> row(double t, double l2, double energy, double nehari, double dissipation = 0.0) {
    TraceRow<double> r;
    r.t = t;
    r.report.l2 = l2;
    r.report.energy = energy;
    r.report.nehari = nehari;
    r.dissipation = dissipation;
    return r;
}

// ‖u(t)‖ = ‖u0‖(1 + κ(p-2)‖u0‖^{p-2} t)^{-1/(p-2)} on log-spaced times.
FlowTrace<double> synthetic_decay(double p, double l2_0, double kappa, double t_end) {
    FlowTrace<double> tr;
    const double a = std::pow(l2_0, p - 2);
    double prev = 0;
    tr.rows.push_back(row(0.0, l2_0, 1.0, kappa * std::pow(l2_0, p)));
    for (int k = 0; k <= 400; ++k) {
        const double t = t_end * std::pow(10.0, -6.0 + 6.0 * k / 400.0);
        const double l2 = l2_0 * std::pow(1.0 + kappa * (p - 2) * a * t, -1.0 / (p - 2));
        auto r = row(t, l2, 1.0, kappa * std::pow(l2, p));
        r.dt = t - prev;
        prev = t;
        tr.rows.push_back(r);
    }
    tr.verdict = {VerdictKind::ReachedHorizon, t_end};
    return tr;
}

} // namespace

TEST_CASE("synthetic decay recovers slope and constant") {
    for (double p : {3.0, 4.0, 6.0}) {
        const double kappa = 0.7;
        const auto tr = synthetic_decay(p, 2.0, kappa, 1e8);
        const auto v = check_decay(tr, params(p));
        CAPTURE(p);
        CHECK(v.expected_slope == doctest::Approx(-1.0 / (p - 2)));
        CHECK(v.slope_fit == doctest::Approx(v.expected_slope).epsilon(0.01));
        CHECK(v.pass);
        // the rows sit below the bound by the factor (p/2)^{1/(p-2)}
        CHECK(v.kappa_fit >= kappa);
        CHECK(v.kappa_nehari == doctest::Approx(kappa).epsilon(1e-12));
        CHECK(v.t_lo == doctest::Approx(1e7));
    }
}

TEST_CASE("decay bound closed form") {
    CHECK(decay_bound(2.0, 3.0, 0.5, 0.0) == doctest::Approx(2.0 * 1.5));
    CHECK(decay_bound(1.0, 4.0, 1.0, 1.0) == doctest::Approx(std::sqrt(4.0 / (2.0 * 3.0))));
}

TEST_CASE("kappa_fit is the largest constant the rows allow") {
    const double p = 3.0, l2_0 = 1.0;
    FlowTrace<double> tr;
    tr.rows.push_back(row(0.0, l2_0, 1.0, 1.0));
    const double kappa = 2.0;
    for (double t : {1.0, 10.0, 100.0}) tr.rows.push_back(row(t, decay_bound(l2_0, p, kappa, t), 1.0, 1.0));
    tr.verdict = {VerdictKind::ReachedHorizon, 100.0};
    const auto v = check_decay(tr, params(p));
    CHECK(v.kappa_fit == doctest::Approx(kappa).epsilon(1e-12));
}

TEST_CASE("a constant trace fails the decay check") {
    FlowTrace<double> tr;
    for (int k = 0; k <= 50; ++k) tr.rows.push_back(row(k * 20.0, 1.0, 1.0, 1.0));
    tr.verdict = {VerdictKind::ReachedHorizon, 1000.0};
    const auto v = check_decay(tr, params(3.0));
    CHECK(v.slope_fit == doctest::Approx(0.0));
    CHECK_FALSE(v.pass);
}

TEST_CASE("decay check contracts") {
    auto tr = synthetic_decay(3.0, 1.0, 1.0, 1e4);
    try {
        check_decay(tr, params(2.0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedRegime);
    }
    tr.verdict.kind = VerdictKind::BlowUp;
    try {
        check_decay(tr, params(3.0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::HypothesisNotMet);
    }
}

TEST_CASE("blow-up constants") {
    CHECK(blowup_constant(params(3.0)) == doctest::Approx(1.0 / 3.0));
    CHECK(blowup_constant(params(4.0)) == doctest::Approx(0.5));
    CHECK(blowup_constant(params(3.0, 0.0, 2.0)) == doctest::Approx(2.0 / 3.0));

    FlowTrace<double> tr;
    tr.rows.push_back(row(0.0, 2.0, -1.0, -1.0));
    tr.verdict = {VerdictKind::BlowUp, 1.0};
    auto v = check_blowup(tr, params(3.0));
    CHECK(v.T_bound == doctest::Approx(1.5));
    tr.rows.front().report.l2 = 1.0;
    v = check_blowup(tr, params(4.0));
    CHECK(v.C_const == doctest::Approx(0.5));
    CHECK(v.T_bound == doctest::Approx(2.0));
}

TEST_CASE("manufactured blow-up on the envelope passes") {
    const double p = 3.0, l2_0 = 2.0;
    const double c = 1.0 / 3.0, T = 1.5;
    FlowTrace<double> tr;
    for (int k = 0; k <= 100; ++k) {
        const double t = 0.99 * T * k / 100.0;
        tr.rows.push_back(row(t, std::sqrt(blowup_envelope(l2_0, p, c, t)), -1.0, -1.0));
    }
    tr.verdict = {VerdictKind::BlowUp, tr.rows.back().t};
    const auto v = check_blowup(tr, params(p));
    CHECK(v.blew_up);
    CHECK(v.lower_envelope_ok);
    CHECK(v.pass);

    SUBCASE("a row below the envelope is caught") {
        auto bad = tr;
        bad.rows[40].report.l2 *= 0.8;
        const auto w = check_blowup(bad, params(p));
        CHECK_FALSE(w.lower_envelope_ok);
        REQUIRE(w.first_envelope_violation.has_value());
        CHECK(*w.first_envelope_violation == 40);
        CHECK_FALSE(w.pass);
    }
    SUBCASE("late blow-up fails the time bound") {
        auto late = tr;
        late.verdict.time = 1.2 * T;
        CHECK_FALSE(check_blowup(late, params(p)).pass);
    }
    SUBCASE("no blow-up fails") {
        auto none = tr;
        none.verdict.kind = VerdictKind::ReachedHorizon;
        const auto w = check_blowup(none, params(p));
        CHECK_FALSE(w.blew_up);
        CHECK_FALSE(w.pass);
    }
    SUBCASE("positive initial energy violates the hypothesis") {
        auto pos = tr;
        pos.rows.front().report.energy = 1.0;
        CHECK_THROWS_AS(check_blowup(pos, params(p)), Error);
    }
}

TEST_CASE("energy inequality flags the first violating row") {
    FlowTrace<double> tr;
    tr.rows.push_back(row(0.0, 1.0, 10.0, 1.0, 0.0));
    tr.rows.push_back(row(1.0, 1.0, 8.0, 1.0, 3.0));
    tr.rows.push_back(row(2.0, 1.0, 7.0, 1.0, 5.0));
    CHECK(check_energy_inequality(tr).ok);
    tr.rows.push_back(row(3.0, 1.0, 7.5, 1.0, 5.5));
    const auto res = check_energy_inequality(tr);
    CHECK_FALSE(res.ok);
    REQUIRE(res.first_violation.has_value());
    CHECK(*res.first_violation == 3);
    // within the relative slack
    tr.rows.back() = row(3.0, 1.0, 7.5 + 1e-11, 1.0, 5.0);
    CHECK(check_energy_inequality(tr).ok);
}

TEST_CASE("well invariance") {
    FlowTrace<double> tr;
    tr.rows.push_back(row(0.0, 1.0, 1.0, 0.5));
    tr.rows.push_back(row(1.0, 1.0, 0.9, 0.4));
    CHECK(check_well_invariance(tr, WellClassification::InsideWell, std::optional<double>(2.0)).ok);
    CHECK_FALSE(check_well_invariance(tr, WellClassification::InsideWell, std::optional<double>(0.95)).ok);
    tr.rows.push_back(row(2.0, 1.0, 0.8, -0.1));
    const auto res = check_well_invariance(tr, WellClassification::InsideWell, std::optional<double>(2.0));
    CHECK_FALSE(res.ok);
    CHECK(*res.first_violation == 2);
    CHECK_FALSE(check_well_invariance(tr, WellClassification::Exterior).ok);
    CHECK_THROWS_AS(check_well_invariance(tr, WellClassification::Indeterminate), Error);
}

TEST_CASE("Martinez bound") {
    const double f0 = 3.0, omega = 0.8;
    for (double sigma : {0.5, 1.0, 2.0}) {
        // f(t) = f0 (1 + ωσt)^{-1/σ} meets the hypothesis with equality.
        for (double t : {0.0, 0.1, 1.0, 10.0, 1e3}) {
            const double f = f0 * std::pow(1.0 + omega * sigma * t, -1.0 / sigma);
            CHECK(f <= martinez_bound(f0, sigma, omega, t));
        }
        CHECK(martinez_bound(f0, sigma, omega, 0.0) == doctest::Approx(f0 * std::pow(1.0 + sigma, 1.0 / sigma)));
    }
    CHECK(martinez_bound(f0, 0.0, omega, 2.0) == doctest::Approx(f0 * std::exp(1.0 - 1.6)));
    CHECK(martinez_bound(f0, 1e-9, omega, 2.0) == doctest::Approx(martinez_bound(f0, 0.0, omega, 2.0)).epsilon(1e-6));
}

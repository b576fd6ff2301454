#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

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

Vector<double> random_vector(int n, std::uint64_t seed, double scale = 1.0) {
    SplitMix64 rng(seed);
    Vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = scale * rng.uniform(-1.0, 1.0);
    return u;
}

double rel(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

// Direct double sums with std::pow on every term.
double brute_seminorm(const Grid<double>& g, const Vector<double>& u) {
    const double p = g.params().p;
    double sum = 0;
    for (int i = 0; i < g.size(); ++i) {
        for (int j = 0; j < g.size(); ++j)
            if (i != j) sum += g.weights()(i, j) * std::pow(std::abs(u[i] - u[j]), p);
        sum += g.tails()[i] * std::pow(std::abs(u[i]), p);
    }
    return sum;
}

double brute_k(const Grid<double>& g, const Vector<double>& u, const Vector<double>& v) {
    const double p = g.params().p;
    double sum = 0;
    for (int i = 0; i < g.size(); ++i) {
        for (int j = 0; j < g.size(); ++j) {
            if (i == j) continue;
            const double d = u[i] - u[j];
            sum += g.weights()(i, j) * std::pow(std::abs(d), p - 2) * d * (v[i] - v[j]);
        }
        sum += g.tails()[i] * std::pow(std::abs(u[i]), p - 2) * u[i] * v[i];
    }
    return sum;
}

} // namespace

TEST_CASE("functionals match brute-force sums") {
    for (double p : {2.0, 2.5, 3.0, 4.0}) {
        for (int n : {2, 3, 5}) {
            const auto g = build_grid(params(0.4, p, n));
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                const Vector<double> u = random_vector(n, seed, 3.0);
                const Vector<double> v = random_vector(n, seed + 100);
                double lp = 0, lg = 0, l2 = 0;
                for (int i = 0; i < n; ++i) {
                    lp += std::pow(std::abs(u[i]), p);
                    lg += std::pow(std::abs(u[i]), p) * std::log(std::abs(u[i]));
                    l2 += u[i] * u[i];
                }
                lp *= g.h();
                lg *= g.h();
                l2 = std::sqrt(l2 * g.h());
                CAPTURE(p);
                CAPTURE(n);
                CHECK(rel(seminorm_p(g, u), brute_seminorm(g, u)) < 1e-12);
                CHECK(rel(k_form(g, u, v), brute_k(g, u, v)) < 1e-12);
                CHECK(rel(lp_norm_p(g, u, p), lp) < 1e-12);
                CHECK(rel(log_integral(g, u), lg) < 1e-12);
                CHECK(rel(l2_norm(g, u), l2) < 1e-12);
            }
        }
    }
}

TEST_CASE("p-Laplacian represents the K-form") {
    const auto g = build_grid(params(0.6, 3.0, 7));
    const Vector<double> u = random_vector(7, 3);
    const Vector<double> lap = frac_p_laplacian(g, u);
    for (int k = 0; k < 7; ++k) {
        Vector<double> e = Vector<double>::Zero(7);
        e[k] = 1.0;
        CHECK(g.h() * lap[k] == doctest::Approx(k_form(g, u, e)).epsilon(1e-12));
    }
}

TEST_CASE("identities between K, I and E") {
    for (double p : {2.0, 3.0, 4.5}) {
        const auto g = build_grid(params(0.5, p, 16));
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const Vector<double> u = random_vector(16, seed, 2.0);
            const auto r = report(g, u);
            CHECK(rel(k_form(g, u, u), r.seminorm_p) < 1e-12);
            CHECK(rel(r.nehari, r.seminorm_p + r.lp_p - r.log_int) < 1e-12);
            CHECK(rel(r.energy, r.nehari / p + r.lp_p / (p * p)) < 1e-12);
            CHECK(energy(g, u) == r.energy);
            CHECK(nehari(g, u) == r.nehari);
        }
    }
}

TEST_CASE("scaling laws along rays") {
    const double p = 3.0;
    const auto g = build_grid(params(0.5, p, 12));
    const Vector<double> u = random_vector(12, 9);
    const auto r = report(g, u);
    for (double lam : {0.01, 0.5, 2.0, 1e3}) {
        const Vector<double> w = lam * u;
        const double lp = std::pow(lam, p);
        CHECK(rel(seminorm_p(g, w), lp * r.seminorm_p) < 1e-12);
        CHECK(rel(lp_norm_p(g, w, p), lp * r.lp_p) < 1e-12);
        CHECK(rel(log_integral(g, w), lp * (r.log_int + std::log(lam) * r.lp_p)) < 1e-10);
    }
}

TEST_CASE("zero has zero energy and a zero gradient") {
    const auto g = build_grid(params(0.5, 3.0, 8));
    const Vector<double> z = Vector<double>::Zero(8);
    const auto r = report(g, z);
    CHECK(r.energy == 0.0);
    CHECK(r.nehari == 0.0);
    CHECK(r.log_int == 0.0);
    CHECK(full_gradient(g, z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient agrees with central differences") {
    for (double p : {2.0, 3.0, 4.0}) {
        for (double s : {0.3, 0.5, 0.7}) {
            const auto g = build_grid(params(s, p, 32));
            for (std::uint64_t seed = 1; seed <= 4; ++seed) {
                const Vector<double> u = random_vector(32, seed, 2.0);
                const Vector<double> v = random_vector(32, seed + 50);
                const double exact = l2_dot(g, full_gradient(g, u), v);
                double best = 1e300;
                for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
                    const double fd = (energy(g, (u + eps * v).eval()) - energy(g, (u - eps * v).eval())) / (2 * eps);
                    best = std::min(best, rel(fd, exact));
                }
                CAPTURE(p);
                CAPTURE(s);
                CHECK(best < 1e-7);
            }
        }
    }
}

TEST_CASE("hessian agrees with differences of the gradient") {
    for (double p : {2.0, 3.0, 4.0}) {
        const auto g = build_grid(params(0.4, p, 16));
        const Vector<double> u = random_vector(16, 4, 1.5);
        const Vector<double> v = random_vector(16, 5);
        const Vector<double> hv = energy_hessian(g, u) * v;
        double best = 1e300;
        for (double eps : {1e-4, 1e-5, 1e-6}) {
            const Vector<double> fd =
                (full_gradient(g, (u + eps * v).eval()) - full_gradient(g, (u - eps * v).eval())) / (2 * eps);
            best = std::min(best, (fd - hv).norm() / hv.norm());
        }
        CAPTURE(p);
        CHECK(best < 1e-6);
    }
}

TEST_CASE("logarithmic integral is dominated by a higher power") {
    for (double p : {2.0, 3.0}) {
        const auto g = build_grid(params(0.5, p, 20));
        for (double rho : {0.1, 0.5, 1.0}) {
            for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                const Vector<double> u = random_vector(20, seed, 5.0);
                CHECK(log_integral(g, u) <= lp_norm_p(g, u, p + rho) / rho);
            }
        }
    }
}

TEST_CASE("contract violations") {
    const auto g = build_grid(params(0.5, 3.0, 8));
    const Vector<double> wrong = Vector<double>::Ones(5);
    CHECK_THROWS_AS(seminorm_p(g, wrong), Error);
    try {
        report(g, wrong);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InstanceMismatch);
    }
    CHECK_THROWS_AS(lp_norm_p(g, Vector<double>::Ones(8).eval(), 0.5), Error);
}

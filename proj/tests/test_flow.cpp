#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qclab/bubble.hpp"
#include "qclab/flow.hpp"

using namespace qclab;

namespace {

ZonalField perturbed_constant(const ZonalBasis& basis, double delta, int mode = 2) {
    const int n = basis.n();
    const double cstar = std::pow(sphere_volume(n), -(n - 4.0) / (2.0 * n));
    ZonalField u = ZonalField::constant(n, basis.degree_bound(), cstar);
    u.coeffs[mode] = delta;
    return u;
}

}  // namespace

TEST_CASE("mu_of: constants give q(S^n), scale invariance, trial-field minimality") {
    const int n = 8, K = 32;
    ZonalBasis basis(n, K);
    for (double c : {0.3, 1.0, 4.2}) {
        ZonalField u = ZonalField::constant(n, K, c);
        CHECK(mu_of(basis, u) == Catch::Approx(q_sphere(n)).epsilon(1e-12));
    }
    ZonalField u = ZonalField::constant(n, K, 1.0);
    u.coeffs[2] = 0.1;
    const double m1 = mu_of(basis, u);
    ZonalField su = u;
    for (double& c : su.coeffs) c *= 3.7;
    CHECK(mu_of(basis, su) == Catch::Approx(m1).epsilon(1e-12));
    // constants minimize among nearby zonal trial fields
    CHECK(m1 > q_sphere(n));
}

TEST_CASE("velocity: fixed point, E-pairing identity, equilibrium family") {
    const int n = 8, K = 32;
    ZonalBasis basis(n, K);

    SECTION("the normalized constant is an equilibrium") {
        const double cstar = std::pow(sphere_volume(n), -(n - 4.0) / (2.0 * n));
        ZonalField c = ZonalField::constant(n, K, cstar);
        CHECK(critical_volume(basis, c) == Catch::Approx(1.0).epsilon(1e-12));
        ZonalField phi = velocity(basis, c);
        for (double v : phi.coeffs) CHECK(std::abs(v) < 1e-12);
    }
    SECTION("E-pairing: int phi P u = -E[u] + mu_vel int u^((n+4)/(n-4)) u = 0") {
        ZonalField u = ZonalField::constant(n, K, 1.1);
        u.coeffs[2] = 0.07;
        u.coeffs[4] = -0.02;
        ZonalField phi = velocity(basis, u);
        double pairing = 0.0;
        for (int k = 0; k <= K; ++k)
            pairing += paneitz_eigenvalue(n, k) * phi.coeffs[k] * u.coeffs[k];
        CHECK(std::abs(pairing) < 1e-10 * zonal_energy(u));
    }
    SECTION("the velocity normalization makes every constant stationary") {
        // the scale-invariant normalization would make the amplitude mode
        // unstable (d/ds (s^p - s) > 0 at s = 1); the exponent-1 quotient in
        // the velocity removes the amplitude drift entirely
        for (double c : {0.4, 1.0, 2.5}) {
            ZonalField u = ZonalField::constant(n, K, c);
            ZonalField phi = velocity(basis, u);
            for (double v : phi.coeffs) CHECK(std::abs(v) < 1e-12 * std::max(1.0, c));
        }
    }
}

TEST_CASE("F2: zero at the fixed point, quadratic smallness in the perturbation") {
    const int n = 8, K = 32;
    ZonalBasis basis(n, K);
    ZonalField c = perturbed_constant(basis, 0.0);
    CHECK(f2_of(basis, c) < 1e-12);

    const double r3 = f2_of(basis, perturbed_constant(basis, 1e-3)) / 1e-6;
    const double r4 = f2_of(basis, perturbed_constant(basis, 1e-4)) / 1e-8;
    CHECK(f2_of(basis, perturbed_constant(basis, 1e-3)) > 0.0);
    CHECK(r3 == Catch::Approx(r4).epsilon(0.05));
}

TEST_CASE("h_function: values, small-argument behavior, defining integral") {
    CHECK(h_function(0.0) == 0.0);
    // |H(s)/s - 1| <= sqrt(s) for s <= 1e-2
    for (double s : {1e-2, 1e-4, 1e-8, 1e-12}) {
        CHECK(std::abs(h_function(s) / s - 1.0) <= std::sqrt(s));
    }
    // H equals the quadrature of the defining integral ds/(1+sqrt(s))
    for (double s : {0.1, 1.0, 10.0}) {
        const double quad_val =
            integrate([](double r) { return 1.0 / (1.0 + std::sqrt(r)); }, 0.0, s);
        CHECK(h_function(s) == Catch::Approx(quad_val).epsilon(1e-12));
    }
    CHECK_THROWS_AS(h_function(-1e-10), domain_error);
}

TEST_CASE("flow from the fixed point stays put") {
    FlowConfig cfg;
    cfg.n = 8;
    cfg.K = 16;
    cfg.t_max = 1.0;
    cfg.f2_stop = 1e-14;
    ZonalBasis basis(cfg.n, cfg.K);
    ZonalField u0 = perturbed_constant(basis, 0.0);
    auto res = run_flow(cfg, u0);
    for (const auto& s : res.trajectory) CHECK(s.f2 <= 1e-12);
    CHECK(res.final_state.mu == Catch::Approx(q_sphere(8)).epsilon(1e-10));
}

TEST_CASE("perturbed constant: mu non-increasing, F2 decays, positivity holds") {
    FlowConfig cfg;
    cfg.n = 8;
    cfg.K = 32;
    cfg.t_max = 50.0;
    cfg.f2_stop = 1e-10;
    ZonalBasis basis(cfg.n, cfg.K);
    ZonalField u0 = perturbed_constant(basis, 0.05);
    auto res = run_flow(cfg, u0);
    CHECK(res.diag.stopped_by_f2);
    CHECK(res.final_state.t < 50.0);
    CHECK(res.final_state.f2 < 1e-8);
    CHECK(res.diag.max_mu_increase <= 1e-8 * std::abs(res.diag.mu_initial));
    CHECK(res.diag.min_u_overall > 0.0);
    CHECK(res.diag.mu_final >= q_sphere(8) - 1e-9);
    // the H comparison stays inside its Taylor corridor along the run
    for (const auto& s : res.trajectory) {
        if (s.f2 < 1e-2 && s.f2 > 0.0) {
            const double ratio = h_function(s.f2) / s.f2;
            CHECK(ratio <= 1.0 + 1e-12);
            CHECK(ratio >= 1.0 - std::sqrt(s.f2));
        }
    }
    // discrete differential-inequality audit: finite, and the running
    // integral of F2 is bounded
    CHECK(std::isfinite(res.diag.diff_ineq_constant));
    CHECK(res.diag.f2_time_integral < 10.0);
    // cone condition of the initial data is reported
    CHECK(res.diag.paneitz_u0_min > 0.0);
}

TEST_CASE("volume stays within fixed bounds along the run") {
    FlowConfig cfg;
    cfg.n = 8;
    cfg.K = 32;
    cfg.t_max = 30.0;
    cfg.f2_stop = 1e-11;
    ZonalBasis basis(cfg.n, cfg.K);
    auto res = run_flow(cfg, perturbed_constant(basis, 0.05));
    // E is conserved and V is non-decreasing, bounded by (E0/q(S^n))^(n/(n-4))
    const double E0 = zonal_energy(res.trajectory.front().u);
    const double vol_bound = std::pow(E0 / q_sphere(8), 8.0 / 4.0);
    double prev = 0.0;
    for (const auto& s : res.trajectory) {
        CHECK(s.volume >= prev - 1e-11);
        CHECK(s.volume <= vol_bound + 1e-9);
        prev = s.volume;
        CHECK(zonal_energy(s.u) == Catch::Approx(E0).epsilon(1e-9));
    }
}

TEST_CASE("step-halving self-convergence at order >= 3.5") {
    FlowConfig cfg;
    cfg.n = 8;
    cfg.K = 16;
    ZonalBasis basis(cfg.n, cfg.K);
    ZonalField u0 = perturbed_constant(basis, 0.05);
    const double T = 1.0;
    auto diff = [&](double dt) {
        ZonalField a = run_flow_fixed(cfg, u0, dt, T);
        ZonalField b = run_flow_fixed(cfg, u0, 0.5 * dt, T);
        double d = 0.0;
        for (int k = 0; k <= cfg.K; ++k) d = std::max(d, std::abs(a.coeffs[k] - b.coeffs[k]));
        return d;
    };
    const double d1 = diff(0.1);
    const double d2 = diff(0.05);
    const double order = std::log2(d1 / d2);
    CHECK(order >= 3.5);
}

TEST_CASE("flow rejects non-positive initial data") {
    FlowConfig cfg;
    cfg.n = 8;
    cfg.K = 16;
    ZonalBasis basis(cfg.n, cfg.K);
    ZonalField bad = ZonalField::constant(cfg.n, cfg.K, 0.01);
    bad.coeffs[1] = 1.0;
    CHECK_THROWS_AS(run_flow(cfg, bad), domain_error);
}

TEST_CASE("checkpoint cadence records intermediate states") {
    FlowConfig cfg;
    cfg.n = 8;
    cfg.K = 16;
    cfg.t_max = 5.0;
    cfg.checkpoint_every = 10;
    ZonalBasis basis(cfg.n, cfg.K);
    auto res = run_flow(cfg, perturbed_constant(basis, 0.05));
    CHECK(res.checkpoints.size() >= 3);
    CHECK(res.checkpoints.front().t == 0.0);
    CHECK(res.checkpoints.back().t == res.final_state.t);
    // serialization round trip of a checkpoint
    auto j = zonal_to_json(res.checkpoints[1].u);
    ZonalField back = zonal_from_json(j);
    CHECK(back.coeffs == res.checkpoints[1].u.coeffs);
}

TEST_CASE("differential-inequality audit is finite and stable under step refinement") {
    auto chat = [&](double rtol) {
        FlowConfig cfg;
        cfg.n = 8;
        cfg.K = 32;
        cfg.rel_tol = rtol;
        cfg.f2_stop = 1e-10;
        ZonalBasis basis(cfg.n, cfg.K);
        auto res = run_flow(cfg, perturbed_constant(basis, 0.05));
        return std::pair{res.diag.diff_ineq_constant, res.diag.f2_time_integral};
    };
    const auto [c1, i1] = chat(1e-8);
    const auto [c2, i2] = chat(1e-10);
    CHECK(std::isfinite(c1));
    CHECK(std::isfinite(c2));
    CHECK(c1 < 0.0);  // F2 decays monotonically for this data
    CHECK(c1 == Catch::Approx(c2).epsilon(0.02));
    CHECK(i1 == Catch::Approx(i2).epsilon(0.005));
}

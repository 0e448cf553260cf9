#pragma once

// The nonlocal Q-curvature flow on S^n for zonal data:
//
//   du/dt = phi(u) = -u + mu_vel(u) P^{-1}( u_+^((n+4)/(n-4)) ),
//   mu_vel(u) = int u P u dmu / int u^(2n/(n-4)) dmu,
//
// which makes int phi P u dmu = 0 identically, conserves E[u] = int u P u,
// drives the critical volume monotonically up against its Sobolev bound, and
// hence pushes the reported quotient
//
//   mu(u) = E[u] / (int u^(2n/(n-4)) dmu)^((n-4)/n)
//
// downhill. F_2 = int phi P phi is the decay diagnostic; H(F_2) =
// 2 sqrt(F_2) - 2 log(1 + sqrt(F_2)) is the comparison integral used in its
// decay argument. Time stepping is the Dormand-Prince 5(4) embedded pair
// with PI step-size control; positivity and quotient monotonicity are
// enforced per accepted step by rejection.

#include <functional>
#include <limits>
#include <vector>

#include "qclab/zonal.hpp"

namespace qclab {

struct FlowConfig {
    int n = 8;
    int K = 64;
    int M = 0;  // transform nodes; 0 means 4K
    double dt_init = 1e-2;
    double dt_min = 1e-9;
    double dt_max = 1.0;
    double rel_tol = 1e-9;  // embedded-pair error control
    double abs_tol = 1e-12;
    double t_max = 50.0;
    double f2_stop = 1e-10;
    int checkpoint_every = 100;           // accepted steps between checkpoints
    double mu_increase_tol_rel = 1e-8;    // per accepted step
};

struct FlowState {
    double t = 0.0;
    ZonalField u;
    double mu = 0.0;      // reported quotient E/V^((n-4)/n)
    double f2 = 0.0;
    double volume = 0.0;  // int u^(2n/(n-4)) dmu
    double min_u = 0.0;   // minimum over transform nodes and both poles
};

// reported quotient: scale-invariant, equals q(S^n) on constants
inline double mu_of(const ZonalBasis& basis, const ZonalField& u) {
    const double V = critical_volume(basis, u);
    require(V > 0.0, "mu_of: zero field");
    return zonal_energy(u) / std::pow(V, (basis.n() - 4.0) / basis.n());
}

// velocity normalization: the exponent-1 quotient that zeroes int phi P u
inline double mu_velocity(const ZonalBasis& basis, const ZonalField& u) {
    const double V = critical_volume(basis, u);
    require(V > 0.0, "mu_velocity: zero field");
    return zonal_energy(u) / V;
}

inline double min_nodal_value(const ZonalBasis& basis, const ZonalField& u) {
    auto nodal = basis.to_nodal(u.coeffs);
    double mn = nodal[0];
    for (double v : nodal) mn = std::min(mn, v);
    std::vector<double> y, dy;
    for (double pole : {-1.0, 1.0}) {
        basis.eval_basis(pole, y, dy);
        double s = 0.0;
        for (int k = 0; k <= u.K; ++k) s += y[k] * u.coeffs[k];
        mn = std::min(mn, s);
    }
    return mn;
}

inline ZonalField velocity(const ZonalBasis& basis, const ZonalField& u) {
    const int n = basis.n();
    const double p = (n + 4.0) / (n - 4.0);
    const double mu1 = mu_velocity(basis, u);
    ZonalField rhs = paneitz_inverse(nonlinear_power(basis, u, p).field);
    ZonalField out = u;
    for (int k = 0; k <= u.K; ++k) out.coeffs[k] = -u.coeffs[k] + mu1 * rhs.coeffs[k];
    return out;
}

inline double f2_of(const ZonalBasis& basis, const ZonalField& u) {
    return zonal_energy(velocity(basis, u));
}

// H(s) = int_0^s dr/(1 + sqrt(r)) = 2 sqrt(s) - 2 log(1 + sqrt(s)), computed
// through log1p and a series to survive the cancellation at small s
inline double h_function(double f2) {
    require(f2 >= 0.0, "h_function: negative argument");
    const double x = std::sqrt(f2);
    if (x < 1e-4)
        return x * x * (1.0 - (2.0 / 3.0) * x + 0.5 * x * x - 0.4 * x * x * x);
    return 2.0 * (x - std::log1p(x));
}

struct FlowDiagnostics {
    double mu_initial = 0.0;
    double mu_final = 0.0;
    double max_mu_increase = 0.0;       // max over accepted steps of mu_{i+1} - mu_i
    double min_u_overall = 0.0;
    double f2_final = 0.0;
    double f2_time_integral = 0.0;      // running int_0^T F2 dt (trapezoid)
    // max over accepted steps of (dF2/dt)/(F2 (1 + sqrt(F2))); negative
    // throughout when F2 decays monotonically
    double diff_ineq_constant = -std::numeric_limits<double>::infinity();
    double paneitz_u0_min = 0.0;        // min nodal P u0: the cone condition, reported
    int accepted_steps = 0;
    int rejected_steps = 0;
    bool stopped_by_f2 = false;
};

struct FlowResult {
    std::vector<FlowState> trajectory;   // one row per accepted step (incl. t = 0)
    std::vector<FlowState> checkpoints;  // per checkpoint cadence
    FlowState final_state;
    FlowDiagnostics diag;
};

namespace detail {

// Dormand-Prince 5(4) tableau
struct Dp54 {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

inline ZonalField axpy(const ZonalField& y, std::initializer_list<std::pair<double, const ZonalField*>> terms,
                       double dt) {
    ZonalField out = y;
    for (const auto& [c, f] : terms)
        for (std::size_t k = 0; k < out.coeffs.size(); ++k) out.coeffs[k] += dt * c * f->coeffs[k];
    return out;
}

}  // namespace detail

// One embedded DP54 step from u with stage derivatives; returns the 5th-order
// solution, the scaled error norm, and the last stage (FSAL candidate).
struct StepResult {
    ZonalField u_new;
    double error_norm;
    ZonalField k_last;
};

inline StepResult dp54_step(const ZonalBasis& basis, const ZonalField& u, const ZonalField& k1,
                            double dt, double rel_tol, double abs_tol) {
    using D = detail::Dp54;
    using detail::axpy;
    ZonalField k2 = velocity(basis, axpy(u, {{D::a21, &k1}}, dt));
    ZonalField k3 = velocity(basis, axpy(u, {{D::a31, &k1}, {D::a32, &k2}}, dt));
    ZonalField k4 = velocity(basis, axpy(u, {{D::a41, &k1}, {D::a42, &k2}, {D::a43, &k3}}, dt));
    ZonalField k5 = velocity(
        basis, axpy(u, {{D::a51, &k1}, {D::a52, &k2}, {D::a53, &k3}, {D::a54, &k4}}, dt));
    ZonalField k6 = velocity(
        basis,
        axpy(u, {{D::a61, &k1}, {D::a62, &k2}, {D::a63, &k3}, {D::a64, &k4}, {D::a65, &k5}}, dt));
    ZonalField u_new = axpy(
        u, {{D::b1, &k1}, {D::b3, &k3}, {D::b4, &k4}, {D::b5, &k5}, {D::b6, &k6}}, dt);
    ZonalField k7 = velocity(basis, u_new);
    double err2 = 0.0;
    for (std::size_t k = 0; k < u.coeffs.size(); ++k) {
        const double e = dt * (D::e1 * k1.coeffs[k] + D::e3 * k3.coeffs[k] + D::e4 * k4.coeffs[k] +
                               D::e5 * k5.coeffs[k] + D::e6 * k6.coeffs[k] + D::e7 * k7.coeffs[k]);
        const double sc = abs_tol + rel_tol * std::max(std::abs(u.coeffs[k]), std::abs(u_new.coeffs[k]));
        err2 += sqr(e / sc);
    }
    return {std::move(u_new), std::sqrt(err2 / u.coeffs.size()), std::move(k7)};
}

inline FlowState make_state(const ZonalBasis& basis, double t, const ZonalField& u) {
    FlowState s;
    s.t = t;
    s.u = u;
    s.mu = mu_of(basis, u);
    s.f2 = f2_of(basis, u);
    s.volume = critical_volume(basis, u);
    s.min_u = min_nodal_value(basis, u);
    return s;
}

inline FlowResult run_flow(const FlowConfig& cfg, const ZonalField& u0) {
    require(cfg.n == u0.n, "run_flow: dimension mismatch");
    require(cfg.t_max > 0.0, "run_flow: t_max must be positive");
    require(cfg.dt_min > 0.0 && cfg.dt_min <= cfg.dt_init && cfg.dt_init <= cfg.dt_max,
            "run_flow: need 0 < dt_min <= dt_init <= dt_max");
    ZonalBasis basis(cfg.n, cfg.K, cfg.M);
    require(u0.K == cfg.K, "run_flow: truncation mismatch");
    require(min_nodal_value(basis, u0) > 0.0, "run_flow: initial data must be positive");

    FlowResult res;
    FlowState st = make_state(basis, 0.0, u0);
    res.trajectory.push_back(st);
    res.checkpoints.push_back(st);
    res.diag.mu_initial = st.mu;
    res.diag.min_u_overall = st.min_u;
    {
        // cone condition P u0 >= 0: reported, not enforced
        auto pnodal = basis.to_nodal(paneitz_apply_sphere(u0).coeffs);
        double mn = pnodal[0];
        for (double v : pnodal) mn = std::min(mn, v);
        res.diag.paneitz_u0_min = mn;
    }

    double dt = cfg.dt_init;
    double err_prev = 1.0;
    ZonalField k1 = velocity(basis, st.u);
    while (st.t < cfg.t_max && st.f2 > cfg.f2_stop) {
        dt = std::min(dt, cfg.t_max - st.t);
        StepResult step = dp54_step(basis, st.u, k1, dt, cfg.rel_tol, cfg.abs_tol);
        bool accept = step.error_norm <= 1.0;
        double mu_new = 0.0;
        if (accept) {
            for (double c : step.u_new.coeffs)
                if (!std::isfinite(c)) throw numeric_error("run_flow: non-finite coefficients");
            const double mn = min_nodal_value(basis, step.u_new);
            if (mn <= 0.0) accept = false;  // positivity monitor: retry smaller
            if (accept) {
                mu_new = mu_of(basis, step.u_new);
                if (mu_new > st.mu + cfg.mu_increase_tol_rel * std::abs(st.mu)) accept = false;
            }
        }
        if (!accept) {
            ++res.diag.rejected_steps;
            dt *= 0.5;
            if (dt < cfg.dt_min)
                throw numeric_error("run_flow: step size underflow at t=" + std::to_string(st.t));
            continue;
        }
        // PI controller for the next step
        const double err = std::max(step.error_norm, 1e-12);
        double fac = 0.9 * std::pow(err, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
        fac = std::min(5.0, std::max(0.2, fac));
        err_prev = err;

        FlowState next = make_state(basis, st.t + dt, step.u_new);
        res.diag.max_mu_increase = std::max(res.diag.max_mu_increase, next.mu - st.mu);
        res.diag.min_u_overall = std::min(res.diag.min_u_overall, next.min_u);
        res.diag.f2_time_integral += 0.5 * (next.f2 + st.f2) * dt;
        const double denom = st.f2 * (1.0 + std::sqrt(st.f2));
        if (denom > 0.0)
            res.diag.diff_ineq_constant =
                std::max(res.diag.diff_ineq_constant, (next.f2 - st.f2) / dt / denom);
        ++res.diag.accepted_steps;
        st = std::move(next);
        k1 = std::move(step.k_last);  // FSAL
        res.trajectory.push_back(st);
        if (res.diag.accepted_steps % cfg.checkpoint_every == 0) res.checkpoints.push_back(st);
        dt = std::min(cfg.dt_max, dt * fac);
    }
    res.diag.stopped_by_f2 = st.f2 <= cfg.f2_stop;
    res.diag.f2_final = st.f2;
    res.diag.mu_final = st.mu;
    res.final_state = st;
    if (res.checkpoints.back().t != st.t) res.checkpoints.push_back(st);
    return res;
}

// fixed-step DP54 run (no controller, no monitors): used by the
// order-of-convergence measurement
inline ZonalField run_flow_fixed(const FlowConfig& cfg, const ZonalField& u0, double dt, double T) {
    ZonalBasis basis(cfg.n, cfg.K, cfg.M);
    ZonalField u = u0;
    double t = 0.0;
    ZonalField k1 = velocity(basis, u);
    while (t < T - 1e-12) {
        const double step_dt = std::min(dt, T - t);
        StepResult s = dp54_step(basis, u, k1, step_dt, 1.0, 1.0);
        u = std::move(s.u_new);
        k1 = std::move(s.k_last);
        t += step_dt;
    }
    return u;
}

}  // namespace qclab

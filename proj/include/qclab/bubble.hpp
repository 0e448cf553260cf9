#pragma once

// Radial Euclidean computations around the concentrating family
//
//   u_alpha(r) = (2 alpha / (alpha^2 + r^2))^((n-4)/2),
//
// cut off by a quintic-smoothstep eta_eps (identically 1 on B_eps, 0 outside
// B_2eps): closed-form derivatives, the log/constant regimes of the
// sigma-integral behind the Weyl coefficient, the radial energy integrals,
// and the assembled quotient upper bound that certifies the strict gap below
// the spherical Paneitz-Sobolev constant.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qclab/jet.hpp"
#include "qclab/quadrature.hpp"

namespace qclab {

struct BubbleValues {
    double u, up, upp, lap;  // value, u', u'', Delta_0 u
};

// Closed forms; u'' and the radial Laplacian follow from differentiating u:
//   u'      = -(n-4) r/(alpha^2+r^2) u
//   u''     = (n-4) ((n-3) r^2 - alpha^2)/(alpha^2+r^2)^2 u
//   Delta u = -(n-4) (2 r^2 + n alpha^2)/(alpha^2+r^2)^2 u
inline BubbleValues bubble(int n, double alpha, double r) {
    require(n >= 5, "bubble: n >= 5");
    require(alpha > 0.0 && r >= 0.0, "bubble: need alpha > 0, r >= 0");
    const double d = alpha * alpha + r * r;
    BubbleValues b;
    b.u = std::pow(2.0 * alpha / d, 0.5 * (n - 4));
    b.up = -(n - 4.0) * r / d * b.u;
    b.upp = (n - 4.0) * ((n - 3.0) * r * r - alpha * alpha) / (d * d) * b.u;
    b.lap = -(n - 4.0) * (2.0 * r * r + n * alpha * alpha) / (d * d) * b.u;
    return b;
}

// Delta_0^2 u_alpha via a 1-variable jet of F = Delta_0 u; at r = 0 the
// radial Laplacian of a smooth even profile is n F''(0).
inline double bubble_bilaplacian(int n, double alpha, double r) {
    Jet rr = Jet::variable(1, 4, 0, r);
    Jet u = jet_pow(jet_recip(rr * rr + alpha * alpha) * (2.0 * alpha), 0.5 * (n - 4));
    Jet den = jet_recip((rr * rr + alpha * alpha) * (rr * rr + alpha * alpha));
    Jet F = -(n - 4.0) * (rr * rr * 2.0 + n * alpha * alpha) * den * u;  // order-4 jet of Delta u
    if (r == 0.0) return n * F.d2(0, 0);
    return F.d2(0, 0) + (n - 1.0) / r * F.d1(0);
}

// degree-7 smoothstep cutoff: 1 on [0, eps], 0 beyond 2 eps, C^3 at the
// seams (s' = 140 t^3 (1-t)^3), so int phi Delta^2 phi = int |Delta phi|^2
// holds without seam flux terms
struct Cutoff {
    double eps;
    double value(double r) const {
        if (r <= eps) return 1.0;
        if (r >= 2.0 * eps) return 0.0;
        const double t = (r - eps) / eps;
        const double t4 = t * t * t * t;
        return 1.0 - t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
    }
    double d1(double r) const {
        if (r <= eps || r >= 2.0 * eps) return 0.0;
        const double t = (r - eps) / eps;
        const double w = t * (1.0 - t);
        return -140.0 * w * w * w / eps;
    }
    double d2(double r) const {
        if (r <= eps || r >= 2.0 * eps) return 0.0;
        const double t = (r - eps) / eps;
        return -420.0 * sqr(t * (1.0 - t)) * (1.0 - 2.0 * t) / (eps * eps);
    }
};

struct BubbleParams {
    int n;
    double alpha;
    double epsilon;
};

// ---------------------------------------------------------------------------
// the concentration sigma-integral
//
//   J(n, S) = int_0^S [1 - c_n sigma^4/(1+sigma^2)^2] (1+sigma^2)^(4-n)
//             sigma^(n-1) d sigma,  c_n = (n-4)(n^2-4n+8)/(n(n-2)), S = eps/alpha,
//
// which tends to a negative constant -C1(n) for n > 8 and behaves like
// C2 log(alpha) for n = 8.

inline double lemma31_coefficient(int n) {
    return (n - 4.0) * (static_cast<double>(n) * n - 4.0 * n + 8.0) / (static_cast<double>(n) * (n - 2.0));
}

inline double lemma31_quadrature(int n, double epsilon, double alpha, double tol = 1e-12) {
    require(n >= 8, "lemma31: n >= 8");
    require(epsilon > 0.0 && alpha > 0.0 && tol > 0.0, "lemma31: bad parameters");
    const double S = epsilon / alpha;
    const double c = lemma31_coefficient(n);
    auto f = [&](double s) {
        const double s2 = s * s;
        const double w = 1.0 + s2;
        return (1.0 - c * s2 * s2 / (w * w)) * std::pow(w, 4.0 - n) * std::pow(s, n - 1);
    };
    QuadOptions opt;
    opt.rel_tol = tol;
    std::vector<double> breaks{0.0};
    for (double b = 1.0; b < S; b *= 10.0) breaks.push_back(b);
    breaks.push_back(S);
    return integrate_panels(f, breaks, opt);
}

// Exact antiderivative decomposition of the same integral: boundary terms at
// S = eps/alpha plus the bracket (n-8)(n^2+2n+36)+280 times the remaining
// monomial integral.
inline double lemma31_bracket(int n) {
    return (n - 8.0) * (static_cast<double>(n) * n + 2.0 * n + 36.0) + 280.0;
}

inline double lemma31_closed_form(int n, double epsilon, double alpha, double tol = 1e-12) {
    require(n >= 8, "lemma31: n >= 8");
    const double S = epsilon / alpha;
    const double S2 = 1.0 + S * S;
    const double b1 = std::pow(S, n) * std::pow(S2, 4.0 - n) / n;
    const double b2 = 2.0 * (n - 4.0) / (static_cast<double>(n) * (n + 2.0)) * std::pow(S, n + 2) *
                      std::pow(S2, 3.0 - n);
    auto f = [&](double s) { return std::pow(s, n + 3) * std::pow(1.0 + s * s, 2.0 - n); };
    QuadOptions opt;
    opt.rel_tol = tol;
    std::vector<double> breaks{0.0};
    for (double b = 1.0; b < S; b *= 10.0) breaks.push_back(b);
    breaks.push_back(S);
    const double tail = integrate_panels(f, breaks, opt);
    const double coeff = (n - 4.0) / (static_cast<double>(n) * (n + 2.0) * (n - 2.0)) * lemma31_bracket(n);
    return b1 + b2 - coeff * tail;
}

struct Lemma31Result {
    int n;
    double epsilon;
    double alpha;
    double value;
    enum class Regime { constant_limit, log_divergent } regime;
    double fitted_constant;  // C1 estimate (n > 8) or C2 estimate (n = 8)
};

inline Lemma31Result lemma31_result(int n, double epsilon, double alpha, double tol = 1e-12) {
    Lemma31Result r;
    r.n = n;
    r.epsilon = epsilon;
    r.alpha = alpha;
    r.value = lemma31_quadrature(n, epsilon, alpha, tol);
    if (n == 8) {
        r.regime = Lemma31Result::Regime::log_divergent;
        r.fitted_constant = r.value / std::log(alpha);
    } else {
        r.regime = Lemma31Result::Regime::constant_limit;
        r.fitted_constant = -r.value;
    }
    return r;
}

// root of (n-4)(n^2-4n+8) sigma^4 = n(n-2) (1+sigma^2)^2: the sign change of
// the lemma31 integrand
inline double lemma31_sign_change(int n) {
    const double c = lemma31_coefficient(n);
    auto h = [&](double s) { return 1.0 - c * sqr(s * s / (1.0 + s * s)); };
    double lo = 0.0, hi = 1.0;
    while (h(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// radial energy integrals

struct RadialIntegrals {
    double biharm_whole;      // int_Rn |Delta_0 u|^2
    double biharm_ball;       // over B_eps
    double biharm_tail;       // over Rn \ B_eps
    double biharm_cut_annulus;  // int_{A_eps} |Delta_0 (eta u)|^2
    double biharm_cut_whole;  // int_Rn |Delta_0 (eta u)|^2 = ball + cut annulus
    double mass_ball;         // int_{B_eps} u^2
    double r_mass_ball;       // int_{B_eps} r u^2
    double r2_grad_ball;      // int_{B_eps} r^2 |u'|^2
    double r3_grad_ball;      // int_{B_eps} r^3 |u'|^2
    double grad_annulus;      // int_{A_eps} |u'|^2
    double mass_annulus;      // int_{A_eps} u^2
    double crit_whole;        // int_Rn u^(2n/(n-4))
    double crit_tail;         // over Rn \ B_eps
    double crit_cut_annulus;  // int_{A_eps} (eta u)^(2n/(n-4))
};

inline RadialIntegrals radial_integrals(const BubbleParams& p, const QuadOptions& opt = {}) {
    const int n = p.n;
    const double al = p.alpha, eps = p.epsilon;
    require(n >= 5 && al > 0.0 && eps > 0.0, "radial_integrals: bad parameters");
    const double omega = sphere_volume(n - 1);
    const double pcrit = 2.0 * n / (n - 4.0);
    Cutoff eta{eps};

    auto shell = [&](auto f) {
        return [f, n](double r) { return f(r) * std::pow(r, n - 1); };
    };
    auto over_ball = [&](auto f, double lo, double hi) {
        std::vector<double> breaks{lo};
        for (double b = al; b < hi; b *= 4.0)
            if (b > lo) breaks.push_back(b);
        breaks.push_back(hi);
        return omega * integrate_panels(shell(f), breaks, opt);
    };
    auto over_tail = [&](auto f, double lo) {
        return omega * integrate_to_infinity([&, f](double r) { return shell(f)(r); }, lo,
                                             std::max(al, lo), opt);
    };

    auto lap2 = [&](double r) { return sqr(bubble(n, al, r).lap); };
    auto lap_cut2 = [&](double r) {
        auto b = bubble(n, al, r);
        const double lap_eta = eta.d2(r) + (n - 1.0) / r * eta.d1(r);
        return sqr(eta.value(r) * b.lap + 2.0 * eta.d1(r) * b.up + lap_eta * b.u);
    };
    auto u2 = [&](double r) { return sqr(bubble(n, al, r).u); };
    auto up2 = [&](double r) { return sqr(bubble(n, al, r).up); };
    auto crit = [&](double r) { return std::pow(bubble(n, al, r).u, pcrit); };
    auto crit_cut = [&](double r) { return std::pow(eta.value(r) * bubble(n, al, r).u, pcrit); };

    RadialIntegrals out;
    out.biharm_ball = over_ball(lap2, 0.0, eps);
    out.biharm_tail = over_tail(lap2, eps);
    out.biharm_whole = out.biharm_ball + out.biharm_tail;
    out.biharm_cut_annulus = over_ball(lap_cut2, eps, 2.0 * eps);
    out.biharm_cut_whole = out.biharm_ball + out.biharm_cut_annulus;
    out.mass_ball = over_ball(u2, 0.0, eps);
    out.r_mass_ball = over_ball([&](double r) { return r * u2(r); }, 0.0, eps);
    out.r2_grad_ball = over_ball([&](double r) { return r * r * up2(r); }, 0.0, eps);
    out.r3_grad_ball = over_ball([&](double r) { return r * r * r * up2(r); }, 0.0, eps);
    out.grad_annulus = over_ball(up2, eps, 2.0 * eps);
    out.mass_annulus = over_ball(u2, eps, 2.0 * eps);
    out.crit_whole = over_ball(crit, 0.0, eps) + over_tail(crit, eps);
    out.crit_tail = over_tail(crit, eps);
    out.crit_cut_annulus = over_ball(crit_cut, eps, 2.0 * eps);
    return out;
}

// (n-4)/2 Q_{S^n} vol(S^n)^(4/n): the spherical Paneitz-Sobolev constant.
inline double q_sphere(int n) {
    require(n >= 5, "q_sphere: n >= 5");
    return 0.5 * (n - 4.0) * q_curvature_sphere(n) * std::pow(sphere_volume(n), 4.0 / n);
}

// ---------------------------------------------------------------------------
// Weyl coefficient: the |W(p)|^2 prefactor collected from the Q-curvature,
// Schouten, and sigma_1 blocks. Two independent evaluation routes:
//   direct:      (n-4)/(24(n-1)) int_{B_eps} u^2
//                - (n^2-4n+8)/(24 n(n-1)(n-2)) int_{B_eps} r^2 |u'|^2
//   substituted: (n-4) 2^(n-4) vol(S^(n-1))/(24(n-1)) alpha^4 J(n, eps/alpha)

inline double weyl_coefficient_direct(const BubbleParams& p, const QuadOptions& opt = {}) {
    require(p.n >= 8, "weyl_coefficient: n >= 8");
    auto ri = radial_integrals(p, opt);
    const int n = p.n;
    return (n - 4.0) / (24.0 * (n - 1.0)) * ri.mass_ball -
           (static_cast<double>(n) * n - 4.0 * n + 8.0) /
               (24.0 * n * (n - 1.0) * (n - 2.0)) * ri.r2_grad_ball;
}

inline double weyl_coefficient_substituted(const BubbleParams& p, double tol = 1e-12) {
    require(p.n >= 8, "weyl_coefficient: n >= 8");
    const int n = p.n;
    return (n - 4.0) * std::pow(2.0, n - 4) * sphere_volume(n - 1) / (24.0 * (n - 1.0)) *
           std::pow(p.alpha, 4) * lemma31_quadrature(n, p.epsilon, p.alpha, tol);
}

// ---------------------------------------------------------------------------
// scaling fits: v = C alpha^p ("power") or v = C alpha^p log(1/alpha)
// ("power-log"), least squares in log coordinates

enum class FitModel { power, power_log };

struct FitResult {
    double exponent;
    double constant;
    double residual_rms;  // in log space
};

inline FitResult scaling_fit(const std::vector<std::pair<double, double>>& pairs, FitModel model) {
    require(pairs.size() >= 3, "scaling_fit: need at least 3 pairs");
    const std::size_t m = pairs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs(m), ys(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double a = pairs[i].first;
        require(a > 0.0 && a < 1.0, "scaling_fit: alpha must lie in (0,1)");
        xs[i] = std::log(a);
        ys[i] = std::log(std::abs(pairs[i].second));
        if (model == FitModel::power_log) ys[i] -= std::log(std::log(1.0 / a));
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = m * sxx - sx * sx;
    require(std::abs(det) > 1e-12 * m * sxx, "scaling_fit: degenerate design (repeated alpha?)");
    FitResult r;
    r.exponent = (m * sxy - sx * sy) / det;
    const double intercept = (sy * sxx - sx * sxy) / det;
    r.constant = std::exp(intercept);
    double ss = 0;
    for (std::size_t i = 0; i < m; ++i) ss += sqr(ys[i] - intercept - r.exponent * xs[i]);
    r.residual_rms = std::sqrt(ss / m);
    return r;
}

// ---------------------------------------------------------------------------
// gap certificate

struct GapTerms {
    double alpha;
    double biharm;             // I_biharm over all of R^n (the numerator's bulk)
    double weyl_term;          // W2 * weyl_coefficient  (negative: the deficit)
    double rem_cutoff_biharm;  // |int_A |D0(eta u)|^2 - tail int |D0 u|^2|, O(alpha^(n-4))
    double rem_r_mass;         // int_{B_eps} r u^2            (unit constant)
    double rem_r3_grad;        // int_{B_eps} r^3 |u'|^2       (unit constant)
    double rem_annulus;        // int_{A_eps} (u^2 + |u'|^2)   (unit constant)
    double crit_tail;          // int_{Rn \ B_eps} u^(2n/(n-4))
    double denominator;        // (I_crit - crit_tail)^((n-4)/n)
    double identity_residual;  // biharm/crit^((n-4)/n) / q(S^n) - 1 (quadrature sanity)
    double bound_minus_q;      // assembled upper bound minus q(S^n)
    double bound;              // q_sphere + bound_minus_q
};

struct GapReport {
    int n;
    double epsilon;
    double W2;
    double q_sphere_value;
    std::vector<GapTerms> terms;      // one row per alpha
    FitResult deficit_fit_power;      // |weyl_term| vs alpha
    FitResult deficit_fit_power_log;
    // the gap is an "alpha sufficiently small" statement: the headline
    // flag keys on the smallest alpha of the grid; per-row signs are in terms
    bool bound_below_q_at_min_alpha;
};

// Assembles, per alpha, the quotient upper bound
//
//      [ I_biharm(whole space) + W2 * weyl_coefficient ]
//      -------------------------------------------------
//            ( I_crit - crit tail )^((n-4)/n)
//
// in deficit form around the identity I_biharm/I_crit^((n-4)/n) = q(S^n)
// (which holds exactly; it is checked separately to 1e-6 by the radial
// consistency suite and its measured residual is reported per row):
//
//      bound - q = q (1/ratio - 1) + W2 wc / (ratio I_crit^((n-4)/n)),
//      ratio = (1 - crit_tail/I_crit)^((n-4)/n).
//
// The deficit is ~1e-15 of the raw quotient, so it is never formed as a
// difference of two large quotients. The unnamed-constant remainder
// integrals (including the cutoff's biharmonic correction) are reported
// alongside so the margin structure is visible;
// they are not added into the certified bound, which verifies sign and
// scaling of the deficit rather than a universal constant-free inequality.
inline GapReport gap_certificate(int n, const std::vector<double>& alpha_grid, double epsilon,
                                 double W2, const QuadOptions& opt = {}) {
    require(n >= 8, "gap_certificate: n >= 8");
    require(!alpha_grid.empty(), "gap_certificate: empty alpha grid");
    require(W2 >= 0.0, "gap_certificate: W2 >= 0");
    GapReport rep;
    rep.n = n;
    rep.epsilon = epsilon;
    rep.W2 = W2;
    rep.q_sphere_value = q_sphere(n);
    const double expo = (n - 4.0) / n;
    std::vector<std::pair<double, double>> deficit_pairs;
    for (double al : alpha_grid) {
        BubbleParams p{n, al, epsilon};
        auto ri = radial_integrals(p, opt);
        GapTerms t;
        t.alpha = al;
        t.biharm = ri.biharm_whole;
        t.weyl_term = W2 * weyl_coefficient_direct(p, opt);
        t.rem_cutoff_biharm = std::abs(ri.biharm_cut_annulus - ri.biharm_tail);
        t.rem_r_mass = ri.r_mass_ball;
        t.rem_r3_grad = ri.r3_grad_ball;
        t.rem_annulus = ri.mass_annulus + ri.grad_annulus;
        t.crit_tail = ri.crit_tail;
        t.denominator = std::pow(ri.crit_whole - ri.crit_tail, expo);
        // 1 - ratio = 1 - (1 - tail/crit)^expo, kept stable for tiny tails
        const double one_minus_ratio = -std::expm1(expo * std::log1p(-ri.crit_tail / ri.crit_whole));
        const double ratio = 1.0 - one_minus_ratio;
        t.identity_residual =
            ri.biharm_whole / std::pow(ri.crit_whole, expo) / rep.q_sphere_value - 1.0;
        t.bound_minus_q = rep.q_sphere_value * one_minus_ratio / ratio +
                          t.weyl_term / (ratio * std::pow(ri.crit_whole, expo));
        t.bound = rep.q_sphere_value + t.bound_minus_q;
        deficit_pairs.emplace_back(al, t.weyl_term);
        rep.terms.push_back(t);
    }
    std::size_t imin = 0;
    for (std::size_t i = 1; i < rep.terms.size(); ++i)
        if (rep.terms[i].alpha < rep.terms[imin].alpha) imin = i;
    rep.bound_below_q_at_min_alpha = rep.terms[imin].bound_minus_q < 0.0;
    bool fittable = deficit_pairs.size() >= 3;
    for (const auto& [a, v] : deficit_pairs) fittable = fittable && v != 0.0;
    if (fittable) {
        rep.deficit_fit_power = scaling_fit(deficit_pairs, FitModel::power);
        rep.deficit_fit_power_log = scaling_fit(deficit_pairs, FitModel::power_log);
    } else {  // W2 = 0 has no deficit to fit
        rep.deficit_fit_power = {0, 0, 0};
        rep.deficit_fit_power_log = {0, 0, 0};
    }
    return rep;
}

}  // namespace qclab

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qclab/bubble.hpp"
#include "qclab/curvature.hpp"

using namespace qclab;

TEST_CASE("bubble closed forms at r = 0") {
    auto b = bubble(8, 1.0, 0.0);
    CHECK(b.u == Catch::Approx(4.0).epsilon(1e-15));
    CHECK(b.up == 0.0);
    // Delta_0 u(0) = -(n-4) n u(0)/alpha^2
    CHECK(b.lap == Catch::Approx(-128.0).epsilon(1e-14));
}

TEST_CASE("radial Laplacian identity Delta u = u'' + (n-1)u'/r") {
    for (int n : {5, 8, 10, 13}) {
        for (double alpha : {0.3, 1.0, 2.5}) {
            auto b = bubble(n, alpha, 1.0);
            CHECK(b.lap == Catch::Approx(b.upp + (n - 1.0) * b.up).epsilon(1e-12));
        }
    }
}

TEST_CASE("u'' agrees with a central difference of u' (settles the derivative forms)") {
    const int n = 8;
    const double alpha = 0.1, r = 0.5, h = 1e-5;
    const double fd = (bubble(n, alpha, r + h).up - bubble(n, alpha, r - h).up) / (2.0 * h);
    CHECK(bubble(n, alpha, r).upp == Catch::Approx(fd).epsilon(1e-8));
}

TEST_CASE("bilaplacian of the bubble: frozen symbolic values") {
    CHECK(bubble_bilaplacian(8, 1.0, 0.0) == Catch::Approx(7680.0).epsilon(1e-13));
    CHECK(bubble_bilaplacian(8, 1.0, 0.3) == Catch::Approx(4579.333070432379).epsilon(1e-13));
    CHECK(bubble_bilaplacian(10, 0.5, 0.25) == Catch::Approx(1236950.581248).epsilon(1e-12));
}

TEST_CASE("bilaplacian matches the chart-stencil Paneitz on flat space") {
    const int n = 8;
    ChartMetric flat{std::make_shared<FlatChart>(n), Box::cube(n, 0.6), DerivMode::analytic, {}};
    ScalarField u{std::make_shared<BubbleField>(n, 1.0), DerivMode::analytic};
    std::vector<double> x(n, 0.0);
    x[0] = 0.3;
    x[1] = 0.4;  // r = 0.5
    CHECK(paneitz_apply(flat, u, x) ==
          Catch::Approx(bubble_bilaplacian(n, 1.0, 0.5)).epsilon(1e-6));
}

TEST_CASE("lemma31 bracket arithmetic") {
    CHECK(lemma31_bracket(8) == 280.0);
    CHECK(lemma31_bracket(10) == 592.0);
}

TEST_CASE("lemma31 integral: vanishing range, regimes, frozen values") {
    // alpha >> eps: the range (0, eps/alpha) collapses
    CHECK(std::abs(lemma31_quadrature(10, 1.0, 1e3)) < 1e-29);

    // n = 10, eps = 1: convergence to a negative constant; frozen oracle
    const double j2 = lemma31_quadrature(10, 1.0, 1e-2);
    const double j3 = lemma31_quadrature(10, 1.0, 1e-3);
    const double j4 = lemma31_quadrature(10, 1.0, 1e-4);
    CHECK(j2 == Catch::Approx(-0.26408080125862123).epsilon(1e-9));
    CHECK(j3 == Catch::Approx(-0.26428366429441426).epsilon(1e-9));
    CHECK(j4 == Catch::Approx(-0.26428569378571516).epsilon(1e-9));
    CHECK(j2 < 0.0);
    CHECK(std::abs(j4 - j3) < std::abs(j3 - j2));
    // the alpha -> 0 limit is -37/140 exactly
    CHECK(j4 == Catch::Approx(-37.0 / 140.0).epsilon(1e-7));

    // n = 8: value/log(alpha) tends to a positive constant
    const double l2 = lemma31_quadrature(8, 1.0, 1e-2) / std::log(1e-2);
    const double l3 = lemma31_quadrature(8, 1.0, 1e-3) / std::log(1e-3);
    const double l4 = lemma31_quadrature(8, 1.0, 1e-4) / std::log(1e-4);
    CHECK(l2 == Catch::Approx(1.706192767).epsilon(1e-8));
    CHECK(l3 == Catch::Approx(1.91512499).epsilon(1e-8));
    CHECK(l4 == Catch::Approx(2.019676216).epsilon(1e-8));
    CHECK(l2 > 0.0);
    // differenced slope dJ/dln(alpha) estimates C2 = 7/3
    const double c2 = (lemma31_quadrature(8, 1.0, 1e-3) - lemma31_quadrature(8, 1.0, 1e-2)) /
                      (std::log(1e-3) - std::log(1e-2));
    CHECK(c2 == Catch::Approx(7.0 / 3.0).epsilon(2e-4));
}

TEST_CASE("lemma31: closed form and quadrature are mutual oracles") {
    for (int n : {8, 9, 10, 12, 14})
        for (double eps : {0.1, 0.5, 1.0})
            for (double alpha : {1e-2, 1e-3}) {
                const double a = lemma31_quadrature(n, eps, alpha);
                const double b = lemma31_closed_form(n, eps, alpha);
                CHECK(a == Catch::Approx(b).epsilon(1e-8));
            }
}

TEST_CASE("lemma31 integrand sign structure") {
    for (int n : {8, 10, 12}) {
        const double s = lemma31_sign_change(n);
        const double c = lemma31_coefficient(n);
        auto integrand_sign = [&](double sig) {
            return 1.0 - c * sqr(sig * sig / (1.0 + sig * sig));
        };
        CHECK(integrand_sign(0.9 * s) > 0.0);
        CHECK(integrand_sign(1.1 * s) < 0.0);
        CHECK(integrand_sign(0.1) > 0.0);
        CHECK(integrand_sign(10.0 * s) < 0.0);
    }
}

TEST_CASE("q_sphere: frozen high-precision values") {
    CHECK(q_sphere(5) == Catch::Approx(102.38327344058293).epsilon(1e-14));
    CHECK(q_sphere(6) == Catch::Approx(247.28444736616021).epsilon(1e-14));
    CHECK(q_sphere(8) == Catch::Approx(653.82471182644696).epsilon(1e-14));
    CHECK(q_sphere(9) == Catch::Approx(913.53384477999401).epsilon(1e-14));
    CHECK(q_sphere(10) == Catch::Approx(1210.3236298262271).epsilon(1e-14));
    CHECK(q_sphere(12) == Catch::Approx(1914.4360194261035).epsilon(1e-14));
    CHECK(q_curvature_sphere(8) == 60.0);
}

TEST_CASE("whole-space radial integrals: scaling invariance and closed forms") {
    // I_crit = vol(S^n) and I_biharm = (n-4)/2 Q_{S^n} vol(S^n) exactly
    for (int n : {5, 8, 10}) {
        BubbleParams p{n, 0.1, 0.5};
        auto ri = radial_integrals(p);
        CHECK(ri.crit_whole == Catch::Approx(sphere_volume(n)).epsilon(1e-9));
        CHECK(ri.biharm_whole ==
              Catch::Approx(0.5 * (n - 4.0) * q_curvature_sphere(n) * sphere_volume(n)).epsilon(1e-9));
        // alpha-invariance of the whole-space integrals
        BubbleParams p2{n, 0.001, 0.5};
        auto ri2 = radial_integrals(p2);
        CHECK(ri.crit_whole == Catch::Approx(ri2.crit_whole).epsilon(1e-9));
        CHECK(ri.biharm_whole == Catch::Approx(ri2.biharm_whole).epsilon(1e-9));
        // the Paneitz-Sobolev ratio identity
        CHECK(ri.biharm_whole / std::pow(ri.crit_whole, (n - 4.0) / n) ==
              Catch::Approx(q_sphere(n)).epsilon(1e-6));
    }
}

TEST_CASE("tail and annulus scaling orders") {
    const int n = 8;
    const double eps = 0.25;
    std::vector<std::pair<double, double>> tailb, tailc, annb;
    for (double al : {1e-2, 3e-3, 1e-3}) {
        auto ri = radial_integrals({n, al, eps});
        tailb.emplace_back(al, ri.biharm_tail);
        tailc.emplace_back(al, ri.crit_tail);
        annb.emplace_back(al, ri.biharm_cut_annulus);
    }
    CHECK(scaling_fit(tailb, FitModel::power).exponent == Catch::Approx(n - 4.0).margin(0.05));
    CHECK(scaling_fit(tailc, FitModel::power).exponent == Catch::Approx(static_cast<double>(n)).margin(0.05));
    CHECK(scaling_fit(annb, FitModel::power).exponent == Catch::Approx(n - 4.0).margin(0.05));
}

TEST_CASE("weyl coefficient: two routes, sign, and regime scalings") {
    // mutual-oracle route equality and a frozen value
    BubbleParams p{10, 1e-3, 0.5};
    const double direct = weyl_coefficient_direct(p);
    const double subst = weyl_coefficient_substituted(p);
    CHECK(direct == Catch::Approx(subst).epsilon(1e-8));
    CHECK(direct == Catch::Approx(-1.1981351357059172e-11).epsilon(1e-8));

    // n = 10: negative with value/alpha^4 converging to a constant
    const double w2 = weyl_coefficient_direct({10, 1e-2, 0.5});
    const double w3 = direct;
    CHECK(w2 < 0.0);
    CHECK(w3 < 0.0);
    CHECK(w2 / std::pow(1e-2, 4) == Catch::Approx(w3 / std::pow(1e-3, 4)).epsilon(1e-2));

    // n = 8: negative with value/(alpha^4 log(1/alpha)) converging
    const double v2 = weyl_coefficient_direct({8, 1e-2, 3.0});
    const double v3 = weyl_coefficient_direct({8, 1e-3, 3.0});
    CHECK(v2 < 0.0);
    CHECK(v3 < 0.0);
    const double r2 = v2 / (std::pow(1e-2, 4) * std::log(1e2));
    const double r3 = v3 / (std::pow(1e-3, 4) * std::log(1e3));
    CHECK(r2 == Catch::Approx(r3).epsilon(2e-2));

    // the crux inequality: strictly negative across the sampled grid
    for (int n : {8, 9, 10, 12})
        for (double al : {1e-2, 1e-3})
            for (double eps : {0.25, 1.0}) CHECK(weyl_coefficient_direct({n, al, eps}) < 0.0);
}

TEST_CASE("scaling_fit on synthetic data") {
    std::vector<std::pair<double, double>> pure, plog;
    for (double a : {1e-2, 3e-3, 1e-3, 3e-4}) {
        pure.emplace_back(a, 7.0 * std::pow(a, 4));
        plog.emplace_back(a, 3.0 * std::pow(a, 4) * std::log(1.0 / a));
    }
    auto f1 = scaling_fit(pure, FitModel::power);
    CHECK(f1.exponent == Catch::Approx(4.0).margin(1e-10));
    CHECK(f1.constant == Catch::Approx(7.0).margin(1e-9));
    auto f2 = scaling_fit(plog, FitModel::power_log);
    CHECK(f2.exponent == Catch::Approx(4.0).margin(1e-10));
    CHECK(f2.constant == Catch::Approx(3.0).margin(1e-8));
    // degenerate design
    std::vector<std::pair<double, double>> degen{{1e-2, 1.0}, {1e-2, 2.0}, {1e-2, 3.0}};
    CHECK_THROWS_AS(scaling_fit(degen, FitModel::power), domain_error);
}

TEST_CASE("model selection: the n = 8 deficit wants the power-log model") {
    std::vector<std::pair<double, double>> pairs;
    for (double a : {1e-2, 1e-3, 1e-4})
        pairs.emplace_back(a, lemma31_quadrature(8, 3.0, a));
    const double rp = scaling_fit(pairs, FitModel::power).residual_rms;
    const double rl = scaling_fit(pairs, FitModel::power_log).residual_rms;
    CHECK(rp / rl >= 10.0);
}

TEST_CASE("gap certificate at the headline parameters") {
    GapReport rep = gap_certificate(10, {1e-2, 3e-3, 1e-3, 3e-4}, 0.1, 1.0);
    CHECK(rep.bound_below_q_at_min_alpha);
    for (const auto& t : rep.terms) {
        // once alpha is small enough the deficit beats the denominator's
        // tail correction; at alpha = 1e-2 with eps = 0.1 it does not yet
        if (t.alpha <= 3.5e-3) {
            CHECK(t.bound_minus_q < 0.0);
            CHECK(t.bound <= rep.q_sphere_value);  // deficit can be below one ulp of q
        }
        CHECK(std::abs(t.identity_residual) < 1e-6);
        CHECK(std::isfinite(t.rem_r_mass));
        CHECK(std::isfinite(t.rem_r3_grad));
        CHECK(std::isfinite(t.rem_annulus));
        CHECK(std::isfinite(t.rem_cutoff_biharm));
    }
    // at alpha = 1e-3 the deficit is the frozen weyl coefficient over the
    // critical norm factor
    const auto& t3 = rep.terms[2];
    CHECK(t3.alpha == 1e-3);
    CHECK(t3.weyl_term == Catch::Approx(-1.1972433119853012e-11).epsilon(1e-7));
    CHECK(rep.deficit_fit_power.exponent == Catch::Approx(4.0).margin(0.05));
}

TEST_CASE("gap certificate without a Weyl term stays at or above q(S^n)") {
    GapReport rep = gap_certificate(10, {1e-2, 1e-3, 1e-4}, 0.1, 0.0);
    CHECK_FALSE(rep.bound_below_q_at_min_alpha);
    double prev = 1e300;
    for (const auto& t : rep.terms) {
        CHECK(t.bound_minus_q >= 0.0);
        // the bound approaches q from above as alpha -> 0
        CHECK(t.bound_minus_q < prev);
        prev = t.bound_minus_q;
    }
    CHECK(rep.terms.back().bound_minus_q < 1e-12);
}

TEST_CASE("remainder dominance at n = 9: deficit alpha^4 vs remainder ~ alpha^5 log") {
    std::vector<std::pair<double, double>> deficit, rem;
    for (double a : {1e-3, 3e-4, 1e-4}) {
        auto ri = radial_integrals({9, a, 1.0});
        deficit.emplace_back(a, weyl_coefficient_direct({9, a, 1.0}));
        rem.emplace_back(a, ri.r3_grad_ball);
    }
    const double sd = scaling_fit(deficit, FitModel::power).exponent;
    const double sr = scaling_fit(rem, FitModel::power).exponent;
    CHECK(std::abs(sr - sd) >= 0.8);
}

TEST_CASE("gap certificate rejects an empty alpha grid") {
    CHECK_THROWS_AS(gap_certificate(10, {}, 0.1, 1.0), domain_error);
}

TEST_CASE("chart energy of the cut-off bubble matches the radial route") {
    const int n = 8;
    const double alpha = 0.05, eps = 0.25;
    ChartMetric flat{std::make_shared<FlatChart>(n), Box::cube(n, 0.75), DerivMode::analytic, {}};
    CompactField phi{{std::make_shared<CutoffBubbleField>(n, alpha, eps), DerivMode::analytic},
                     Box::cube(n, 2.0 * eps)};
    ChartQuadSpec spec;
    spec.mode = ChartQuadSpec::Mode::polar;
    spec.radial_points = 160;
    const double chart_energy = energy_on_chart(flat, phi, spec);
    auto ri = radial_integrals({n, alpha, eps});
    CHECK(chart_energy == Catch::Approx(ri.biharm_cut_whole).epsilon(1e-4));
}

TEST_CASE("lemma31 result records regime and fitted constant") {
    auto r10 = lemma31_result(10, 1.0, 1e-4);
    CHECK(r10.regime == Lemma31Result::Regime::constant_limit);
    CHECK(r10.fitted_constant == Catch::Approx(37.0 / 140.0).epsilon(1e-7));
    auto r8 = lemma31_result(8, 3.0, 1e-3);
    CHECK(r8.regime == Lemma31Result::Regime::log_divergent);
    CHECK(r8.fitted_constant > 0.0);
    CHECK(r8.fitted_constant == Catch::Approx(7.0 / 3.0).epsilon(0.03));
}

TEST_CASE("gap certificate with W2 = 0 reports empty fits, not NaNs") {
    GapReport rep = gap_certificate(10, {1e-2, 1e-3, 1e-4}, 0.1, 0.0);
    CHECK(rep.deficit_fit_power.exponent == 0.0);
    CHECK(std::isfinite(rep.deficit_fit_power.residual_rms));
}

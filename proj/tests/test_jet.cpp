#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qclab/jet.hpp"

using namespace qclab;

namespace {

// reference composite evaluated with plain doubles
double fval(const std::vector<double>& x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::pow(2.0 / (1.0 + r2), 1.7) * std::exp(0.3 * x[0] * x[1]) + std::log(2.0 + x[2]);
}

Jet ref_jet(const std::vector<double>& x, int order) {
    const int n = static_cast<int>(x.size());
    Jet r2 = Jet::constant(n, order, 0.0);
    for (int k = 0; k < n; ++k) {
        Jet xk = Jet::variable(n, order, k, x[k]);
        r2 += xk * xk;
    }
    Jet a = jet_pow(jet_recip(1.0 + r2) * 2.0, 1.7);
    Jet b = jet_exp(Jet::variable(n, order, 0, x[0]) * Jet::variable(n, order, 1, x[1]) * 0.3);
    Jet c = jet_log(Jet::variable(n, order, 2, x[2]) + 2.0);
    return a * b + c;
}

double fd1(const std::vector<double>& x, int k, double h) {
    auto xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    return (fval(xp) - fval(xm)) / (2.0 * h);
}

double fd2(const std::vector<double>& x, int i, int j, double h) {
    if (i == j) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        return (fval(xp) - 2.0 * fval(x) + fval(xm)) / (h * h);
    }
    auto a = x, b = x, c = x, d = x;
    a[i] += h; a[j] += h;
    b[i] += h; b[j] -= h;
    c[i] -= h; c[j] += h;
    d[i] -= h; d[j] -= h;
    return (fval(a) - fval(b) - fval(c) + fval(d)) / (4.0 * h * h);
}

}  // namespace

TEST_CASE("jet derivatives match finite differences of the closed form") {
    const std::vector<double> x{0.31, -0.22, 0.14, 0.05};
    Jet j = ref_jet(x, 4);
    CHECK(j.value() == Catch::Approx(fval(x)).epsilon(1e-14));
    const double h = 1e-5;
    for (int k = 0; k < 4; ++k)
        CHECK(j.d1(k) == Catch::Approx(fd1(x, k, h)).margin(1e-8));
    for (int i = 0; i < 4; ++i)
        for (int jj = 0; jj < 4; ++jj)
            CHECK(j.d2(i, jj) == Catch::Approx(fd2(x, i, jj, 1e-4)).margin(2e-6));
}

TEST_CASE("jet derivative extraction reproduces partial-derivative jets") {
    const std::vector<double> x{0.31, -0.22, 0.14, 0.05};
    Jet j4 = ref_jet(x, 4);
    Jet dj = j4.derivative(1);
    // value of d_1 f and its gradient against FD of the gradient
    CHECK(dj.value() == Catch::Approx(j4.d1(1)).epsilon(1e-14));
    const double h = 1e-5;
    for (int k = 0; k < 4; ++k) {
        auto xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const double fdmix = (ref_jet(xp, 1).d1(1) - ref_jet(xm, 1).d1(1)) / (2.0 * h);
        CHECK(dj.d1(k) == Catch::Approx(fdmix).margin(1e-8));
    }
}

TEST_CASE("third and fourth order coefficients are consistent under nesting") {
    // d^4 f / dx0^4 extracted two ways: direct coefficient vs nested derivative()
    const std::vector<double> x{0.2, 0.1, -0.3, 0.0};
    Jet j4 = ref_jet(x, 4);
    Jet d3 = j4.derivative(0).derivative(0).derivative(0);
    Jet d2 = j4.derivative(0).derivative(0);
    CHECK(d3.d1(0) == Catch::Approx(d2.d2(0, 0)).epsilon(1e-12));
}

TEST_CASE("jet algebra identities") {
    const std::vector<double> x{0.4, -0.1, 0.2, 0.3};
    Jet f = ref_jet(x, 4);
    Jet one = f * jet_recip(f);
    CHECK(one.value() == Catch::Approx(1.0).epsilon(1e-14));
    for (int i = 1; i < one.size(); ++i) CHECK(std::abs(one[i]) < 1e-12);

    Jet p1 = jet_pow(f, 1.0);
    for (int i = 0; i < f.size(); ++i) CHECK(p1[i] == Catch::Approx(f[i]).margin(1e-13));

    Jet lg = jet_log(jet_exp(f));
    for (int i = 0; i < f.size(); ++i) CHECK(lg[i] == Catch::Approx(f[i]).margin(1e-11));

    Jet s = jet_sqrt(f) * jet_sqrt(f);
    for (int i = 0; i < f.size(); ++i) CHECK(s[i] == Catch::Approx(f[i]).margin(1e-12));
}

TEST_CASE("jet_pow matches chain rule on a bubble-style profile") {
    // (2a/(a^2+r^2))^((n-4)/2) radial derivative vs 1-variable jet
    const double alpha = 0.7;
    const int n = 9;
    const double r0 = 0.43;
    Jet r = Jet::variable(1, 4, 0, r0);
    Jet u = jet_pow(jet_recip(r * r + alpha * alpha) * (2.0 * alpha), 0.5 * (n - 4));
    const double expect_up = -(n - 4.0) * r0 / (alpha * alpha + r0 * r0) * u.value();
    CHECK(u.d1(0) == Catch::Approx(expect_up).epsilon(1e-12));
    const double expect_upp =
        (n - 4.0) * ((n - 3.0) * r0 * r0 - alpha * alpha) / sqr(alpha * alpha + r0 * r0) * u.value();
    CHECK(u.d2(0, 0) == Catch::Approx(expect_upp).epsilon(1e-12));
}

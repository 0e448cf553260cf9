#pragma once

// Pointwise curvature of chart metrics and the fourth-order conformally
// covariant operator
//
//   P_g u = Delta_g^2 u + div_g{(4 A_g - (n-2) sigma_1(A_g) g)(grad u, .)}
//           + (n-4)/2 Q_g u,
//
//   Q_g = -Delta_g R_g / (2(n-1))
//         + (n^3-4n^2+16n-16) R_g^2 / (8(n-1)^2(n-2)^2)
//         - 2 |Ric_g|^2 / (n-2)^2,
//
// with A_g = (Ric_g - R_g g / (2(n-1)))/(n-2) and Delta_g = g^{ij} nabla_i
// nabla_j (negative spectrum on compact manifolds).
//
// The tensor algebra below is written once, generic over the scalar ring S:
// S = double consumes finite-difference derivative values of g, while
// S = Jet (order 2) consumes exact derivative jets and delivers R_g as a jet,
// whose second derivatives give Delta_g R_g with no stencil error.

#include <vector>

#include "qclab/chart.hpp"
#include "qclab/quadrature.hpp"

namespace qclab {

namespace detail {
inline double ring_value(double x) { return x; }
inline double ring_value(const Jet& x) { return x.value(); }
inline double ring_recip(double x) { return 1.0 / x; }
inline Jet ring_recip(const Jet& x) { return jet_recip(x); }
template <class S>
S ring_zero(const S& like) {
    return like * 0.0;
}
}  // namespace detail

// Metric derivative data at a point: g, dg[k](i,j) = d_k g_ij,
// d2g[k][l](i,j) = d_k d_l g_ij. Entries are double (fd mode) or order-2 jets
// (analytic mode).
template <class S>
struct MetricDeriv2 {
    int n = 0;
    std::vector<S> g;    // n*n
    std::vector<S> dg;   // n*n*n, [k*n*n + i*n + j]
    std::vector<S> d2g;  // n*n*n*n, [((k*n + l)*n + i)*n + j]

    const S& G(int i, int j) const { return g[i * n + j]; }
    const S& dG(int k, int i, int j) const { return dg[(k * n + i) * n + j]; }
    const S& d2G(int k, int l, int i, int j) const { return d2g[((k * n + l) * n + i) * n + j]; }
};

// Gauss-Jordan inverse over the ring S; fails if a value-part pivot is not
// positive (the metric must be SPD along the elimination).
template <class S>
std::vector<S> invert_spd(int n, const std::vector<S>& m) {
    std::vector<S> a = m;
    std::vector<S> inv(n * n, detail::ring_zero(m[0]));
    for (int i = 0; i < n; ++i) inv[i * n + i] = inv[i * n + i] + 1.0;
    for (int col = 0; col < n; ++col) {
        if (detail::ring_value(a[col * n + col]) <= 0.0)
            throw domain_error("metric is not positive definite at the queried point");
        S piv = detail::ring_recip(a[col * n + col]);
        for (int j = 0; j < n; ++j) {
            a[col * n + j] = a[col * n + j] * piv;
            inv[col * n + j] = inv[col * n + j] * piv;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            S f = a[r * n + col];
            for (int j = 0; j < n; ++j) {
                a[r * n + j] = a[r * n + j] - f * a[col * n + j];
                inv[r * n + j] = inv[r * n + j] - f * inv[col * n + j];
            }
        }
    }
    return inv;
}

// Connection and contracted curvature over the ring S.
template <class S>
struct CurvatureCore {
    int n;
    std::vector<S> ginv;      // n*n
    std::vector<S> gamma;     // n*n*n, gamma[k](i,j) = Gamma^k_ij
    std::vector<S> dginv;     // n*n*n, dginv[m](i,j) = d_m g^ij
    std::vector<S> ric;       // n*n
    S scalar;                 // R
    std::vector<S> schouten;  // n*n
    S sigma1;                 // tr_g A

    const S& Ginv(int i, int j) const { return ginv[i * n + j]; }
    const S& Gam(int k, int i, int j) const { return gamma[(k * n + i) * n + j]; }
    const S& dGinv(int m, int i, int j) const { return dginv[(m * n + i) * n + j]; }

    explicit CurvatureCore(const MetricDeriv2<S>& md) : n(md.n) {
        const S zero = detail::ring_zero(md.g[0]);
        ginv = invert_spd(n, md.g);

        gamma.assign(n * n * n, zero);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    S s = zero;
                    for (int l = 0; l < n; ++l)
                        s += Ginv(k, l) * (md.dG(i, j, l) + md.dG(j, i, l) - md.dG(l, i, j));
                    gamma[(k * n + i) * n + j] = s * 0.5;
                    gamma[(k * n + j) * n + i] = gamma[(k * n + i) * n + j];
                }

        // d_m g^ij = -g^ia (d_m g_ab) g^bj, with the inner contraction hoisted
        dginv.assign(n * n * n, zero);
        {
            std::vector<S> W(n * n * n, zero);  // W[m][a][j] = (d_m g_ab) g^bj
            for (int m = 0; m < n; ++m)
                for (int a = 0; a < n; ++a)
                    for (int j = 0; j < n; ++j) {
                        S t = zero;
                        for (int b = 0; b < n; ++b) t += md.dG(m, a, b) * Ginv(b, j);
                        W[(m * n + a) * n + j] = t;
                    }
            for (int m = 0; m < n; ++m)
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        S s = zero;
                        for (int a = 0; a < n; ++a) s += Ginv(i, a) * W[(m * n + a) * n + j];
                        dginv[(m * n + i) * n + j] = -s;
                        dginv[(m * n + j) * n + i] = dginv[(m * n + i) * n + j];
                    }
        }

        // Ric_{sig nu} = d_mu Gamma^mu_{nu sig} - d_nu Gamma^mu_{mu sig}
        //              + Gamma^mu_{mu lam} Gamma^lam_{nu sig}
        //              - Gamma^mu_{nu lam} Gamma^lam_{mu sig}
        std::vector<S> C(n, zero);  // C_lam = Gamma^mu_{mu lam} = d_lam log sqrt(det g)
        for (int lam = 0; lam < n; ++lam) {
            S s = zero;
            for (int mu = 0; mu < n; ++mu) s += Gam(mu, mu, lam);
            C[lam] = s;
        }
        auto dGamma = [&](int m, int rho, int i, int j) {
            S s = zero;
            for (int l = 0; l < n; ++l) {
                s += dGinv(m, rho, l) * (md.dG(i, j, l) + md.dG(j, i, l) - md.dG(l, i, j));
                s += Ginv(rho, l) * (md.d2G(m, i, j, l) + md.d2G(m, j, i, l) - md.d2G(m, l, i, j));
            }
            return s * 0.5;
        };
        ric.assign(n * n, zero);
        for (int sig = 0; sig < n; ++sig)
            for (int nu = sig; nu < n; ++nu) {
                S s = zero;
                for (int mu = 0; mu < n; ++mu) {
                    s += dGamma(mu, mu, nu, sig);
                    s -= dGamma(nu, mu, mu, sig);
                }
                for (int lam = 0; lam < n; ++lam) {
                    s += C[lam] * Gam(lam, nu, sig);
                    S t = zero;
                    for (int mu = 0; mu < n; ++mu) t += Gam(mu, nu, lam) * Gam(lam, mu, sig);
                    s -= t;
                }
                ric[sig * n + nu] = s;
                ric[nu * n + sig] = s;
            }

        scalar = zero;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) scalar += Ginv(i, j) * ric[i * n + j];

        schouten.assign(n * n, zero);
        const double c = 1.0 / (n - 2.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                schouten[i * n + j] = (ric[i * n + j] - md.G(i, j) * scalar * (0.5 / (n - 1.0))) * c;
        sigma1 = zero;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) sigma1 += Ginv(i, j) * schouten[i * n + j];
    }
};

struct CurvaturePack {
    std::vector<double> point;
    int n = 0;
    double R = 0.0;
    double laplacian_R = 0.0;
    double Q = 0.0;
    double sigma1A = 0.0;
    std::vector<double> ric;       // n*n
    std::vector<double> schouten;  // n*n
    std::vector<double> riem;      // n^4, R_{rho sig mu nu}; Ric contracts slots 1,3
    std::vector<double> weyl;      // n^4
    std::vector<double> ginv;      // n*n
    double ric_norm2 = 0.0;        // |Ric|_g^2
    double weyl_norm2 = 0.0;       // |W|_g^2

    double riem_at(int r, int s, int m, int u) const { return riem[((r * n + s) * n + m) * n + u]; }
    double weyl_at(int r, int s, int m, int u) const { return weyl[((r * n + s) * n + m) * n + u]; }
};

inline double q_from_parts(int n, double R, double ric_norm2, double lap_R) {
    const double c1 = -0.5 / (n - 1.0);
    const double c2 = (std::pow(static_cast<double>(n), 3) - 4.0 * n * n + 16.0 * n - 16.0) /
                      (8.0 * sqr(n - 1.0) * sqr(n - 2.0));
    const double c3 = -2.0 / sqr(n - 2.0);
    return c1 * lap_R + c2 * R * R + c3 * ric_norm2;
}

// ---------------------------------------------------------------------------
// derivative-data producers

namespace detail {

inline void metric_jets4(const ChartMetric& chart, const std::vector<double>& x, JetMat& g4) {
    if (!chart.geom->has_jets())
        throw domain_error("analytic derivative mode requested for chart without closed-form jets");
    chart.geom->eval_jets(x, kJetMaxOrder, g4);
}

inline MetricDeriv2<Jet> metric_deriv_jets(const ChartMetric& chart, const std::vector<double>& x) {
    const int n = chart.dim();
    JetMat g4;
    metric_jets4(chart, x, g4);
    MetricDeriv2<Jet> md;
    md.n = n;
    md.g.reserve(n * n);
    for (const Jet& j : g4) md.g.push_back(j.truncated(2));
    md.dg.reserve(n * n * n);
    std::vector<Jet> dg3;  // order-3 first derivatives, reused for d2g
    dg3.reserve(n * n * n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dg3.push_back(g4[i * n + j].derivative(k));
    for (const Jet& j : dg3) md.dg.push_back(j.truncated(2));
    md.d2g.reserve(n * n * n * n);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    md.d2g.push_back(dg3[(k * n + i) * n + j].derivative(l).truncated(2));
    return md;
}

inline MetricDeriv2<double> metric_deriv_fd(const ChartMetric& chart, const std::vector<double>& x) {
    const int n = chart.dim();
    const double h = chart.fd_step_low();
    require(h > 0.0, "finite-difference step underflow");
    MetricDeriv2<double> md;
    md.n = n;
    auto ev = [&](const std::vector<double>& y) {
        std::vector<double> g;
        chart.geom->eval(y, g);
        return g;
    };
    md.g = ev(x);
    md.dg.assign(n * n * n, 0.0);
    md.d2g.assign(n * n * n * n, 0.0);
    std::vector<std::vector<double>> gp(n), gm(n);
    std::vector<double> y = x;
    for (int k = 0; k < n; ++k) {
        y[k] = x[k] + h;
        gp[k] = ev(y);
        y[k] = x[k] - h;
        gm[k] = ev(y);
        y[k] = x[k];
        for (int e = 0; e < n * n; ++e) {
            md.dg[k * n * n + e] = (gp[k][e] - gm[k][e]) / (2.0 * h);
            md.d2g[(k * n + k) * n * n + e] = (gp[k][e] - 2.0 * md.g[e] + gm[k][e]) / (h * h);
        }
    }
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            y[k] = x[k] + h;
            y[l] = x[l] + h;
            auto gpp = ev(y);
            y[l] = x[l] - h;
            auto gpm = ev(y);
            y[k] = x[k] - h;
            auto gmm = ev(y);
            y[l] = x[l] + h;
            auto gmp = ev(y);
            y[k] = x[k];
            y[l] = x[l];
            for (int e = 0; e < n * n; ++e) {
                const double v = (gpp[e] - gpm[e] - gmp[e] + gmm[e]) / (4.0 * h * h);
                md.d2g[(k * n + l) * n * n + e] = v;
                md.d2g[(l * n + k) * n * n + e] = v;
            }
        }
    return md;
}

// Riemann (0,4) and Weyl from plain derivative values.
inline void riemann_weyl(const MetricDeriv2<double>& md, const CurvatureCore<double>& core,
                         CurvaturePack& pack) {
    const int n = md.n;
    auto dGamma = [&](int m, int rho, int i, int j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
            s += core.dGinv(m, rho, l) * (md.dG(i, j, l) + md.dG(j, i, l) - md.dG(l, i, j));
            s += core.Ginv(rho, l) * (md.d2G(m, i, j, l) + md.d2G(m, j, i, l) - md.d2G(m, l, i, j));
        }
        return 0.5 * s;
    };
    std::vector<double> rup(n * n * n * n, 0.0);  // R^rho_{sig mu nu}
    for (int rho = 0; rho < n; ++rho)
        for (int sig = 0; sig < n; ++sig)
            for (int mu = 0; mu < n; ++mu)
                for (int nu = mu + 1; nu < n; ++nu) {
                    double s = dGamma(mu, rho, nu, sig) - dGamma(nu, rho, mu, sig);
                    for (int lam = 0; lam < n; ++lam)
                        s += core.Gam(rho, mu, lam) * core.Gam(lam, nu, sig) -
                             core.Gam(rho, nu, lam) * core.Gam(lam, mu, sig);
                    rup[((rho * n + sig) * n + mu) * n + nu] = s;
                    rup[((rho * n + sig) * n + nu) * n + mu] = -s;
                }
    pack.riem.assign(n * n * n * n, 0.0);
    for (int rho = 0; rho < n; ++rho)
        for (int sig = 0; sig < n; ++sig)
            for (int mu = 0; mu < n; ++mu)
                for (int nu = 0; nu < n; ++nu) {
                    double s = 0.0;
                    for (int lam = 0; lam < n; ++lam)
                        s += md.G(rho, lam) * rup[((lam * n + sig) * n + mu) * n + nu];
                    pack.riem[((rho * n + sig) * n + mu) * n + nu] = s;
                }
    // Weyl = Riem - A (kulkarni-nomizu) g in the slot pairing (1,3)(2,4)
    pack.weyl.assign(n * n * n * n, 0.0);
    auto A = [&](int i, int j) { return pack.schouten[i * n + j]; };
    auto G = [&](int i, int j) { return md.G(i, j); };
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
            for (int m = 0; m < n; ++m)
                for (int u = 0; u < n; ++u) {
                    const double kn = A(r, m) * G(s, u) + G(r, m) * A(s, u) - A(r, u) * G(s, m) -
                                      G(r, u) * A(s, m);
                    pack.weyl[((r * n + s) * n + m) * n + u] =
                        pack.riem[((r * n + s) * n + m) * n + u] - kn;
                }
    // g-norms; raise one slot at a time to keep this O(n^5)
    auto raise_slot = [&](const std::vector<double>& T, int slot) {
        std::vector<double> out(T.size(), 0.0);
        const int stride[4] = {n * n * n, n * n, n, 1};
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    for (int d = 0; d < n; ++d) {
                        const int idx[4] = {a, b, c, d};
                        int base = 0;
                        for (int s = 0; s < 4; ++s)
                            if (s != slot) base += idx[s] * stride[s];
                        double acc = 0.0;
                        for (int m = 0; m < n; ++m)
                            acc += core.Ginv(idx[slot], m) * T[base + m * stride[slot]];
                        out[base + idx[slot] * stride[slot]] = acc;
                    }
        return out;
    };
    auto norm2_4 = [&](const std::vector<double>& T) {
        std::vector<double> up = T;
        for (int s = 0; s < 4; ++s) up = raise_slot(up, s);
        double acc = 0.0;
        for (std::size_t i = 0; i < T.size(); ++i) acc += up[i] * T[i];
        return acc;
    };
    pack.weyl_norm2 = norm2_4(pack.weyl);
    double rn = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) s += core.Ginv(i, a) * core.Ginv(j, b) * pack.ric[a * n + b];
            rn += s * pack.ric[i * n + j];
        }
    pack.ric_norm2 = rn;
}

inline MetricDeriv2<double> values_of(const MetricDeriv2<Jet>& md) {
    MetricDeriv2<double> v;
    v.n = md.n;
    v.g.reserve(md.g.size());
    for (const Jet& j : md.g) v.g.push_back(j.value());
    v.dg.reserve(md.dg.size());
    for (const Jet& j : md.dg) v.dg.push_back(j.value());
    v.d2g.reserve(md.d2g.size());
    for (const Jet& j : md.d2g) v.d2g.push_back(j.value());
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// operations

inline double required_margin(const ChartMetric& chart, bool fourth_order_op) {
    if (chart.mode == DerivMode::analytic) return 0.0;
    return chart.fd_step_low() * 1.5 + (fourth_order_op ? 2.5 * chart.fd_step_high() : 0.0);
}

// Levi-Civita symbols Gamma^k_ij at x.
inline std::vector<double> christoffel(const ChartMetric& chart, const std::vector<double>& x) {
    require(static_cast<int>(x.size()) == chart.dim(), "christoffel: bad point dimension");
    require(chart.domain.contains(x, required_margin(chart, false)),
            "christoffel: point outside domain (stencil margin)");
    if (chart.mode == DerivMode::analytic) {
        auto md = detail::metric_deriv_jets(chart, x);
        CurvatureCore<Jet> core(md);
        std::vector<double> out(core.gamma.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = core.gamma[i].value();
        return out;
    }
    auto md = detail::metric_deriv_fd(chart, x);
    CurvatureCore<double> core(md);
    return core.gamma;
}

namespace detail {
// scalar curvature value at a point, fd-mode metric data (for nested stencils)
inline double scalar_curvature_fd(const ChartMetric& chart, const std::vector<double>& x) {
    auto md = metric_deriv_fd(chart, x);
    CurvatureCore<double> core(md);
    return core.scalar;
}
}  // namespace detail

inline CurvaturePack curvature_at(const ChartMetric& chart, const std::vector<double>& x) {
    const int n = chart.dim();
    require(static_cast<int>(x.size()) == n, "curvature_at: bad point dimension");
    require(chart.domain.contains(x, required_margin(chart, true)),
            "curvature_at: point outside domain (stencil margin)");
    CurvaturePack pack;
    pack.point = x;
    pack.n = n;
    if (chart.mode == DerivMode::analytic) {
        auto md = detail::metric_deriv_jets(chart, x);
        CurvatureCore<Jet> core(md);
        pack.R = core.scalar.value();
        pack.sigma1A = core.sigma1.value();
        pack.ric.resize(n * n);
        pack.schouten.resize(n * n);
        pack.ginv.resize(n * n);
        for (int e = 0; e < n * n; ++e) {
            pack.ric[e] = core.ric[e].value();
            pack.schouten[e] = core.schouten[e].value();
            pack.ginv[e] = core.ginv[e].value();
        }
        // Delta_g R from the order-2 jet of R
        double lap = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double t = core.scalar.d2(i, j);
                for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j).value() * core.scalar.d1(k);
                lap += core.ginv[i * n + j].value() * t;
            }
        pack.laplacian_R = lap;
        auto vals = detail::values_of(md);
        CurvatureCore<double> vcore(vals);
        detail::riemann_weyl(vals, vcore, pack);
    } else {
        auto md = detail::metric_deriv_fd(chart, x);
        CurvatureCore<double> core(md);
        pack.R = core.scalar;
        pack.sigma1A = core.sigma1;
        pack.ric = core.ric;
        pack.schouten = core.schouten;
        pack.ginv = core.ginv;
        detail::riemann_weyl(md, core, pack);
        // nested central stencil over the computed scalar curvature
        const double h = chart.fd_step_high();
        require(h > 0.0, "finite-difference step underflow");
        std::vector<double> y = x;
        const double r0 = core.scalar;
        std::vector<double> d1(n), d2v(n * n);
        for (int i = 0; i < n; ++i) {
            y[i] = x[i] + h;
            const double rp = detail::scalar_curvature_fd(chart, y);
            y[i] = x[i] - h;
            const double rm = detail::scalar_curvature_fd(chart, y);
            y[i] = x[i];
            d1[i] = (rp - rm) / (2.0 * h);
            d2v[i * n + i] = (rp - 2.0 * r0 + rm) / (h * h);
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                y[i] = x[i] + h;
                y[j] = x[j] + h;
                const double rpp = detail::scalar_curvature_fd(chart, y);
                y[j] = x[j] - h;
                const double rpm = detail::scalar_curvature_fd(chart, y);
                y[i] = x[i] - h;
                const double rmm = detail::scalar_curvature_fd(chart, y);
                y[j] = x[j] + h;
                const double rmp = detail::scalar_curvature_fd(chart, y);
                y[i] = x[i];
                y[j] = x[j];
                d2v[i * n + j] = d2v[j * n + i] = (rpp - rpm - rmp + rmm) / (4.0 * h * h);
            }
        double lap = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double t = d2v[i * n + j];
                for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j) * d1[k];
                lap += core.Ginv(i, j) * t;
            }
        pack.laplacian_R = lap;
    }
    pack.Q = q_from_parts(n, pack.R, pack.ric_norm2, pack.laplacian_R);
    return pack;
}

// ---------------------------------------------------------------------------
// Paneitz operator action

namespace detail {

struct PaneitzJets {
    Jet lap_u;   // order 2: Delta_g u as a jet
    double lap2;  // Delta_g^2 u
    double div_term;
    double q;
    double u_val;
};

inline PaneitzJets paneitz_parts_analytic(const ChartMetric& chart, const ScalarField& u,
                                          const std::vector<double>& x) {
    const int n = chart.dim();
    if (!u.def->has_jets())
        throw domain_error("analytic derivative mode requested for field without closed-form jets");
    auto md = metric_deriv_jets(chart, x);
    CurvatureCore<Jet> core(md);
    Jet u4 = u.def->eval_jet(x, kJetMaxOrder);

    // Delta_g u as an order-2 jet
    std::vector<Jet> du(n), du3(n);
    for (int k = 0; k < n; ++k) {
        du3[k] = u4.derivative(k);
        du[k] = du3[k].truncated(2);
    }
    Jet lap = Jet::constant(n, 2, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet hess = du3[i].derivative(j).truncated(2);
            Jet t = hess;
            for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j) * du[k];
            lap += core.Ginv(i, j) * t;
        }
    // Delta_g (Delta_g u) from the jet of Delta_g u
    double lap2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double t = lap.d2(i, j);
            for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j).value() * lap.d1(k);
            lap2 += core.Ginv(i, j).value() * t;
        }

    // div_g{ B(grad u, .) } with B = 4A - (n-2) sigma_1 g (indices raised);
    // raise the Schouten tensor one slot at a time
    const Jet zero1 = Jet::constant(n, 1, 0.0);
    std::vector<Jet> half(n * n, zero1), Araised(n * n, zero1);
    for (int a = 0; a < n; ++a)
        for (int j = 0; j < n; ++j) {
            Jet t = zero1;
            for (int b = 0; b < n; ++b)
                t += core.Ginv(j, b).truncated(1) * core.schouten[a * n + b].truncated(1);
            half[a * n + j] = t;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet t = zero1;
            for (int a = 0; a < n; ++a) t += core.Ginv(i, a).truncated(1) * half[a * n + j];
            Araised[i * n + j] = t;
        }
    Jet sigma1_1 = core.sigma1.truncated(1);
    std::vector<Jet> V(n, zero1);
    for (int i = 0; i < n; ++i) {
        Jet vi = zero1;
        for (int j = 0; j < n; ++j) {
            Jet Bij = Araised[i * n + j] * 4.0 - core.Ginv(i, j).truncated(1) * sigma1_1 * (n - 2.0);
            vi += Bij * du[j].truncated(1);
        }
        V[i] = vi;
    }
    double div = 0.0;
    for (int i = 0; i < n; ++i) {
        div += V[i].d1(i);
        for (int k = 0; k < n; ++k) div += core.Gam(k, k, i).value() * V[i].value();
    }

    // Q at x using the exact Delta_g R
    double lapR = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double t = core.scalar.d2(i, j);
            for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j).value() * core.scalar.d1(k);
            lapR += core.ginv[i * n + j].value() * t;
        }
    double ric2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    s += core.Ginv(i, a).value() * core.Ginv(j, b).value() * core.ric[a * n + b].value();
            ric2 += s * core.ric[i * n + j].value();
        }
    PaneitzJets out;
    out.lap_u = lap;
    out.lap2 = lap2;
    out.div_term = div;
    out.q = q_from_parts(n, core.scalar.value(), ric2, lapR);
    out.u_val = u4.value();
    return out;
}

// pointwise Delta_g u with fd derivative data for u and g
inline double laplacian_fd(const ChartMetric& chart, const ScalarField& u,
                           const std::vector<double>& x) {
    const int n = chart.dim();
    auto md = metric_deriv_fd(chart, x);
    CurvatureCore<double> core(md);
    const double h = chart.fd_step_low();
    std::vector<double> y = x;
    const double u0 = u(x);
    std::vector<double> d1(n), d2(n * n);
    std::vector<double> up(n), um(n);
    for (int i = 0; i < n; ++i) {
        y[i] = x[i] + h;
        up[i] = u(y);
        y[i] = x[i] - h;
        um[i] = u(y);
        y[i] = x[i];
        d1[i] = (up[i] - um[i]) / (2.0 * h);
        d2[i * n + i] = (up[i] - 2.0 * u0 + um[i]) / (h * h);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            y[i] = x[i] + h;
            y[j] = x[j] + h;
            const double upp = u(y);
            y[j] = x[j] - h;
            const double upm = u(y);
            y[i] = x[i] - h;
            const double umm = u(y);
            y[j] = x[j] + h;
            const double ump = u(y);
            y[i] = x[i];
            y[j] = x[j];
            d2[i * n + j] = d2[j * n + i] = (upp - upm - ump + umm) / (4.0 * h * h);
        }
    double lap = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double t = d2[i * n + j];
            for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j) * d1[k];
            lap += core.Ginv(i, j) * t;
        }
    return lap;
}

}  // namespace detail

// Delta_g u at x (respects the chart's derivative mode).
namespace detail {
inline bool analytic_mode(const ChartMetric& chart, const ScalarField& u) {
    return chart.mode == DerivMode::analytic && u.mode == DerivMode::analytic;
}
}  // namespace detail

inline double laplace_beltrami(const ChartMetric& chart, const ScalarField& u,
                               const std::vector<double>& x) {
    require(chart.domain.contains(x, required_margin(chart, false)),
            "laplace_beltrami: point outside domain (stencil margin)");
    if (detail::analytic_mode(chart, u))
        return detail::paneitz_parts_analytic(chart, u, x).lap_u.value();
    return detail::laplacian_fd(chart, u, x);
}

inline double paneitz_apply(const ChartMetric& chart, const ScalarField& u,
                            const std::vector<double>& x) {
    const int n = chart.dim();
    require(static_cast<int>(x.size()) == n, "paneitz_apply: bad point dimension");
    require(chart.domain.contains(x, required_margin(chart, true)),
            "paneitz_apply: point outside domain (stencil margin)");
    if (detail::analytic_mode(chart, u)) {
        auto parts = detail::paneitz_parts_analytic(chart, u, x);
        return parts.lap2 + parts.div_term + 0.5 * (n - 4.0) * parts.q * parts.u_val;
    }
    // fd mode: outer stencils over computed pointwise fields
    const double h = chart.fd_step_high();
    std::vector<double> y = x;
    const double w0 = detail::laplacian_fd(chart, u, x);
    double lap2 = 0.0;
    // Delta_g w: needs full Hessian of w when g has off-diagonal inverse
    auto md = detail::metric_deriv_fd(chart, x);
    CurvatureCore<double> core(md);
    std::vector<double> d1(n), d2(n * n);
    for (int i = 0; i < n; ++i) {
        y[i] = x[i] + h;
        const double wp = detail::laplacian_fd(chart, u, y);
        y[i] = x[i] - h;
        const double wm = detail::laplacian_fd(chart, u, y);
        y[i] = x[i];
        d1[i] = (wp - wm) / (2.0 * h);
        d2[i * n + i] = (wp - 2.0 * w0 + wm) / (h * h);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            y[i] = x[i] + h;
            y[j] = x[j] + h;
            const double wpp = detail::laplacian_fd(chart, u, y);
            y[j] = x[j] - h;
            const double wpm = detail::laplacian_fd(chart, u, y);
            y[i] = x[i] - h;
            const double wmm = detail::laplacian_fd(chart, u, y);
            y[j] = x[j] + h;
            const double wmp = detail::laplacian_fd(chart, u, y);
            y[i] = x[i];
            y[j] = x[j];
            d2[i * n + j] = d2[j * n + i] = (wpp - wpm - wmp + wmm) / (4.0 * h * h);
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double t = d2[i * n + j];
            for (int k = 0; k < n; ++k) t -= core.Gam(k, i, j) * d1[k];
            lap2 += core.Ginv(i, j) * t;
        }
    // divergence term via d_i(sqrt(g) V^i)/sqrt(g)
    auto sqrtdet = [&](const std::vector<double>& z) {
        std::vector<double> g;
        chart.geom->eval(z, g);
        // determinant by LU (n is small)
        std::vector<double> a = g;
        double det = 1.0;
        for (int c = 0; c < n; ++c) {
            det *= a[c * n + c];
            for (int r = c + 1; r < n; ++r) {
                const double f = a[r * n + c] / a[c * n + c];
                for (int cc = c; cc < n; ++cc) a[r * n + cc] -= f * a[c * n + cc];
            }
        }
        return std::sqrt(det);
    };
    auto Vfield = [&](const std::vector<double>& z, int i) {
        auto mdz = detail::metric_deriv_fd(chart, z);
        CurvatureCore<double> cz(mdz);
        const double hh = chart.fd_step_low();
        std::vector<double> zz = z;
        double vi = 0.0;
        for (int j = 0; j < n; ++j) {
            zz[j] = z[j] + hh;
            const double upj = u(zz);
            zz[j] = z[j] - hh;
            const double umj = u(zz);
            zz[j] = z[j];
            const double duj = (upj - umj) / (2.0 * hh);
            double Bij = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) Bij += cz.Ginv(i, a) * cz.Ginv(j, b) * cz.schouten[a * n + b];
            Bij = 4.0 * Bij - (n - 2.0) * cz.sigma1 * cz.Ginv(i, j);
            vi += Bij * duj;
        }
        return vi * sqrtdet(z);
    };
    double div = 0.0;
    const double sg0 = sqrtdet(x);
    for (int i = 0; i < n; ++i) {
        y[i] = x[i] + h;
        const double vp = Vfield(y, i);
        y[i] = x[i] - h;
        const double vm = Vfield(y, i);
        y[i] = x[i];
        div += (vp - vm) / (2.0 * h);
    }
    div /= sg0;
    CurvaturePack pack = curvature_at(chart, x);
    return lap2 + div + 0.5 * (n - 4.0) * pack.Q * u(x);
}

// |P_g(phi u)(x) - u(x)^((n+4)/(n-4)) P_gbar(phi)(x)| with gbar = u^(4/(n-4)) g.
inline double conformal_covariance_residual(const ChartMetric& chart, const ScalarField& u,
                                            const ScalarField& phi, const std::vector<double>& x) {
    const int n = chart.dim();
    const double uval = u(x);
    require(uval > 0.0, "conformal factor must be positive at the evaluation point");
    ScalarField prod{std::make_shared<ProductField>(phi.def, u.def), u.mode};
    const double lhs = paneitz_apply(chart, prod, x);
    ChartMetric gbar = chart;
    gbar.geom = std::make_shared<ConformalChart>(chart.geom, u.def);
    const double rhs = std::pow(uval, (n + 4.0) / (n - 4.0)) * paneitz_apply(gbar, phi, x);
    return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// chart energies  E[u] = int u P_g u sqrt(det g) dx

struct ChartQuadSpec {
    enum class Mode { tensor, polar } mode = Mode::tensor;
    int points = 8;           // per axis (tensor mode)
    int radial_points = 200;  // polar mode, which assumes rotational symmetry
};

inline double energy_on_chart(const ChartMetric& chart, const CompactField& u,
                              const ChartQuadSpec& spec = {}) {
    const int n = chart.dim();
    require(u.support.dim() == n, "energy_on_chart: bad support dimension");
    for (int k = 0; k < n; ++k)
        require(u.support.lo[k] > chart.domain.lo[k] && u.support.hi[k] < chart.domain.hi[k],
                "energy_on_chart: support touches the chart boundary");
    auto integrand = [&](const std::vector<double>& x) {
        const double uv = u.field(x);
        if (uv == 0.0) return 0.0;
        std::vector<double> g;
        chart.geom->eval(x, g);
        std::vector<double> a = g;
        double det = 1.0;
        for (int c = 0; c < n; ++c) {
            det *= a[c * n + c];
            for (int r = c + 1; r < n; ++r) {
                const double f = a[r * n + c] / a[c * n + c];
                for (int cc = c; cc < n; ++cc) a[r * n + cc] -= f * a[c * n + cc];
            }
        }
        return uv * paneitz_apply(chart, u.field, x) * std::sqrt(det);
    };
    if (spec.mode == ChartQuadSpec::Mode::tensor) {
        std::vector<std::vector<double>> breaks(n);
        TensorRule rule(u.support.lo, u.support.hi, spec.points, breaks);
        require(rule.node_count() <= 2e8,
                "energy_on_chart: tensor rule too large; reduce points or use polar mode");
        return rule.integrate(integrand);
    }
    // polar: assumes rotational symmetry about the support center
    std::vector<double> center(n);
    double rmax = 0.0;
    for (int k = 0; k < n; ++k) {
        center[k] = 0.5 * (u.support.lo[k] + u.support.hi[k]);
        rmax = std::max(rmax, 0.5 * (u.support.hi[k] - u.support.lo[k]));
    }
    Rule1d base = gauss_legendre(spec.radial_points);
    Rule1d rr = scaled_rule(base, 1e-9 * rmax, rmax);
    double sum = 0.0;
    std::vector<double> x = center;
    for (std::size_t i = 0; i < rr.x.size(); ++i) {
        x[0] = center[0] + rr.x[i];
        sum += rr.w[i] * std::pow(rr.x[i], n - 1) * integrand(x);
    }
    return sphere_volume(n - 1) * sum;
}

// ---------------------------------------------------------------------------
// algebraic-invariant residuals (test support, but part of the public checks)

inline double riemann_symmetry_residual(const CurvaturePack& p) {
    const int n = p.n;
    double scale = 0.0, worst = 0.0;
    for (double v : p.riem) scale = std::max(scale, std::abs(v));
    scale += 1.0;
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
            for (int m = 0; m < n; ++m)
                for (int u = 0; u < n; ++u) {
                    const double v = p.riem_at(r, s, m, u);
                    worst = std::max(worst, std::abs(v + p.riem_at(s, r, m, u)));
                    worst = std::max(worst, std::abs(v + p.riem_at(r, s, u, m)));
                    worst = std::max(worst, std::abs(v - p.riem_at(m, u, r, s)));
                    // first Bianchi in the last three slots
                    worst = std::max(worst, std::abs(v + p.riem_at(m, s, u, r) + p.riem_at(u, s, r, m)));
                }
    return worst / scale;
}

inline double weyl_trace_residual(const CurvaturePack& p) {
    const int n = p.n;
    const double wnorm = std::sqrt(std::max(p.weyl_norm2, 0.0)) + 1.0;
    double worst = 0.0;
    // contract each of the six slot pairs with g^{-1}; the leftover (0,2)
    // tensor must vanish, measured in its g-norm
    for (int slota = 0; slota < 3; ++slota)
        for (int slotb = slota + 1; slotb < 4; ++slotb) {
            std::vector<double> T(n * n, 0.0);
            int idx[4];
            for (int f1 = 0; f1 < n; ++f1)
                for (int f2 = 0; f2 < n; ++f2) {
                    double acc = 0.0;
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b) {
                            int fpos = 0;
                            const int frees[2] = {f1, f2};
                            for (int s = 0; s < 4; ++s) {
                                if (s == slota)
                                    idx[s] = a;
                                else if (s == slotb)
                                    idx[s] = b;
                                else
                                    idx[s] = frees[fpos++];
                            }
                            acc += p.ginv[a * n + b] * p.weyl_at(idx[0], idx[1], idx[2], idx[3]);
                        }
                    T[f1 * n + f2] = acc;
                }
            double norm2 = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b)
                            s += p.ginv[i * n + a] * p.ginv[j * n + b] * T[a * n + b];
                    norm2 += s * T[i * n + j];
                }
            worst = std::max(worst, std::sqrt(std::max(norm2, 0.0)));
        }
    return worst / wnorm;
}

}  // namespace qclab

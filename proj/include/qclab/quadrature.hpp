#pragma once

// 1D adaptive Gauss-Kronrod integration, Gauss-Legendre rule generation,
// composite tensor-product rules over coordinate boxes, and Gauss-Gegenbauer
// rules (Golub-Welsch) for the zonal measure on S^n.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "qclab/common.hpp"

namespace qclab {

// Nodes/weights of the 15-point Kronrod rule with embedded 7-point Gauss rule
// (values from QUADPACK, evaluated by L. W. Fullerton in 80-digit arithmetic).
namespace gk15 {
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace gk15

struct GkResult {
    double value;
    double error;
};

template <class F>
GkResult gk15_panel(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double resg = gk15::wg[3] * fc;
    double resk = gk15::wgk[7] * fc;
    double resabs = std::abs(resk);
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk15::xgk[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        const double fsum = fv1[j] + fv2[j];
        if (j % 2 == 1) resg += gk15::wg[j / 2] * fsum;
        resk += gk15::wgk[j] * fsum;
        resabs += gk15::wgk[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
    }
    const double reskh = 0.5 * resk;
    double resasc = gk15::wgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += gk15::wgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
    double err = std::abs((resk - resg) * h);
    resasc *= std::abs(h);
    resabs *= std::abs(h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(err, 50.0 * eps * resabs);
    return {resk * h, err};
}

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_panels = 4000;
};

// Adaptive bisection on [a, b]; worst-error panel is split first.
template <class F>
double integrate(const F& f, double a, double b, const QuadOptions& opt = {}) {
    struct Panel {
        double a, b, value, error;
    };
    GkResult r0 = gk15_panel(f, a, b);
    std::vector<Panel> heap{{a, b, r0.value, r0.error}};
    auto cmp = [](const Panel& p, const Panel& q) { return p.error < q.error; };
    double total = r0.value, toterr = r0.error;
    while (true) {
        double goal = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
        if (toterr <= goal || toterr <= 1e-300) return total;
        if (static_cast<int>(heap.size()) >= opt.max_panels)
            throw numeric_error("integrate: panel budget exhausted (err=" + std::to_string(toterr) + ")");
        std::pop_heap(heap.begin(), heap.end(), cmp);
        Panel p = heap.back();
        heap.pop_back();
        const double m = 0.5 * (p.a + p.b);
        GkResult r1 = gk15_panel(f, p.a, m), r2 = gk15_panel(f, m, p.b);
        total += r1.value + r2.value - p.value;
        toterr += r1.error + r2.error - p.error;
        heap.push_back({p.a, m, r1.value, r1.error});
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back({m, p.b, r2.value, r2.error});
        std::push_heap(heap.begin(), heap.end(), cmp);
    }
}

template <class F>
double integrate_panels(const F& f, const std::vector<double>& breaks, const QuadOptions& opt = {}) {
    require(breaks.size() >= 2, "integrate_panels: need at least two breakpoints");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) s += integrate(f, breaks[i], breaks[i + 1], opt);
    return s;
}

// int_a^inf f(r) dr via r = a + scale*tan(theta); scale sets where the nodes
// concentrate (use the integrand's natural length scale).
template <class F>
double integrate_to_infinity(const F& f, double a, double scale, const QuadOptions& opt = {}) {
    require(scale > 0.0, "integrate_to_infinity: scale must be positive");
    auto g = [&](double th) {
        const double t = std::tan(th);
        const double sec = 1.0 / std::cos(th);
        return f(a + scale * t) * scale * sec * sec;
    };
    return integrate(g, 0.0, 0.5 * M_PI * (1.0 - 1e-14), opt);
}

struct Rule1d {
    std::vector<double> x, w;
};

// Gauss-Legendre rule on [-1,1] by Newton iteration on the recurrence.
inline Rule1d gauss_legendre(int m) {
    require(m >= 1, "gauss_legendre: order must be >= 1");
    Rule1d r;
    r.x.resize(m);
    r.w.resize(m);
    const double fac = M_PI / (0.5 + m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos((i + 0.75) * fac), dz;
        double pp = 0.0;
        do {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= m; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
            }
            pp = m * (z * p1 - p2) / (z * z - 1.0);
            dz = -p1 / pp;
            z += dz;
        } while (std::abs(dz) >= 4.0 * std::numeric_limits<double>::epsilon());
        r.x[i] = -z;
        r.x[m - 1 - i] = z;
        r.w[i] = r.w[m - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

inline Rule1d scaled_rule(const Rule1d& base, double a, double b) {
    Rule1d r = base;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.x[i] = c + h * base.x[i];
        r.w[i] = h * base.w[i];
    }
    return r;
}

// Tensor-product Gauss-Legendre over a box, with optional interior panel
// breaks per axis (for integrands that are only piecewise smooth).
class TensorRule {
  public:
    TensorRule(const std::vector<double>& lo, const std::vector<double>& hi, int points_per_panel,
               const std::vector<std::vector<double>>& interior_breaks = {}) {
        const int n = static_cast<int>(lo.size());
        require(n >= 1 && hi.size() == lo.size(), "TensorRule: bad box");
        Rule1d base = gauss_legendre(points_per_panel);
        axes_.resize(n);
        for (int k = 0; k < n; ++k) {
            std::vector<double> brk{lo[k]};
            if (!interior_breaks.empty())
                for (double b : interior_breaks[k])
                    if (b > lo[k] && b < hi[k]) brk.push_back(b);
            brk.push_back(hi[k]);
            std::sort(brk.begin(), brk.end());
            for (std::size_t p = 0; p + 1 < brk.size(); ++p) {
                Rule1d panel = scaled_rule(base, brk[p], brk[p + 1]);
                axes_[k].x.insert(axes_[k].x.end(), panel.x.begin(), panel.x.end());
                axes_[k].w.insert(axes_[k].w.end(), panel.w.begin(), panel.w.end());
            }
        }
    }

    // number of nodes (product over axes)
    double node_count() const {
        double c = 1.0;
        for (const auto& ax : axes_) c *= static_cast<double>(ax.x.size());
        return c;
    }

    template <class F>
    double integrate(const F& f) const {
        const int n = static_cast<int>(axes_.size());
        std::vector<std::size_t> it(n, 0);
        std::vector<double> x(n);
        double sum = 0.0;
        while (true) {
            double w = 1.0;
            for (int k = 0; k < n; ++k) {
                x[k] = axes_[k].x[it[k]];
                w *= axes_[k].w[it[k]];
            }
            sum += w * f(x);
            int k = 0;
            while (k < n && ++it[k] == axes_[k].x.size()) {
                it[k] = 0;
                ++k;
            }
            if (k == n) break;
        }
        return sum;
    }

  private:
    std::vector<Rule1d> axes_;
};

// Gauss rule for int_{-1}^{1} f(t) (1-t^2)^((n-2)/2) dt, the polar-angle
// factor of the S^n measure. Golub-Welsch on the symmetric Jacobi matrix of
// the ultraspherical recurrence; weights include the full S^n measure factor
// vol(S^{n-1}).
struct ZonalRule {
    std::vector<double> t, w;  // sum w_i f(t_i) ~ int_{S^n} f(cos theta) dmu
};

// Monic ultraspherical recurrence coefficient beta_k for weight
// (1-t^2)^((n-2)/2): beta_k = k(k+n-2)/((2k+n-1)(2k+n-3)), and
// beta_0 = int of the weight = sqrt(pi) Gamma(n/2)/Gamma((n+1)/2).
inline double zonal_beta(int n, int k) {
    if (k == 0) return std::exp(0.5 * std::log(M_PI) + std::lgamma(0.5 * n) - std::lgamma(0.5 * (n + 1)));
    return k * (k + n - 2.0) / ((2.0 * k + n - 1.0) * (2.0 * k + n - 3.0));
}

inline ZonalRule zonal_rule(int n, int m) {
    require(n >= 2 && m >= 1, "zonal_rule: bad parameters");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sub(m - 1 > 0 ? m - 1 : 0);
    for (int k = 1; k < m; ++k) sub[k - 1] = std::sqrt(zonal_beta(n, k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    ZonalRule r;
    r.t.resize(m);
    r.w.resize(m);
    const double mu0 = sphere_volume(n - 1) * zonal_beta(n, 0);
    for (int i = 0; i < m; ++i) {
        r.t[i] = es.eigenvalues()[i];
        r.w[i] = mu0 * sqr(es.eigenvectors()(0, i));
    }
    return r;
}

}  // namespace qclab

#pragma once

// Coordinate charts and scalar fields. A chart metric is a map from points of
// an axis-aligned box to SPD matrices; derivatives come either from jet
// arithmetic on the closed form (analytic mode) or from central finite
// differences of pointwise values (fd mode). The registry covers what the
// curvature checks need: flat space, stereographic round spheres, block
// products of spheres, and conformal deformations u^(4/(n-4)) g.

#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "qclab/jet.hpp"

namespace qclab {

struct Box {
    std::vector<double> lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double diameter() const {
        double s = 0.0;
        for (int k = 0; k < dim(); ++k) s += sqr(hi[k] - lo[k]);
        return std::sqrt(s);
    }
    bool contains(const std::vector<double>& x, double margin = 0.0) const {
        for (int k = 0; k < dim(); ++k)
            if (x[k] < lo[k] + margin || x[k] > hi[k] - margin) return false;
        return true;
    }
    static Box cube(int n, double half_width) {
        Box b;
        b.lo.assign(n, -half_width);
        b.hi.assign(n, half_width);
        return b;
    }
};

enum class DerivMode { analytic, finite_difference };

struct FdSteps {
    // central-difference steps as fractions of the domain diameter;
    // `low` feeds 1st/2nd derivatives of g and u, `high` feeds the outer
    // stencils behind Delta_g R_g and Delta_g^2 u.
    double low_frac = 1e-3;
    double high_frac = 5e-3;
};

using JetVec = std::vector<Jet>;
using JetMat = std::vector<Jet>;  // row-major n*n

// ---------------------------------------------------------------------------

class MetricChart {
  public:
    virtual ~MetricChart() = default;
    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    // metric entries at x, row-major n*n
    virtual void eval(const std::vector<double>& x, std::vector<double>& g) const = 0;
    virtual bool has_jets() const { return false; }
    virtual void eval_jets(const std::vector<double>& x, int order, JetMat& g) const {
        (void)x;
        (void)order;
        (void)g;
        throw domain_error("chart '" + name() + "' has no analytic derivatives");
    }
};

class ScalarFieldDef {
  public:
    virtual ~ScalarFieldDef() = default;
    virtual std::string name() const = 0;
    virtual double eval(const std::vector<double>& x) const = 0;
    virtual bool has_jets() const { return false; }
    virtual Jet eval_jet(const std::vector<double>& x, int order) const {
        (void)x;
        (void)order;
        throw domain_error("field '" + name() + "' has no analytic derivatives");
    }
};

// Chart metric as the operations consume it: geometry + domain + how to
// differentiate it.
struct ChartMetric {
    std::shared_ptr<const MetricChart> geom;
    Box domain;
    DerivMode mode = DerivMode::analytic;
    FdSteps fd;

    int dim() const { return geom->dim(); }
    double fd_step_low() const { return fd.low_frac * domain.diameter(); }
    double fd_step_high() const { return fd.high_frac * domain.diameter(); }
};

struct ScalarField {
    std::shared_ptr<const ScalarFieldDef> def;
    DerivMode mode = DerivMode::analytic;

    double operator()(const std::vector<double>& x) const { return def->eval(x); }
};

// A scalar field with declared compact support (for chart energies).
struct CompactField {
    ScalarField field;
    Box support;
};

// ---------------------------------------------------------------------------
// chart registry

class FlatChart final : public MetricChart {
  public:
    explicit FlatChart(int n) : n_(n) {}
    int dim() const override { return n_; }
    std::string name() const override { return "flat"; }
    void eval(const std::vector<double>&, std::vector<double>& g) const override {
        g.assign(n_ * n_, 0.0);
        for (int i = 0; i < n_; ++i) g[i * n_ + i] = 1.0;
    }
    bool has_jets() const override { return true; }
    void eval_jets(const std::vector<double>& x, int order, JetMat& g) const override {
        g.assign(n_ * n_, Jet::constant(n_, order, 0.0));
        (void)x;
        for (int i = 0; i < n_; ++i) g[i * n_ + i] = Jet::constant(n_, order, 1.0);
    }

  private:
    int n_;
};

// Round S^n of given radius in the stereographic chart:
// g_ij = 4 r^2 delta_ij / (1+|x|^2)^2.
class SphereChart final : public MetricChart {
  public:
    SphereChart(int n, double radius = 1.0) : n_(n), radius_(radius) {}
    int dim() const override { return n_; }
    std::string name() const override { return "stereographic-sphere"; }
    void eval(const std::vector<double>& x, std::vector<double>& g) const override {
        double r2 = 0.0;
        for (int k = 0; k < n_; ++k) r2 += sqr(x[k]);
        const double f = 4.0 * sqr(radius_) / sqr(1.0 + r2);
        g.assign(n_ * n_, 0.0);
        for (int i = 0; i < n_; ++i) g[i * n_ + i] = f;
    }
    bool has_jets() const override { return true; }
    void eval_jets(const std::vector<double>& x, int order, JetMat& g) const override {
        Jet r2 = Jet::constant(n_, order, 0.0);
        for (int k = 0; k < n_; ++k) {
            Jet xk = Jet::variable(n_, order, k, x[k]);
            r2 += xk * xk;
        }
        Jet den = 1.0 + r2;
        Jet f = jet_recip(den * den) * (4.0 * sqr(radius_));
        g.assign(n_ * n_, Jet::constant(n_, order, 0.0));
        for (int i = 0; i < n_; ++i) g[i * n_ + i] = f;
    }

  private:
    int n_;
    double radius_;
};

// Block product S^p(r1) x S^q(r2), each factor in its own stereographic chart.
class ProductSphereChart final : public MetricChart {
  public:
    ProductSphereChart(int p, double r1, int q, double r2) : p_(p), q_(q), r1_(r1), r2_(r2) {}
    int dim() const override { return p_ + q_; }
    std::string name() const override { return "product-spheres"; }
    void eval(const std::vector<double>& x, std::vector<double>& g) const override {
        const int n = dim();
        double a2 = 0.0, b2 = 0.0;
        for (int k = 0; k < p_; ++k) a2 += sqr(x[k]);
        for (int k = p_; k < n; ++k) b2 += sqr(x[k]);
        const double fa = 4.0 * sqr(r1_) / sqr(1.0 + a2);
        const double fb = 4.0 * sqr(r2_) / sqr(1.0 + b2);
        g.assign(n * n, 0.0);
        for (int i = 0; i < p_; ++i) g[i * n + i] = fa;
        for (int i = p_; i < n; ++i) g[i * n + i] = fb;
    }
    bool has_jets() const override { return true; }
    void eval_jets(const std::vector<double>& x, int order, JetMat& g) const override {
        const int n = dim();
        Jet a2 = Jet::constant(n, order, 0.0), b2 = a2;
        for (int k = 0; k < p_; ++k) {
            Jet xk = Jet::variable(n, order, k, x[k]);
            a2 += xk * xk;
        }
        for (int k = p_; k < n; ++k) {
            Jet xk = Jet::variable(n, order, k, x[k]);
            b2 += xk * xk;
        }
        Jet da = 1.0 + a2, db = 1.0 + b2;
        Jet fa = jet_recip(da * da) * (4.0 * sqr(r1_));
        Jet fb = jet_recip(db * db) * (4.0 * sqr(r2_));
        g.assign(n * n, Jet::constant(n, order, 0.0));
        for (int i = 0; i < p_; ++i) g[i * n + i] = fa;
        for (int i = p_; i < n; ++i) g[i * n + i] = fb;
    }

  private:
    int p_, q_;
    double r1_, r2_;
};

// Flat polar model diag(1, x_1^2) padded with flat factors; a hand-checkable
// Christoffel smoke test (valid where x_1 > 0).
class PolarModelChart final : public MetricChart {
  public:
    explicit PolarModelChart(int n) : n_(n) { require(n >= 2, "PolarModelChart: need n >= 2"); }
    int dim() const override { return n_; }
    std::string name() const override { return "polar-model"; }
    void eval(const std::vector<double>& x, std::vector<double>& g) const override {
        g.assign(n_ * n_, 0.0);
        for (int i = 0; i < n_; ++i) g[i * n_ + i] = 1.0;
        g[1 * n_ + 1] = sqr(x[0]);
    }
    bool has_jets() const override { return true; }
    void eval_jets(const std::vector<double>& x, int order, JetMat& g) const override {
        g.assign(n_ * n_, Jet::constant(n_, order, 0.0));
        for (int i = 0; i < n_; ++i) g[i * n_ + i] = Jet::constant(n_, order, 1.0);
        Jet x0 = Jet::variable(n_, order, 0, x[0]);
        g[1 * n_ + 1] = x0 * x0;
    }

  private:
    int n_;
};

// Conformal deformation g_bar = u^(4/(n-4)) g of a base chart.
class ConformalChart final : public MetricChart {
  public:
    ConformalChart(std::shared_ptr<const MetricChart> base, std::shared_ptr<const ScalarFieldDef> u)
        : base_(std::move(base)), u_(std::move(u)) {}
    int dim() const override { return base_->dim(); }
    std::string name() const override { return base_->name() + "*conformal"; }
    void eval(const std::vector<double>& x, std::vector<double>& g) const override {
        base_->eval(x, g);
        const double uv = u_->eval(x);
        require(uv > 0.0, "conformal factor must be positive");
        const double f = std::pow(uv, 4.0 / (dim() - 4.0));
        for (double& v : g) v *= f;
    }
    bool has_jets() const override { return base_->has_jets() && u_->has_jets(); }
    void eval_jets(const std::vector<double>& x, int order, JetMat& g) const override {
        base_->eval_jets(x, order, g);
        Jet f = jet_pow(u_->eval_jet(x, order), 4.0 / (dim() - 4.0));
        for (Jet& v : g) v = v * f;
    }

  private:
    std::shared_ptr<const MetricChart> base_;
    std::shared_ptr<const ScalarFieldDef> u_;
};

// ---------------------------------------------------------------------------
// field registry

class ConstantField final : public ScalarFieldDef {
  public:
    ConstantField(int n, double c) : n_(n), c_(c) {}
    std::string name() const override { return "constant"; }
    double eval(const std::vector<double>&) const override { return c_; }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>&, int order) const override {
        return Jet::constant(n_, order, c_);
    }

  private:
    int n_;
    double c_;
};

// a0 + sum_k a_k x_k
class AffineField final : public ScalarFieldDef {
  public:
    AffineField(double a0, std::vector<double> a) : a0_(a0), a_(std::move(a)) {}
    std::string name() const override { return "affine"; }
    double eval(const std::vector<double>& x) const override {
        return a0_ + std::inner_product(a_.begin(), a_.end(), x.begin(), 0.0);
    }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        const int n = static_cast<int>(a_.size());
        Jet j = Jet::constant(n, order, a0_);
        for (int k = 0; k < n; ++k) j += Jet::variable(n, order, k, x[k]) * a_[k];
        return j;
    }

  private:
    double a0_;
    std::vector<double> a_;
};

// coordinate monomial x_k^p
class MonomialField final : public ScalarFieldDef {
  public:
    MonomialField(int n, int k, int p) : n_(n), k_(k), p_(p) {}
    std::string name() const override { return "monomial"; }
    double eval(const std::vector<double>& x) const override { return std::pow(x[k_], p_); }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        Jet xk = Jet::variable(n_, order, k_, x[k_]);
        Jet r = Jet::constant(n_, order, 1.0);
        for (int i = 0; i < p_; ++i) r = r * xk;
        return r;
    }

  private:
    int n_, k_, p_;
};

// |x|^2
class RadiusSquaredField final : public ScalarFieldDef {
  public:
    explicit RadiusSquaredField(int n) : n_(n) {}
    std::string name() const override { return "r2"; }
    double eval(const std::vector<double>& x) const override {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        Jet s = Jet::constant(n_, order, 0.0);
        for (int k = 0; k < n_; ++k) {
            Jet xk = Jet::variable(n_, order, k, x[k]);
            s += xk * xk;
        }
        return s;
    }

  private:
    int n_;
};

// Aubin bubble u_alpha(x) = (2 alpha / (alpha^2 + |x|^2))^((n-4)/2).
class BubbleField final : public ScalarFieldDef {
  public:
    BubbleField(int n, double alpha) : n_(n), alpha_(alpha) {
        require(alpha > 0.0, "BubbleField: alpha must be positive");
    }
    std::string name() const override { return "bubble"; }
    double eval(const std::vector<double>& x) const override {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return std::pow(2.0 * alpha_ / (sqr(alpha_) + r2), 0.5 * (n_ - 4));
    }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        Jet r2 = Jet::constant(n_, order, 0.0);
        for (int k = 0; k < n_; ++k) {
            Jet xk = Jet::variable(n_, order, k, x[k]);
            r2 += xk * xk;
        }
        Jet base = jet_recip(r2 + sqr(alpha_)) * (2.0 * alpha_);
        return jet_pow(base, 0.5 * (n_ - 4));
    }

  private:
    int n_;
    double alpha_;
};

// Product bump prod_k (a^2 - x_k^2)^2 on [-a,a]^n, zero outside; vanishes to
// second order on the support boundary so flat integration by parts is exact.
class BoxBumpField final : public ScalarFieldDef {
  public:
    BoxBumpField(int n, double a) : n_(n), a_(a) {}
    std::string name() const override { return "box-bump"; }
    double eval(const std::vector<double>& x) const override {
        double p = 1.0;
        for (int k = 0; k < n_; ++k) {
            const double s = sqr(a_) - sqr(x[k]);
            if (s <= 0.0) return 0.0;
            p *= sqr(s);
        }
        return p;
    }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        Jet p = Jet::constant(n_, order, 1.0);
        for (int k = 0; k < n_; ++k) {
            Jet xk = Jet::variable(n_, order, k, x[k]);
            Jet s = sqr(a_) - xk * xk;
            p = p * s * s;
        }
        return p;
    }
    double half_width() const { return a_; }

  private:
    int n_;
    double a_;
};

// eta_eps(|x|) u_alpha(|x|): the cut-off bubble as a chart field. The cutoff
// is the degree-7 smoothstep (C^3 seams); jets take the branch of the seam
// region containing the evaluation point.
class CutoffBubbleField final : public ScalarFieldDef {
  public:
    CutoffBubbleField(int n, double alpha, double eps) : n_(n), alpha_(alpha), eps_(eps) {}
    std::string name() const override { return "cutoff-bubble"; }
    double eval(const std::vector<double>& x) const override {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        const double r = std::sqrt(r2);
        if (r >= 2.0 * eps_) return 0.0;
        const double u = std::pow(2.0 * alpha_ / (sqr(alpha_) + r2), 0.5 * (n_ - 4));
        if (r <= eps_) return u;
        const double t = (r - eps_) / eps_;
        const double t4 = t * t * t * t;
        return (1.0 - t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))) * u;
    }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        double r2v = 0.0;
        for (double v : x) r2v += v * v;
        const double r = std::sqrt(r2v);
        if (r >= 2.0 * eps_) return Jet::constant(n_, order, 0.0);
        Jet r2 = Jet::constant(n_, order, 0.0);
        for (int k = 0; k < n_; ++k) {
            Jet xk = Jet::variable(n_, order, k, x[k]);
            r2 += xk * xk;
        }
        Jet u = jet_pow(jet_recip(r2 + sqr(alpha_)) * (2.0 * alpha_), 0.5 * (n_ - 4));
        if (r <= eps_) return u;
        Jet t = (jet_sqrt(r2) - eps_) * (1.0 / eps_);
        Jet t4 = t * t * t * t;
        Jet eta = 1.0 - t4 * (35.0 + t * (-84.0 + t * (70.0 - t * 20.0)));
        return eta * u;
    }

  private:
    int n_;
    double alpha_, eps_;
};

// Pointwise product of two fields.
class ProductField final : public ScalarFieldDef {
  public:
    ProductField(std::shared_ptr<const ScalarFieldDef> a, std::shared_ptr<const ScalarFieldDef> b)
        : a_(std::move(a)), b_(std::move(b)) {}
    std::string name() const override { return a_->name() + "*" + b_->name(); }
    double eval(const std::vector<double>& x) const override { return a_->eval(x) * b_->eval(x); }
    bool has_jets() const override { return a_->has_jets() && b_->has_jets(); }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        return a_->eval_jet(x, order) * b_->eval_jet(x, order);
    }

  private:
    std::shared_ptr<const ScalarFieldDef> a_, b_;
};

// Zonal polynomial in t(x) = (|x|^2 - 1)/(|x|^2 + 1), the polar-angle cosine
// of the stereographic chart. `coeffs` are coefficients in the orthonormal
// zonal basis, evaluated through the ultraspherical recurrence (see
// zonal.hpp for the matching basis used on the sphere side).
class ZonalPullbackField final : public ScalarFieldDef {
  public:
    ZonalPullbackField(int n, std::vector<double> coeffs) : n_(n), c_(std::move(coeffs)) {
        b_.resize(c_.size() + 1);
        // the measure normalization vol(S^{n-1}) enters only through beta_0,
        // so that Y_0 = 1/sqrt(vol(S^n))
        b_[0] = std::sqrt(sphere_volume(n_ - 1) * zonal_beta_local(n_, 0));
        for (std::size_t k = 1; k < b_.size(); ++k)
            b_[k] = std::sqrt(zonal_beta_local(n_, static_cast<int>(k)));
    }
    std::string name() const override { return "zonal-pullback"; }
    double eval(const std::vector<double>& x) const override {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return series((r2 - 1.0) / (r2 + 1.0));
    }
    bool has_jets() const override { return true; }
    Jet eval_jet(const std::vector<double>& x, int order) const override {
        Jet r2 = Jet::constant(n_, order, 0.0);
        for (int k = 0; k < n_; ++k) {
            Jet xk = Jet::variable(n_, order, k, x[k]);
            r2 += xk * xk;
        }
        Jet t = (r2 - 1.0) * jet_recip(r2 + 1.0);
        return series(t);
    }

  private:
    static double zonal_beta_local(int n, int k) {
        if (k == 0)
            return std::exp(0.5 * std::log(M_PI) + std::lgamma(0.5 * n) - std::lgamma(0.5 * (n + 1)));
        return k * (k + n - 2.0) / ((2.0 * k + n - 1.0) * (2.0 * k + n - 3.0));
    }
    template <class T>
    T series(const T& t) const {
        // orthonormal recurrence Y_{k+1} = (t Y_k - b_k Y_{k-1}) / b_{k+1}
        T ykm1 = t * 0.0;
        T yk = t * 0.0 + 1.0 / b_[0];
        T acc = yk * c_[0];
        for (std::size_t k = 0; k + 1 < c_.size(); ++k) {
            T next = (t * yk - (k >= 1 ? b_[k] : 0.0) * ykm1) * (1.0 / b_[k + 1]);
            ykm1 = yk;
            yk = next;
            acc += yk * c_[k + 1];
        }
        return acc;
    }

    int n_;
    std::vector<double> c_;
    std::vector<double> b_;  // sqrt of mu-measure recurrence betas
};

}  // namespace qclab

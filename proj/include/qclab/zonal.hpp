#pragma once

// Rotationally symmetric spectral calculus on S^n. Zonal fields are expanded
// in the orthonormal polynomials Y_k(t), t = cos(theta), of the measure
// vol(S^{n-1}) (1-t^2)^((n-2)/2) dt (the ultraspherical family); Y_k is the
// degree-k zonal harmonic, so the Paneitz operator acts diagonally with
//
//   P_k = lam_k^2 + (n^2-2n-4)/2 lam_k + n(n-4)(n^2-4)/16
//       = (lam_k + (n+2)(n-4)/4)(lam_k + n(n-2)/4),   lam_k = k(k+n-1).
//
// Nonlinear operations (powers, Moebius companions, Q-curvature of a
// conformal factor) evaluate at Gauss nodes of the same measure and project
// back, with the projection residual reported as tail energy.

#include <json.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include "qclab/quadrature.hpp"

namespace qclab {

class ZonalBasis {
  public:
    ZonalBasis(int n, int K, int M = 0) : n_(n), K_(K), M_(M > 0 ? M : 4 * K) {
        require(n >= 5, "ZonalBasis: n >= 5");
        require(K >= 1, "ZonalBasis: K >= 1");
        require(M_ > K_, "ZonalBasis: need more nodes than modes");
        b_.resize(std::max(M_, K_ + 2) + 1);
        b_[0] = std::sqrt(sphere_volume(n - 1) * zonal_beta(n, 0));  // = sqrt(vol(S^n))
        for (std::size_t k = 1; k < b_.size(); ++k) b_[k] = std::sqrt(zonal_beta(n, static_cast<int>(k)));
        rule_ = zonal_rule(n, M_);
        Y_.assign(M_ * (K_ + 1), 0.0);
        dY_.assign(M_ * (K_ + 1), 0.0);
        for (int i = 0; i < M_; ++i) {
            std::vector<double> y(K_ + 1), dy(K_ + 1);
            eval_basis(rule_.t[i], y, dy);
            for (int k = 0; k <= K_; ++k) {
                Y_[i * (K_ + 1) + k] = y[k];
                dY_[i * (K_ + 1) + k] = dy[k];
            }
        }
    }

    int n() const { return n_; }
    int degree_bound() const { return K_; }
    int node_count() const { return M_; }
    double node(int i) const { return rule_.t[i]; }
    double weight(int i) const { return rule_.w[i]; }
    double volume() const { return sphere_volume(n_); }

    // orthonormal recurrence Y_{k+1} = (t Y_k - b_k Y_{k-1})/b_{k+1} and its
    // t-derivative
    void eval_basis(double t, std::vector<double>& y, std::vector<double>& dy) const {
        y.assign(K_ + 1, 0.0);
        dy.assign(K_ + 1, 0.0);
        y[0] = 1.0 / b_[0];
        if (K_ >= 1) {
            y[1] = t * y[0] / b_[1];
            dy[1] = y[0] / b_[1];
        }
        for (int k = 1; k < K_; ++k) {
            y[k + 1] = (t * y[k] - b_[k] * y[k - 1]) / b_[k + 1];
            dy[k + 1] = (y[k] + t * dy[k] - b_[k] * dy[k - 1]) / b_[k + 1];
        }
    }

    double basis_value(int node, int k) const { return Y_[node * (K_ + 1) + k]; }

    std::vector<double> to_nodal(const std::vector<double>& coeffs) const {
        require(static_cast<int>(coeffs.size()) == K_ + 1, "to_nodal: coefficient size");
        std::vector<double> v(M_, 0.0);
        for (int i = 0; i < M_; ++i) {
            double s = 0.0;
            for (int k = 0; k <= K_; ++k) s += Y_[i * (K_ + 1) + k] * coeffs[k];
            v[i] = s;
        }
        return v;
    }

    std::vector<double> to_nodal_derivative(const std::vector<double>& coeffs) const {
        std::vector<double> v(M_, 0.0);
        for (int i = 0; i < M_; ++i) {
            double s = 0.0;
            for (int k = 0; k <= K_; ++k) s += dY_[i * (K_ + 1) + k] * coeffs[k];
            v[i] = s;
        }
        return v;
    }

    std::vector<double> project(const std::vector<double>& nodal) const {
        require(static_cast<int>(nodal.size()) == M_, "project: nodal size");
        std::vector<double> c(K_ + 1, 0.0);
        for (int i = 0; i < M_; ++i) {
            const double wv = rule_.w[i] * nodal[i];
            for (int k = 0; k <= K_; ++k) c[k] += Y_[i * (K_ + 1) + k] * wv;
        }
        return c;
    }

    double quad(const std::vector<double>& nodal) const {
        double s = 0.0;
        for (int i = 0; i < M_; ++i) s += rule_.w[i] * nodal[i];
        return s;
    }

    // fraction of nodal L^2 mass the degree-<=K projection fails to capture
    double tail_fraction(const std::vector<double>& nodal, const std::vector<double>& coeffs) const {
        auto recon = to_nodal(coeffs);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < M_; ++i) {
            num += rule_.w[i] * sqr(nodal[i] - recon[i]);
            den += rule_.w[i] * sqr(nodal[i]);
        }
        return den > 0.0 ? num / den : 0.0;
    }

  private:
    int n_, K_, M_;
    std::vector<double> b_;
    ZonalRule rule_;
    std::vector<double> Y_, dY_;
};

struct ZonalField {
    int n = 0;
    int K = 0;
    std::vector<double> coeffs;

    static ZonalField zero(int n, int K) { return {n, K, std::vector<double>(K + 1, 0.0)}; }
    static ZonalField constant(int n, int K, double value) {
        ZonalField f = zero(n, K);
        f.coeffs[0] = value * std::sqrt(sphere_volume(n));  // Y_0 = 1/sqrt(vol)
        return f;
    }
};

// ---------------------------------------------------------------------------
// diagonal Paneitz data

// 16 P_k = (4 lam + (n+2)(n-4)) (4 lam + n(n-2)), lam = k(k+n-1); exact in
// integer arithmetic, which is how the expanded/factored agreement is tested
inline std::int64_t paneitz_eigenvalue_num16(int n, int k) {
    const std::int64_t lam = static_cast<std::int64_t>(k) * (k + n - 1);
    return (4 * lam + static_cast<std::int64_t>(n + 2) * (n - 4)) *
           (4 * lam + static_cast<std::int64_t>(n) * (n - 2));
}

inline std::int64_t paneitz_eigenvalue_num16_expanded(int n, int k) {
    const std::int64_t lam = static_cast<std::int64_t>(k) * (k + n - 1);
    const std::int64_t nn = n;
    return 16 * lam * lam + 8 * (nn * nn - 2 * nn - 4) * lam + nn * (nn - 4) * (nn * nn - 4);
}

inline double paneitz_eigenvalue(int n, int k) {
    require(n >= 5 && k >= 0, "paneitz_eigenvalue: bad arguments");
    return static_cast<double>(paneitz_eigenvalue_num16(n, k)) / 16.0;
}

inline ZonalField paneitz_apply_sphere(const ZonalField& u) {
    ZonalField out = u;
    for (int k = 0; k <= u.K; ++k) out.coeffs[k] *= paneitz_eigenvalue(u.n, k);
    return out;
}

inline ZonalField paneitz_inverse(const ZonalField& u) {
    ZonalField out = u;
    for (int k = 0; k <= u.K; ++k) out.coeffs[k] /= paneitz_eigenvalue(u.n, k);
    return out;
}

// E[u] = sum P_k c_k^2 (diagonalized quadratic form)
inline double zonal_energy(const ZonalField& u) {
    double e = 0.0;
    for (int k = 0; k <= u.K; ++k) e += paneitz_eigenvalue(u.n, k) * sqr(u.coeffs[k]);
    return e;
}

// ---------------------------------------------------------------------------
// nodal nonlinearities

struct Projected {
    ZonalField field;
    double tail_fraction;  // projection residual relative to nodal L^2 mass

    // truncation-dominated results are flagged rather than rejected
    bool truncation_flagged() const { return tail_fraction > 1e-6; }
};

inline Projected nonlinear_power(const ZonalBasis& basis, const ZonalField& u, double p) {
    require(u.n == basis.n() && u.K == basis.degree_bound(), "nonlinear_power: basis mismatch");
    auto nodal = basis.to_nodal(u.coeffs);
    const bool integer_p = p == std::round(p) && p >= 0;
    for (double& v : nodal) {
        if (!integer_p && v <= 0.0)
            throw domain_error("nonlinear_power: non-positive nodal value with non-integer exponent");
        v = std::pow(v, p);
    }
    Projected out{{u.n, u.K, basis.project(nodal)}, 0.0};
    out.tail_fraction = basis.tail_fraction(nodal, out.field.coeffs);
    return out;
}

// critical-norm integral int u^(2n/(n-4)) dmu by nodal quadrature
inline double critical_volume(const ZonalBasis& basis, const ZonalField& u) {
    auto nodal = basis.to_nodal(u.coeffs);
    const double p = 2.0 * basis.n() / (basis.n() - 4.0);
    for (double& v : nodal) {
        require(v > 0.0, "critical_volume: field must be positive at nodes");
        v = std::pow(v, p);
    }
    return basis.quad(nodal);
}

// ---------------------------------------------------------------------------
// Moebius dilations along the zonal axis

struct MoebiusMap {
    int n;
    double lambda;  // dilation in the stereographic chart; 1 = identity

    MoebiusMap composed_with(const MoebiusMap& other) const {
        require(n == other.n, "MoebiusMap: dimension mismatch");
        return {n, lambda * other.lambda};
    }
    // image of t = cos(theta) under the dilation
    double pull_t(double t) const {
        const double den = lambda * lambda * (1.0 + t) + (1.0 - t);
        return (lambda * lambda * (1.0 + t) - (1.0 - t)) / den;
    }
    // |det dphi|^(1/n) at polar parameter t
    double det_root(double t) const {
        return 2.0 * lambda / (lambda * lambda * (1.0 + t) + (1.0 - t));
    }
};

// companion v = (u o phi) |det dphi|^((n-4)/(2n))
inline Projected companion(const ZonalBasis& basis, const ZonalField& u, const MoebiusMap& phi) {
    require(u.n == basis.n() && phi.n == basis.n(), "companion: dimension mismatch");
    require(phi.lambda > 0.0, "companion: lambda must be positive");
    const int n = basis.n();
    std::vector<double> nodal(basis.node_count());
    std::vector<double> y, dy;
    for (int i = 0; i < basis.node_count(); ++i) {
        const double t = basis.node(i);
        basis.eval_basis(phi.pull_t(t), y, dy);
        double uv = 0.0;
        for (int k = 0; k <= u.K; ++k) uv += y[k] * u.coeffs[k];
        // det_root is |det dphi|^(1/n), so the companion weight
        // |det dphi|^((n-4)/(2n)) is det_root^((n-4)/2)
        nodal[i] = uv * std::pow(phi.det_root(t), (n - 4.0) * 0.5);
    }
    Projected out{{u.n, u.K, basis.project(nodal)}, 0.0};
    out.tail_fraction = basis.tail_fraction(nodal, out.field.coeffs);
    return out;
}

// Q-curvature of g = u^(4/(n-4)) g_{S^n}: Q = (2/(n-4)) (P u)/u^((n+4)/(n-4))
inline Projected q_curvature_of_conformal(const ZonalBasis& basis, const ZonalField& u) {
    const int n = basis.n();
    auto unodal = basis.to_nodal(u.coeffs);
    auto pnodal = basis.to_nodal(paneitz_apply_sphere(u).coeffs);
    std::vector<double> q(basis.node_count());
    const double p = (n + 4.0) / (n - 4.0);
    for (int i = 0; i < basis.node_count(); ++i) {
        require(unodal[i] > 0.0, "q_curvature_of_conformal: field must be positive at nodes");
        q[i] = 2.0 / (n - 4.0) * pnodal[i] * std::pow(unodal[i], -p);
    }
    Projected out{{u.n, u.K, basis.project(q)}, 0.0};
    out.tail_fraction = basis.tail_fraction(q, out.field.coeffs);
    return out;
}

struct KazdanWarnerResult {
    double value;  // int <X, grad Q_g> u^(2n/(n-4)) dmu, X the zonal conformal field
    double scale;  // int |grad Q_g| |X| u^(2n/(n-4)) dmu
    double ratio() const { return scale > 0.0 ? std::abs(value) / scale : 0.0; }
};

// With X = grad(cos theta), <X, grad Q> = (1-t^2) Q'(t) in the polar
// parameter, and |X| |grad Q| = (1-t^2) |Q'(t)|.
inline KazdanWarnerResult kazdan_warner_integral(const ZonalBasis& basis, const ZonalField& u) {
    const int n = basis.n();
    auto Q = q_curvature_of_conformal(basis, u);
    auto Qp = basis.to_nodal_derivative(Q.field.coeffs);
    auto unodal = basis.to_nodal(u.coeffs);
    const double pcrit = 2.0 * n / (n - 4.0);
    double value = 0.0, scale = 0.0;
    for (int i = 0; i < basis.node_count(); ++i) {
        const double t = basis.node(i);
        const double f = std::pow(unodal[i], pcrit) * (1.0 - t * t) * basis.weight(i);
        value += f * Qp[i];
        scale += f * std::abs(Qp[i]);
    }
    return {value, scale};
}

// ---------------------------------------------------------------------------
// serialization: {n, K, coeffs[]} records for flow checkpoints

inline nlohmann::json zonal_to_json(const ZonalField& u) {
    return nlohmann::json{{"n", u.n}, {"K", u.K}, {"coeffs", u.coeffs}};
}

inline ZonalField zonal_from_json(const nlohmann::json& j) {
    ZonalField u;
    u.n = j.at("n").get<int>();
    u.K = j.at("K").get<int>();
    u.coeffs = j.at("coeffs").get<std::vector<double>>();
    require(static_cast<int>(u.coeffs.size()) == u.K + 1, "zonal_from_json: bad coefficient count");
    return u;
}

// deterministic random positive zonal field for the property suites:
// u = 1 + sum_{k=1}^{kmax} a_k Y_k with decaying random a_k, redrawn until
// strictly positive at the transform nodes
inline ZonalField random_positive_field(const ZonalBasis& basis, std::mt19937_64& rng,
                                        double amplitude = 0.05, int kmax = 10) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
        ZonalField u = ZonalField::constant(basis.n(), basis.degree_bound(), 1.0);
        for (int k = 1; k <= std::min(kmax, basis.degree_bound()); ++k)
            u.coeffs[k] = amplitude * gauss(rng) / (1.0 + k * k);
        auto nodal = basis.to_nodal(u.coeffs);
        double mn = nodal[0];
        for (double v : nodal) mn = std::min(mn, v);
        if (mn > 0.05) return u;
    }
    throw numeric_error("random_positive_field: could not draw a positive field");
}

}  // namespace qclab

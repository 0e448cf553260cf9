#pragma once

// Truncated multivariate Taylor arithmetic ("jets") up to total degree 4.
//
// A Jet stores the Taylor coefficients f_a = d^a f / a! of a smooth function
// at a point, for all multi-indices a with |a| <= order. Propagating jets of
// the coordinate functions through a metric's closed form yields exact
// derivatives of the metric up to fourth order, which is what the Q-curvature
// (via Delta_g R_g) and the Paneitz operator need. Degree 4 in up to a dozen
// variables is small enough that a dense graded-lex layout with a precomputed
// product table is the simplest thing that works.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "qclab/common.hpp"

namespace qclab {

constexpr int kJetMaxOrder = 4;

// Shared per-dimension index tables: multi-index list in graded lex order,
// offsets per degree, neighbor table for "multiply by x_k", and the list of
// coefficient pairs contributing to a product. Immutable after construction.
class JetTable {
  public:
    explicit JetTable(int nvars) : n_(nvars) {
        require(nvars >= 1 && nvars <= 16, "JetTable: nvars out of range");
        std::vector<int> idx(n_, 0);
        build_indices();
        build_shift_table();
        build_product_pairs();
    }

    int nvars() const { return n_; }
    int size(int order) const { return offsets_[order + 1]; }
    int degree(int i) const { return degree_[i]; }
    const std::vector<std::array<std::uint8_t, 16>>& indices() const { return indices_; }

    // index of multi-index a + e_k, or -1 if |a|+1 > max order
    int shift(int i, int k) const { return shift_[i * n_ + k]; }
    // exponent of variable k in multi-index i
    int exponent(int i, int k) const { return indices_[i][k]; }

    struct Pair {
        std::int32_t ia, ib, target;
    };
    const std::vector<Pair>& product_pairs() const { return pairs_; }

    static const JetTable& get(int nvars);

  private:
    void build_indices() {
        offsets_.assign(kJetMaxOrder + 2, 0);
        std::array<std::uint8_t, 16> a{};
        // enumerate degree by degree, lex within a degree
        for (int deg = 0; deg <= kJetMaxOrder; ++deg) {
            offsets_[deg] = static_cast<int>(indices_.size());
            enumerate(a, 0, deg);
        }
        offsets_[kJetMaxOrder + 1] = static_cast<int>(indices_.size());
        degree_.resize(indices_.size());
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            int d = 0;
            for (int k = 0; k < n_; ++k) d += indices_[i][k];
            degree_[i] = d;
        }
        lookup_.clear();
        for (std::size_t i = 0; i < indices_.size(); ++i) lookup_[key(indices_[i])] = static_cast<int>(i);
    }

    void enumerate(std::array<std::uint8_t, 16>& a, int pos, int remaining) {
        if (pos == n_ - 1) {
            a[pos] = static_cast<std::uint8_t>(remaining);
            indices_.push_back(a);
            a[pos] = 0;
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            a[pos] = static_cast<std::uint8_t>(e);
            enumerate(a, pos + 1, remaining - e);
        }
        a[pos] = 0;
    }

    std::uint64_t key(const std::array<std::uint8_t, 16>& a) const {
        std::uint64_t k = 0;
        for (int i = 0; i < n_; ++i) k = k * 37u + a[i];
        return k;
    }

    void build_shift_table() {
        shift_.assign(indices_.size() * n_, -1);
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (degree_[static_cast<int>(i)] == kJetMaxOrder) continue;
            for (int k = 0; k < n_; ++k) {
                auto a = indices_[i];
                a[k]++;
                shift_[i * n_ + k] = lookup_.at(key(a));
            }
        }
    }

    void build_product_pairs() {
        const int total = size(kJetMaxOrder);
        for (int ia = 0; ia < total; ++ia) {
            for (int ib = 0; ib < total; ++ib) {
                if (degree_[ia] + degree_[ib] > kJetMaxOrder) continue;
                auto s = indices_[ia];
                for (int k = 0; k < n_; ++k) s[k] = static_cast<std::uint8_t>(s[k] + indices_[ib][k]);
                pairs_.push_back({ia, ib, lookup_.at(key(s))});
            }
        }
        std::sort(pairs_.begin(), pairs_.end(),
                  [](const Pair& p, const Pair& q) { return p.target < q.target; });
    }

    int n_;
    std::vector<std::array<std::uint8_t, 16>> indices_;
    std::vector<int> offsets_;
    std::vector<int> degree_;
    std::vector<int> shift_;
    std::map<std::uint64_t, int> lookup_;
    std::vector<Pair> pairs_;
};

inline const JetTable& JetTable::get(int nvars) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<JetTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(nvars);
    if (it == cache.end()) it = cache.emplace(nvars, std::make_unique<JetTable>(nvars)).first;
    return *it->second;
}

// Coefficient storage with a small inline buffer; order <= 2 jets in up to
// ten variables never touch the heap.
class JetStore {
  public:
    static constexpr int kInline = 72;

    JetStore() = default;
    explicit JetStore(int n) : n_(n) {
        if (n_ > kInline) heap_.assign(n_, 0.0);
        else std::fill(buf_.begin(), buf_.begin() + n_, 0.0);
    }
    int size() const { return n_; }
    double* data() { return n_ > kInline ? heap_.data() : buf_.data(); }
    const double* data() const { return n_ > kInline ? heap_.data() : buf_.data(); }
    double& operator[](int i) { return data()[i]; }
    double operator[](int i) const { return data()[i]; }

  private:
    int n_ = 0;
    std::array<double, kInline> buf_;
    std::vector<double> heap_;
};

class Jet {
  public:
    Jet() = default;
    Jet(int nvars, int order)
        : table_(&JetTable::get(nvars)), order_(order), c_(table_->size(order)) {
        require(order >= 0 && order <= kJetMaxOrder, "Jet: order out of range");
    }

    // constant jet
    static Jet constant(int nvars, int order, double v) {
        Jet j(nvars, order);
        j.c_[0] = v;
        return j;
    }
    // jet of the coordinate function x_k expanded at value v
    static Jet variable(int nvars, int order, int k, double v) {
        Jet j(nvars, order);
        j.c_[0] = v;
        if (order >= 1) j.c_[1 + k] = 1.0;
        return j;
    }

    int nvars() const { return table_->nvars(); }
    int order() const { return order_; }
    int size() const { return c_.size(); }
    double value() const { return c_[0]; }
    double& operator[](int i) { return c_[i]; }
    double operator[](int i) const { return c_[i]; }

    // first partial d f / d x_k
    double d1(int k) const {
        if (order_ < 1) throw domain_error("Jet::d1 needs order >= 1");
        return c_[1 + k];
    }
    // second partial d^2 f / dx_i dx_j  (Taylor coefficient times multiplicity)
    double d2(int i, int j) const {
        if (order_ < 2) throw domain_error("Jet::d2 needs order >= 2");
        int idx = table_->shift(1 + std::min(i, j), std::max(i, j));
        return (i == j) ? 2.0 * c_[idx] : c_[idx];
    }

    Jet truncated(int order) const {
        require(order <= order_, "Jet::truncated: cannot raise order");
        Jet r(nvars(), order);
        std::copy(c_.data(), c_.data() + r.size(), r.c_.data());
        return r;
    }

    // jet of the partial derivative d f / d x_k, one order lower
    Jet derivative(int k) const {
        require(order_ >= 1, "Jet::derivative needs order >= 1");
        Jet r(nvars(), order_ - 1);
        const auto& idx = table_->indices();
        for (int i = 0; i < r.size(); ++i) {
            int src = table_->shift(i, k);
            r.c_[i] = c_[src] * (idx[i][k] + 1);
        }
        return r;
    }

    Jet& operator+=(const Jet& o) {
        for (int i = 0; i < size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int i = 0; i < size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet& operator*=(double s) {
        for (int i = 0; i < size(); ++i) c_[i] *= s;
        return *this;
    }
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, const Jet& a) {
        Jet r = a * -1.0;
        r.c_[0] += s;
        return r;
    }
    friend Jet operator-(const Jet& a) { return a * -1.0; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.nvars(), std::min(a.order_, b.order_));
        const int na = a.size(), nb = b.size(), nr = r.size();
        for (const auto& p : a.table_->product_pairs()) {
            if (p.target >= nr) break;  // pairs sorted by target
            if (p.ia >= na || p.ib >= nb) continue;
            r.c_[p.target] += a.c_[p.ia] * b.c_[p.ib];
        }
        return r;
    }

    // Composition with a scalar power series around the jet's value:
    // given g(y) with derivatives g^(m)(c), returns g(f) for f = this.
    // coeffs[m] must hold g^(m)(c)/m! for m = 0..order.
    Jet compose_series(const std::array<double, kJetMaxOrder + 1>& coeffs) const {
        Jet dx = *this;
        dx.c_[0] = 0.0;  // f - c
        Jet acc = Jet::constant(nvars(), order_, coeffs[order_]);
        for (int m = order_ - 1; m >= 0; --m) {
            acc = acc * dx;
            acc.c_[0] += coeffs[m];
        }
        return acc;
    }

  private:
    const JetTable* table_ = nullptr;
    int order_ = 0;
    JetStore c_;
};

inline Jet jet_recip(const Jet& f) {
    const double c = f.value();
    require(c != 0.0, "jet_recip: zero value");
    std::array<double, kJetMaxOrder + 1> s{};
    double p = 1.0 / c;
    for (int m = 0; m <= f.order(); ++m) {
        s[m] = (m % 2 == 0 ? p : -p);
        p /= c;
    }
    return f.compose_series(s);
}

inline Jet jet_pow(const Jet& f, double e) {
    const double c = f.value();
    require(c > 0.0, "jet_pow: base must be positive");
    std::array<double, kJetMaxOrder + 1> s{};
    double binom = 1.0;  // binomial(e, m)
    for (int m = 0; m <= f.order(); ++m) {
        s[m] = binom * std::pow(c, e - m);
        binom *= (e - m) / (m + 1.0);
    }
    return f.compose_series(s);
}

inline Jet jet_sqrt(const Jet& f) { return jet_pow(f, 0.5); }

inline Jet jet_exp(const Jet& f) {
    std::array<double, kJetMaxOrder + 1> s{};
    const double ec = std::exp(f.value());
    double fact = 1.0;
    for (int m = 0; m <= f.order(); ++m) {
        s[m] = ec / fact;
        fact *= (m + 1.0);
    }
    return f.compose_series(s);
}

inline Jet jet_log(const Jet& f) {
    const double c = f.value();
    require(c > 0.0, "jet_log: value must be positive");
    std::array<double, kJetMaxOrder + 1> s{};
    s[0] = std::log(c);
    double p = 1.0 / c;
    for (int m = 1; m <= f.order(); ++m) {
        s[m] = (m % 2 == 1 ? p : -p) / m;
        p /= c;
    }
    return f.compose_series(s);
}

}  // namespace qclab

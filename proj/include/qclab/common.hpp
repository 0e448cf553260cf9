#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qclab {

// Bad inputs / violated preconditions (CLI maps these to exit code 2).
class domain_error : public std::runtime_error {
  public:
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failures: quadrature budget exhausted, step-size
// underflow, positivity loss (CLI maps these to exit code 3).
class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures (CLI maps these to exit code 4).
class io_error : public std::runtime_error {
  public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw domain_error(msg);
}

// vol(S^m) = 2 pi^((m+1)/2) / Gamma((m+1)/2)
inline double sphere_volume(int m) {
    require(m >= 0, "sphere_volume: negative dimension");
    const double h = 0.5 * (m + 1);
    return 2.0 * std::exp(h * std::log(M_PI) - std::lgamma(h));
}

// Q-curvature of the unit round sphere, n(n^2-4)/8.
inline double q_curvature_sphere(int n) {
    return n * (static_cast<double>(n) * n - 4.0) / 8.0;
}

inline double sqr(double x) { return x * x; }

}  // namespace qclab

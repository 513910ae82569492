#pragma once
// Quad-precision scalar types, small dense linear algebra, seeded sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/complex128.hpp>
#include <boost/multiprecision/float128.hpp>

#include "exactpoly.hpp"

namespace kleinian {

using Real = boost::multiprecision::float128;
using Cplx = boost::multiprecision::complex128;

inline const Real& pi_r() {
    static const Real v = boost::math::constants::pi<Real>();
    return v;
}
inline Cplx I_c() { return Cplx(Real(0), Real(1)); }
inline Cplx expi(const Real& t) { return Cplx(cos(t), sin(t)); }
inline Real absr(const Real& x) { return x < 0 ? -x : x; }
inline Real cabs(const Cplx& z) { return abs(z); }
inline Cplx root_of_unity(int n, long long k) {
    long long m = ((k % n) + n) % n;
    return expi(2 * pi_r() * Real(m) / Real(n));
}
// Principal n-th root, branch cut on the negative axis.
inline Cplx principal_root(const Cplx& z, int n) {
    if (z == Cplx(0)) return Cplx(0);
    Real r = abs(z), t = arg(z);
    return pow(r, Real(1) / Real(n)) * expi(t / Real(n));
}
inline Cplx to_cplx(const Rational& q) { return GradedPoly::to_num<Cplx>(q); }
inline Real to_real(const Rational& q) { return GradedPoly::to_num<Real>(q); }

inline std::string to_string_full(const Real& x) {
    std::ostringstream os;
    os << std::setprecision(36) << x;
    return os.str();
}
inline Real parse_real(const std::string& s) { return Real(s); }

// Row-major dense complex matrix.
struct CMat {
    int rows = 0, cols = 0;
    std::vector<Cplx> a;
    CMat() = default;
    CMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, Cplx(0)) {}
    Cplx& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    const Cplx& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    static CMat identity(int n) {
        CMat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = Cplx(1);
        return m;
    }
    CMat transpose() const {
        CMat t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
};

inline CMat operator*(const CMat& x, const CMat& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matrix shape mismatch");
    CMat r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const Cplx xi = x(i, k);
            for (int j = 0; j < y.cols; ++j) r(i, j) += xi * y(k, j);
        }
    return r;
}
inline CMat operator-(const CMat& x, const CMat& y) {
    CMat r = x;
    for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
    return r;
}
inline std::vector<Cplx> matvec(const CMat& m, const std::vector<Cplx>& v) {
    std::vector<Cplx> r(m.rows, Cplx(0));
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r[i] += m(i, j) * v[j];
    return r;
}
inline Real max_abs(const CMat& m) {
    Real r = 0;
    for (auto& z : m.a) r = std::max(r, Real(abs(z)));
    return r;
}

// LU with partial pivoting; throws on exact singularity.
struct LU {
    CMat lu;
    std::vector<int> piv;
    int sign = 1;
    explicit LU(const CMat& m) : lu(m), piv(m.rows) {
        if (m.rows != m.cols) throw std::invalid_argument("LU of non-square matrix");
        int n = m.rows;
        for (int i = 0; i < n; ++i) piv[i] = i;
        for (int k = 0; k < n; ++k) {
            int p = k;
            Real best = abs(lu(k, k));
            for (int i = k + 1; i < n; ++i)
                if (abs(lu(i, k)) > best) best = abs(lu(i, k)), p = i;
            if (best == 0) throw std::runtime_error("singular matrix");
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
                std::swap(piv[k], piv[p]);
                sign = -sign;
            }
            for (int i = k + 1; i < n; ++i) {
                lu(i, k) /= lu(k, k);
                const Cplx f = lu(i, k);
                for (int j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
            }
        }
    }
    std::vector<Cplx> solve(const std::vector<Cplx>& b) const {
        int n = lu.rows;
        std::vector<Cplx> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[piv[i]];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
            x[i] /= lu(i, i);
        }
        return x;
    }
    Cplx det() const {
        Cplx d = Cplx(sign);
        for (int i = 0; i < lu.rows; ++i) d *= lu(i, i);
        return d;
    }
    CMat inverse() const {
        int n = lu.rows;
        CMat inv(n, n);
        for (int j = 0; j < n; ++j) {
            std::vector<Cplx> e(n, Cplx(0));
            e[j] = Cplx(1);
            auto c = solve(e);
            for (int i = 0; i < n; ++i) inv(i, j) = c[i];
        }
        return inv;
    }
};

inline CMat inverse(const CMat& m) { return LU(m).inverse(); }

// Real symmetric helpers for Im(tau).
using RMat = std::vector<std::vector<Real>>;

// Cholesky factor L (lower) of a symmetric positive definite matrix; empty when not SPD.
inline RMat cholesky(const RMat& a) {
    std::size_t n = a.size();
    RMat l(n, std::vector<Real>(n, Real(0)));
    for (std::size_t j = 0; j < n; ++j) {
        Real d = a[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
        if (!(d > 0)) return {};
        l[j][j] = sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            Real s = a[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            l[i][j] = s / l[j][j];
        }
    }
    return l;
}

// Smallest eigenvalue of a symmetric matrix by Jacobi rotations (g <= 4).
inline std::vector<Real> sym_eigenvalues(RMat a) {
    std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        Real off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < Real("1e-60")) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0) continue;
                Real theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                Real t = (theta >= 0 ? Real(1) : Real(-1)) / (absr(theta) + sqrt(theta * theta + 1));
                Real c = 1 / sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    Real akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    Real apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<Real> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline RMat rinverse(const RMat& a) {
    std::size_t n = a.size();
    CMat m(static_cast<int>(n), static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = Cplx(a[i][j]);
    CMat inv = inverse(m);
    RMat r(n, std::vector<Real>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r[i][j] = inv(i, j).real();
    return r;
}

// All draws come from this seeded engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }
    // Rational in [-bound, bound] with the given denominator.
    Rational rational(int denom, double bound = 1.0) {
        int m = static_cast<int>(std::floor(bound * denom));
        return Rational(integer(-m, m), denom);
    }
    Cplx cplx_disc(double radius) {
        double r = radius * std::sqrt(uniform(0, 1)), t = uniform(0, 2 * M_PI);
        return Cplx(Real(r * std::cos(t)), Real(r * std::sin(t)));
    }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace kleinian

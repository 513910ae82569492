#pragma once
// Truncated multivariate power series and the Riemann theta function with characteristics.

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"

namespace kleinian {

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kMaxGenus = 4;
using MultiIndex = std::array<int, kMaxGenus>;

// All exponent vectors in g variables of total degree <= K, graded order.
class JetIndex {
public:
    static std::shared_ptr<const JetIndex> get(int g, int K) {
        static std::map<std::pair<int, int>, std::shared_ptr<const JetIndex>> cache;
        static std::mutex mu;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(g, K);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        auto p = std::shared_ptr<const JetIndex>(new JetIndex(g, K));
        cache[key] = p;
        return p;
    }

    int g, K;
    std::vector<MultiIndex> alpha;
    std::vector<int> degree;
    std::vector<int> parent, parent_var;  // alpha = alpha[parent] + e_{parent_var}
    std::vector<Real> factorial;          // alpha!
    struct Triple {
        int a, b, c;  // alpha[a] + alpha[b] = alpha[c]
    };
    std::vector<Triple> mult;  // sorted by degree of c
    std::vector<int> mult_deg_start;

    std::size_t size() const { return alpha.size(); }
    int index(const MultiIndex& a) const {
        int code = 0, tot = 0;
        for (int i = g - 1; i >= 0; --i) {
            if (a[i] < 0) return -1;
            tot += a[i];
            code = code * (K + 1) + a[i];
        }
        for (int i = g; i < kMaxGenus; ++i)
            if (a[i]) return -1;
        if (tot > K) return -1;
        return lookup_[code];
    }
    // index of the multi-index counting occurrences of 0-based variables in `vars`
    int index_of_vars(const std::vector<int>& vars) const {
        MultiIndex a{};
        for (int v : vars) a.at(v) += 1;
        return index(a);
    }

private:
    JetIndex(int g_, int K_) : g(g_), K(K_) {
        if (g < 1 || g > kMaxGenus) throw std::invalid_argument("genus out of range for jets");
        int total = 1;
        for (int i = 0; i < g; ++i) total *= (K + 1);
        lookup_.assign(total, -1);
        for (int d = 0; d <= K; ++d) {
            // enumerate exponent vectors of degree d in reverse lexicographic order
            MultiIndex a{};
            enumerate(a, 0, d);
        }
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            const auto& a = alpha[i];
            int code = 0;
            for (int k = g - 1; k >= 0; --k) code = code * (K + 1) + a[k];
            lookup_[code] = static_cast<int>(i);
        }
        parent.assign(alpha.size(), -1);
        parent_var.assign(alpha.size(), -1);
        factorial.assign(alpha.size(), Real(1));
        for (std::size_t i = 1; i < alpha.size(); ++i) {
            for (int v = 0; v < g; ++v)
                if (alpha[i][v] > 0) {
                    MultiIndex b = alpha[i];
                    b[v] -= 1;
                    parent[i] = index(b);
                    parent_var[i] = v;
                    break;
                }
            Real f = 1;
            for (int v = 0; v < g; ++v)
                for (int k = 2; k <= alpha[i][v]; ++k) f *= k;
            factorial[i] = f;
        }
        for (int d = 0; d <= K; ++d) {
            mult_deg_start.push_back(static_cast<int>(mult.size()));
            for (std::size_t a = 0; a < alpha.size(); ++a)
                for (std::size_t b = 0; b < alpha.size(); ++b) {
                    if (degree[a] + degree[b] != d) continue;
                    MultiIndex c{};
                    for (int v = 0; v < g; ++v) c[v] = alpha[a][v] + alpha[b][v];
                    mult.push_back({static_cast<int>(a), static_cast<int>(b), index(c)});
                }
        }
        mult_deg_start.push_back(static_cast<int>(mult.size()));
    }
    void enumerate(MultiIndex& a, int v, int left) {
        if (v == g - 1) {
            a[v] = left;
            alpha.push_back(a);
            int d = 0;
            for (int k = 0; k < g; ++k) d += a[k];
            degree.push_back(d);
            a[v] = 0;
            return;
        }
        for (int k = left; k >= 0; --k) {
            a[v] = k;
            enumerate(a, v + 1, left - k);
        }
        a[v] = 0;
    }
    std::vector<int> lookup_;
};

using JetIndexPtr = std::shared_ptr<const JetIndex>;

// Taylor coefficients c_alpha of a function around a point: f(u0+h) = sum c_alpha h^alpha.
struct TPS {
    JetIndexPtr idx;
    std::vector<Cplx> c;

    TPS() = default;
    explicit TPS(JetIndexPtr ix) : idx(std::move(ix)), c(idx->size(), Cplx(0)) {}

    Cplx derivative(const MultiIndex& a) const {
        int i = idx->index(a);
        if (i < 0) throw std::out_of_range("derivative order beyond jet");
        return c[i] * idx->factorial[i];
    }
    Cplx derivative_vars(const std::vector<int>& vars) const {
        int i = idx->index_of_vars(vars);
        if (i < 0) throw std::out_of_range("derivative order beyond jet");
        return c[i] * idx->factorial[i];
    }
    TPS operator*(const TPS& o) const {
        TPS r(idx);
        for (auto& t : idx->mult) r.c[t.c] += c[t.a] * o.c[t.b];
        return r;
    }
    TPS& operator*=(const Cplx& s) {
        for (auto& z : c) z *= s;
        return *this;
    }
    TPS operator+(const TPS& o) const {
        TPS r = *this;
        for (std::size_t i = 0; i < c.size(); ++i) r.c[i] += o.c[i];
        return r;
    }

    // f = exp(g): d f_d = sum_k k g_k f_{d-k}
    TPS exp_series() const {
        TPS f(idx);
        f.c[0] = exp(c[0]);
        for (int d = 1; d <= idx->K; ++d)
            for (int t = idx->mult_deg_start[d]; t < idx->mult_deg_start[d + 1]; ++t) {
                const auto& tr = idx->mult[t];
                int k = idx->degree[tr.a];
                if (k == 0) continue;
                f.c[tr.c] += Real(k) / Real(d) * c[tr.a] * f.c[tr.b];
            }
        return f;
    }
    // g = log f: d g_d = d f_d - sum_{k<d} k g_k f_{d-k}, all over f_0
    TPS log_series() const {
        if (c[0] == Cplx(0)) throw std::domain_error("log of a series vanishing at the centre");
        TPS g(idx);
        g.c[0] = log(c[0]);
        Cplx inv0 = Cplx(1) / c[0];
        for (int d = 1; d <= idx->K; ++d) {
            for (std::size_t i = 0; i < c.size(); ++i)
                if (idx->degree[i] == d) g.c[i] = c[i];
            for (int t = idx->mult_deg_start[d]; t < idx->mult_deg_start[d + 1]; ++t) {
                const auto& tr = idx->mult[t];
                int k = idx->degree[tr.a];
                if (k == 0 || k == d) continue;
                g.c[tr.c] -= Real(k) / Real(d) * g.c[tr.a] * c[tr.b];
            }
            for (std::size_t i = 0; i < c.size(); ++i)
                if (idx->degree[i] == d) g.c[i] *= inv0;
        }
        return g;
    }
};

struct ThetaParams {
    CMat tau;
    std::vector<Real> delta_prime, delta_dblprime;
    int precision_digits = 30;
};

struct ThetaStats {
    std::size_t lattice_points = 0;
    Real radius2 = 0;
};

// Points m in Z^g with (m - c)^T Y (m - c) <= R2, where Y = R^T R (R upper triangular).
inline void ellipsoid_points(const RMat& Y, const std::vector<Real>& center, const Real& R2,
                             std::vector<std::vector<long long>>& out, std::size_t limit = 5000000) {
    const int g = static_cast<int>(Y.size());
    RMat L = cholesky(Y);
    if (L.empty()) throw std::invalid_argument("Im tau is not positive definite");
    // upper factor
    RMat U(g, std::vector<Real>(g, Real(0)));
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) U[i][j] = L[j][i];
    std::vector<long long> m(g);
    std::vector<Real> x(g);
    std::function<void(int, Real)> rec = [&](int i, Real rem) {
        Real s = 0;
        for (int j = i + 1; j < g; ++j) s += U[i][j] * x[j];
        s /= U[i][i];
        Real half = sqrt(std::max(rem, Real(0))) / U[i][i];
        // x_i = m_i - c_i in [-s - half, -s + half]
        long long lo = static_cast<long long>(ceil(-s - half + center[i]));
        long long hi = static_cast<long long>(floor(-s + half + center[i]));
        for (long long k = lo; k <= hi; ++k) {
            m[i] = k;
            x[i] = Real(k) - center[i];
            Real t = U[i][i] * (x[i] + s);
            Real r2 = rem - t * t;
            if (r2 < 0) continue;
            if (i == 0) {
                out.push_back(m);
                if (out.size() > limit) throw ResourceError("theta lattice enumeration exceeds budget");
            } else {
                rec(i - 1, r2);
            }
        }
    };
    rec(g - 1, R2);
}

// Taylor coefficients in u of theta[delta](M u | tau) around u0, where z0 = M u0.
inline TPS theta_jet(const ThetaParams& P, const CMat& M, const std::vector<Cplx>& z0, int max_order,
                     ThetaStats* stats = nullptr) {
    const int g = P.tau.rows;
    if (max_order > 10) throw std::invalid_argument("theta jet order above 10");
    auto idx = JetIndex::get(g, max_order);
    RMat Y(g, std::vector<Real>(g));
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) Y[a][b] = (P.tau(a, b).imag() + P.tau(b, a).imag()) / 2;
    RMat Yi = rinverse(Y);
    std::vector<Real> cen(g, Real(0));
    for (int a = 0; a < g; ++a) {
        for (int b = 0; b < g; ++b) cen[a] -= Yi[a][b] * z0[b].imag();
        cen[a] -= P.delta_prime[a];
    }
    // derivative padding: each order multiplies a term by at most |2 pi M^T p|
    Real mnorm = 0;
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) mnorm = std::max(mnorm, Real(abs(M(a, b))));
    Real cnorm = 0;
    for (auto& x : cen) cnorm = std::max(cnorm, absr(x));
    Real R2 = (Real(P.precision_digits + 5) * log(Real(10)) +
               max_order * log(1 + 2 * pi_r() * g * mnorm * (cnorm + 8))) /
              pi_r();
    std::vector<std::vector<long long>> pts;
    ellipsoid_points(Y, cen, R2, pts);
    if (stats) {
        stats->lattice_points = pts.size();
        stats->radius2 = R2;
    }
    TPS out(idx);
    std::vector<Cplx> mono(idx->size());
    std::vector<Cplx> q(g);
    const Cplx twopii = Cplx(0, 2) * pi_r();
    const Cplx pii = Cplx(0, 1) * pi_r();
    std::vector<Real> p(g);
    for (auto& m : pts) {
        for (int a = 0; a < g; ++a) p[a] = Real(m[a]) + P.delta_prime[a];
        Cplx ph = Cplx(0);
        for (int a = 0; a < g; ++a) {
            Cplx row = Cplx(0);
            for (int b = 0; b < g; ++b) row += P.tau(a, b) * p[b];
            ph += pii * p[a] * row + twopii * p[a] * (z0[a] + P.delta_dblprime[a]);
        }
        Cplx term = exp(ph);
        for (int a = 0; a < g; ++a) {
            Cplx s = Cplx(0);
            for (int b = 0; b < g; ++b) s += M(b, a) * p[b];
            q[a] = twopii * s;
        }
        mono[0] = term;
        out.c[0] += term;
        for (std::size_t i = 1; i < mono.size(); ++i) {
            mono[i] = mono[idx->parent[i]] * q[idx->parent_var[i]];
            out.c[i] += mono[i];
        }
    }
    for (std::size_t i = 1; i < out.c.size(); ++i) out.c[i] /= idx->factorial[i];
    return out;
}

// Plain theta value, summed term by term (order-0 jet).
inline Cplx theta_value(const ThetaParams& P, const std::vector<Cplx>& z) {
    const int g = P.tau.rows;
    return theta_jet(P, CMat::identity(g), z, 0).c[0];
}

// Sum of term magnitudes; the natural scale for deciding whether theta vanishes.
inline Real theta_abs_scale(const ThetaParams& P, const std::vector<Cplx>& z) {
    const int g = P.tau.rows;
    ThetaParams Q = P;
    RMat Y(g, std::vector<Real>(g));
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) Y[a][b] = P.tau(a, b).imag();
    RMat Yi = rinverse(Y);
    std::vector<Real> cen(g, Real(0));
    for (int a = 0; a < g; ++a) {
        for (int b = 0; b < g; ++b) cen[a] -= Yi[a][b] * z[b].imag();
        cen[a] -= P.delta_prime[a];
    }
    Real R2 = Real(P.precision_digits + 5) * log(Real(10)) / pi_r();
    std::vector<std::vector<long long>> pts;
    ellipsoid_points(Y, cen, R2, pts);
    Real s = 0;
    for (auto& m : pts) {
        Real ph = 0;
        for (int a = 0; a < g; ++a) {
            Real pa = Real(m[a]) + P.delta_prime[a];
            Real row = 0;
            for (int b = 0; b < g; ++b) row += Y[a][b] * (Real(m[b]) + P.delta_prime[b]);
            ph += -pi_r() * pa * row - 2 * pi_r() * pa * z[a].imag();
        }
        s += exp(ph);
    }
    return s;
}

}  // namespace kleinian

#pragma once
// Gauss-Legendre panels and tanh-sinh on [0,1] for vector-valued complex integrands.

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"

namespace kleinian {

struct GLRule {
    std::vector<Real> x, w;  // nodes and weights on [-1,1]
};

inline const GLRule& gauss_legendre(int order) {
    static std::map<int, GLRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    GLRule r;
    r.x.resize(order);
    r.w.resize(order);
    for (int i = 0; i < (order + 1) / 2; ++i) {
        Real z = cos(pi_r() * (Real(i) + Real(0.75)) / (Real(order) + Real(0.5)));
        Real dp = 0;
        for (int it2 = 0; it2 < 100; ++it2) {
            Real p0 = 1, p1 = z;
            for (int k = 2; k <= order; ++k) {
                Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1;
            dp = order * (z * p1 - p0) / (z * z - 1);
            Real dz = p1 / dp;
            z -= dz;
            if (absr(dz) < Real("1e-33")) break;
        }
        // recompute derivative at the converged node
        Real p0 = 1, p1 = z;
        for (int k = 2; k <= order; ++k) {
            Real p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (z * p1 - p0) / (z * z - 1);
        r.x[i] = -z;
        r.x[order - 1 - i] = z;
        r.w[i] = r.w[order - 1 - i] = 2 / ((1 - z * z) * dp * dp);
    }
    return cache.emplace(order, r).first->second;
}

using CVec = std::vector<Cplx>;

inline void axpy(CVec& acc, const Real& a, const CVec& v) {
    if (acc.size() < v.size()) acc.resize(v.size(), Cplx(0));
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += a * v[i];
}
inline Real vec_norm(const CVec& v) {
    Real m = 0;
    for (auto& z : v) m = std::max(m, Real(abs(z)));
    return m;
}
inline Real vec_diff(const CVec& a, const CVec& b) {
    Real m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, Real(abs(a[i] - b[i])));
    return m;
}

struct QuadResult {
    CVec value;
    Real error_estimate = 0;
    int evaluations = 0;
};

// Integral over t in [0,1] using `panels` equal panels of `order` nodes; f(t) -> CVec.
template <class F>
CVec gl_panels(F&& f, int panels, int order) {
    const GLRule& r = gauss_legendre(order);
    CVec acc;
    Real h = Real(1) / panels;
    for (int p = 0; p < panels; ++p) {
        Real a = p * h;
        for (int k = 0; k < order; ++k) {
            Real t = a + h * (r.x[k] + 1) / 2;
            axpy(acc, h * r.w[k] / 2, f(t));
        }
    }
    return acc;
}

// Doubles the panel count until two successive results agree.
template <class F>
QuadResult gl_adaptive(F&& f, const Real& rel_tol, int order = 30, int max_panels = 256) {
    QuadResult q;
    int panels = 2;
    CVec prev = gl_panels(f, panels, order);
    q.evaluations = panels * order;
    for (panels = 4; panels <= max_panels; panels *= 2) {
        CVec cur = gl_panels(f, panels, order);
        q.evaluations += panels * order;
        Real d = vec_diff(cur, prev), sc = vec_norm(cur);
        prev = std::move(cur);
        q.error_estimate = d;
        if (d <= rel_tol * (sc + Real("1e-300"))) break;
    }
    q.value = prev;
    return q;
}

// Tanh-sinh on [0,1]: f(w, one_minus_w) receives both w and 1-w computed without cancellation.
template <class F>
QuadResult tanh_sinh(F&& f, const Real& rel_tol, int max_level = 9) {
    QuadResult q;
    const Real tmax = 5.5;  // tail of w^{-2/3} must drop below 1e-35
    auto node = [&](const Real& t, CVec& acc, const Real& scale) {
        Real qq = exp(-pi_r() * sinh(t));
        Real w = 1 / (1 + qq), omw = qq / (1 + qq);
        Real wt = pi_r() * cosh(t) * qq / ((1 + qq) * (1 + qq));
        if (w == 0 || omw == 0 || wt == 0) return;
        axpy(acc, scale * wt, f(w, omw));
        ++q.evaluations;
    };
    Real h = Real(1) / 2;
    bool settled = false;
    CVec sum;
    int kmax = static_cast<int>(ceil(tmax / h));
    for (int k = -kmax; k <= kmax; ++k) node(k * h, sum, Real(1));
    CVec est = sum;
    for (auto& z : est) z *= h;
    for (int level = 1; level <= max_level; ++level) {
        h /= 2;
        kmax = static_cast<int>(ceil(tmax / h));
        for (int k = -kmax; k <= kmax; ++k)
            if (k % 2 != 0) node(k * h, sum, Real(1));
        CVec cur = sum;
        for (auto& z : cur) z *= h;
        Real d = vec_diff(cur, est), sc = vec_norm(cur);
        est = std::move(cur);
        // the error roughly squares per level, so the last difference overstates it
        Real rel = d / (sc + Real("1e-300"));
        q.error_estimate = std::max(rel * rel, Real("1e-34")) * sc;
        if (level >= 3 && rel <= sqrt(rel_tol) / 10) {
            if (settled) break;
            settled = true;
        }
    }
    q.value = est;
    return q;
}

}  // namespace kleinian

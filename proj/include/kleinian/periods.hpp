#pragma once
// Branch points, cycle basis, period matrices and the Abel map for cyclic curves.

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "curve.hpp"
#include "json.hpp"
#include "numeric.hpp"
#include "quadrature.hpp"

namespace kleinian {

struct ConditioningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CycleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Roots of a monic polynomial sum coeffs[j] x^j (coeffs.back() == 1), Aberth iteration.
inline std::vector<Cplx> poly_roots(const std::vector<Cplx>& coeffs) {
    int deg = static_cast<int>(coeffs.size()) - 1;
    auto ev = [&](const Cplx& x, Cplx& d) {
        Cplx p = coeffs[deg];
        d = Cplx(0);
        for (int j = deg - 1; j >= 0; --j) {
            d = d * x + p;
            p = p * x + coeffs[j];
        }
        return p;
    };
    Real bound = 0;
    for (int j = 0; j < deg; ++j) bound = std::max(bound, Real(abs(coeffs[j])));
    Real rad = 1 + bound;
    std::vector<Cplx> z(deg);
    for (int k = 0; k < deg; ++k) z[k] = rad * Real(0.7) * expi(2 * pi_r() * (Real(k) + Real(0.25)) / deg);
    for (int it = 0; it < 500; ++it) {
        Real maxstep = 0;
        for (int k = 0; k < deg; ++k) {
            Cplx d;
            Cplx p = ev(z[k], d);
            if (p == Cplx(0)) continue;
            Cplx ratio = p / d;
            Cplx s = Cplx(0);
            for (int m = 0; m < deg; ++m)
                if (m != k) s += Cplx(1) / (z[k] - z[m]);
            Cplx step = ratio / (Cplx(1) - ratio * s);
            z[k] -= step;
            maxstep = std::max(maxstep, Real(abs(step)) / (1 + Real(abs(z[k]))));
        }
        if (maxstep < Real("1e-33")) break;
    }
    for (auto& r : z)
        for (int it = 0; it < 5; ++it) {
            Cplx d;
            Cplx p = ev(r, d);
            if (d == Cplx(0)) break;
            r -= p / d;
        }
    return z;
}

inline std::vector<Cplx> branch_points(const CurveSpec& c) {
    std::vector<Cplx> coeffs(c.lambda_c.begin(), c.lambda_c.end());
    coeffs.push_back(Cplx(1));
    return poly_roots(coeffs);
}

// Closed path: branch i -> branch j on sheet k, back on sheet k+1.
struct SegmentCycle {
    int i = 0, j = 0, sheet = 0;
};

struct CycleCombo {
    std::vector<int> coeffs;  // integer combination of generator cycles
};

struct PeriodData {
    int genus = 0;
    CMat omega1, omega2, tau;
    std::vector<Cplx> branch_points;
    std::vector<SegmentCycle> generators;
    std::vector<std::vector<int>> intersection;  // generator pairing
    std::vector<CycleCombo> alpha, beta;
    int precision_digits = 30;
    Real tau_symmetry_residual = 0;
    Real im_tau_min_eig = 0;
    Real quad_error = 0;
    bool beta_negated = false;
    CMat omega1_inv;
    std::vector<std::vector<Cplx>> gen_period_vectors;  // per generator, g entries

    Real tolerance() const { return pow(Real(10), Real(2 - precision_digits)); }
};

namespace detail {

inline Real seg_point_distance(const Cplx& a, const Cplx& b, const Cplx& p) {
    Cplx d = b - a;
    Real t = ((p - a) * conj(d)).real() / norm(d);
    t = std::clamp(t, Real(0), Real(1));
    return abs(a + t * d - p);
}

inline bool segments_cross(const Cplx& a, const Cplx& b, const Cplx& c, const Cplx& d) {
    auto cross = [](const Cplx& u, const Cplx& v) { return u.real() * v.imag() - u.imag() * v.real(); };
    Real d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    Real d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Worst clearance of a chain: min over segments of (distance of other branch points / length).
inline Real chain_quality(const std::vector<Cplx>& e, const std::vector<int>& order) {
    Real q = 1e30;
    int m = static_cast<int>(order.size());
    for (int a = 0; a + 1 < m; ++a) {
        const Cplx &p = e[order[a]], &r = e[order[a + 1]];
        Real len = abs(r - p);
        for (int b = 0; b < m; ++b) {
            if (b == a || b == a + 1) continue;
            q = std::min(q, seg_point_distance(p, r, e[order[b]]) / len);
        }
        for (int b = a + 2; b + 1 < m; ++b)
            if (segments_cross(p, r, e[order[b]], e[order[b + 1]])) return Real(-1);
    }
    return q;
}

inline std::vector<int> choose_chain(const std::vector<Cplx>& e) {
    int m = static_cast<int>(e.size());
    Cplx cen = Cplx(0);
    for (auto& z : e) cen += z;
    cen /= Real(m);
    std::vector<std::vector<int>> candidates;
    std::vector<int> ord(m);
    std::iota(ord.begin(), ord.end(), 0);
    auto by_angle = ord;
    std::sort(by_angle.begin(), by_angle.end(), [&](int a, int b) { return arg(e[a] - cen) < arg(e[b] - cen); });
    // every rotation of the angular order
    for (int r = 0; r < m; ++r) {
        std::vector<int> v(m);
        for (int k = 0; k < m; ++k) v[k] = by_angle[(k + r) % m];
        candidates.push_back(v);
    }
    auto by_re = ord;
    std::sort(by_re.begin(), by_re.end(), [&](int a, int b) { return e[a].real() < e[b].real(); });
    candidates.push_back(by_re);
    auto by_im = ord;
    std::sort(by_im.begin(), by_im.end(), [&](int a, int b) { return e[a].imag() < e[b].imag(); });
    candidates.push_back(by_im);
    std::mt19937_64 eng(12345);
    for (int k = 0; k < 200; ++k) {
        auto v = ord;
        std::shuffle(v.begin(), v.end(), eng);
        candidates.push_back(v);
    }
    Real best = -2;
    std::vector<int> best_order;
    for (auto& v : candidates) {
        Real q = chain_quality(e, v);
        if (q > best) best = q, best_order = v;
        // first angular candidate with comfortable clearance wins, keeps the choice stable
        if (q > Real(0.25) && &v - &candidates[0] < m) return v;
    }
    if (best <= 0) throw CycleError("no non-crossing chain of branch cuts found");
    return best_order;
}

// Root (w - r)^{1/n} continuous for w in [0,1].
inline Cplx seg_root(const Cplx& r, const Real& w, const Real& omw, int n, bool is_start, bool is_end) {
    if (is_start) return Cplx(pow(w, Real(1) / n));
    if (is_end) return pow(omw, Real(1) / n) * expi(pi_r() / n);
    Cplx z = Cplx(w) - r;
    if (absr(r.imag()) <= Real("1e-40") * (1 + abs(r)) && r.real() > 1)
        return pow(r.real() - w, Real(1) / n) * expi(pi_r() / n);
    return principal_root(z, n);
}

struct SegmentGeometry {
    Cplx D, Ds;  // e_j - e_i and (D^{1/n})^s
    std::vector<Cplx> r;
};

inline SegmentGeometry segment_geometry(const CurveSpec& c, const std::vector<Cplx>& e, int i, int j) {
    SegmentGeometry G;
    G.D = e[j] - e[i];
    G.Ds = pow(principal_root(G.D, c.n), c.s);
    for (auto& x : e) G.r.push_back((x - e[i]) / G.D);
    return G;
}

// y0 on the segment at parameter w.
inline Cplx segment_y0(const CurveSpec& c, const SegmentGeometry& G, int i, int j, const Real& w, const Real& omw) {
    Cplx y = G.Ds;
    for (int m = 0; m < static_cast<int>(G.r.size()); ++m) y *= seg_root(G.r[m], w, omw, c.n, m == i, m == j);
    return y;
}

// Angle in the local uniformizer t at a branch point of the ray leaving along the segment on a sheet.
inline Real ray_angle(const CurveSpec& c, const std::vector<Cplx>& e, int i, int j, int sheet, bool at_start) {
    auto G = segment_geometry(c, e, i, j);
    Cplx y = G.Ds * root_of_unity(c.n, sheet);
    int here = at_start ? i : j;
    Real w = at_start ? Real(0) : Real(1), omw = 1 - w;
    for (int m = 0; m < static_cast<int>(e.size()); ++m) {
        if (m == here) continue;
        y *= seg_root(G.r[m], w, omw, c.n, m == i, m == j);
    }
    if (!at_start) y *= expi(pi_r() / c.n);
    Cplx ce = principal_root(curve_fprime(c, e[here]), c.n);
    Real ang = arg(y) - arg(ce);
    // sanity: n * ang must be the direction of x - e
    Cplx dir = at_start ? G.D : -G.D;
    Real chk = remainder(c.n * ang - arg(dir), 2 * pi_r());
    if (absr(chk) > Real("1e-12")) throw CycleError("ray angle inconsistent with branch direction");
    return ang;
}

inline Real mod2pi(Real x) {
    Real t = fmod(x, 2 * pi_r());
    if (t < 0) t += 2 * pi_r();
    return t;
}

inline bool in_ccw_open(const Real& x, const Real& from, const Real& to) {
    Real a = mod2pi(x - from), b = mod2pi(to - from);
    return a > Real("1e-20") && a < b - Real("1e-20");
}

struct LocalPassage {
    int point;
    Real in, out;
};

inline std::vector<LocalPassage> passages(const CurveSpec& c, const std::vector<Cplx>& e, const SegmentCycle& cy,
                                          const Real& push) {
    // at the start point the path arrives on sheet k+1 and leaves on sheet k; the reverse at the end
    LocalPassage ps{cy.i, ray_angle(c, e, cy.i, cy.j, cy.sheet + 1, true) + push,
                    ray_angle(c, e, cy.i, cy.j, cy.sheet, true) + push};
    LocalPassage pe{cy.j, ray_angle(c, e, cy.i, cy.j, cy.sheet, false) - push,
                    ray_angle(c, e, cy.i, cy.j, cy.sheet + 1, false) - push};
    return {ps, pe};
}

inline int intersection_number(const CurveSpec& c, const std::vector<Cplx>& e, const SegmentCycle& A,
                               const SegmentCycle& B) {
    const Real eps("1e-7");
    auto pa = passages(c, e, A, Real(0));
    auto pb = passages(c, e, B, eps);
    int total = 0;
    for (auto& a : pa)
        for (auto& b : pb) {
            if (a.point != b.point) continue;
            bool in_inside = in_ccw_open(b.in, a.out, a.in);
            bool out_inside = in_ccw_open(b.out, a.out, a.in);
            if (in_inside && !out_inside) total -= 1;
            if (out_inside && !in_inside) total += 1;
        }
    return total;
}

inline int pair(const std::vector<std::vector<int>>& K, const std::vector<int>& a, const std::vector<int>& b) {
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i])
            for (std::size_t j = 0; j < b.size(); ++j) s += static_cast<long long>(a[i]) * K[i][j] * b[j];
    return static_cast<int>(s);
}

// Integer symplectic basis for an antisymmetric unimodular form.
inline void symplectic_basis(const std::vector<std::vector<int>>& K, std::vector<std::vector<int>>& alpha,
                             std::vector<std::vector<int>>& beta) {
    int m = static_cast<int>(K.size());
    std::vector<std::vector<int>> pool;
    for (int i = 0; i < m; ++i) {
        std::vector<int> v(m, 0);
        v[i] = 1;
        pool.push_back(v);
    }
    while (!pool.empty()) {
        std::vector<int> a = pool.front();
        pool.erase(pool.begin());
        // Euclid on the pairings with a until some vector pairs to +-1
        for (int guard = 0; guard < 1000; ++guard) {
            int best = -1, bestv = 0;
            for (int k = 0; k < static_cast<int>(pool.size()); ++k) {
                int p = pair(K, a, pool[k]);
                if (p != 0 && (best < 0 || std::abs(p) < std::abs(bestv))) best = k, bestv = p;
            }
            if (best < 0) throw CycleError("degenerate intersection form");
            if (std::abs(bestv) == 1) {
                std::vector<int> b = pool[best];
                pool.erase(pool.begin() + best);
                if (bestv < 0)
                    for (auto& x : b) x = -x;
                for (auto& v : pool) {
                    int vb = pair(K, v, b), va = pair(K, v, a);
                    for (int t = 0; t < m; ++t) v[t] = v[t] - vb * a[t] + va * b[t];
                }
                alpha.push_back(a);
                beta.push_back(b);
                break;
            }
            for (int k = 0; k < static_cast<int>(pool.size()); ++k) {
                if (k == best) continue;
                int p = pair(K, a, pool[k]);
                int q = p / bestv;
                if (q != 0)
                    for (int t = 0; t < m; ++t) pool[k][t] -= q * pool[best][t];
            }
        }
    }
}

}  // namespace detail

// Period vectors of every holomorphic differential over one segment cycle family.
inline std::vector<std::vector<Cplx>> segment_integrals(const CurveSpec& c, const std::vector<Cplx>& e, int i, int j,
                                                        const Real& tol, Real& err) {
    auto G = detail::segment_geometry(c, e, i, j);
    const int g = c.genus;
    auto f = [&](const Real& w, const Real& omw) {
        CVec v(g);
        Cplx x = e[i] + w * G.D;
        Cplx y0 = detail::segment_y0(c, G, i, j, w, omw);
        Cplx yinv = Cplx(1) / y0;
        for (int l = 0; l < g; ++l) {
            int p = c.diffs[l].b - c.n + 1;
            Cplx t = G.D / Real(c.n);
            for (int a = 0; a < c.diffs[l].a; ++a) t *= x;
            for (int k = 0; k < -p; ++k) t *= yinv;
            v[l] = t;
        }
        return v;
    };
    auto q = tanh_sinh(f, tol);
    err = std::max(err, q.error_estimate / (vec_norm(q.value) + Real("1e-300")));
    std::vector<std::vector<Cplx>> out;
    out.push_back(q.value);
    return out;
}

inline PeriodData compute_periods(const CurveSpec& c, int precision_digits = 30) {
    if (precision_digits > 33) throw CapabilityError("at most 33 digits supported by quad precision");
    PeriodData P;
    P.genus = c.genus;
    P.precision_digits = precision_digits;
    auto e = branch_points(c);
    Real scale = 0;
    for (auto& z : e) scale = std::max(scale, Real(abs(z)));
    scale = std::max(scale, Real(1));
    for (std::size_t a = 0; a < e.size(); ++a)
        for (std::size_t b = a + 1; b < e.size(); ++b)
            if (abs(e[a] - e[b]) < Real("1e-6") * scale) throw ConditioningError("branch points nearly coincide");
    auto order = detail::choose_chain(e);
    // relabel so the chain is e_0 -> e_1 -> ...
    std::vector<Cplx> eo;
    for (int k : order) eo.push_back(e[k]);
    e = eo;
    P.branch_points = e;

    const int g = c.genus, n = c.n;
    Real tol = pow(Real(10), Real(-precision_digits - 2));
    for (int a = 0; a + 1 < static_cast<int>(e.size()); ++a) {
        auto I = segment_integrals(c, e, a, a + 1, tol, P.quad_error)[0];
        for (int k = 0; k + 1 < n; ++k) {
            P.generators.push_back({a, a + 1, k});
            std::vector<Cplx> per(g);
            for (int l = 0; l < g; ++l) {
                int p = c.diffs[l].b - n + 1;
                per[l] = (root_of_unity(n, static_cast<long long>(k) * p) -
                          root_of_unity(n, static_cast<long long>(k + 1) * p)) *
                         I[l];
            }
            P.gen_period_vectors.push_back(per);
        }
    }
    int m = static_cast<int>(P.generators.size());
    if (m != 2 * g) throw CycleError("wrong number of generator cycles");
    P.intersection.assign(m, std::vector<int>(m, 0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (a != b) P.intersection[a][b] = detail::intersection_number(c, e, P.generators[a], P.generators[b]);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (P.intersection[a][b] != -P.intersection[b][a]) throw CycleError("intersection matrix not antisymmetric");
    {
        CMat Kc(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) Kc(a, b) = Cplx(P.intersection[a][b]);
        Cplx d = LU(Kc).det();
        if (abs(d - Cplx(1)) > Real("1e-20")) throw CycleError("intersection form is not unimodular");
    }
    std::vector<std::vector<int>> al, be;
    detail::symplectic_basis(P.intersection, al, be);
    auto combine = [&](const std::vector<int>& v) {
        std::vector<Cplx> s(g, Cplx(0));
        for (int a = 0; a < m; ++a)
            if (v[a])
                for (int l = 0; l < g; ++l) s[l] += Real(v[a]) * P.gen_period_vectors[a][l];
        return s;
    };
    auto assemble = [&]() {
        P.omega1 = CMat(g, g);
        P.omega2 = CMat(g, g);
        for (int i = 0; i < g; ++i) {
            auto pa = combine(al[i]), pb = combine(be[i]);
            for (int l = 0; l < g; ++l) {
                P.omega1(l, i) = pa[l];
                P.omega2(l, i) = pb[l];
            }
        }
        P.omega1_inv = inverse(P.omega1);
        P.tau = P.omega1_inv * P.omega2;
    };
    assemble();
    RMat Y(g, std::vector<Real>(g));
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) Y[a][b] = (P.tau(a, b).imag() + P.tau(b, a).imag()) / 2;
    auto ev = sym_eigenvalues(Y);
    if (ev.back() < 0) {
        // orientation convention flipped: use -beta
        for (auto& v : be)
            for (auto& x : v) x = -x;
        P.beta_negated = true;
        assemble();
        for (int a = 0; a < g; ++a)
            for (int b = 0; b < g; ++b) Y[a][b] = (P.tau(a, b).imag() + P.tau(b, a).imag()) / 2;
        ev = sym_eigenvalues(Y);
    }
    for (int i = 0; i < g; ++i) {
        P.alpha.push_back({al[i]});
        P.beta.push_back({be[i]});
    }
    P.im_tau_min_eig = ev.front();
    Real sym = 0, tmax = max_abs(P.tau);
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) sym = std::max(sym, Real(abs(P.tau(a, b) - P.tau(b, a))));
    P.tau_symmetry_residual = sym / tmax;
    if (P.tau_symmetry_residual > P.tolerance())
        throw CycleError("period matrix not symmetric: residual " + to_string_full(P.tau_symmetry_residual));
    if (!(P.im_tau_min_eig > 0)) throw CycleError("Im tau is not positive definite");
    return P;
}

struct LatticeReduction {
    std::vector<Cplx> u;
    std::vector<long long> l1, l2;
};

// Real coordinates (x', y'') with u = omega1 x' + omega2 y''.
inline void lattice_coordinates(const PeriodData& P, const std::vector<Cplx>& u, std::vector<Real>& xp,
                                std::vector<Real>& ypp) {
    const int g = P.genus;
    auto z = matvec(P.omega1_inv, u);
    RMat Y(g, std::vector<Real>(g));
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) Y[a][b] = P.tau(a, b).imag();
    auto Yi = rinverse(Y);
    ypp.assign(g, Real(0));
    xp.assign(g, Real(0));
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) ypp[a] += Yi[a][b] * z[b].imag();
    for (int a = 0; a < g; ++a) {
        xp[a] = z[a].real();
        for (int b = 0; b < g; ++b) xp[a] -= P.tau(a, b).real() * ypp[b];
    }
}

inline std::vector<Cplx> lattice_vector(const PeriodData& P, const std::vector<long long>& l1,
                                        const std::vector<long long>& l2) {
    std::vector<Cplx> v(P.genus, Cplx(0));
    for (int l = 0; l < P.genus; ++l)
        for (int i = 0; i < P.genus; ++i) v[l] += Real(l1[i]) * P.omega1(l, i) + Real(l2[i]) * P.omega2(l, i);
    return v;
}

inline LatticeReduction reduce_mod_lattice(const PeriodData& P, const std::vector<Cplx>& u) {
    std::vector<Real> xp, ypp;
    lattice_coordinates(P, u, xp, ypp);
    LatticeReduction r;
    for (int i = 0; i < P.genus; ++i) {
        r.l1.push_back(static_cast<long long>(floor(xp[i] + Real(0.5))));
        r.l2.push_back(static_cast<long long>(floor(ypp[i] + Real(0.5))));
    }
    auto lv = lattice_vector(P, r.l1, r.l2);
    r.u = u;
    for (int l = 0; l < P.genus; ++l) r.u[l] -= lv[l];
    return r;
}

// ---- Abel map from the point at infinity ----

// A finite curve point; xi is a local parameter with xi^{-n} = x on the path used.
struct CurvePoint {
    Cplx x, y, xi;
};

// H(xi) = prod (1 - e_k xi^n)^{1/n}, principal roots.
inline Cplx abel_H(const CurveSpec& c, const std::vector<Cplx>& e, const Cplx& xi) {
    Cplx xn = pow(xi, c.n), h = Cplx(1);
    for (auto& ek : e) h *= principal_root(Cplx(1) - ek * xn, c.n);
    return h;
}

// Minimum over t in [0,1] of |1 - t^n e_k xi^n|, i.e. clearance of the path from branch points.
inline Real abel_path_clearance(const CurveSpec& c, const std::vector<Cplx>& e, const Cplx& xi) {
    Real best = 1e30;
    Cplx xn = pow(xi, c.n);
    for (auto& ek : e) {
        Cplx cc = ek * xn;
        Real s = (cc.real()) / norm(cc);  // minimiser of |1 - s cc| over real s
        s = std::clamp(s, Real(0), Real(1));
        best = std::min(best, Real(abs(Cplx(1) - s * cc)));
    }
    return best;
}

inline CurvePoint point_from_xi(const CurveSpec& c, const std::vector<Cplx>& e, const Cplx& xi) {
    CurvePoint P;
    P.xi = xi;
    P.x = pow(xi, -c.n);
    P.y = pow(xi, -c.s) * abel_H(c, e, xi);
    return P;
}

// Chooses the xi root matching a given (x,y).
inline CurvePoint point_from_xy(const CurveSpec& c, const std::vector<Cplx>& e, const Cplx& x, const Cplx& y) {
    Cplx f = curve_f(c, x);
    Cplx res = pow(y, c.n) - f;
    if (abs(res) > Real("1e-10") * (1 + abs(f))) throw ValidationError("point is not on the curve");
    Cplx base = principal_root(Cplx(1) / x, c.n);
    CurvePoint best;
    Real bd = 1e30;
    for (int m = 0; m < c.n; ++m) {
        Cplx xi = base * root_of_unity(c.n, m);
        auto P = point_from_xi(c, e, xi);
        Real d = abs(P.y - y);
        if (d < bd) bd = d, best = P;
    }
    best.x = x;
    best.y = y;
    return best;
}

struct AbelImage {
    std::vector<Cplx> u;
    Real error_estimate = 0;
};

inline AbelImage abel_map(const CurveSpec& c, const PeriodData& P, const std::vector<CurvePoint>& pts) {
    AbelImage out;
    out.u.assign(c.genus, Cplx(0));
    for (auto& pt : pts) {
        if (abel_path_clearance(c, P.branch_points, pt.xi) < Real("0.02"))
            throw ValidationError("Abel path passes too close to a branch point");
        auto f = [&](const Real& t) {
            Cplx xi = t * pt.xi;
            Cplx H = abel_H(c, P.branch_points, xi);
            CVec v(c.genus);
            for (int l = 0; l < c.genus; ++l) {
                int p = c.diffs[l].b - c.n + 1;
                int e = c.u_weights[l] - 1;
                Cplx term = -pt.xi * pow(xi, e);
                for (int k = 0; k < -p; ++k) term /= H;
                v[l] = term;
            }
            return v;
        };
        auto q = gl_adaptive(f, pow(Real(10), Real(-P.precision_digits - 1)), 24, 512);
        for (int l = 0; l < c.genus; ++l) out.u[l] += q.value[l];
        out.error_estimate = std::max(out.error_estimate, q.error_estimate);
    }
    return out;
}

// Random point whose Abel path stays away from branch points.
inline CurvePoint random_curve_point(const CurveSpec& c, const PeriodData& P, Rng& rng, double rmin = 0.35,
                                     double rmax = 0.9) {
    Real emax = 0;
    for (auto& z : P.branch_points) emax = std::max(emax, Real(abs(z)));
    double scale = 1.0 / std::pow(static_cast<double>(emax) + 1e-9, 1.0 / c.n);
    for (int tries = 0; tries < 1000; ++tries) {
        double r = scale * rng.uniform(rmin, rmax) * 1.4, t = rng.uniform(0, 2 * M_PI);
        Cplx xi(Real(r * std::cos(t)), Real(r * std::sin(t)));
        if (abel_path_clearance(c, P.branch_points, xi) < Real("0.15")) continue;
        return point_from_xi(c, P.branch_points, xi);
    }
    throw std::runtime_error("could not sample a curve point");
}

// ---- serialization ----

inline nlohmann::json cmat_json(const CMat& m) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < m.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols; ++j)
            row.push_back({to_string_full(m(i, j).real()), to_string_full(m(i, j).imag())});
        a.push_back(row);
    }
    return a;
}

inline CMat cmat_from_json(const nlohmann::json& a) {
    int r = static_cast<int>(a.size()), cc = r ? static_cast<int>(a[0].size()) : 0;
    CMat m(r, cc);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < cc; ++j)
            m(i, j) = Cplx(parse_real(a[i][j][0].get<std::string>()), parse_real(a[i][j][1].get<std::string>()));
    return m;
}

inline nlohmann::json periods_to_json(const PeriodData& P) {
    nlohmann::json j;
    j["genus"] = P.genus;
    j["precision_digits"] = P.precision_digits;
    j["omega1"] = cmat_json(P.omega1);
    j["omega2"] = cmat_json(P.omega2);
    j["tau"] = cmat_json(P.tau);
    nlohmann::json bp = nlohmann::json::array();
    for (auto& z : P.branch_points) bp.push_back({to_string_full(z.real()), to_string_full(z.imag())});
    j["branch_points"] = bp;
    nlohmann::json cyc = nlohmann::json::array();
    for (auto& s : P.generators) cyc.push_back({{"from", s.i}, {"to", s.j}, {"sheet", s.sheet}});
    j["cycle_generators"] = cyc;
    nlohmann::json ab = nlohmann::json::array(), bb = nlohmann::json::array();
    for (auto& v : P.alpha) ab.push_back(v.coeffs);
    for (auto& v : P.beta) bb.push_back(v.coeffs);
    j["alpha"] = ab;
    j["beta"] = bb;
    j["intersection"] = P.intersection;
    j["tau_symmetry_residual"] = to_string_full(P.tau_symmetry_residual);
    j["im_tau_min_eigenvalue"] = to_string_full(P.im_tau_min_eig);
    j["quadrature_error"] = to_string_full(P.quad_error);
    j["beta_negated"] = P.beta_negated;
    return j;
}

inline PeriodData periods_from_json(const nlohmann::json& j) {
    PeriodData P;
    P.genus = j.at("genus").get<int>();
    P.precision_digits = j.at("precision_digits").get<int>();
    P.omega1 = cmat_from_json(j.at("omega1"));
    P.omega2 = cmat_from_json(j.at("omega2"));
    P.tau = cmat_from_json(j.at("tau"));
    P.omega1_inv = inverse(P.omega1);
    for (auto& z : j.at("branch_points"))
        P.branch_points.push_back(Cplx(parse_real(z[0].get<std::string>()), parse_real(z[1].get<std::string>())));
    for (auto& s : j.at("cycle_generators"))
        P.generators.push_back({s.at("from").get<int>(), s.at("to").get<int>(), s.at("sheet").get<int>()});
    for (auto& v : j.at("alpha")) P.alpha.push_back({v.get<std::vector<int>>()});
    for (auto& v : j.at("beta")) P.beta.push_back({v.get<std::vector<int>>()});
    P.intersection = j.at("intersection").get<std::vector<std::vector<int>>>();
    P.tau_symmetry_residual = parse_real(j.at("tau_symmetry_residual").get<std::string>());
    P.im_tau_min_eig = parse_real(j.at("im_tau_min_eigenvalue").get<std::string>());
    P.beta_negated = j.value("beta_negated", false);
    return P;
}

}  // namespace kleinian

#pragma once
// sigma(u) = c exp(u^T kappa u / 2) theta[delta](omega1^{-1} u | tau): characteristic
// search, calibration of kappa and c, jets, automorphisms, quasi-periodicity.

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "curve.hpp"
#include "periods.hpp"
#include "theta.hpp"
#include "wpoly.hpp"

namespace kleinian {

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CharacteristicError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Calibration {
    CMat kappa;
    Cplx c = Cplx(1);
    std::vector<Real> delta_prime, delta_dblprime;
    std::string kappa_method;            // "fit" or "second-kind"
    std::vector<std::string> consumed;   // relations used by the fit, by left-hand side
    std::vector<Real> residual_trace;    // weighted residual per Newton step
    Real fit_residual = 0;
    Real c_error = 0;                    // Richardson self-consistency
    Real characteristic_residual = 0;    // worst vanishing ratio of the chosen characteristic
};

struct EvalContext {
    CurveSpec curve;
    PeriodData periods;
    Calibration calib;
    int precision_digits = 30;

    ThetaParams theta() const {
        ThetaParams P;
        P.tau = periods.tau;
        P.delta_prime = calib.delta_prime;
        P.delta_dblprime = calib.delta_dblprime;
        P.precision_digits = precision_digits;
        return P;
    }
    int genus() const { return curve.genus; }
};

// ------------------------------------------------------------------ sampling

// u = omega1 x + omega2 y with x, y uniform in [-1/2, 1/2]^g.
inline std::vector<Cplx> sample_fundamental(const PeriodData& P, Rng& rng) {
    const int g = P.genus;
    std::vector<Cplx> u(g, Cplx(0));
    std::vector<Real> x(g), y(g);
    for (int i = 0; i < g; ++i) x[i] = Real(rng.uniform(-0.5, 0.5));
    for (int i = 0; i < g; ++i) y[i] = Real(rng.uniform(-0.5, 0.5));
    for (int l = 0; l < g; ++l)
        for (int i = 0; i < g; ++i) u[l] += x[i] * P.omega1(l, i) + y[i] * P.omega2(l, i);
    return u;
}

// |theta| relative to its term-magnitude scale; a proxy for distance from the sigma divisor.
inline Real theta_ratio(const ThetaParams& TP, const PeriodData& P, const std::vector<Cplx>& u) {
    auto z = matvec(P.omega1_inv, u);
    return Real(abs(theta_value(TP, z))) / theta_abs_scale(TP, z);
}

// Draws `count` points, rejecting those below the 20th percentile of the ratio over a pool.
inline std::vector<std::vector<Cplx>> admissible_points(const ThetaParams& TP, const PeriodData& P, Rng& rng,
                                                        int count) {
    int pool = std::max(5 * count, 40);
    std::vector<std::vector<Cplx>> us;
    std::vector<Real> r;
    for (int k = 0; k < pool; ++k) {
        us.push_back(sample_fundamental(P, rng));
        r.push_back(theta_ratio(TP, P, us.back()));
    }
    auto sorted = r;
    std::sort(sorted.begin(), sorted.end());
    Real cut = sorted[pool / 5];
    std::vector<std::vector<Cplx>> out;
    for (int k = 0; k < pool && static_cast<int>(out.size()) < count; ++k)
        if (r[k] > cut && r[k] > Real("1e-12")) out.push_back(us[k]);
    if (static_cast<int>(out.size()) < count) throw SamplingError("could not find enough admissible points");
    return out;
}

inline std::vector<Cplx> admissible_point(const EvalContext& ctx, Rng& rng) {
    return admissible_points(ctx.theta(), ctx.periods, rng, 1)[0];
}

// ---------------------------------------------------------- characteristics

struct CharacteristicScan {
    std::vector<Real> delta_prime, delta_dblprime;
    Real worst_ratio = 0;
    int passing = 0;
};

// Finds the half-integer characteristic whose theta vanishes on Abel images of g-1 points.
inline CharacteristicScan select_characteristic(const CurveSpec& c, const PeriodData& P, Rng& rng, int samples = 10,
                                                int digits = 30) {
    const int g = c.genus;
    std::vector<std::vector<Cplx>> zs;
    for (int s = 0; s < (g == 1 ? 1 : samples); ++s) {
        std::vector<CurvePoint> pts;
        for (int k = 0; k < g - 1; ++k) pts.push_back(random_curve_point(c, P, rng));
        auto u = abel_map(c, P, pts).u;
        zs.push_back(matvec(P.omega1_inv, u));
    }
    struct Cand {
        std::vector<Real> dp, dpp;
        Real worst = 0, mean = 0;
    };
    std::vector<Cand> passing;
    for (int mask = 0; mask < (1 << (2 * g)); ++mask) {
        Cand cd;
        for (int i = 0; i < g; ++i) cd.dp.push_back((mask >> i) & 1 ? Real(0.5) : Real(0));
        for (int i = 0; i < g; ++i) cd.dpp.push_back((mask >> (g + i)) & 1 ? Real(0.5) : Real(0));
        ThetaParams TP;
        TP.tau = P.tau;
        TP.delta_prime = cd.dp;
        TP.delta_dblprime = cd.dpp;
        TP.precision_digits = digits;
        bool ok = true;
        for (std::size_t s = 0; s < zs.size() && ok; ++s) {
            Real r = Real(abs(theta_value(TP, zs[s]))) / theta_abs_scale(TP, zs[s]);
            cd.worst = std::max(cd.worst, r);
            cd.mean += r;
            if (!(r < Real("1e-6"))) ok = false;
        }
        if (ok) {
            cd.mean /= zs.size();
            passing.push_back(cd);
        }
    }
    if (passing.empty()) throw CharacteristicError("no characteristic vanishes on the sampled strata");
    auto best = std::min_element(passing.begin(), passing.end(),
                                 [](const Cand& a, const Cand& b) { return a.mean < b.mean; });
    CharacteristicScan out;
    out.delta_prime = best->dp;
    out.delta_dblprime = best->dpp;
    out.worst_ratio = best->worst;
    out.passing = static_cast<int>(passing.size());
    return out;
}

// ---------------------------------------------------------------- jets

// Quadratic prefactor q(u0+h) = (u0+h)^T kappa (u0+h) / 2 as a series in h.
inline TPS quadratic_series(const CMat& kappa, const std::vector<Cplx>& u0, JetIndexPtr idx) {
    const int g = kappa.rows;
    TPS q(idx);
    auto ku = matvec(kappa, u0);
    for (int a = 0; a < g; ++a) q.c[0] += u0[a] * ku[a] / Real(2);
    if (idx->K >= 1)
        for (int a = 0; a < g; ++a) q.c[idx->index_of_vars({a})] += ku[a];
    if (idx->K >= 2)
        for (int a = 0; a < g; ++a)
            for (int b = a; b < g; ++b)
                q.c[idx->index_of_vars({a, b})] += a == b ? kappa(a, a) / Real(2) : kappa(a, b);
    return q;
}

inline TPS theta_series(const EvalContext& ctx, const std::vector<Cplx>& u, int order) {
    auto z = matvec(ctx.periods.omega1_inv, u);
    return theta_jet(ctx.theta(), ctx.periods.omega1_inv, z, order);
}

// Taylor coefficients of sigma around u.
inline TPS sigma_jet(const EvalContext& ctx, const std::vector<Cplx>& u, int order) {
    TPS th = theta_series(ctx, u, order);
    TPS pre = quadratic_series(ctx.calib.kappa, u, th.idx).exp_series();
    TPS s = pre * th;
    s *= ctx.calib.c;
    return s;
}

inline Cplx sigma_value(const EvalContext& ctx, const std::vector<Cplx>& u) {
    auto z = matvec(ctx.periods.omega1_inv, u);
    auto ku = matvec(ctx.calib.kappa, u);
    Cplx q = Cplx(0);
    for (int a = 0; a < ctx.genus(); ++a) q += u[a] * ku[a] / Real(2);
    return ctx.calib.c * exp(q) * theta_value(ctx.theta(), z);
}

// log theta jet at a point; wp values follow from it and kappa.
struct WpPoint {
    std::vector<Cplx> u;
    TPS logtheta;
    const CMat* kappa = nullptr;

    Cplx wp(const std::vector<int>& idx1) const {
        std::vector<int> vars;
        for (int i : idx1) vars.push_back(i - 1);
        std::sort(vars.begin(), vars.end());
        Cplx d = logtheta.derivative_vars(vars);
        if (vars.size() == 2) d += (*kappa)(vars[0], vars[1]);
        return -d;
    }
};

inline WpPoint wp_point(const EvalContext& ctx, const std::vector<Cplx>& u, int order) {
    WpPoint w;
    w.u = u;
    w.logtheta = theta_series(ctx, u, order).log_series();
    w.kappa = &ctx.calib.kappa;
    return w;
}

// ------------------------------------------------------------- automorphisms

// u_k -> eps^{wt(u_k) j} u_k with eps = zeta^2 (zeta = e^{2 pi i/3}) or eps = -i.
inline std::vector<Cplx> automorphism_apply(const CurveSpec& c, const std::string& kind, int j,
                                            const std::vector<Cplx>& u) {
    Cplx eps;
    if (kind == "zeta") {
        if (c.name != "c34") throw ValidationError("the zeta action is defined on (3,4) curves");
        eps = root_of_unity(3, 2);
    } else if (kind == "quartic") {
        if (!c.restricted_quartic()) throw ValidationError("the quartic action needs y^3 = x^4 + lambda_0");
        eps = Cplx(0, -1);
    } else {
        throw ValidationError("unknown automorphism '" + kind + "'");
    }
    std::vector<Cplx> v = u;
    for (int k = 0; k < c.genus; ++k) {
        long long e = static_cast<long long>(c.u_weights[k]) * j;
        Cplx f = Cplx(1);
        int m = kind == "zeta" ? 3 : 4;
        e %= m;
        if (e < 0) e += m;
        for (long long t = 0; t < e; ++t) f *= eps;
        v[k] *= f;
    }
    return v;
}

// --------------------------------------------------------- quasi-periodicity

// sigma(u + l) / sigma(u) for l = omega1 n1 + omega2 n2:
// chi(l) exp(L(u + l/2, l)), L(u, v) = u^T (eta1 n1 + eta2 n2),
// eta1 = kappa omega1, eta2 = kappa omega2 - 2 pi i (omega1^T)^{-1},
// chi = exp(2 pi i (delta'.n1 - delta''.n2) + pi i n1.n2).
inline Cplx quasi_periodicity_factor(const EvalContext& ctx, const std::vector<Cplx>& u,
                                     const std::vector<long long>& n1, const std::vector<long long>& n2) {
    const int g = ctx.genus();
    const auto& P = ctx.periods;
    CMat eta1 = ctx.calib.kappa * P.omega1;
    CMat w1t_inv = inverse(P.omega1.transpose());
    CMat eta2 = ctx.calib.kappa * P.omega2;
    Cplx tpi = Cplx(0, 2) * pi_r();
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) eta2(a, b) -= tpi * w1t_inv(a, b);
    auto l = lattice_vector(P, n1, n2);
    std::vector<Cplx> mid(g), ev(g, Cplx(0));
    for (int a = 0; a < g; ++a) mid[a] = u[a] + l[a] / Real(2);
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) ev[a] += eta1(a, b) * Real(n1[b]) + eta2(a, b) * Real(n2[b]);
    Cplx L = Cplx(0);
    for (int a = 0; a < g; ++a) L += mid[a] * ev[a];
    Real ph = 0;
    for (int a = 0; a < g; ++a)
        ph += ctx.calib.delta_prime[a] * Real(n1[a]) - ctx.calib.delta_dblprime[a] * Real(n2[a]);
    Real nn = 0;
    for (int a = 0; a < g; ++a) nn += Real(n1[a]) * Real(n2[a]);
    Cplx chi = exp(tpi * ph + Cplx(0, 1) * pi_r() * nn);
    return chi * exp(L);
}

// --------------------------------------------------------- kappa: the fit

// The four-index relations consumed by the kappa fit, per curve.
inline std::vector<std::pair<std::string, std::string>> kappa_fit_relations(const CurveSpec& c) {
    if (c.name == "c27")
        return {{"P3333", "4 P23 + 4 P33 l6 + 2 l5 + 6 P33^2"},
                {"P2333", "6 P13 - 2 P22 + 4 P23 l6 + 6 P23 P33"},
                {"P2233", "-2 P12 + 4 P13 l6 + 2 P23 l5 + 2 P22 P33 + 4 P23^2"},
                {"P1333", "-2 P12 + 4 P13 l6 + 6 P13 P33"},
                {"P2223", "-6 P11 + 4 P13 l5 + 4 P23 l4 - 2 P33 l3 - 4 l2 + 6 P22 P23"},
                {"P1233", "2 P13 l5 + 2 P12 P33 + 4 P13 P23"}};
    if (c.name == "c34")
        return {{"P3333", "-3 P22 + 6 P33^2"},
                {"P2333", "3 P33 l3 + 6 P23 P33"},
                {"P2233", "4 P13 + 3 P23 l3 + 2 l2 + 2 P22 P33 + 4 P23^2"},
                {"P2223", "3 P22 l3 + 6 P22 P23"},
                {"P1233", "3 P13 l3 + l1 + 2 P12 P33 + 4 P13 P23"},
                {"P1223", "-2 P11 + 3 P12 l3 + 4 P12 P23 + 2 P13 P22"}};
    if (c.name == "c23") return {{"P1111", "6 P11^2 + 4 l2 P11 + 2 l1"}};
    throw CapabilityError("no kappa fit relations for " + c.name);
}

struct KappaFit {
    CMat kappa;
    std::vector<Real> trace;
    Real residual = 0;
};

inline KappaFit fit_kappa(const CurveSpec& c, const PeriodData& P, const ThetaParams& TP, Rng& rng, int npoints = 4) {
    const int g = c.genus;
    auto rels = kappa_fit_relations(c);
    std::vector<CompiledPoly> R;
    std::vector<std::vector<CompiledPoly>> dR;  // per relation, per unknown
    std::vector<std::pair<int, int>> unk;
    for (int a = 0; a < g; ++a)
        for (int b = a; b < g; ++b) unk.push_back({a, b});
    const int nu = static_cast<int>(unk.size());
    for (auto& [lhs, rhs] : rels) {
        Poly p = parse_poly(lhs) - parse_poly(rhs);
        R.emplace_back(p);
        std::vector<CompiledPoly> d;
        for (auto [a, b] : unk) d.emplace_back(p.diff_atom(wp_atom({a + 1, b + 1})));
        dR.push_back(std::move(d));
    }
    auto pts = admissible_points(TP, P, rng, npoints);
    std::vector<TPS> logs;
    for (auto& u : pts) logs.push_back(theta_jet(TP, P.omega1_inv, matvec(P.omega1_inv, u), 4).log_series());

    auto value_fn = [&](int p, const CMat& K) {
        return [&, p](int id) -> Cplx {
            Atom at = AtomTable::instance().get(id);
            if (at.kind == Atom::LAM) return at.j < c.s ? c.lambda_c[at.j] : Cplx(0);
            std::vector<int> v;
            for (int i : at.idx) v.push_back(i - 1);
            Cplx d = logs[p].derivative_vars(v);
            if (v.size() == 2) d += K(v[0], v[1]);
            return -d;
        };
    };
    auto sym = [&](const std::vector<Cplx>& x) {
        CMat K(g, g);
        for (int k = 0; k < nu; ++k) K(unk[k].first, unk[k].second) = K(unk[k].second, unk[k].first) = x[k];
        return K;
    };
    auto solve_ls = [&](const std::vector<std::vector<Cplx>>& A, const std::vector<Cplx>& b, const Real& mu) {
        CMat N(nu, nu);
        std::vector<Cplx> rhs(nu, Cplx(0));
        for (std::size_t r = 0; r < A.size(); ++r)
            for (int i = 0; i < nu; ++i) {
                rhs[i] += conj(A[r][i]) * b[r];
                for (int j = 0; j < nu; ++j) N(i, j) += conj(A[r][i]) * A[r][j];
            }
        Real tr = 0;
        for (int i = 0; i < nu; ++i) tr = std::max(tr, Real(abs(N(i, i))));
        for (int i = 0; i < nu; ++i) N(i, i) += mu * tr;
        return LU(N).solve(rhs);
    };

    // Stage 1: differences between points are linear in kappa.
    std::vector<Cplx> x(nu, Cplx(0));
    {
        std::vector<std::vector<Cplx>> A;
        std::vector<Cplx> b;
        CMat Z(g, g);
        for (std::size_t k = 0; k < R.size(); ++k)
            for (int p = 1; p < npoints; ++p) {
                auto D = [&](const CMat& K) { return R[k].eval(value_fn(p, K)) - R[k].eval(value_fn(0, K)); };
                Cplx d0 = D(Z);
                std::vector<Cplx> row(nu);
                Real nrm = 0;
                for (int i = 0; i < nu; ++i) {
                    std::vector<Cplx> e(nu, Cplx(0));
                    e[i] = Cplx(1);
                    row[i] = D(sym(e)) - d0;
                    nrm = std::max(nrm, Real(abs(row[i])));
                }
                if (nrm == 0) continue;
                for (auto& z : row) z /= nrm;
                A.push_back(row);
                b.push_back(-d0 / nrm);
            }
        if (!A.empty()) x = solve_ls(A, b, Real("1e-24"));
    }

    // Stage 2: damped Gauss-Newton on the full system.
    KappaFit out;
    std::vector<Real> scale;
    for (int it = 0; it < 60; ++it) {
        CMat K = sym(x);
        std::vector<std::vector<Cplx>> J;
        std::vector<Cplx> r;
        bool fill = scale.empty();
        std::size_t row = 0;
        Real worst = 0;
        for (std::size_t k = 0; k < R.size(); ++k)
            for (int p = 0; p < npoints; ++p, ++row) {
                auto vf = value_fn(p, K);
                Real sc;
                Cplx v = R[k].eval(vf, &sc);
                if (fill) scale.push_back(std::max(sc, Real("1e-300")));
                std::vector<Cplx> jr(nu);
                for (int i = 0; i < nu; ++i) jr[i] = -dR[k][i].eval(vf) / scale[row];
                J.push_back(jr);
                r.push_back(-v / scale[row]);
                worst = std::max(worst, Real(abs(v)) / scale[row]);
            }
        out.trace.push_back(worst);
        out.residual = worst;
        if (worst < Real("1e-30")) break;
        auto dx = solve_ls(J, r, Real("1e-30"));
        Real step = 0, size = 0;
        for (int i = 0; i < nu; ++i) {
            x[i] += dx[i];
            step = std::max(step, Real(abs(dx[i])));
            size = std::max(size, Real(abs(x[i])));
        }
        if (step <= Real("1e-31") * (1 + size) && it > 0) {
            out.trace.push_back(worst);
            break;
        }
    }
    out.kappa = sym(x);
    return out;
}

// ------------------------------------------------ kappa: second-kind route

// Alpha-periods of x^k dx / (2y) on a hyperelliptic curve, k = 0..kmax; result[k][i].
inline std::vector<std::vector<Cplx>> hyperelliptic_alpha_moments(const CurveSpec& c, const PeriodData& P, int kmax) {
    if (c.n != 2) throw CapabilityError("moment periods are implemented for hyperelliptic curves");
    const auto& e = P.branch_points;
    const int g = c.genus;
    Real tol = pow(Real(10), Real(-P.precision_digits - 2));
    std::vector<std::vector<Cplx>> gen;  // per generator, per k
    for (auto& s : P.generators) {
        auto G = detail::segment_geometry(c, e, s.i, s.j);
        auto f = [&](const Real& w, const Real& omw) {
            CVec v(kmax + 1);
            Cplx x = e[s.i] + w * G.D;
            Cplx y0 = detail::segment_y0(c, G, s.i, s.j, w, omw);
            Cplx t = G.D / (Real(2) * y0);
            for (int k = 0; k <= kmax; ++k) {
                v[k] = t;
                t *= x;
            }
            return v;
        };
        auto q = tanh_sinh(f, tol);
        // same sheet factor as the holomorphic differentials with y^{-1}
        Cplx fac = root_of_unity(2, -static_cast<long long>(s.sheet)) - root_of_unity(2, -(s.sheet + 1LL));
        CVec v = q.value;
        for (auto& z : v) z *= fac;
        gen.push_back(v);
    }
    std::vector<std::vector<Cplx>> out(kmax + 1, std::vector<Cplx>(g, Cplx(0)));
    for (int i = 0; i < g; ++i)
        for (std::size_t m = 0; m < gen.size(); ++m)
            if (int co = P.alpha[i].coeffs[m])
                for (int k = 0; k <= kmax; ++k) out[k][i] += Real(co) * gen[m][k];
    return out;
}

// kappa = -H omega1^{-1} with H_ij the alpha_j-period of
// dr_i = sum_{k=i}^{2g+1-i} (k+1-i) lambda_{k+1+i} x^k dx / (2y), lambda_{2g+1} = 1.
inline CMat second_kind_kappa(const CurveSpec& c, const PeriodData& P) {
    const int g = c.genus;
    auto mom = hyperelliptic_alpha_moments(c, P, 2 * g);
    auto lam = [&](int j) -> Cplx {
        if (j < c.s) return c.lambda_c[j];
        return j == c.s ? Cplx(1) : Cplx(0);
    };
    CMat H(g, g);
    for (int i = 1; i <= g; ++i)
        for (int k = i; k <= 2 * g + 1 - i; ++k) {
            Cplx co = Real(k + 1 - i) * lam(k + 1 + i);
            if (co == Cplx(0)) continue;
            for (int j = 0; j < g; ++j) H(i - 1, j) += co * mom[k][j];
        }
    CMat K = H * P.omega1_inv;
    for (auto& z : K.a) z = -z;
    // symmetrise away quadrature noise
    for (int a = 0; a < g; ++a)
        for (int b = a + 1; b < g; ++b) K(a, b) = K(b, a) = (K(a, b) + K(b, a)) / Real(2);
    return K;
}

// --------------------------------------------------------------- c

struct NormResult {
    Cplx c;
    Real error = 0;
};

// c = lim sigma_{c=1}(t o u0) / (t^{wt sigma} SW(u0)), Richardson in t^n.
inline NormResult normalise_c(const EvalContext& ctx_c1, Rng& rng) {
    const auto& c = ctx_c1.curve;
    const int g = c.genus;
    GradedPoly sw = schur_weierstrass(c);
    std::vector<Cplx> u0(g);
    Cplx swv;
    for (int tries = 0;; ++tries) {
        for (int a = 0; a < g; ++a) u0[a] = Cplx(Real(rng.uniform(-1, 1)), Real(rng.uniform(-1, 1)));
        std::vector<Cplx> vals(c.vars->names.size(), Cplx(0));
        for (int a = 0; a < g; ++a) vals[a] = u0[a];
        swv = sw.eval<Cplx>(vals);
        if (abs(swv) > Real(0.2)) break;
        if (tries > 200) throw CalibrationError("could not find a point with SW(u0) away from zero");
    }
    const int levels = 7;
    Real t0 = Real(0.25);
    std::vector<std::vector<Cplx>> T(levels);
    for (int k = 0; k < levels; ++k) {
        Real t = t0 / pow(Real(2), k);
        std::vector<Cplx> u(g);
        for (int a = 0; a < g; ++a) u[a] = pow(t, c.u_weights[a]) * u0[a];
        T[k].push_back(sigma_value(ctx_c1, u) / (pow(t, c.sigma_weight) * swv));
    }
    for (int m = 1; m < levels; ++m) {
        Real f = pow(Real(2), c.n * m);
        for (int k = m; k < levels; ++k) T[k].push_back((f * T[k][m - 1] - T[k - 1][m - 1]) / (f - 1));
    }
    NormResult out;
    Cplx ratio = T[levels - 1][levels - 1];
    out.error = Real(abs(ratio - T[levels - 1][levels - 2])) / abs(ratio);
    out.c = Cplx(1) / ratio;
    return out;
}

// ------------------------------------------------------------ assembly

inline EvalContext make_context(const CurveSpec& c, const PeriodData& P, std::uint64_t seed, int digits = 30) {
    EvalContext ctx;
    ctx.curve = c;
    ctx.periods = P;
    ctx.precision_digits = digits;
    Rng rng(seed);
    auto ch = select_characteristic(c, P, rng, 10, digits);
    ctx.calib.delta_prime = ch.delta_prime;
    ctx.calib.delta_dblprime = ch.delta_dblprime;
    ctx.calib.characteristic_residual = ch.worst_ratio;
    ctx.calib.kappa = CMat(c.genus, c.genus);
    if (c.name == "c29") {
        ctx.calib.kappa = second_kind_kappa(c, P);
        ctx.calib.kappa_method = "second-kind";
    } else {
        auto fit = fit_kappa(c, P, ctx.theta(), rng);
        ctx.calib.kappa = fit.kappa;
        ctx.calib.kappa_method = "fit";
        ctx.calib.residual_trace = fit.trace;
        ctx.calib.fit_residual = fit.residual;
        for (auto& r : kappa_fit_relations(c)) ctx.calib.consumed.push_back(r.first);
        if (!(fit.residual < Real("1e-12")))
            throw CalibrationError("kappa fit did not converge: residual " + to_string_full(fit.residual));
    }
    ctx.calib.c = Cplx(1);
    auto nr = normalise_c(ctx, rng);
    ctx.calib.c = nr.c;
    ctx.calib.c_error = nr.error;
    if (!(nr.error < Real("1e-8")))
        throw CalibrationError("normalisation extrapolation not settled: " + to_string_full(nr.error));
    return ctx;
}

inline EvalContext make_context(const CurveSpec& c, std::uint64_t seed, int digits = 30) {
    return make_context(c, compute_periods(c, digits), seed, digits);
}

// ------------------------------------------------------------- persistence

inline nlohmann::json calibration_to_json(const Calibration& k) {
    nlohmann::json j;
    j["kappa"] = cmat_json(k.kappa);
    j["c"] = {to_string_full(k.c.real()), to_string_full(k.c.imag())};
    std::vector<std::string> dp, dpp;
    for (auto& x : k.delta_prime) dp.push_back(to_string_full(x));
    for (auto& x : k.delta_dblprime) dpp.push_back(to_string_full(x));
    j["delta_prime"] = dp;
    j["delta_dblprime"] = dpp;
    j["kappa_method"] = k.kappa_method;
    j["consumed_relations"] = k.consumed;
    j["fit_residual"] = to_string_full(k.fit_residual);
    j["c_extrapolation_error"] = to_string_full(k.c_error);
    j["characteristic_residual"] = to_string_full(k.characteristic_residual);
    std::vector<std::string> tr;
    for (auto& x : k.residual_trace) tr.push_back(to_string_full(x));
    j["residual_trace"] = tr;
    return j;
}

inline Calibration calibration_from_json(const nlohmann::json& j) {
    Calibration k;
    k.kappa = cmat_from_json(j.at("kappa"));
    k.c = Cplx(parse_real(j.at("c")[0].get<std::string>()), parse_real(j.at("c")[1].get<std::string>()));
    for (auto& s : j.at("delta_prime")) k.delta_prime.push_back(parse_real(s.get<std::string>()));
    for (auto& s : j.at("delta_dblprime")) k.delta_dblprime.push_back(parse_real(s.get<std::string>()));
    k.kappa_method = j.value("kappa_method", "");
    k.consumed = j.value("consumed_relations", std::vector<std::string>{});
    k.fit_residual = parse_real(j.value("fit_residual", "0"));
    k.c_error = parse_real(j.value("c_extrapolation_error", "0"));
    k.characteristic_residual = parse_real(j.value("characteristic_residual", "0"));
    return k;
}

}  // namespace kleinian

#pragma once
// Named Abelian functions evaluated from sigma jets.

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "sigma.hpp"
#include "wpoly.hpp"

namespace kleinian {

// ------------------------------------------------------- definition cache

struct Definition {
    FunctionId id;
    Poly poly;
    CompiledPoly compiled;
    int order = 0;  // largest wp index count
};

inline const Definition& definition(const std::string& fid) {
    static std::map<std::string, Definition> cache;
    static std::mutex mu;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(fid);
        if (it != cache.end()) return it->second;
    }
    Definition d;
    d.id = parse_function_id(fid);
    d.poly = defining_poly(d.id);
    d.compiled = CompiledPoly(d.poly);
    d.order = max_wp_order(d.poly);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(fid, std::move(d)).first->second;
}

// Highest wp order needed to evaluate a polynomial whose atoms may be named functions.
inline int required_order(const Poly& p) {
    int k = 0;
    for (int a : p.atoms()) {
        Atom at = AtomTable::instance().get(a);
        if (at.kind == Atom::WP) k = std::max(k, static_cast<int>(at.idx.size()));
        if (at.kind == Atom::FN) k = std::max(k, definition(at.fid).order);
    }
    return k;
}

// ---------------------------------------------------- multi-point evaluation

// Jets at named points ("u", "v", ...), with atom values cached.
class PointSet {
public:
    explicit PointSet(const EvalContext& ctx) : ctx_(&ctx) {}

    void add(const std::string& slot, const std::vector<Cplx>& u, int order) {
        pts_[slot] = wp_point(*ctx_, u, std::max(order, 2));
        cache_.clear();
    }
    const WpPoint& point(const std::string& slot) const {
        auto it = pts_.find(slot);
        if (it == pts_.end()) throw ValidationError("no point bound to slot '" + slot + "'");
        return it->second;
    }

    Cplx value(int id) {
        auto it = cache_.find(id);
        if (it != cache_.end()) return it->second;
        Atom at = AtomTable::instance().get(id);
        Cplx v;
        if (at.kind == Atom::LAM) {
            v = at.j < ctx_->curve.s ? ctx_->curve.lambda_c[at.j] : Cplx(0);
        } else if (at.kind == Atom::WP) {
            v = point(at.slot).wp(at.idx);
        } else {
            const auto& d = definition(at.fid);
            const WpPoint& p = point(at.slot);
            v = d.compiled.eval([&](int a) -> Cplx {
                Atom x = AtomTable::instance().get(a);
                if (x.kind == Atom::LAM) return x.j < ctx_->curve.s ? ctx_->curve.lambda_c[x.j] : Cplx(0);
                return p.wp(x.idx);
            });
        }
        cache_[id] = v;
        return v;
    }

    // value and largest term magnitude of a polynomial
    Cplx eval(const CompiledPoly& p, Real* scale = nullptr) {
        return p.eval([&](int a) { return value(a); }, scale);
    }

private:
    const EvalContext* ctx_;
    std::map<std::string, WpPoint> pts_;
    std::map<int, Cplx> cache_;
};

// ------------------------------------------------------ single evaluations

struct FunctionValue {
    Cplx value;
    bool pole_warning = false;  // u within 1e-8 (relative) of the sigma zero set
};

inline bool near_sigma_zero(const EvalContext& ctx, const std::vector<Cplx>& u) {
    return theta_ratio(ctx.theta(), ctx.periods, u) < Real("1e-8");
}

// Set partitions of {0..n-1} as restricted growth strings.
inline const std::vector<std::vector<int>>& set_partitions(int n) {
    static std::map<int, std::vector<std::vector<int>>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::vector<int>> out;
    std::vector<int> a(n, 0);
    std::function<void(int, int)> rec = [&](int i, int mx) {
        if (i == n) {
            out.push_back(a);
            return;
        }
        for (int b = 0; b <= mx + 1; ++b) {
            a[i] = b;
            rec(i + 1, std::max(mx, b));
        }
    };
    if (n > 0) {
        a[0] = 0;
        rec(1, 0);
    }
    return cache.emplace(n, std::move(out)).first->second;
}

// -d^I log sigma by Faa di Bruno over set partitions of the index positions.
inline FunctionValue wp(const EvalContext& ctx, const std::vector<int>& idx1, const std::vector<Cplx>& u) {
    const int m = static_cast<int>(idx1.size());
    if (m < 2 || m > 8) throw ValidationError("wp needs between 2 and 8 indices");
    for (int i : idx1)
        if (i < 1 || i > ctx.genus()) throw ValidationError("wp index out of range");
    TPS s = sigma_jet(ctx, u, m);
    Cplx s0 = s.c[0];
    Cplx total = Cplx(0);
    std::vector<Real> fact(m + 1, Real(1));
    for (int k = 1; k <= m; ++k) fact[k] = fact[k - 1] * k;
    for (auto& rg : set_partitions(m)) {
        int blocks = *std::max_element(rg.begin(), rg.end()) + 1;
        Cplx prod = Cplx(1);
        for (int b = 0; b < blocks; ++b) {
            std::vector<int> vars;
            for (int p = 0; p < m; ++p)
                if (rg[p] == b) vars.push_back(idx1[p] - 1);
            prod *= s.derivative_vars(vars) / s0;
        }
        Real sign = (blocks - 1) % 2 ? Real(-1) : Real(1);
        total += sign * fact[blocks - 1] * prod;
    }
    return {-total, near_sigma_zero(ctx, u)};
}

inline FunctionValue q4(const EvalContext& ctx, int i, int j, int k, int l, const std::vector<Cplx>& u) {
    PointSet ps(ctx);
    ps.add("u", u, 4);
    CompiledPoly q(q4_poly(i, j, k, l));
    return {ps.eval(q), near_sigma_zero(ctx, u)};
}

// -1/(2 sigma^2) D_I sigma.sigma, with D the Hirota operator; zero for odd |I|.
inline FunctionValue hirota_q(const EvalContext& ctx, const std::vector<int>& idx1, const std::vector<Cplx>& u) {
    const int m = static_cast<int>(idx1.size());
    if (m > 4) throw CapabilityError("Hirota Q-functions beyond four indices are not supported");
    TPS s = sigma_jet(ctx, u, m);
    Cplx acc = Cplx(0);
    for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<int> a, b;
        for (int p = 0; p < m; ++p) ((mask >> p) & 1 ? a : b).push_back(idx1[p] - 1);
        Real sign = b.size() % 2 ? Real(-1) : Real(1);
        acc += sign * s.derivative_vars(a) * s.derivative_vars(b);
    }
    return {-acc / (Real(2) * s.c[0] * s.c[0]), near_sigma_zero(ctx, u)};
}

inline FunctionValue named_function(const EvalContext& ctx, const FunctionId& f, const std::vector<Cplx>& u) {
    check_function_for_curve(f, ctx.curve);
    const auto& d = definition(f.to_string());
    PointSet ps(ctx);
    ps.add("u", u, d.order);
    return {ps.eval(d.compiled), near_sigma_zero(ctx, u)};
}

// Values of many functions at one point from a single jet.
inline std::vector<Cplx> evaluate_catalog(const EvalContext& ctx, const std::vector<std::string>& ids,
                                          const std::vector<Cplx>& u) {
    int order = 2;
    std::vector<int> atoms;
    for (auto& s : ids) {
        if (s == "1") {
            atoms.push_back(-1);
            continue;
        }
        auto f = parse_function_id(s);
        check_function_for_curve(f, ctx.curve);
        std::string canon = f.to_string();
        order = std::max(order, definition(canon).order);
        atoms.push_back(f.family == "P" ? wp_atom(f.indices) : fn_atom(canon));
    }
    PointSet ps(ctx);
    ps.add("u", u, order);
    std::vector<Cplx> out;
    for (int a : atoms) out.push_back(a < 0 ? Cplx(1) : ps.value(a));
    return out;
}

// --------------------------------------------------------- rational limit

struct PoleOrderResult {
    int order = 0;
    bool constant_leading = false;  // reduced numerator is a nonzero constant
    bool zero = false;
    std::string numerator;
};

// With lambda = 0, sigma -> SW and wp_I -> -d^I log SW.  Evaluates a wp-polynomial as
// N / SW^k, cancels powers of SW and reports the minimal k.
inline PoleOrderResult rational_limit_pole_order(const CurveSpec& c, const Poly& numer, int k_max) {
    CurveSpec c0 = zero_lambda_curve(c.name);
    GradedPoly sw = schur_weierstrass(c0);
    std::map<std::vector<int>, PowerFraction> wps;
    std::function<PowerFraction(const std::vector<int>&)> wp_pf = [&](const std::vector<int>& idx) {
        auto it = wps.find(idx);
        if (it != wps.end()) return it->second;
        PowerFraction r;
        std::vector<int> head(idx.begin(), idx.end() - 1);
        PowerFraction h = idx.size() == 2 ? PowerFraction{sw.diff(head[0] - 1), 1} : wp_pf(head);
        r = pf_reduce(pf_diff(h, idx.back() - 1, sw), sw);
        if (idx.size() == 2) r.num = -r.num;  // wp_ij = -d_j d_i log SW
        wps[idx] = r;
        return r;
    };
    // numerator atoms: wp's only (named functions are expanded first)
    Poly p = numer.substitute([&](int id) {
        Atom a = AtomTable::instance().get(id);
        if (a.kind == Atom::FN) return definition(a.fid).poly;
        return Poly::atom(id);
    });
    PowerFraction acc{GradedPoly(sw.vars()), 0};
    for (auto& [m, coef] : p.terms) {
        PowerFraction t{GradedPoly::constant(sw.vars(), coef), 0};
        for (int id : m) {
            Atom a = AtomTable::instance().get(id);
            if (a.kind == Atom::LAM) {
                t = {GradedPoly(sw.vars()), 0};
                break;
            }
            t = pf_mul(t, wp_pf(a.idx));
        }
        acc = pf_reduce(pf_add(acc, t, sw), sw);
    }
    acc = pf_reduce(acc, sw);
    PoleOrderResult out;
    out.zero = acc.num.is_zero();
    out.order = out.zero ? 0 : acc.power;
    out.numerator = acc.num.to_string();
    if (!out.zero && acc.num.size() == 1) {
        const auto& e = acc.num.terms().begin()->first;
        out.constant_leading = std::all_of(e.begin(), e.end(), [](int x) { return x == 0; });
    }
    if (out.order > k_max) throw ValidationError("pole order > " + std::to_string(k_max));
    return out;
}

}  // namespace kleinian

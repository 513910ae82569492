#pragma once
// Cyclic (n,s) curves y^n = x^s + lambda_{s-1} x^{s-1} + ... + lambda_0.

#include <algorithm>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exactpoly.hpp"
#include "numeric.hpp"

namespace kleinian {

struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Monomial x^a y^b in the numerator of du = x^a y^b dx / (n y^{n-1}).
struct DiffMonomial {
    int a = 0, b = 0;
};

struct CurveSpec {
    int n = 0, s = 0;
    std::vector<Rational> lambda;  // lambda_0 .. lambda_{s-1}
    std::vector<Cplx> lambda_c;    // numeric copy of lambda
    int genus = 0;
    std::vector<int> u_weights;  // wt(u_1) > wt(u_2) > ... (gap sequence, decreasing)
    std::vector<DiffMonomial> diffs;  // du_i numerator, same order as u
    std::vector<Rational> delta_prime, delta_dblprime;  // reference values, reduced mod 1
    int sigma_weight = 0;
    int parity_sign = 1;
    std::string name;  // c23, c27, c34, c29
    VarTablePtr vars;  // u1..ug, l0..l_{s-1}

    int lambda_weight(int j) const { return -n * (s - j); }
    bool restricted_quartic() const {
        if (n != 3 || s != 4) return false;
        for (int j = 1; j < 4; ++j)
            if (lambda[j] != 0) return false;
        return true;
    }
};

inline std::vector<int> weierstrass_gaps(int n, int s) {
    int g = (n - 1) * (s - 1) / 2;
    std::vector<int> gaps;
    for (int k = 1; static_cast<int>(gaps.size()) < g; ++k) {
        bool in_semigroup = false;
        for (int a = 0; a * n <= k && !in_semigroup; ++a)
            if ((k - a * n) % s == 0) in_semigroup = true;
        if (!in_semigroup) gaps.push_back(k);
    }
    std::sort(gaps.rbegin(), gaps.rend());
    return gaps;
}

inline CurveSpec make_curve(int n, int s, std::vector<Rational> lambda) {
    if (std::gcd(n, s) != 1) throw ValidationError("gcd(n,s) must be 1");
    static const std::vector<std::pair<int, int>> supported = {{2, 3}, {2, 7}, {3, 4}, {2, 9}};
    if (std::find(supported.begin(), supported.end(), std::make_pair(n, s)) == supported.end())
        throw CapabilityError("unsupported curve (" + std::to_string(n) + "," + std::to_string(s) + ")");
    if (static_cast<int>(lambda.size()) != s)
        throw ValidationError("lambda must have length s = " + std::to_string(s));
    CurveSpec c;
    c.n = n;
    c.s = s;
    c.lambda = std::move(lambda);
    for (auto& q : c.lambda) c.lambda_c.push_back(to_cplx(q));
    c.genus = (n - 1) * (s - 1) / 2;
    c.u_weights = weierstrass_gaps(n, s);
    c.sigma_weight = (n * n - 1) * (s * s - 1) / 24;
    c.parity_sign = (c.sigma_weight % 2) ? -1 : 1;
    c.name = "c" + std::to_string(n) + std::to_string(s);

    // holomorphic differentials: weight of x^a y^b dx/y^{n-1} is s(n-1) - n - n a - s b
    for (int w : c.u_weights) {
        bool found = false;
        for (int b = 0; b <= n - 2 && !found; ++b)
            for (int a = 0; !found; ++a) {
                int e = s * (n - 1) - n - n * a - s * b;
                if (e < w) break;
                if (e == w) {
                    c.diffs.push_back({a, b});
                    found = true;
                }
            }
        if (!found) throw std::logic_error("no differential of weight " + std::to_string(w));
    }

    auto half = [](std::vector<int> v) {
        std::vector<Rational> r;
        for (int x : v) r.push_back(Rational(x % 2, 2));
        return r;
    };
    if (n == 2 && s == 7) {
        c.delta_prime = half({3, 2, 1});  // [3/2,1,1/2]
        c.delta_dblprime = half({1, 1, 1});
    } else if (n == 3 && s == 4) {
        c.delta_prime = half({0, 1, 0});
        c.delta_dblprime = half({0, 1, 0});
    } else if (n == 2 && s == 3) {
        c.delta_prime = half({1});
        c.delta_dblprime = half({1});
    } else {
        c.delta_prime = half({1, 1, 1, 1});
        c.delta_dblprime = half({1, 1, 1, 1});
    }

    auto vt = std::make_shared<VarTable>();
    for (int i = 0; i < c.genus; ++i) {
        vt->names.push_back("u" + std::to_string(i + 1));
        vt->weights.push_back(c.u_weights[i]);
    }
    for (int j = 0; j < s; ++j) {
        vt->names.push_back("l" + std::to_string(j));
        vt->weights.push_back(c.lambda_weight(j));
    }
    c.vars = vt;
    return c;
}

inline std::pair<int, int> builtin_ns(const std::string& name) {
    if (name == "c23") return {2, 3};
    if (name == "c27") return {2, 7};
    if (name == "c34") return {3, 4};
    if (name == "c29") return {2, 9};
    throw CapabilityError("unknown builtin curve '" + name + "'");
}

inline CurveSpec zero_lambda_curve(const std::string& name) {
    auto [n, s] = builtin_ns(name);
    return make_curve(n, s, std::vector<Rational>(s, Rational(0)));
}

// Random rational lambda in [-1,1]; the (2,3) curve keeps lambda_2 = 0 so the
// classical Weierstrass normal form applies.
inline CurveSpec random_curve(const std::string& name, Rng& rng, bool restricted = false) {
    auto [n, s] = builtin_ns(name);
    std::vector<Rational> lam(s);
    for (int j = 0; j < s; ++j) lam[j] = rng.rational(64);
    if (n == 2 && s == 3) lam[2] = 0;
    if (restricted) {
        for (int j = 1; j < s; ++j) lam[j] = 0;
        if (lam[0] == 0) lam[0] = Rational(1, 2);
    }
    return make_curve(n, s, lam);
}

// f(x) = x^s + sum lambda_j x^j
inline Cplx curve_f(const CurveSpec& c, const Cplx& x) {
    Cplx r = Cplx(1);
    for (int j = c.s - 1; j >= 0; --j) r = r * x + c.lambda_c[j];
    return r;
}
inline Cplx curve_fprime(const CurveSpec& c, const Cplx& x) {
    Cplx r = Cplx(Real(c.s));
    for (int j = c.s - 1; j >= 1; --j) r = r * x + Real(j) * c.lambda_c[j];
    return r;
}

struct RhsRoots {
    std::vector<Cplx> y;
    bool singular = false;
};

// Sheet k: principal n-th root of f(x) times zeta^k.
inline RhsRoots curve_rhs(const CurveSpec& c, const Cplx& x) {
    RhsRoots r;
    Cplx f = curve_f(c, x);
    Cplx y0 = principal_root(f, c.n);
    for (int k = 0; k < c.n; ++k) r.y.push_back(y0 * root_of_unity(c.n, k));
    r.singular = abs(f) < Real("1e-25") * (1 + pow(abs(x), c.s));
    return r;
}

// Schur polynomial of the gap partition, written in the power-sum variables
// t_{w_i} = u_i.
inline GradedPoly schur_weierstrass(const CurveSpec& c) {
    const int g = c.genus;
    std::vector<int> part(g);
    for (int i = 0; i < g; ++i) part[i] = c.u_weights[i] - (g - 1 - i);
    int top = part[0] + g;
    std::vector<GradedPoly> t(top + 1, GradedPoly(c.vars));
    for (int i = 0; i < g; ++i)
        if (c.u_weights[i] <= top) t[c.u_weights[i]] = GradedPoly::variable(c.vars, i);
    std::vector<GradedPoly> h(top + 1, GradedPoly(c.vars));
    h[0] = GradedPoly::constant(c.vars, 1);
    for (int k = 1; k <= top; ++k) {
        GradedPoly acc(c.vars);
        for (int j = 1; j <= k; ++j)
            if (!t[j].is_zero()) acc += Rational(j) * (t[j] * h[k - j]);
        h[k] = Rational(1, k) * acc;
    }
    auto H = [&](int k) { return k < 0 ? GradedPoly(c.vars) : h.at(k); };
    // Laplace expansion of det(h_{part_i - i + j})
    std::vector<int> cols(g);
    std::iota(cols.begin(), cols.end(), 0);
    GradedPoly det(c.vars);
    std::vector<int> perm = cols;
    do {
        int inv = 0;
        for (int a = 0; a < g; ++a)
            for (int b = a + 1; b < g; ++b)
                if (perm[a] > perm[b]) ++inv;
        GradedPoly term = GradedPoly::constant(c.vars, inv % 2 ? -1 : 1);
        for (int i = 0; i < g && !term.is_zero(); ++i) term = term * H(part[i] - i + perm[i]);
        det += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return det;
}

// Values printed for the genus-3 curves, used to cross-check the construction.
inline std::optional<std::string> reference_sw_text(const std::string& name) {
    if (name == "c27") return "1/45 * u3^6 + -1/3 * u2 u3^3 + -1 * u2^2 + 1 * u1 u3";
    if (name == "c34") return "1/20 * u3^5 + -1 * u2^2 u3 + 1 * u1";
    if (name == "c23") return "1 * u1";
    return std::nullopt;
}

}  // namespace kleinian

#pragma once
// Polynomials over Kleinian function symbols: wp_I at a point, lambda_j, and
// named functions (FunctionId) at a point.  Used both for the defining
// polynomials of named functions and for relation expressions.

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "curve.hpp"
#include "exactpoly.hpp"

namespace kleinian {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Atom {
    enum Kind { WP, LAM, FN } kind = WP;
    std::vector<int> idx;  // WP: sorted 1-based indices
    int j = 0;             // LAM: lambda index
    std::string fid;       // FN: canonical FunctionId text
    std::string slot;      // point label, "u" by default

    std::string key() const {
        std::ostringstream os;
        if (kind == LAM) return "l" + std::to_string(j);
        if (kind == WP) {
            os << "P[";
            for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << idx[i];
            os << "]";
        } else {
            os << fid;
        }
        if (slot != "u") os << "(" << slot << ")";
        return os.str();
    }
};

// Process-wide interning of atoms so monomials can be integer vectors.
class AtomTable {
public:
    static AtomTable& instance() {
        static AtomTable t;
        return t;
    }
    int intern(const Atom& a) {
        std::lock_guard<std::mutex> lock(mu_);
        std::string k = a.key();
        auto it = ids_.find(k);
        if (it != ids_.end()) return it->second;
        int id = static_cast<int>(atoms_.size());
        atoms_.push_back(a);
        ids_[k] = id;
        return id;
    }
    Atom get(int id) const {
        std::lock_guard<std::mutex> lock(mu_);
        return atoms_.at(id);
    }

private:
    mutable std::mutex mu_;
    std::vector<Atom> atoms_;
    std::map<std::string, int> ids_;
};

inline int wp_atom(std::vector<int> idx, const std::string& slot = "u") {
    std::sort(idx.begin(), idx.end());
    Atom a;
    a.kind = Atom::WP;
    a.idx = std::move(idx);
    a.slot = slot;
    return AtomTable::instance().intern(a);
}
inline int lam_atom(int j) {
    Atom a;
    a.kind = Atom::LAM;
    a.j = j;
    a.slot = "u";
    return AtomTable::instance().intern(a);
}
inline int fn_atom(const std::string& fid, const std::string& slot = "u") {
    Atom a;
    a.kind = Atom::FN;
    a.fid = fid;
    a.slot = slot;
    return AtomTable::instance().intern(a);
}

using Monomial = std::vector<int>;  // sorted atom ids with repetition

struct Poly {
    std::map<Monomial, Rational> terms;

    static Poly constant(const Rational& q) {
        Poly p;
        if (q != 0) p.terms[{}] = q;
        return p;
    }
    static Poly atom(int id) {
        Poly p;
        p.terms[{id}] = 1;
        return p;
    }
    bool is_zero() const { return terms.empty(); }

    Poly& operator+=(const Poly& o) {
        for (auto& [m, c] : o.terms) {
            auto& t = terms[m];
            t += c;
            if (t == 0) terms.erase(m);
        }
        return *this;
    }
    Poly operator+(const Poly& o) const {
        Poly r = *this;
        r += o;
        return r;
    }
    Poly operator-() const {
        Poly r = *this;
        for (auto& [m, c] : r.terms) c = -c;
        return r;
    }
    Poly operator-(const Poly& o) const { return *this + (-o); }
    Poly operator*(const Poly& o) const {
        Poly r;
        for (auto& [m1, c1] : terms)
            for (auto& [m2, c2] : o.terms) {
                Monomial m;
                m.reserve(m1.size() + m2.size());
                std::merge(m1.begin(), m1.end(), m2.begin(), m2.end(), std::back_inserter(m));
                auto& t = r.terms[m];
                t += c1 * c2;
                if (t == 0) r.terms.erase(m);
            }
        return r;
    }
    Poly scaled(const Rational& q) const {
        if (q == 0) return Poly();
        Poly r = *this;
        for (auto& [m, c] : r.terms) c *= q;
        return r;
    }
    Poly pow(int e) const {
        if (e < 0) throw std::invalid_argument("negative power of a polynomial");
        Poly r = constant(1);
        for (int i = 0; i < e; ++i) r = r * *this;
        return r;
    }

    // Partial derivative with respect to one atom.
    Poly diff_atom(int id) const {
        Poly r;
        for (auto& [m, c] : terms) {
            auto n = std::count(m.begin(), m.end(), id);
            if (!n) continue;
            Monomial mm = m;
            mm.erase(std::find(mm.begin(), mm.end(), id));
            auto& t = r.terms[mm];
            t += c * static_cast<int>(n);
            if (t == 0) r.terms.erase(mm);
        }
        return r;
    }

    // Replace each atom by a polynomial (atoms not in the map stay).
    template <class F>
    Poly substitute(F&& image) const {
        Poly r;
        std::map<int, Poly> cache;
        for (auto& [m, c] : terms) {
            Poly t = constant(c);
            for (int a : m) {
                auto it = cache.find(a);
                if (it == cache.end()) it = cache.emplace(a, image(a)).first;
                t = t * it->second;
            }
            r += t;
        }
        return r;
    }

    std::vector<int> atoms() const {
        std::vector<int> out;
        for (auto& [m, c] : terms) out.insert(out.end(), m.begin(), m.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::string to_string() const {
        if (terms.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
            if (!first) os << " + ";
            first = false;
            os << rational_to_string(it->second);
            for (int a : it->first) os << " " << AtomTable::instance().get(a).key();
        }
        return os.str();
    }
};

// Symbolic d/du_k: wp_I -> wp_{I+k}, lambda -> 0, named function f -> D<k>(f).
inline Poly diff_u(const Poly& p, int k) {
    Poly r;
    for (auto& [m, c] : p.terms) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i > 0 && m[i] == m[i - 1]) continue;
            auto n = std::count(m.begin(), m.end(), m[i]);
            Atom a = AtomTable::instance().get(m[i]);
            int d;
            if (a.kind == Atom::LAM) continue;
            if (a.kind == Atom::WP) {
                auto idx = a.idx;
                idx.push_back(k);
                d = wp_atom(idx, a.slot);
            } else {
                d = fn_atom("D" + std::to_string(k) + "(" + a.fid + ")", a.slot);
            }
            Monomial mm = m;
            mm.erase(std::find(mm.begin(), mm.end(), m[i]));
            mm.insert(std::upper_bound(mm.begin(), mm.end(), d), d);
            auto& t = r.terms[mm];
            t += c * static_cast<int>(n);
            if (t == 0) r.terms.erase(mm);
        }
    }
    return r;
}

// Move every atom of a single-point polynomial to the named slot.
inline Poly at_slot(const Poly& p, const std::string& slot) {
    if (slot == "u") return p;
    return p.substitute([&](int id) {
        Atom a = AtomTable::instance().get(id);
        if (a.kind == Atom::LAM) return Poly::atom(id);
        a.slot = slot;
        return Poly::atom(AtomTable::instance().intern(a));
    });
}

// ----------------------------------------------------------------- text form
// Grammar: terms joined by + / -; a term is an optional rational followed by
// factors P<digits>, Q<digits>, l<digits>, each optionally ^<int>.
inline Poly q4_poly(int i, int j, int k, int l, const std::string& slot = "u");

inline Poly parse_poly(const std::string& text) {
    Poly out;
    std::size_t pos = 0;
    auto skip = [&]() {
        while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == '*')) ++pos;
    };
    auto digits = [&]() {
        std::size_t s = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (s == pos) throw ParseError("expected digits at offset " + std::to_string(s) + " in '" + text + "'");
        return text.substr(s, pos - s);
    };
    skip();
    while (pos < text.size()) {
        Rational sign = 1;
        while (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            if (text[pos] == '-') sign = -sign;
            ++pos;
            skip();
        }
        Poly term = Poly::constant(sign);
        bool any = false;
        while (pos < text.size() && text[pos] != '+' && text[pos] != '-') {
            Poly f;
            char ch = text[pos];
            if (std::isdigit(static_cast<unsigned char>(ch))) {
                std::string num = digits();
                if (pos < text.size() && text[pos] == '/') {
                    ++pos;
                    num += "/" + digits();
                }
                f = Poly::constant(parse_rational(num));
            } else if (ch == 'P' || ch == 'Q') {
                ++pos;
                std::string d = digits();
                std::vector<int> idx;
                for (char c : d) idx.push_back(c - '0');
                if (ch == 'P') {
                    f = Poly::atom(wp_atom(idx));
                } else {
                    if (idx.size() != 4) throw ParseError("only 4-index Q supported in '" + text + "'");
                    f = q4_poly(idx[0], idx[1], idx[2], idx[3]);
                }
            } else if (ch == 'l') {
                ++pos;
                f = Poly::atom(lam_atom(std::stoi(digits())));
            } else {
                throw ParseError(std::string("unexpected character '") + ch + "' in '" + text + "'");
            }
            skip();
            if (pos < text.size() && text[pos] == '^') {
                ++pos;
                skip();
                f = f.pow(std::stoi(digits()));
                skip();
            }
            term = term * f;
            any = true;
        }
        if (!any) throw ParseError("empty term in '" + text + "'");
        out += term;
    }
    return out;
}

inline Poly q4_poly(int i, int j, int k, int l, const std::string& slot) {
    auto P = [&](std::vector<int> v) { return Poly::atom(wp_atom(v, slot)); };
    return P({i, j, k, l}) - (P({i, j}) * P({k, l}) + P({i, k}) * P({j, l}) + P({i, l}) * P({j, k})).scaled(2);
}

// --------------------------------------------------------------- FunctionId
struct FunctionId {
    std::string family;  // P Q MINOR DELTA27 T27 G27 F34 TGEN FGEN GGEN DELTA29 U29 D
    std::vector<int> indices;
    int k = 0;  // DELTA29/U29 number, derivative direction for D
    std::shared_ptr<FunctionId> inner;

    std::string to_string() const {
        auto list = [&]() {
            std::string s = "[";
            for (std::size_t i = 0; i < indices.size(); ++i) s += (i ? "," : "") + std::to_string(indices[i]);
            return s + "]";
        };
        if (family == "D") return "D" + std::to_string(k) + "(" + inner->to_string() + ")";
        if (family == "DELTA29" || family == "U29") return family + "[" + std::to_string(k) + "]";
        if (family == "DELTA27" || family == "T27" || family == "G27" || family == "F34") return family;
        return family + list();
    }
};

inline FunctionId parse_function_id(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    auto fail = [&](const std::string& why) { throw ParseError("bad function id '" + text + "': " + why); };
    FunctionId f;
    if (s.size() > 2 && s[0] == 'D' && std::isdigit(static_cast<unsigned char>(s[1]))) {
        auto open = s.find('(');
        if (open == std::string::npos || s.back() != ')') fail("derivative needs D<k>(inner)");
        f.family = "D";
        f.k = std::stoi(s.substr(1, open - 1));
        f.inner = std::make_shared<FunctionId>(parse_function_id(s.substr(open + 1, s.size() - open - 2)));
        return f;
    }
    auto br = s.find('[');
    f.family = s.substr(0, br);
    static const std::vector<std::string> plain = {"DELTA27", "T27", "G27", "F34"};
    static const std::vector<std::string> listed = {"P", "Q", "MINOR", "TGEN", "FGEN", "GGEN", "DELTA29", "U29"};
    if (std::find(plain.begin(), plain.end(), f.family) != plain.end()) {
        if (br != std::string::npos) fail("takes no indices");
        return f;
    }
    if (std::find(listed.begin(), listed.end(), f.family) == listed.end()) fail("unknown family");
    if (br == std::string::npos || s.back() != ']') fail("missing index list");
    std::string body = s.substr(br + 1, s.size() - br - 2);
    std::vector<int> v;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) fail("empty index");
        for (char c : item)
            if (!std::isdigit(static_cast<unsigned char>(c))) fail("non-numeric index");
        v.push_back(std::stoi(item));
    }
    if (f.family == "DELTA29" || f.family == "U29") {
        if (v.size() != 1) fail("expects one number");
        f.k = v[0];
        int top = f.family == "DELTA29" ? 5 : 2;
        if (f.k < 1 || f.k > top) fail("number out of range");
        return f;
    }
    f.indices = v;
    if (f.family == "MINOR") {
        if (v.size() != 2 || v[0] < 1 || v[0] > 3 || v[1] < 1 || v[1] > 3) fail("minor needs (i,j) in 1..3");
        return f;  // minors keep their row/column order
    }
    std::sort(f.indices.begin(), f.indices.end());
    std::size_t n = v.size();
    if (f.family == "P" && n < 2) fail("P needs at least 2 indices");
    if (f.family == "Q" && (n < 4 || n % 2)) fail("Q needs an even number >= 4 of indices");
    if (f.family == "TGEN" && n != 6) fail("TGEN needs 6 indices");
    if (f.family == "FGEN" && n != 6) fail("FGEN needs 6 indices");
    if (f.family == "GGEN" && n != 8) fail("GGEN needs 8 indices");
    return f;
}

// --------------------------------------------------- defining polynomials
namespace detail {

inline Poly P_(std::vector<int> v) { return Poly::atom(wp_atom(std::move(v))); }

// Hypergeneric classes with positions named i j k l m n (o p).
inline Poly tgen_poly(const std::vector<int>& x) {
    auto p2 = [&](int a, int b) { return P_({x[a], x[b]}); };
    auto p3 = [&](int a, int b, int c) { return P_({x[a], x[b], x[c]}); };
    auto q = [&](int a, int b, int c, int d) { return q4_poly(x[a], x[b], x[c], x[d]); };
    enum { i, j, k, l, m, n };
    Rational m23(-2, 3), p13(1, 3);
    Poly r = p3(i, j, k) * p3(l, m, n);
    struct T3 {
        int a, b, c, d, e, f;
        int sgn;
    };
    // coefficient -2/3 (sgn=-2) or +1/3 (sgn=1)
    const T3 cubic[] = {{i, j, k, l, m, n, -2}, {i, j, k, m, l, n, -2}, {i, j, k, n, l, m, -2},
                        {i, k, j, l, m, n, -2}, {i, k, j, m, l, n, -2}, {i, k, j, n, l, m, -2},
                        {i, l, j, k, m, n, -2}, {i, l, j, m, k, n, 1},  {i, l, j, n, k, m, 1},
                        {i, m, j, k, l, n, -2}, {i, m, j, l, k, n, 1},  {i, m, j, n, k, l, 1},
                        {i, n, j, k, l, m, -2}, {i, n, j, l, k, m, 1},  {i, n, j, m, k, l, 1}};
    for (auto& t : cubic)
        r += (p2(t.a, t.b) * p2(t.c, t.d) * p2(t.e, t.f)).scaled(t.sgn == -2 ? m23 : p13);
    struct TQ {
        int a, b, c, d, e, f;
        int sgn;
    };
    const TQ qs[] = {{i, j, k, l, m, n, -2}, {i, j, k, m, l, n, -2}, {i, j, k, n, l, m, -2},
                     {i, j, l, m, k, n, 1},  {i, j, l, n, k, m, 1},  {i, j, m, n, k, l, 1},
                     {i, k, l, m, j, n, 1},  {i, k, l, n, j, m, 1},  {i, k, m, n, j, l, 1},
                     {i, l, m, n, j, k, -2}, {j, k, l, m, i, n, 1},  {j, k, l, n, i, m, 1},
                     {j, k, m, n, i, l, 1},  {j, l, m, n, i, k, -2}, {k, l, m, n, i, j, -2}};
    for (auto& t : qs) r += (q(t.a, t.b, t.c, t.d) * p2(t.e, t.f)).scaled(t.sgn == -2 ? m23 : p13);
    return r;
}

inline Poly fgen_poly(const std::vector<int>& x) {
    auto p = [&](int a, int b) { return P_({x[a], x[b]}); };
    enum { i, j, k, l, m, n };
    return p(i, j) * p(k, l) * p(m, n) - p(i, j) * p(k, n) * p(l, m) - p(i, l) * p(j, k) * p(m, n) +
           p(i, l) * p(j, n) * p(k, m) + p(i, m) * p(j, l) * p(k, n) - p(i, m) * p(j, n) * p(k, l) +
           p(i, n) * p(j, k) * p(l, m) - p(i, n) * p(j, l) * p(k, m);
}

// wp_8 - 4 * sum over the 35 ways to split the eight positions into two
// groups of four.
inline Poly ggen_poly(const std::vector<int>& x) {
    Poly sum;
    for (int a = 1; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b)
            for (int c = b + 1; c < 8; ++c) {
                std::vector<int> A = {x[0], x[a], x[b], x[c]}, B;
                for (int t = 1; t < 8; ++t)
                    if (t != a && t != b && t != c) B.push_back(x[t]);
                sum += P_(A) * P_(B);
            }
    return P_(x) - sum.scaled(4);
}

inline Poly minor_poly(int i, int j) {
    std::vector<int> rows, cols;
    for (int t = 1; t <= 3; ++t) {
        if (t != i) rows.push_back(t);
        if (t != j) cols.push_back(t);
    }
    auto e = [&](int r, int c) { return P_({rows[r], cols[c]}); };
    return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0);
}

inline const char* delta29_text(int k) {
    switch (k) {
        case 1: return "P34 P23 - P34 P14 + P24^2 - P33 P24 + P44 P13 - P22 P44";
        case 2: return "P34 P13 + P24 P14 - P33 P14 - P12 P44";
        case 3: return "-P44 P11 + P14^2 - P23 P14 + P13 P24";
        case 4: return "-2 P34 P11 + 2 P13 P14 - 2 P22 P14 + 2 P12 P24";
        default: return "-P12 P23 + P22 P13 - P13^2 + P12 P14 - P11 P24 + P11 P33";
    }
}

inline const char* u29_text(int k) {
    if (k == 1)
        return "2 P233 P2223 - P222 P2333 - 3/2 P223 P2233 - P33 P22223 + P22 P22333 + 1/2 P333 P2222"
               " + 6 P22 P33 P223 + 6 P23 P33 P222 + 3 P23^2 P223 - 12 P22 P23 P233 - 3 P22^2 P333";
    return "2 P234 P2223 - P222 P2334 - 1/2 P224 P2233 - P223 P2234 - P34 P22223 + P22 P22334"
           " + 1/2 P334 P2222 + 6 P22 P34 P223 + 6 P23 P34 P222 + 3 P23^2 P224 - 12 P22 P23 P234 - 3 P22^2 P334";
}

}  // namespace detail

// Which curves a family applies to; throws ValidationError otherwise.
inline void check_function_for_curve(const FunctionId& f, const CurveSpec& c) {
    auto need = [&](const char* nm, bool ok) {
        if (!ok) throw ValidationError(f.to_string() + " is not defined for curve " + c.name + " (" + nm + ")");
    };
    if (f.family == "D") {
        need("direction", f.k >= 1 && f.k <= c.genus);
        check_function_for_curve(*f.inner, c);
        return;
    }
    for (int i : f.indices) need("index range", i >= 1 && i <= c.genus);
    if (f.family == "DELTA27" || f.family == "T27" || f.family == "G27") need("(2,7) only", c.name == "c27");
    if (f.family == "F34") need("(3,4) only", c.name == "c34");
    if (f.family == "DELTA29" || f.family == "U29") need("(2,9) only", c.name == "c29");
    if (f.family == "MINOR") need("genus 3 only", c.genus == 3);
    if (f.family == "Q") need("4-index Q only", f.indices.size() == 4);
}

// The polynomial in wp's (at slot "u") that defines a function.
inline Poly defining_poly(const FunctionId& f) {
    using namespace detail;
    const auto& x = f.indices;
    if (f.family == "P") return P_(x);
    if (f.family == "Q") {
        if (x.size() != 4) throw CapabilityError("Q-functions with more than 4 indices are not supported");
        return q4_poly(x[0], x[1], x[2], x[3]);
    }
    if (f.family == "MINOR") return minor_poly(x[0], x[1]);
    if (f.family == "DELTA27") return parse_poly("P11 P33 - P12 P23 - P13^2 + P13 P22");
    if (f.family == "T27") return parse_poly("2 P22^3 + P222^2 - P22 P2222");
    if (f.family == "G27") return parse_poly("P22222222 - 140 P2222^2");
    if (f.family == "F34")
        return parse_poly("P11 P22 P33 - P11 P23^2 - P12^2 P33 + 2 P12 P13 P23 - P13^2 P22");
    if (f.family == "TGEN") return tgen_poly(x);
    if (f.family == "FGEN") return fgen_poly(x);
    if (f.family == "GGEN") return ggen_poly(x);
    if (f.family == "DELTA29") return parse_poly(delta29_text(f.k));
    if (f.family == "U29") return parse_poly(u29_text(f.k));
    if (f.family == "D") return diff_u(defining_poly(*f.inner), f.k);
    throw ParseError("unknown family " + f.family);
}

// ------------------------------------------------------------ weights
inline int atom_weight(const CurveSpec& c, int id) {
    Atom a = AtomTable::instance().get(id);
    if (a.kind == Atom::LAM) return c.lambda_weight(a.j);
    if (a.kind == Atom::WP) {
        int w = 0;
        for (int i : a.idx) w -= c.u_weights.at(i - 1);
        return w;
    }
    throw std::logic_error("weight of a named-function atom needs its definition");
}

struct PolyWeight {
    bool homogeneous = true;
    bool zero = false;
    int weight = 0, other = 0;
};

template <class W>
PolyWeight poly_weight(const Poly& p, W&& wt) {
    PolyWeight r;
    if (p.is_zero()) {
        r.zero = true;
        return r;
    }
    bool first = true;
    for (auto& [m, c] : p.terms) {
        int w = 0;
        for (int a : m) w += wt(a);
        if (first) {
            r.weight = w;
            first = false;
        } else if (w != r.weight && r.homogeneous) {
            r.homogeneous = false;
            r.other = w;
        }
    }
    return r;
}

inline PolyWeight function_weight(const CurveSpec& c, const FunctionId& f) {
    return poly_weight(defining_poly(f), [&](int a) { return atom_weight(c, a); });
}

// +1 even, -1 odd, 0 mixed, under u -> -u.
inline int poly_parity(const Poly& p) {
    int par = 0;
    for (auto& [m, cf] : p.terms) {
        int n = 0;
        for (int a : m) {
            Atom at = AtomTable::instance().get(a);
            if (at.kind == Atom::WP) n += static_cast<int>(at.idx.size());
        }
        int s = (n % 2) ? -1 : 1;
        if (par == 0)
            par = s;
        else if (par != s)
            return 0;
    }
    return par == 0 ? 1 : par;
}

// Largest number of indices on any wp in the polynomial.
inline int max_wp_order(const Poly& p) {
    int k = 0;
    for (int a : p.atoms()) {
        Atom at = AtomTable::instance().get(a);
        if (at.kind == Atom::WP) k = std::max(k, static_cast<int>(at.idx.size()));
    }
    return k;
}

// -------------------------------------------------------------- catalogs
inline std::vector<std::string> basis_catalog(const CurveSpec& c, int pole_order) {
    std::vector<std::string> out = {"1"};
    auto add = [&](std::initializer_list<const char*> xs) {
        for (auto x : xs) out.push_back(x);
    };
    auto wps = [&](int m) {
        // all sorted m-index lists in lexicographic order
        std::vector<int> v(m, 1);
        for (;;) {
            std::string s = "P[";
            for (int i = 0; i < m; ++i) s += (i ? "," : "") + std::to_string(v[i]);
            out.push_back(s + "]");
            int i = m - 1;
            while (i >= 0 && v[i] == c.genus) --i;
            if (i < 0) break;
            ++v[i];
            for (int t = i + 1; t < m; ++t) v[t] = v[i];
        }
    };
    bool ok = (c.name == "c27" || c.name == "c34") ? (pole_order >= 2 && pole_order <= 4)
                                                   : (c.name == "c29" && (pole_order == 2 || pole_order == 3));
    if (!ok)
        throw CapabilityError("no basis catalog for " + c.name + " with pole order " + std::to_string(pole_order));
    if (c.name == "c27") {
        wps(2);
        add({"DELTA27"});
        if (pole_order == 2) return out;
        wps(3);
        add({"D1(DELTA27)", "D2(DELTA27)", "D3(DELTA27)", "MINOR[1,1]", "MINOR[1,2]", "MINOR[1,3]", "MINOR[2,3]",
             "MINOR[3,3]", "T27"});
        if (pole_order == 3) return out;
        wps(4);
        add({"D3(D1(DELTA27))", "D3(D2(DELTA27))", "D3(D3(DELTA27))", "D2(D1(DELTA27))", "D2(D2(DELTA27))",
             "D1(D1(DELTA27))", "D1(MINOR[1,1])", "D2(MINOR[1,1])", "D3(MINOR[1,1])", "D1(MINOR[1,2])",
             "D3(MINOR[1,2])", "D1(MINOR[1,3])", "D2(MINOR[1,3])", "D3(MINOR[1,3])", "D1(MINOR[2,3])",
             "D2(MINOR[2,3])", "D1(MINOR[3,3])", "D2(MINOR[3,3])", "D1(T27)", "D2(T27)", "D3(T27)", "G27"});
        return out;
    }
    if (c.name == "c34") {
        wps(2);
        add({"Q[1,3,3,3]"});
        if (pole_order == 2) return out;
        wps(3);
        add({"D1(Q[1,3,3,3])", "D2(Q[1,3,3,3])", "D3(Q[1,3,3,3])", "MINOR[1,1]", "MINOR[1,2]", "MINOR[1,3]",
             "MINOR[2,2]", "MINOR[2,3]", "MINOR[3,3]"});
        if (pole_order == 3) return out;
        wps(4);
        add({"D1(D1(Q[1,3,3,3]))", "D2(D1(Q[1,3,3,3]))", "D3(D1(Q[1,3,3,3]))", "D2(D2(Q[1,3,3,3]))",
             "D3(D2(Q[1,3,3,3]))", "D3(D3(Q[1,3,3,3]))", "D1(MINOR[1,1])", "D1(MINOR[1,2])", "D1(MINOR[1,3])",
             "D1(MINOR[2,2])", "D1(MINOR[2,3])", "D1(MINOR[3,3])", "D2(MINOR[1,1])", "D2(MINOR[1,2])",
             "D2(MINOR[1,3])", "D2(MINOR[2,2])", "D2(MINOR[2,3])", "D2(MINOR[3,3])", "D3(MINOR[1,1])",
             "D3(MINOR[1,2])", "D3(MINOR[2,2])", "F34"});
        return out;
    }
    wps(2);
    add({"DELTA29[1]", "DELTA29[2]", "DELTA29[3]", "DELTA29[4]", "DELTA29[5]"});
    if (pole_order == 2) return out;
    wps(3);
    add({"D1(DELTA29[1])", "D2(DELTA29[1])", "D3(DELTA29[1])", "D4(DELTA29[1])", "D3(DELTA29[2])",
         "D4(DELTA29[2])", "D1(DELTA29[3])", "D2(DELTA29[3])", "D3(DELTA29[3])", "D4(DELTA29[3])",
         "D1(DELTA29[4])", "D2(DELTA29[4])", "D3(DELTA29[4])", "D4(DELTA29[4])", "D1(DELTA29[5])",
         "D2(DELTA29[5])", "D3(DELTA29[5])", "D4(DELTA29[5])"});
    for (const char* t : {"111333", "111334", "111344", "112334", "122244", "122334", "122344", "122444", "123333",
                          "123334", "123444", "124444", "133333", "144444", "222344", "222444", "223444", "224444",
                          "233333", "233334", "233444", "333334", "333444", "334444", "344444"}) {
        std::string s = "TGEN[";
        for (int i = 0; i < 6; ++i) s += std::string(i ? "," : "") + t[i];
        out.push_back(s + "]");
    }
    add({"U29[1]", "U29[2]"});
    return out;
}

}  // namespace kleinian

namespace kleinian {

// Poly with numeric coefficients, for repeated evaluation.
struct CompiledPoly {
    struct Term {
        Cplx coeff;
        std::vector<int> atoms;
    };
    std::vector<Term> terms;

    CompiledPoly() = default;
    explicit CompiledPoly(const Poly& p) {
        for (auto& [m, c] : p.terms) terms.push_back({to_cplx(c), m});
    }

    // value(atom id) -> Cplx; also returns the largest term magnitude in *scale.
    template <class V>
    Cplx eval(V&& value, Real* scale = nullptr) const {
        Cplx s = Cplx(0);
        Real mx = 0;
        for (auto& t : terms) {
            Cplx v = t.coeff;
            for (int a : t.atoms) v *= value(a);
            s += v;
            mx = std::max(mx, Real(abs(v)));
        }
        if (scale) *scale = mx;
        return s;
    }
};

}  // namespace kleinian

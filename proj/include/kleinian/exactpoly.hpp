#pragma once
// Exact weight-graded multivariate polynomials over the rationals.

#include <algorithm>
#include <cctype>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace kleinian {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline std::string rational_to_string(const Rational& q) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(q);
    if (boost::multiprecision::denominator(q) != 1) os << "/" << boost::multiprecision::denominator(q);
    return os.str();
}

inline Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = s.find('/');
    auto check_int = [&](const std::string& t) {
        std::size_t i = (!t.empty() && (t[0] == '+' || t[0] == '-')) ? 1 : 0;
        if (i >= t.size()) throw std::invalid_argument("bad rational literal '" + text + "'");
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i])))
                throw std::invalid_argument("bad rational literal '" + text + "'");
    };
    auto strip_plus = [](std::string t) { return (!t.empty() && t[0] == '+') ? t.substr(1) : t; };
    if (slash == std::string::npos) {
        check_int(s);
        return Rational(BigInt(strip_plus(s)));
    }
    std::string a = s.substr(0, slash), b = s.substr(slash + 1);
    check_int(a);
    check_int(b);
    BigInt den(strip_plus(b));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
    return Rational(BigInt(strip_plus(a)), den);
}

// Variable names and Sato weights shared by a family of polynomials.
struct VarTable {
    std::vector<std::string> names;
    std::vector<int> weights;

    std::size_t size() const { return names.size(); }
    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }
    bool operator==(const VarTable& o) const { return names == o.names && weights == o.weights; }
};

using VarTablePtr = std::shared_ptr<const VarTable>;

struct WeightVerdict {
    bool homogeneous = true;
    bool zero = false;
    int weight = 0;
    int other_weight = 0;  // second weight seen when inhomogeneous
};

class GradedPoly {
public:
    using Exps = std::vector<int>;
    using Terms = std::map<Exps, Rational>;

    GradedPoly() = default;
    explicit GradedPoly(VarTablePtr vars) : vars_(std::move(vars)) {}

    static GradedPoly constant(VarTablePtr vars, const Rational& c) {
        GradedPoly p(vars);
        if (c != 0) p.terms_[Exps(p.vars_->size(), 0)] = c;
        return p;
    }
    static GradedPoly variable(VarTablePtr vars, std::size_t i, int power = 1) {
        GradedPoly p(vars);
        Exps e(p.vars_->size(), 0);
        e.at(i) = power;
        p.terms_[e] = 1;
        return p;
    }
    static GradedPoly variable(VarTablePtr vars, const std::string& name, int power = 1) {
        int i = vars->index_of(name);
        if (i < 0) throw std::invalid_argument("unknown variable '" + name + "'");
        return variable(vars, static_cast<std::size_t>(i), power);
    }

    const VarTablePtr& vars() const { return vars_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    void add_term(const Exps& e, const Rational& c) {
        if (c == 0) return;
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            terms_.emplace(e, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    int monomial_weight(const Exps& e) const {
        int w = 0;
        for (std::size_t i = 0; i < e.size(); ++i) w += e[i] * vars_->weights[i];
        return w;
    }

    GradedPoly operator-() const {
        GradedPoly r(vars_);
        for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
        return r;
    }
    GradedPoly& operator+=(const GradedPoly& b) {
        check_compatible(b);
        for (const auto& [e, c] : b.terms_) add_term(e, c);
        return *this;
    }
    GradedPoly& operator-=(const GradedPoly& b) {
        check_compatible(b);
        for (const auto& [e, c] : b.terms_) add_term(e, -c);
        return *this;
    }
    friend GradedPoly operator+(GradedPoly a, const GradedPoly& b) { return a += b; }
    friend GradedPoly operator-(GradedPoly a, const GradedPoly& b) { return a -= b; }
    friend GradedPoly operator*(const GradedPoly& a, const GradedPoly& b) {
        a.check_compatible(b);
        GradedPoly r(a.vars_);
        Exps e(a.vars_ ? a.vars_->size() : 0);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
                r.add_term(e, ca * cb);
            }
        return r;
    }
    friend GradedPoly operator*(const Rational& s, const GradedPoly& a) {
        GradedPoly r(a.vars_);
        if (s == 0) return r;
        for (const auto& [e, c] : a.terms_) r.terms_.emplace(e, s * c);
        return r;
    }
    bool operator==(const GradedPoly& b) const { return terms_ == b.terms_; }
    bool operator!=(const GradedPoly& b) const { return !(*this == b); }

    GradedPoly pow(int k) const {
        if (k < 0) throw std::invalid_argument("negative power of a polynomial");
        GradedPoly r = constant(vars_, 1), base = *this;
        while (k) {
            if (k & 1) r = r * base;
            k >>= 1;
            if (k) base = base * base;
        }
        return r;
    }

    GradedPoly diff(std::size_t var) const {
        if (!vars_ || var >= vars_->size()) throw std::invalid_argument("diff: variable out of range");
        GradedPoly r(vars_);
        for (const auto& [e, c] : terms_) {
            if (e[var] == 0) continue;
            Exps f = e;
            f[var] -= 1;
            r.add_term(f, c * e[var]);
        }
        return r;
    }
    GradedPoly diff(const std::string& name) const {
        int i = vars_->index_of(name);
        if (i < 0) throw std::invalid_argument("diff: unknown variable '" + name + "'");
        return diff(static_cast<std::size_t>(i));
    }

    // Drops every term containing one of the listed variables.
    GradedPoly set_zero(const std::vector<std::size_t>& idx) const {
        GradedPoly r(vars_);
        for (const auto& [e, c] : terms_) {
            bool keep = true;
            for (auto i : idx)
                if (e[i]) keep = false;
            if (keep) r.terms_.emplace(e, c);
        }
        return r;
    }

    WeightVerdict weight_of() const {
        WeightVerdict v;
        if (terms_.empty()) {
            v.zero = true;
            return v;
        }
        bool first = true;
        for (const auto& [e, c] : terms_) {
            int w = monomial_weight(e);
            if (first) {
                v.weight = w;
                first = false;
            } else if (w != v.weight) {
                v.homogeneous = false;
                v.other_weight = w;
                return v;
            }
        }
        return v;
    }

    Rational eval_exact(const std::map<std::string, Rational>& assignment) const {
        std::vector<Rational> vals(vars_->size());
        std::vector<bool> have(vars_->size(), false);
        for (const auto& [name, q] : assignment) {
            int i = vars_->index_of(name);
            if (i >= 0) {
                vals[i] = q;
                have[i] = true;
            }
        }
        Rational total = 0;
        for (const auto& [e, c] : terms_) {
            Rational t = c;
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (!e[i]) continue;
                if (!have[i]) throw std::invalid_argument("eval_exact: missing assignment for " + vars_->names[i]);
                for (int k = 0; k < e[i]; ++k) t *= vals[i];
            }
            total += t;
        }
        return total;
    }

    // Numeric evaluation; values indexed like the variable table.
    template <class C>
    C eval(const std::vector<C>& values) const {
        if (values.size() < vars_->size()) throw std::invalid_argument("eval: missing assignment");
        C total = C(0);
        for (const auto& [e, c] : terms_) {
            C t = to_num<C>(c);
            for (std::size_t i = 0; i < e.size(); ++i)
                for (int k = 0; k < e[i]; ++k) t *= values[i];
            total += t;
        }
        return total;
    }

    template <class C>
    static C to_num(const Rational& q) {
        namespace mp = boost::multiprecision;
        if constexpr (mp::is_number<C>::value) {
            if constexpr (mp::number_category<C>::value == mp::number_kind_complex) {
                using R = typename mp::component_type<C>::type;
                return C(q.template convert_to<R>());
            } else {
                return q.template convert_to<C>();
            }
        } else if constexpr (std::is_floating_point_v<C>) {
            return q.template convert_to<C>();
        } else {
            using R = typename C::value_type;
            return C(q.template convert_to<R>());
        }
    }

    // Lexicographic leading exponent (first variable most significant).
    const Exps& lex_leading() const {
        if (terms_.empty()) throw std::logic_error("leading term of zero polynomial");
        return terms_.rbegin()->first;
    }

    // Exact division by d; nullopt when d does not divide *this.
    std::optional<GradedPoly> divide_exact(const GradedPoly& d) const {
        check_compatible(d);
        if (d.is_zero()) throw std::invalid_argument("division by zero polynomial");
        GradedPoly rem = *this, quo(vars_);
        const Exps& ld = d.lex_leading();
        Rational lc = d.terms_.rbegin()->second;
        while (!rem.is_zero()) {
            const Exps lr = rem.lex_leading();
            Rational lcr = rem.terms_.rbegin()->second;
            Exps q(lr.size());
            for (std::size_t i = 0; i < lr.size(); ++i) {
                q[i] = lr[i] - ld[i];
                if (q[i] < 0) return std::nullopt;
            }
            GradedPoly mono(vars_);
            mono.terms_[q] = lcr / lc;
            quo += mono;
            rem -= mono * d;
        }
        return quo;
    }

    // Canonical text: terms sorted by descending weight then descending exponents.
    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::vector<std::pair<Exps, Rational>> v(terms_.begin(), terms_.end());
        std::stable_sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
            int wa = monomial_weight(a.first), wb = monomial_weight(b.first);
            if (wa != wb) return wa > wb;
            return a.first > b.first;
        });
        std::string out;
        for (std::size_t t = 0; t < v.size(); ++t) {
            if (t) out += " + ";
            out += rational_to_string(v[t].second);
            std::string mono;
            for (std::size_t i = 0; i < v[t].first.size(); ++i) {
                int k = v[t].first[i];
                if (!k) continue;
                if (!mono.empty()) mono += " ";
                mono += vars_->names[i];
                if (k != 1) mono += "^" + std::to_string(k);
            }
            if (!mono.empty()) out += " * " + mono;
        }
        return out;
    }

    // Accepts the canonical grammar, plus '-' separators and omitted '*'.
    static GradedPoly parse(VarTablePtr vars, const std::string& text) {
        GradedPoly p(vars);
        std::size_t i = 0, n = text.size();
        auto skip = [&] {
            while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        };
        skip();
        if (text.substr(i) == "0") return p;
        bool first = true;
        while (true) {
            skip();
            if (i >= n) break;
            int sign = 1;
            if (text[i] == '+' || text[i] == '-') {
                if (text[i] == '-') sign = -1;
                ++i;
                skip();
            } else if (!first) {
                throw std::invalid_argument("expected '+' or '-' at offset " + std::to_string(i));
            }
            // nested sign such as "+ -1/3"
            if (i < n && (text[i] == '-' || text[i] == '+')) {
                if (text[i] == '-') sign = -sign;
                ++i;
                skip();
            }
            first = false;
            Rational coeff = 1;
            if (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
                std::size_t j = i;
                while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '/')) ++j;
                coeff = parse_rational(text.substr(i, j - i));
                i = j;
                skip();
                if (i < n && text[i] == '*') {
                    ++i;
                    skip();
                }
            }
            Exps e(vars->size(), 0);
            while (i < n && (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
                std::size_t j = i;
                while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
                std::string name = text.substr(i, j - i);
                int vi = vars->index_of(name);
                if (vi < 0) throw std::invalid_argument("unknown variable '" + name + "'");
                i = j;
                int k = 1;
                if (i < n && text[i] == '^') {
                    ++i;
                    std::size_t m = i;
                    while (m < n && std::isdigit(static_cast<unsigned char>(text[m]))) ++m;
                    if (m == i) throw std::invalid_argument("missing exponent after '^'");
                    k = std::stoi(text.substr(i, m - i));
                    i = m;
                }
                e[vi] += k;
                skip();
                if (i < n && text[i] == '*') {
                    ++i;
                    skip();
                }
            }
            p.add_term(e, sign * coeff);
        }
        return p;
    }

private:
    void check_compatible(const GradedPoly& b) const {
        if (!vars_ || !b.vars_) throw std::invalid_argument("polynomial without a variable table");
        if (vars_ != b.vars_ && !(*vars_ == *b.vars_))
            throw std::invalid_argument("structural error: variable tables differ");
    }

    VarTablePtr vars_;
    Terms terms_;
};

// f = num / base^power with base fixed (the Schur-Weierstrass polynomial in practice).
struct PowerFraction {
    GradedPoly num;
    int power = 0;
};

inline PowerFraction pf_add(const PowerFraction& a, const PowerFraction& b, const GradedPoly& base) {
    if (a.num.is_zero()) return b;
    if (b.num.is_zero()) return a;
    int m = std::max(a.power, b.power);
    return {a.num * base.pow(m - a.power) + b.num * base.pow(m - b.power), m};
}

inline PowerFraction pf_mul(const PowerFraction& a, const PowerFraction& b) {
    return {a.num * b.num, a.power + b.power};
}

inline PowerFraction pf_diff(const PowerFraction& a, std::size_t var, const GradedPoly& base) {
    // d(N/B^m) = (N' B - m N B') / B^{m+1}
    GradedPoly t = a.num.diff(var) * base - Rational(a.power) * (a.num * base.diff(var));
    return {t, a.power + 1};
}

// Cancels common factors of base; the result has the minimal power.
inline PowerFraction pf_reduce(PowerFraction a, const GradedPoly& base) {
    if (a.num.is_zero()) return {a.num, 0};
    while (a.power > 0) {
        auto q = a.num.divide_exact(base);
        if (!q) break;
        a.num = std::move(*q);
        --a.power;
    }
    return a;
}

}  // namespace kleinian

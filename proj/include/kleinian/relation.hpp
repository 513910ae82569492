#pragma once
// Relation database: JSON expression trees, numeric verification, determinantal
// expansion, basis ranks and structural audits.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "abelfunc.hpp"
#include "json.hpp"
#include "sigma.hpp"
#include "wpoly.hpp"

#ifndef KLEINIAN_DATA_DIR_DEFAULT
#define KLEINIAN_DATA_DIR_DEFAULT "data"
#endif

namespace kleinian {

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ point arguments

// One summand of a point argument: coeff * [aut^power] slot.
struct PointTerm {
    int coeff = 1;
    std::string slot;
    std::string aut;  // "", "zeta" or "quartic"
    int power = 0;
};
using PointArg = std::vector<PointTerm>;

inline std::string point_key(const PointArg& a) {
    if (a.size() == 1 && a[0].coeff == 1 && a[0].aut.empty()) return a[0].slot;
    std::string s;
    for (auto& t : a) {
        s += (t.coeff < 0 ? "-" : "+") + std::to_string(std::abs(t.coeff));
        if (!t.aut.empty()) s += t.aut + "^" + std::to_string(t.power) + " ";
        s += t.slot;
    }
    return s;
}

// Composite point keys seen so far, so evaluators can rebuild the point.
class PointRegistry {
public:
    static PointRegistry& instance() {
        static PointRegistry r;
        return r;
    }
    std::string add(const PointArg& a) {
        std::string k = point_key(a);
        std::lock_guard<std::mutex> lock(mu_);
        args_.emplace(k, a);
        return k;
    }
    PointArg get(const std::string& key) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = args_.find(key);
        if (it != args_.end()) return it->second;
        return {PointTerm{1, key, "", 0}};
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, PointArg> args_;
};

inline std::vector<Cplx> resolve_point(const CurveSpec& c, const std::string& key,
                                       const std::map<std::string, std::vector<Cplx>>& base) {
    PointArg a = PointRegistry::instance().get(key);
    std::vector<Cplx> u(c.genus, Cplx(0));
    for (auto& t : a) {
        auto it = base.find(t.slot);
        if (it == base.end()) throw ValidationError("no value for point '" + t.slot + "'");
        std::vector<Cplx> v = t.aut.empty() ? it->second : automorphism_apply(c, t.aut, t.power, it->second);
        for (int k = 0; k < c.genus; ++k) u[k] += Real(t.coeff) * v[k];
    }
    return u;
}

// "zeta^1 v" -> aut zeta, power 1, slot v
inline PointTerm parse_point_term(const nlohmann::json& t, const std::string& where) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_string())
        throw ParseError(where + ": point term must be [\"<int>\", \"<point>\"]");
    PointTerm p;
    try {
        p.coeff = std::stoi(t[0].get<std::string>());
    } catch (...) {
        throw ParseError(where + ": bad point coefficient");
    }
    std::string s = t[1].get<std::string>();
    auto sp = s.find(' ');
    if (sp != std::string::npos) {
        std::string aut = s.substr(0, sp);
        p.slot = s.substr(sp + 1);
        auto caret = aut.find('^');
        p.aut = aut.substr(0, caret);
        p.power = caret == std::string::npos ? 1 : std::stoi(aut.substr(caret + 1));
        if (p.aut == "i") p.aut = "quartic";
        if (p.aut != "zeta" && p.aut != "quartic") throw ParseError(where + ": unknown automorphism '" + aut + "'");
    } else {
        p.slot = s;
    }
    if (p.slot.empty()) throw ParseError(where + ": empty point name");
    return p;
}

// ------------------------------------------------------------ tree -> Poly

inline Rational parse_rational(const std::string& s, const std::string& where) {
    try {
        auto slash = s.find('/');
        if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
        return Rational(boost::multiprecision::cpp_int(s.substr(0, slash)),
                        boost::multiprecision::cpp_int(s.substr(slash + 1)));
    } catch (...) {
        throw ParseError(where + ": bad rational '" + s + "'");
    }
}

// Atom for a function id at a point; P and derivatives of P become wp atoms.
inline int function_atom(const std::string& id, const std::string& slot) {
    FunctionId f = parse_function_id(id);
    std::vector<int> extra;
    const FunctionId* g = &f;
    while (g->family == "D") {
        extra.push_back(g->k);
        g = g->inner.get();
    }
    if (g->family == "P") {
        std::vector<int> idx = g->indices;
        idx.insert(idx.end(), extra.begin(), extra.end());
        return wp_atom(idx, slot);
    }
    return fn_atom(f.to_string(), slot);
}

using TypoValues = std::map<int, Rational>;

inline Poly tree_to_poly(const nlohmann::json& n, const std::string& where, const TypoValues* typos = nullptr) {
    if (!n.is_object() || !n.contains("k") || !n["k"].is_string())
        throw ParseError(where + ": node without kind key 'k'");
    const std::string k = n["k"].get<std::string>();
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!n.contains(key)) throw ParseError(where + ": '" + k + "' node lacks key '" + key + "'");
        return n[key];
    };
    if (k == "rat") {
        const auto& v = need("v");
        if (!v.is_string()) throw ParseError(where + ".v: rational must be a string");
        return Poly::constant(parse_rational(v.get<std::string>(), where + ".v"));
    }
    if (k == "lam") {
        const auto& j = need("j");
        if (!j.is_number_integer() || j.get<int>() < 0) throw ParseError(where + ".j: bad lambda index");
        return Poly::atom(lam_atom(j.get<int>()));
    }
    if (k == "fn") {
        const auto& id = need("id");
        if (!id.is_string()) throw ParseError(where + ".id: must be a string");
        std::string slot = "u";
        if (n.contains("arg")) {
            const auto& a = n["arg"];
            if (!a.is_array() || a.empty()) throw ParseError(where + ".arg: must be a non-empty list");
            PointArg pa;
            for (std::size_t i = 0; i < a.size(); ++i)
                pa.push_back(parse_point_term(a[i], where + ".arg[" + std::to_string(i) + "]"));
            slot = PointRegistry::instance().add(pa);
        }
        try {
            return Poly::atom(function_atom(id.get<std::string>(), slot));
        } catch (const ParseError& e) {
            throw ParseError(where + ".id: " + e.what());
        }
    }
    if (k == "sum" || k == "prod") {
        const auto& xs = need("xs");
        if (!xs.is_array()) throw ParseError(where + ".xs: must be a list");
        Poly acc = Poly::constant(k == "sum" ? 0 : 1);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            Poly t = tree_to_poly(xs[i], where + ".xs[" + std::to_string(i) + "]", typos);
            acc = k == "sum" ? acc + t : acc * t;
        }
        return acc;
    }
    if (k == "pow") {
        const auto& e = need("e");
        if (!e.is_number_integer() || e.get<int>() < 0) throw ParseError(where + ".e: bad exponent");
        return tree_to_poly(need("b"), where + ".b", typos).pow(e.get<int>());
    }
    if (k == "typo") {
        const auto& s = need("site");
        if (!s.is_number_integer()) throw ParseError(where + ".site: must be an integer");
        if (!typos) throw ParseError(where + ": typo node outside a set with typo sites");
        auto it = typos->find(s.get<int>());
        if (it == typos->end()) throw ParseError(where + ": undeclared typo site");
        return Poly::constant(it->second);
    }
    throw ParseError(where + ": unknown node kind '" + k + "'");
}

// ------------------------------------------------------------ relation sets

struct Candidate {
    std::string reading;
    Poly rhs;
};

struct TypoSite {
    int site = 0;
    std::string printed;
    std::vector<std::string> candidates;  // first is the literal reading
};

struct Relation {
    int weight = 0;
    std::string label;
    std::string block;  // P_k block name for the three-term formula
    Poly lhs, rhs;      // rhs with every typo site at zero
    bool ambiguous = false;
    std::string note;
    std::vector<Candidate> candidates;
    std::map<int, Poly> typo_terms;  // rhs part multiplying each typo coefficient
};

struct RelationSet {
    std::string name, curve, formula, note;
    int declared_count = 0;
    int swap_sign = 0;  // two-term formula: RHS(v,u) = swap_sign RHS(u,v)
    std::vector<TypoSite> typos;
    std::vector<Relation> relations;

    // rhs for a given typo reading (index per site into TypoSite::candidates)
    Poly rhs_with(const Relation& r, const std::vector<int>& choice) const {
        Poly p = r.rhs;
        for (auto& [s, t] : r.typo_terms)
            p += t.scaled(parse_rational(typos.at(s).candidates.at(choice.at(s)), "typo"));
        return p;
    }
};

// Printable form of a relation side: P3333-style for single wp atoms.
inline std::string side_label(const Poly& p) {
    if (p.terms.size() == 1 && p.terms.begin()->second == 1) {
        const auto& m = p.terms.begin()->first;
        if (m.size() == 1) {
            Atom a = AtomTable::instance().get(m[0]);
            if (a.kind == Atom::WP) {
                std::string s = "P";
                for (int i : a.idx) s += std::to_string(i);
                return s;
            }
        }
        if (m.size() == 2 && m[0] == m[1]) {
            Atom a = AtomTable::instance().get(m[0]);
            if (a.kind == Atom::WP) {
                std::string s = "P";
                for (int i : a.idx) s += std::to_string(i);
                return s + "^2";
            }
        }
    }
    return p.is_zero() ? "0" : p.to_string();
}

inline RelationSet parse_relation_json(const nlohmann::json& doc, const std::string& where = "file") {
    RelationSet S;
    auto str = [&](const char* key, bool required) -> std::string {
        if (!doc.contains(key)) {
            if (required) throw ParseError(where + ": missing key '" + std::string(key) + "'");
            return "";
        }
        if (!doc[key].is_string()) throw ParseError(where + "." + key + ": must be a string");
        return doc[key].get<std::string>();
    };
    S.name = str("set", true);
    S.curve = str("curve", true);
    S.formula = str("formula", false);
    S.note = str("note", false);
    if (!doc.contains("declared_count") || !doc["declared_count"].is_number_integer())
        throw ParseError(where + ": missing integer key 'declared_count'");
    S.declared_count = doc["declared_count"].get<int>();
    if (doc.contains("swap_sign")) S.swap_sign = doc["swap_sign"].get<int>();
    if (doc.contains("typos")) {
        for (auto& t : doc["typos"]) {
            TypoSite ts;
            ts.site = t.at("site").get<int>();
            ts.printed = t.value("printed", "");
            for (auto& c : t.at("candidates")) ts.candidates.push_back(c.get<std::string>());
            if (ts.site != static_cast<int>(S.typos.size()) || ts.candidates.empty())
                throw ParseError(where + ".typos: sites must be numbered 0.. with candidates");
            S.typos.push_back(ts);
        }
    }
    if (!doc.contains("relations") || !doc["relations"].is_array())
        throw ParseError(where + ": missing list 'relations'");
    const auto& rows = doc["relations"];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string w = where + ".relations[" + std::to_string(i) + "]";
        if (!r.is_object()) throw ParseError(w + ": must be an object");
        for (auto it = r.begin(); it != r.end(); ++it) {
            static const std::set<std::string> keys = {"weight", "lhs", "rhs", "ambiguous", "note",
                                                       "candidates", "block", "label"};
            if (!keys.count(it.key())) throw ParseError(w + ": unknown key '" + it.key() + "'");
        }
        Relation R;
        if (!r.contains("weight") || !r["weight"].is_number_integer()) throw ParseError(w + ": missing integer 'weight'");
        R.weight = r["weight"].get<int>();
        R.block = r.value("block", "");
        R.note = r.value("note", "");
        R.lhs = r.contains("lhs") ? tree_to_poly(r["lhs"], w + ".lhs") : Poly();
        R.ambiguous = r.value("ambiguous", false);
        if (R.ambiguous) {
            if (!r.contains("candidates") || !r["candidates"].is_array() || r["candidates"].size() < 2)
                throw ParseError(w + ": ambiguous row needs at least two candidates");
            for (std::size_t c = 0; c < r["candidates"].size(); ++c) {
                const auto& cj = r["candidates"][c];
                R.candidates.push_back({cj.value("reading", "candidate " + std::to_string(c)),
                                        tree_to_poly(cj.at("rhs"), w + ".candidates[" + std::to_string(c) + "].rhs")});
            }
        } else {
            if (!r.contains("rhs")) throw ParseError(w + ": missing key 'rhs'");
            TypoValues zero;
            for (auto& t : S.typos) zero[t.site] = 0;
            R.rhs = tree_to_poly(r["rhs"], w + ".rhs", &zero);
            for (auto& t : S.typos) {
                TypoValues one = zero;
                one[t.site] = 1;
                Poly d = tree_to_poly(r["rhs"], w + ".rhs", &one) + (-R.rhs);
                if (!d.is_zero()) R.typo_terms[t.site] = d;
            }
        }
        R.label = r.value("label", "");
        if (R.label.empty()) R.label = R.block.empty() ? side_label(R.lhs) : R.block;
        S.relations.push_back(std::move(R));
    }
    if (static_cast<int>(S.relations.size()) != S.declared_count)
        throw IntegrityError(where + ": " + std::to_string(S.relations.size()) + " relations, declared " +
                             std::to_string(S.declared_count));
    return S;
}

inline std::string data_dir() {
    if (const char* e = std::getenv("KLEINIAN_DATA_DIR")) return e;
    return KLEINIAN_DATA_DIR_DEFAULT;
}

inline RelationSet parse_relation_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_relation_json(doc, path);
}

inline RelationSet load_set(const std::string& name) { return parse_relation_file(data_dir() + "/" + name + ".json"); }

inline const std::vector<std::string>& relation_set_names() {
    static const std::vector<std::string> names = {
        "app_b_27",    "app_b_34",    "app_c_quad27", "app_d_quad34", "bilinear27",
        "bilinear34",  "add_2t2v_27", "add_2t2v_34",  "add_3t3v_34",  "add_4t2v_34restricted"};
    return names;
}

// ------------------------------------------------------------ slots

inline std::set<std::string> poly_slots(const Poly& p) {
    std::set<std::string> s;
    for (int a : p.atoms()) {
        Atom at = AtomTable::instance().get(a);
        if (at.kind != Atom::LAM) s.insert(at.slot);
    }
    return s;
}

// Rename plain point names; composite arguments are renamed term by term.
inline Poly rename_slots(const Poly& p, const std::map<std::string, std::string>& ren) {
    return p.substitute([&](int id) {
        Atom a = AtomTable::instance().get(id);
        if (a.kind == Atom::LAM) return Poly::atom(id);
        PointArg pa = PointRegistry::instance().get(a.slot);
        for (auto& t : pa) {
            auto it = ren.find(t.slot);
            if (it != ren.end()) t.slot = it->second;
        }
        a.slot = PointRegistry::instance().add(pa);
        return Poly::atom(AtomTable::instance().intern(a));
    });
}

// Jets at every point used by a set of polynomials.
inline PointSet bind_points(const EvalContext& ctx, const std::vector<const Poly*>& ps,
                            const std::map<std::string, std::vector<Cplx>>& base) {
    std::map<std::string, int> order;
    for (auto* p : ps)
        for (int a : p->atoms()) {
            Atom at = AtomTable::instance().get(a);
            if (at.kind == Atom::LAM) continue;
            int k = at.kind == Atom::WP ? static_cast<int>(at.idx.size()) : definition(at.fid).order;
            order[at.slot] = std::max(order[at.slot], k);
        }
    PointSet set(ctx);
    for (auto& [slot, k] : order) set.add(slot, resolve_point(ctx.curve, slot, base), k);
    return set;
}

// Every named function and wp index must exist on the curve.
inline void check_set_for_curve(const RelationSet& set, const CurveSpec& c) {
    auto check = [&](const Poly& p) {
        for (int a : p.atoms()) {
            Atom at = AtomTable::instance().get(a);
            if (at.kind == Atom::FN) check_function_for_curve(parse_function_id(at.fid), c);
            if (at.kind == Atom::WP)
                for (int i : at.idx)
                    if (i < 1 || i > c.genus) throw ValidationError("wp index out of range in " + set.name);
        }
    };
    for (auto& r : set.relations) {
        check(r.lhs);
        check(r.rhs);
        for (auto& cd : r.candidates) check(cd.rhs);
        for (auto& [s, t] : r.typo_terms) check(t);
    }
}

// ------------------------------------------------------------ verification

struct RowReport {
    int index = 0;
    std::string label;
    int weight = 0;
    Real max_residual = 0;
    std::string verdict;  // pass, fail, ambiguous
    bool consumed = false;
    std::vector<std::pair<std::string, Real>> candidate_residuals;
};

struct VerificationReport {
    std::string set, curve;
    int trials = 0;
    Real tol = 0;
    int precision_digits = 0;
    std::vector<std::string> lambda_per_context;
    std::vector<std::vector<std::vector<Cplx>>> points;  // per trial, base points
    std::vector<RowReport> rows;
    nlohmann::json extra = nlohmann::json::object();

    int count(const std::string& v) const {
        return static_cast<int>(std::count_if(rows.begin(), rows.end(), [&](auto& r) { return r.verdict == v; }));
    }
    // 0 all pass, 1 any failure, 2 only ambiguous rows keep it from a clean pass
    int exit_code() const {
        if (count("fail")) return 1;
        if (count("ambiguous")) return 2;
        return 0;
    }
};

inline std::string real_str(const Real& x, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << std::scientific << static_cast<double>(x);
    return os.str();
}

inline nlohmann::ordered_json cplx_json(const Cplx& z) {
    return nlohmann::ordered_json::array({real_str(z.real(), 20), real_str(z.imag(), 20)});
}

inline nlohmann::ordered_json report_to_json(const VerificationReport& r) {
    nlohmann::ordered_json j;
    j["set"] = r.set;
    j["curve"] = r.curve;
    j["environment"] = {{"precision_digits", r.precision_digits},
                        {"trials", r.trials},
                        {"tol", real_str(r.tol, 3)},
                        {"lambda", r.lambda_per_context}};
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (auto& t : r.points) {
        nlohmann::ordered_json tj = nlohmann::ordered_json::array();
        for (auto& u : t) {
            nlohmann::ordered_json uj = nlohmann::ordered_json::array();
            for (auto& z : u) uj.push_back(cplx_json(z));
            tj.push_back(uj);
        }
        pts.push_back(tj);
    }
    j["environment"]["points"] = pts;
    j["summary"] = {{"pass", r.count("pass")}, {"fail", r.count("fail")}, {"ambiguous", r.count("ambiguous")}};
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (auto& row : r.rows) {
        nlohmann::ordered_json x;
        x["index"] = row.index;
        x["label"] = row.label;
        x["weight"] = row.weight;
        x["max_residual"] = real_str(row.max_residual);
        x["verdict"] = row.verdict;
        x["consumed_by_calibration"] = row.consumed;
        if (!row.candidate_residuals.empty()) {
            nlohmann::ordered_json c = nlohmann::ordered_json::array();
            for (auto& [name, res] : row.candidate_residuals)
                c.push_back({{"reading", name}, {"max_residual", real_str(res)}});
            x["candidates"] = c;
        }
        rows.push_back(x);
    }
    j["rows"] = rows;
    if (!r.extra.empty()) j["details"] = r.extra;
    return j;
}

inline std::string lambda_text(const CurveSpec& c) {
    std::string s;
    for (int j = 0; j < c.s; ++j) s += (j ? "," : "") + rational_to_string(c.lambda[j]);
    return s;
}

// |a - b| relative to the largest monomial magnitude on either side.
inline Real relative_residual(const Cplx& a, const Real& sa, const Cplx& b, const Real& sb) {
    Real sc = std::max(sa, sb);
    if (sc == 0) return abs(a - b) == 0 ? Real(0) : Real(1);
    return Real(abs(a - b)) / sc;
}

// Trial t uses contexts[t % size].  Relations at the single point "u".
inline VerificationReport verify_set(const std::vector<const EvalContext*>& contexts, const RelationSet& set,
                                     int trials, const Real& tol, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("trials must be at least 1");
    for (auto* c : contexts)
        if (c->curve.name != set.curve)
            throw ValidationError("set " + set.name + " is for " + set.curve + ", context is " + c->curve.name);
    VerificationReport rep;
    rep.set = set.name;
    rep.curve = set.curve;
    rep.trials = trials;
    rep.tol = tol;
    rep.precision_digits = contexts.front()->precision_digits;
    for (auto* c : contexts) rep.lambda_per_context.push_back(lambda_text(c->curve));
    const std::size_t nr = set.relations.size();
    std::vector<std::vector<Real>> res(nr), cand(nr);
    check_set_for_curve(set, contexts.front()->curve);
    std::vector<std::vector<CompiledPoly>> compiled(nr);
    std::vector<const Poly*> all;
    std::vector<Poly> rhs_of(nr);
    for (std::size_t i = 0; i < nr; ++i) {
        const auto& r = set.relations[i];
        all.push_back(&r.lhs);
        if (r.ambiguous) {
            for (auto& c : r.candidates) all.push_back(&c.rhs);
        } else {
            rhs_of[i] = set.rhs_with(r, std::vector<int>(set.typos.size(), 0));
            all.push_back(&rhs_of[i]);
        }
    }
    for (int t = 0; t < trials; ++t) {
        const EvalContext& ctx = *contexts[t % contexts.size()];
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(t));
        std::map<std::string, std::vector<Cplx>> base{{"u", admissible_point(ctx, rng)}};
        rep.points.push_back({base["u"]});
        PointSet ps = bind_points(ctx, all, base);
        for (std::size_t i = 0; i < nr; ++i) {
            const auto& r = set.relations[i];
            Real sl = 0, sr = 0;
            Cplx l = ps.eval(CompiledPoly(r.lhs), &sl);
            if (r.ambiguous) {
                cand[i].resize(r.candidates.size(), Real(0));
                Real worst = 0;
                for (std::size_t c = 0; c < r.candidates.size(); ++c) {
                    Cplx v = ps.eval(CompiledPoly(r.candidates[c].rhs), &sr);
                    Real e = relative_residual(l, sl, v, sr);
                    cand[i][c] = std::max(cand[i][c], e);
                    worst = std::max(worst, e);
                }
                res[i].push_back(worst);
            } else {
                Cplx v = ps.eval(CompiledPoly(rhs_of[i]), &sr);
                res[i].push_back(relative_residual(l, sl, v, sr));
            }
        }
    }
    const auto& consumed = contexts.front()->calib.consumed;
    for (std::size_t i = 0; i < nr; ++i) {
        const auto& r = set.relations[i];
        RowReport row;
        row.index = static_cast<int>(i);
        row.label = r.label;
        row.weight = r.weight;
        row.max_residual = *std::max_element(res[i].begin(), res[i].end());
        row.consumed = std::find(consumed.begin(), consumed.end(), side_label(r.lhs)) != consumed.end();
        if (r.ambiguous) {
            row.verdict = "ambiguous";
            for (std::size_t c = 0; c < r.candidates.size(); ++c)
                row.candidate_residuals.push_back({r.candidates[c].reading, cand[i][c]});
        } else {
            row.verdict = row.max_residual < tol ? "pass" : "fail";
        }
        rep.rows.push_back(row);
    }
    return rep;
}

// Copy of a set with one rational coefficient of one relation replaced (mutation control).
inline RelationSet mutate_coefficient(const RelationSet& set, std::size_t row, const Rational& from, const Rational& to) {
    RelationSet out = set;
    auto& r = out.relations.at(row);
    for (auto& [m, c] : r.rhs.terms)
        if (c == from) {
            c = to;
            r.label += " (mutated " + rational_to_string(from) + "->" + rational_to_string(to) + ")";
            return out;
        }
    throw ValidationError("no coefficient " + rational_to_string(from) + " in relation " + r.label);
}

// ------------------------------------------------------------ addition formulae

// Product of sigma values over point combinations divided by powers of sigma at the base points.
inline Cplx sigma_at(const EvalContext& ctx, const std::vector<Cplx>& u) { return sigma_value(ctx, u); }

inline std::vector<Cplx> vadd(const std::vector<Cplx>& a, const std::vector<Cplx>& b, int sb = 1) {
    std::vector<Cplx> r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] + Real(sb) * b[k];
    return r;
}

struct AdditionForm {
    Poly rhs;                        // typo sites at the literal reading removed (zero)
    std::map<int, Poly> typo_terms;  // per site, summed like rhs
    std::vector<std::string> slots;  // base points
};

// Full right-hand side of a formula as one polynomial in the base points.
inline AdditionForm addition_rhs(const RelationSet& set) {
    AdditionForm F;
    Poly f;
    std::map<int, Poly> tf;
    for (auto& r : set.relations) {
        f += r.rhs;
        for (auto& [s, t] : r.typo_terms) tf[s] += t;
    }
    auto symmetrise = [&](const Poly& p) {
        if (set.formula == "2t2v") return p;
        if (set.formula == "4t2v") return p + (-rename_slots(p, {{"u", "v"}, {"v", "u"}}));
        // 3t3v: sum over the six orderings
        std::vector<std::string> perm = {"u", "v", "w"};
        Poly acc;
        do {
            acc += rename_slots(p, {{"u", perm[0]}, {"v", perm[1]}, {"w", perm[2]}});
        } while (std::next_permutation(perm.begin(), perm.end()));
        return acc;
    };
    F.rhs = symmetrise(f);
    for (auto& [s, t] : tf) F.typo_terms[s] = symmetrise(t);
    F.slots = set.formula == "3t3v" ? std::vector<std::string>{"u", "v", "w"} : std::vector<std::string>{"u", "v"};
    return F;
}

inline Cplx addition_lhs(const EvalContext& ctx, const std::string& formula, const std::vector<std::vector<Cplx>>& p) {
    const auto& c = ctx.curve;
    if (formula == "2t2v") {
        Cplx su = sigma_at(ctx, p[0]), sv = sigma_at(ctx, p[1]);
        return sigma_at(ctx, vadd(p[0], p[1])) * sigma_at(ctx, vadd(p[0], p[1], -1)) / (su * su * sv * sv);
    }
    if (formula == "3t3v") {
        auto z = [&](int j, const std::vector<Cplx>& x) { return automorphism_apply(c, "zeta", j, x); };
        Cplx num = sigma_at(ctx, vadd(vadd(p[0], p[1]), p[2])) *
                   sigma_at(ctx, vadd(vadd(p[0], z(1, p[1])), z(2, p[2]))) *
                   sigma_at(ctx, vadd(vadd(p[0], z(2, p[1])), z(1, p[2])));
        Cplx d = sigma_at(ctx, p[0]) * sigma_at(ctx, p[1]) * sigma_at(ctx, p[2]);
        return num / (d * d * d);
    }
    if (formula == "4t2v") {
        Cplx num = Cplx(1);
        for (int j = 0; j < 4; ++j) num *= sigma_at(ctx, vadd(p[0], automorphism_apply(c, "quartic", j, p[1])));
        Cplx d = sigma_at(ctx, p[0]) * sigma_at(ctx, p[1]);
        return num / (d * d * d * d);
    }
    throw ValidationError("unknown formula '" + formula + "'");
}

inline void check_formula_curve(const std::string& formula, const CurveSpec& c) {
    if ((formula == "3t3v" || formula == "4t2v") && c.name != "c34")
        throw ValidationError(formula + " needs a (3,4) curve");
    if (formula == "4t2v" && !c.restricted_quartic()) throw ValidationError("4t2v needs lambda_1 = lambda_2 = lambda_3 = 0");
}

inline const char* formula_set(const std::string& formula, const std::string& curve) {
    if (formula == "2t2v") return curve == "c27" ? "add_2t2v_27" : "add_2t2v_34";
    if (formula == "3t3v") return "add_3t3v_34";
    if (formula == "4t2v") return "add_4t2v_34restricted";
    throw ValidationError("unknown formula '" + formula + "'");
}

// Least squares for typo coefficients: minimise sum |lhs - rhs0 - sum c_s T_s|^2.
inline std::vector<Cplx> fit_typos(const std::vector<Cplx>& target, const std::vector<std::vector<Cplx>>& cols) {
    const int m = static_cast<int>(target.size()), n = static_cast<int>(cols.size());
    using CLD = std::complex<long double>;
    Eigen::Matrix<CLD, Eigen::Dynamic, Eigen::Dynamic> A(m, n);
    Eigen::Matrix<CLD, Eigen::Dynamic, 1> b(m);
    for (int i = 0; i < m; ++i) {
        b(i) = CLD(static_cast<long double>(target[i].real()), static_cast<long double>(target[i].imag()));
        for (int s = 0; s < n; ++s)
            A(i, s) = CLD(static_cast<long double>(cols[s][i].real()), static_cast<long double>(cols[s][i].imag()));
    }
    Eigen::Matrix<CLD, Eigen::Dynamic, 1> x = A.colPivHouseholderQr().solve(b);
    std::vector<Cplx> out;
    for (int s = 0; s < n; ++s) out.push_back(Cplx(Real(x(s).real()), Real(x(s).imag())));
    return out;
}

// Rows: the formula at the printed reading, every typo reading (if any), the
// structural swap law and the coincident-point value for the two-term formula.
inline VerificationReport verify_addition(const std::vector<const EvalContext*>& contexts, const std::string& formula,
                                          int trials, const Real& tol, std::uint64_t seed, int fit_points = 0) {
    const EvalContext& ctx0 = *contexts.front();
    for (auto* c : contexts) check_formula_curve(formula, c->curve);
    RelationSet set = load_set(formula_set(formula, ctx0.curve.name));
    AdditionForm F = addition_rhs(set);
    VerificationReport rep;
    rep.set = set.name;
    rep.curve = set.curve;
    rep.trials = trials;
    rep.tol = tol;
    rep.precision_digits = ctx0.precision_digits;
    for (auto* c : contexts) rep.lambda_per_context.push_back(lambda_text(c->curve));

    // typo readings: every combination of candidates
    const int ns = static_cast<int>(set.typos.size());
    std::vector<std::vector<int>> choices{{}};
    for (int s = 0; s < ns; ++s) {
        std::vector<std::vector<int>> next;
        for (auto& ch : choices)
            for (std::size_t k = 0; k < set.typos[s].candidates.size(); ++k) {
                auto c2 = ch;
                c2.push_back(static_cast<int>(k));
                next.push_back(c2);
            }
        choices = next;
    }
    auto reading_name = [&](const std::vector<int>& ch) {
        std::string s;
        for (int i = 0; i < ns; ++i) s += (i ? ", " : "") + set.typos[i].candidates[ch[i]];
        return s;
    };

    std::vector<const Poly*> polys{&F.rhs};
    for (auto& [s, t] : F.typo_terms) polys.push_back(&t);
    std::vector<CompiledPoly> typo_compiled(ns);
    for (auto& [s, t] : F.typo_terms) typo_compiled[s] = CompiledPoly(t);
    CompiledPoly rhs_c(F.rhs);

    // worst[c]: printed overall sign; worst_neg[c]: right-hand side negated (diagnostic)
    std::vector<Real> worst(choices.size(), Real(0)), worst_neg(choices.size(), Real(0));
    std::vector<Cplx> fit_target, fit_target_neg;
    std::vector<std::vector<Cplx>> fit_cols(ns);
    Real coincident = 0;
    const int total = trials + std::max(0, fit_points);
    for (int t = 0; t < total; ++t) {
        const EvalContext& ctx = *contexts[t % contexts.size()];
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(t));
        std::map<std::string, std::vector<Cplx>> base;
        std::vector<std::vector<Cplx>> pts;
        for (auto& s : F.slots) {
            base[s] = admissible_point(ctx, rng);
            pts.push_back(base[s]);
        }
        PointSet ps = bind_points(ctx, polys, base);
        Real s0 = 0;
        Cplx r0 = ps.eval(rhs_c, &s0);
        std::vector<Cplx> tv(ns);
        std::vector<Real> tsc(ns, Real(0));
        for (int s = 0; s < ns; ++s) tv[s] = ps.eval(typo_compiled[s], &tsc[s]);
        Cplx lhs = addition_lhs(ctx, formula, pts);
        if (t >= trials) {  // extra points only feed the typo fit
            fit_target.push_back(lhs - r0);
            fit_target_neg.push_back(-lhs - r0);
            for (int s = 0; s < ns; ++s) fit_cols[s].push_back(tv[s]);
            continue;
        }
        rep.points.push_back(pts);
        {
            Cplx q = lhs / r0;
            rep.extra["lhs_over_rhs"].push_back({real_str(q.real(), 12), real_str(q.imag(), 12)});
        }
        for (std::size_t c = 0; c < choices.size(); ++c) {
            Cplx v = r0;
            Real sc = s0;
            for (int s = 0; s < ns; ++s) {
                Rational q = parse_rational(set.typos[s].candidates[choices[c][s]], "typo");
                v += to_cplx(q) * tv[s];
                sc = std::max(sc, Real(abs(to_cplx(q))) * tsc[s]);
            }
            worst[c] = std::max(worst[c], relative_residual(lhs, Real(abs(lhs)), v, sc));
            worst_neg[c] = std::max(worst_neg[c], relative_residual(-lhs, Real(abs(lhs)), v, sc));
        }
        if (formula == "2t2v" && t == 0) {
            std::map<std::string, std::vector<Cplx>> same{{"u", base["u"]}, {"v", base["u"]}};
            PointSet p2 = bind_points(ctx, polys, same);
            Real sc = 0;
            Cplx v = p2.eval(rhs_c, &sc);
            coincident = sc == 0 ? Real(0) : Real(abs(v)) / sc;
        }
    }

    RowReport main;
    main.index = 0;
    main.label = set.name + (ns ? " (printed coefficients)" : "");
    main.weight = set.relations.front().weight;
    main.max_residual = worst[0];
    main.verdict = worst[0] < tol ? "pass" : "fail";
    if (ns) {
        // The literal reading is row 0; the other readings are reported as one ambiguous row.
        std::size_t best = 0;
        for (std::size_t c = 1; c < choices.size(); ++c)
            if (worst[c] < worst[best]) best = c;
        RowReport amb;
        amb.index = 1;
        amb.label = set.name + " (typo readings)";
        amb.weight = main.weight;
        amb.max_residual = worst[best];
        amb.verdict = "ambiguous";
        std::vector<std::size_t> order(choices.size());
        for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return worst[a] < worst[b]; });
        for (std::size_t c : order) amb.candidate_residuals.push_back({reading_name(choices[c]), worst[c]});
        rep.rows.push_back(main);
        rep.rows.push_back(amb);
        rep.extra["best_reading"] = reading_name(choices[best]);
        rep.extra["best_reading_passes"] = worst[best] < tol;
        if (!fit_target.empty()) {
            auto x = fit_typos(fit_target, fit_cols);
            nlohmann::json fj = nlohmann::json::array();
            for (int s = 0; s < ns; ++s)
                fj.push_back({{"site", s},
                              {"printed", set.typos[s].printed},
                              {"fitted_re", real_str(x[s].real(), 12)},
                              {"fitted_im", real_str(x[s].imag(), 3)}});
            rep.extra["typo_fit"] = fj;
        }
        std::size_t bn = 0;
        for (std::size_t c = 1; c < choices.size(); ++c)
            if (worst_neg[c] < worst_neg[bn]) bn = c;
        nlohmann::json neg = {{"printed_reading_residual", real_str(worst_neg[0])},
                              {"best_reading", reading_name(choices[bn])},
                              {"best_reading_residual", real_str(worst_neg[bn])}};
        if (!fit_target_neg.empty()) {
            auto x = fit_typos(fit_target_neg, fit_cols);
            nlohmann::json fj = nlohmann::json::array();
            for (int s = 0; s < ns; ++s)
                fj.push_back({{"site", s}, {"fitted_re", real_str(x[s].real(), 12)}, {"fitted_im", real_str(x[s].imag(), 3)}});
            neg["typo_fit"] = fj;
        }
        rep.extra["negated_rhs"] = neg;
    } else {
        rep.rows.push_back(main);
    }
    if (formula == "2t2v") {
        Poly swapped = rename_slots(F.rhs, {{"u", "v"}, {"v", "u"}});
        bool ok = (swapped + (-F.rhs.scaled(set.swap_sign))).is_zero();
        RowReport sym;
        sym.index = static_cast<int>(rep.rows.size());
        sym.label = std::string("RHS(v,u) = ") + (set.swap_sign < 0 ? "-" : "+") + "RHS(u,v) (exact)";
        sym.weight = main.weight;
        sym.max_residual = ok ? 0 : 1;
        sym.verdict = ok ? "pass" : "fail";
        rep.rows.push_back(sym);
        RowReport co;
        co.index = static_cast<int>(rep.rows.size());
        co.label = "RHS(u,u) = 0";
        co.weight = main.weight;
        co.max_residual = coincident;
        co.verdict = coincident < tol ? "pass" : "fail";
        rep.rows.push_back(co);
    }
    return rep;
}

// sigma([eps] u) / sigma(u) against the expected root of unity, worst relative error.
inline Real automorphism_check(const EvalContext& ctx, const std::string& kind, int points, std::uint64_t seed) {
    Cplx expect = kind == "zeta" ? root_of_unity(3, 1) : Cplx(0, -1);
    Rng rng(seed);
    Real worst = 0;
    for (int p = 0; p < points; ++p) {
        auto u = admissible_point(ctx, rng);
        Cplx s = sigma_value(ctx, u);
        Cplx t = sigma_value(ctx, automorphism_apply(ctx.curve, kind, 1, u));
        worst = std::max(worst, Real(abs(t - expect * s) / abs(s)));
    }
    return worst;
}

// ------------------------------------------------------------ Lemma-type determinant

using PolyMat = std::vector<std::vector<Poly>>;

inline Poly det(const PolyMat& m) {
    const int n = static_cast<int>(m.size());
    if (n == 1) return m[0][0];
    Poly acc;
    for (int c = 0; c < n; ++c) {
        if (m[0][c].is_zero()) continue;
        PolyMat sub;
        for (int r = 1; r < n; ++r) {
            std::vector<Poly> row;
            for (int k = 0; k < n; ++k)
                if (k != c) row.push_back(m[r][k]);
            sub.push_back(row);
        }
        Poly t = m[0][c] * det(sub);
        acc += (c % 2) ? -t : t;
    }
    return acc;
}

// 5x5 antisymmetric matrix of three-index functions and the 5x5 matrix H, (2,7) curve.
inline PolyMat lemma_a_matrix() {
    const char* t[5][5] = {
        {"0", "-P333", "P233", "-P223+P133", "P222-2*P123"},
        {"P333", "0", "-P133", "P123", "-P122+P113"},
        {"-P233", "P133", "0", "-P113", "P112"},
        {"P223-P133", "-P123", "P113", "0", "-P111"},
        {"-P222+2*P123", "P122-P113", "-P112", "P111", "0"},
    };
    PolyMat m(5, std::vector<Poly>(5));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) m[i][j] = parse_poly(t[i][j]);
    return m;
}

inline PolyMat lemma_h_matrix() {
    const char* t[5][5] = {
        {"4*l0", "2*l1", "-2*P11", "-2*P12", "-2*P13"},
        {"2*l1", "4*l2+4*P11", "2*l3+2*P12", "-2*P22+4*P13", "-2*P23"},
        {"-2*P11", "2*l3+2*P12", "4*l4+4*P22-4*P13", "2*l5+2*P23", "-2*P33"},
        {"-2*P12", "-2*P22+4*P13", "2*l5+2*P23", "4*l6+4*P33", "2"},
        {"-2*P13", "-2*P23", "-2*P33", "2", "0"},
    };
    PolyMat m(5, std::vector<Poly>(5));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) m[i][j] = parse_poly(t[i][j]);
    return m;
}

inline void check_unit_vector(const std::vector<int>& v, const char* name) {
    if (v.size() != 5) throw ValidationError(std::string(name) + " must have 5 entries");
    int ones = 0, nz = 0;
    for (int x : v) {
        nz += x != 0;
        ones += x == 1;
    }
    if (nz != 1 || ones != 1) throw ValidationError(std::string(name) + " must have exactly one entry, equal to 1");
}

// (l^T A k)(l2^T A k2) = -1/4 det [[H, l2, k2], [l^T, 0, 0], [k^T, 0, 0]]
inline Relation determinantal_expand(const std::vector<int>& l, const std::vector<int>& k, const std::vector<int>& l2,
                                     const std::vector<int>& k2) {
    check_unit_vector(l, "l");
    check_unit_vector(k, "k");
    check_unit_vector(l2, "l2");
    check_unit_vector(k2, "k2");
    PolyMat A = lemma_a_matrix(), H = lemma_h_matrix();
    auto bil = [&](const std::vector<int>& x, const std::vector<int>& y) {
        Poly s;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                if (x[i] && y[j]) s += A[i][j].scaled(x[i] * y[j]);
        return s;
    };
    PolyMat M(7, std::vector<Poly>(7));
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) M[i][j] = H[i][j];
        M[i][5] = Poly::constant(l2[i]);
        M[i][6] = Poly::constant(k2[i]);
        M[5][i] = Poly::constant(l[i]);
        M[6][i] = Poly::constant(k[i]);
    }
    Relation r;
    r.lhs = bil(l, k) * bil(l2, k2);
    r.rhs = det(M).scaled(Rational(-1, 4));
    r.label = side_label(r.lhs);
    return r;
}

// ------------------------------------------------------------ basis rank

struct RankReport {
    int rank = 0, expected = 0, samples = 0;
    std::vector<Real> singular_values;  // catalog plus probe, after column scaling, descending
    Real gap = 0;                       // s[expected-1] / s[expected] of catalog plus probe
    std::vector<std::string> catalog;
    std::string probe;                  // a function known to lie in the span
    int rank_with_probe = 0;
};

using SampleMatrix = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

// Rows are sample points, columns the functions ("0" is the zero function).
inline SampleMatrix sample_matrix(const EvalContext& ctx, const std::vector<std::string>& ids, int samples,
                                  std::uint64_t seed) {
    using CLD = std::complex<long double>;
    const int n = static_cast<int>(ids.size());
    SampleMatrix M(samples, n);
    std::vector<std::string> nz;
    for (auto& s : ids)
        if (s != "0") nz.push_back(s);
    Rng rng(seed);
    auto pts = admissible_points(ctx.theta(), ctx.periods, rng, samples);
    for (int r = 0; r < samples; ++r) {
        auto vals = evaluate_catalog(ctx, nz, pts[r]);
        for (int c = 0, q = 0; c < n; ++c) {
            Cplx v = ids[c] == "0" ? Cplx(0) : vals[q++];
            M(r, c) = CLD(static_cast<long double>(v.real()), static_cast<long double>(v.imag()));
        }
    }
    return M;
}

// Singular values of the column-normalised matrix, descending.
inline std::vector<Real> scaled_singular_values(SampleMatrix M) {
    for (int c = 0; c < M.cols(); ++c) {
        long double nm = M.col(c).norm();
        if (nm > 0) M.col(c) /= nm;
    }
    Eigen::JacobiSVD<SampleMatrix> svd(M);
    auto sv = svd.singularValues();
    std::vector<Real> out;
    for (int i = 0; i < sv.size(); ++i) out.push_back(Real(sv(i)));
    return out;
}

inline int numerical_rank(const std::vector<Real>& sv) {
    int r = 0;
    for (std::size_t i = 0; i < sv.size(); ++i)
        if (sv[i] > Real(1e-8) * sv[0]) r = static_cast<int>(i) + 1;
    return r;
}

inline RankReport rank_of_catalog(const EvalContext& ctx, const std::vector<std::string>& ids, int samples,
                                  std::uint64_t seed, int expected, const std::string& probe = "") {
    auto all = ids;
    if (!probe.empty()) all.push_back(probe);
    SampleMatrix M = sample_matrix(ctx, all, samples, seed);
    const int n = static_cast<int>(ids.size());
    RankReport R;
    R.samples = samples;
    R.expected = expected;
    R.catalog = ids;
    R.probe = probe;
    auto base = scaled_singular_values(M.leftCols(n));
    R.rank = numerical_rank(base);
    R.singular_values = probe.empty() ? base : scaled_singular_values(M);
    R.rank_with_probe = numerical_rank(R.singular_values);
    int k = expected;
    if (k > 0 && k < static_cast<int>(R.singular_values.size()))
        R.gap = R.singular_values[k - 1] / std::max(R.singular_values[k], Real(1e-300));
    else
        R.gap = 0;  // no trailing value to measure against
    return R;
}

inline int ipow(int b, int e) {
    int r = 1;
    while (e--) r *= b;
    return r;
}

// A function of the given pole order outside the catalog but inside its span.
inline std::string in_span_probe(const CurveSpec& c, int pole_order) {
    std::string q = c.genus == 4 ? "Q[3,3,4,4]" : "Q[2,2,3,3]";
    if (pole_order == 2) return q;
    if (pole_order == 3) return "D1(" + q + ")";
    return "D2(D1(" + q + "))";
}

inline RankReport basis_rank(const EvalContext& ctx, int pole_order, int sample_count, std::uint64_t seed) {
    auto ids = basis_catalog(ctx.curve, pole_order);
    int expected = ipow(pole_order, ctx.genus());
    if (sample_count < expected + 8) throw ValidationError("need at least expected_dim + 8 samples");
    return rank_of_catalog(ctx, ids, sample_count, seed, expected, in_span_probe(ctx.curve, pole_order));
}

struct DependentPairReport {
    int rank_base = 0, rank_appended = 0, rank_zero_appended = 0;
    std::string appended;
};

// Rank of the 3-pole catalog before and after appending the other minor (and the zero function).
inline DependentPairReport dependent_pair_check(const EvalContext& ctx, int samples, std::uint64_t seed) {
    auto ids = basis_catalog(ctx.curve, 3);
    DependentPairReport r;
    r.appended = "MINOR[2,2]";
    if (std::find(ids.begin(), ids.end(), r.appended) != ids.end()) r.appended = "MINOR[1,3]";
    const int n = static_cast<int>(ids.size());
    auto all = ids;
    all.push_back(r.appended);
    all.push_back("0");
    SampleMatrix M = sample_matrix(ctx, all, samples, seed);
    r.rank_base = numerical_rank(scaled_singular_values(M.leftCols(n)));
    r.rank_appended = numerical_rank(scaled_singular_values(M.leftCols(n + 1)));
    SampleMatrix Z(M.rows(), n + 1);
    Z << M.leftCols(n), M.col(n + 1);
    r.rank_zero_appended = numerical_rank(scaled_singular_values(Z));
    return r;
}

// ------------------------------------------------------------ audits

struct AuditRow {
    int index = 0;
    std::string label;
    int declared = 0;
    bool ok = true;
    std::string detail;
};

// Named functions replaced by their wp-polynomials (derivatives included).
inline Poly expand_named(const Poly& p) {
    return p.substitute([&](int id) {
        Atom a = AtomTable::instance().get(id);
        if (a.kind != Atom::FN) return Poly::atom(id);
        return at_slot(definition(a.fid).poly, a.slot);
    });
}

inline int atom_weight_any(const CurveSpec& c, int id) {
    Atom a = AtomTable::instance().get(id);
    if (a.kind == Atom::FN) {
        auto w = function_weight(c, parse_function_id(a.fid));
        if (!w.homogeneous) throw ValidationError(a.fid + " is not weight-homogeneous");
        return w.weight;
    }
    return atom_weight(c, id);
}

// Every monomial of lhs - rhs (each reading) has the declared weight.
inline std::vector<AuditRow> audit_weights(const RelationSet& set) {
    CurveSpec c = zero_lambda_curve(set.curve);
    std::vector<AuditRow> out;
    auto wt = [&](int a) { return atom_weight_any(c, a); };
    for (std::size_t i = 0; i < set.relations.size(); ++i) {
        const auto& r = set.relations[i];
        AuditRow row;
        row.index = static_cast<int>(i);
        row.label = r.label;
        row.declared = r.weight;
        std::vector<Poly> sides;
        if (r.ambiguous)
            for (auto& cd : r.candidates) sides.push_back(r.lhs + (-cd.rhs));
        else {
            Poly all = r.lhs + (-r.rhs);
            for (auto& [s, t] : r.typo_terms) all += t;
            sides.push_back(all);
        }
        // ambiguous rows: fine if some reading is homogeneous; failing readings are named
        int good = 0;
        for (std::size_t k = 0; k < sides.size(); ++k) {
            std::string bad;
            for (auto& [m, cf] : sides[k].terms) {
                int w = 0;
                for (int a : m) w += wt(a);
                if (w != r.weight) {
                    Poly one;
                    one.terms[m] = cf;
                    bad = "term " + one.to_string() + " has weight " + std::to_string(w);
                    break;
                }
            }
            if (bad.empty())
                ++good;
            else
                row.detail += (row.detail.empty() ? "" : "; ") +
                              (r.ambiguous ? "reading '" + r.candidates[k].reading + "': " : std::string()) + bad;
        }
        row.ok = good > 0;
        out.push_back(row);
    }
    return out;
}

// Every monomial odd under u -> -u.
inline std::vector<AuditRow> audit_parity(const RelationSet& set, int want = -1) {
    std::vector<AuditRow> out;
    for (std::size_t i = 0; i < set.relations.size(); ++i) {
        const auto& r = set.relations[i];
        AuditRow row;
        row.index = static_cast<int>(i);
        row.label = r.label;
        row.declared = r.weight;
        std::vector<Poly> sides;
        if (r.ambiguous)
            for (auto& cd : r.candidates) sides.push_back(r.lhs + (-cd.rhs));
        else
            sides.push_back(r.lhs + (-r.rhs));
        int good = 0;
        for (std::size_t k = 0; k < sides.size(); ++k) {
            int par = poly_parity(expand_named(sides[k]));
            if (par == want) {
                ++good;
                continue;
            }
            row.detail += (row.detail.empty() ? "" : "; ") +
                          (r.ambiguous ? "reading '" + r.candidates[k].reading + "': " : std::string()) +
                          (par == 0 ? "mixed parity" : "wrong parity");
        }
        row.ok = good > 0;
        out.push_back(row);
    }
    return out;
}

// Quadratic three-index sets: (2,7) rows hold only wp, lambda and DELTA27; (3,4) rows may also hold
// Q[1,3,3,3], at most once per monomial and then with at most one two-index wp.
inline std::vector<AuditRow> audit_lint(const RelationSet& set) {
    std::vector<AuditRow> out;
    for (std::size_t i = 0; i < set.relations.size(); ++i) {
        const auto& r = set.relations[i];
        AuditRow row;
        row.index = static_cast<int>(i);
        row.label = r.label;
        row.declared = r.weight;
        Poly p = r.lhs + (-r.rhs);
        for (auto& [m, cf] : p.terms) {
            int q = 0, wp2 = 0, other = 0;
            for (int a : m) {
                Atom at = AtomTable::instance().get(a);
                if (at.kind == Atom::FN) {
                    if (set.curve == "c27" && at.fid == "DELTA27") continue;
                    if (set.curve == "c34" && at.fid == "Q[1,3,3,3]") {
                        ++q;
                        continue;
                    }
                    row.ok = false;
                    row.detail = "function " + at.fid + " not allowed";
                } else if (at.kind == Atom::WP) {
                    if (at.idx.size() == 2)
                        ++wp2;
                    else
                        ++other;
                }
            }
            if (q > 1 || (q == 1 && (wp2 > 1 || other > 0))) {
                row.ok = false;
                row.detail = "Q[1,3,3,3] appears beyond linearly or with more than one 2-index wp";
            }
        }
        out.push_back(row);
    }
    return out;
}

// d_a(first relation) - d_b(second relation), both taken as lhs - rhs.
inline Poly cross_derivative(const Relation& r1, int a, const Relation& r2, int b) {
    return diff_u(r1.lhs + (-r1.rhs), a) + (-diff_u(r2.lhs + (-r2.rhs), b));
}

}  // namespace kleinian

// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance 4 7        selected criteria
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "kleinian/relation.hpp"
#include "kleinian/run.hpp"

using namespace kleinian;

namespace {

constexpr std::uint64_t kSeed = 20240611;
constexpr int kDigits = 30;

struct Outcome {
    bool pass = true;
    std::ostringstream info;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            info << "  [FAIL] " << what << "\n";
        } else {
            info << "  [ok]   " << what << "\n";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sci(const Real& x) { return real_str(x, 3); }

std::vector<EvalContext> contexts(const std::string& name, int count, bool restricted = false) {
    return build_contexts(load_curve_arg(name), count, kSeed, kDigits, restricted,
                          std::max(1u, std::thread::hardware_concurrency()));
}

// ------------------------------------------------------------------ 1

// Weierstrass wp of the lattice Z w1 + Z w2 from a truncated lattice sum.  Terms
// outside the box |m|,|n| <= N are summed through their Laurent expansion, with
// G_4, G_6 from the Eisenstein q-series and higher G_2k from the wp recursion.
struct LatticeWp {
    Cplx w1, w2;
    int N = 8, kmax = 60;
    std::vector<Cplx> tail;  // tail[j] = G_2j - (box part of G_2j)
    Cplx g2, g3;

    LatticeWp(Cplx a, Cplx b) : w1(a), w2(b) {
        if ((w2 / w1).imag() < 0) w2 = -w2;
        Cplx tau = w2 / w1;
        Real pi = pi_r();
        Cplx q = exp(Cplx(0, 2) * pi * tau);
        Cplx s3 = 0, s5 = 0, qn = 1;
        for (int n = 1; n <= 200; ++n) {
            qn *= q;
            Real d3 = 0, d5 = 0;
            for (int d = 1; d <= n; ++d)
                if (n % d == 0) d3 += pow(Real(d), 3), d5 += pow(Real(d), 5);
            s3 += d3 * qn;
            s5 += d5 * qn;
        }
        Cplx G4 = pow(pi, 4) / Real(45) * (Real(1) + Real(240) * s3) / pow(w1, 4);
        Cplx G6 = Real(2) * pow(pi, 6) / Real(945) * (Real(1) - Real(504) * s5) / pow(w1, 6);
        g2 = Real(60) * G4;
        g3 = Real(140) * G6;
        std::vector<Cplx> c(kmax + 1, Cplx(0));
        c[2] = g2 / Real(20);
        c[3] = g3 / Real(28);
        for (int k = 4; k <= kmax; ++k) {
            Cplx s = 0;
            for (int m = 2; m <= k - 2; ++m) s += c[m] * c[k - m];
            c[k] = Real(3) / Real((2 * k + 1) * (k - 3)) * s;
        }
        tail.assign(kmax + 1, Cplx(0));
        for (int j = 2; j <= kmax; ++j) {
            Cplx box = 0;
            for (int m = -N; m <= N; ++m)
                for (int n = -N; n <= N; ++n)
                    if (m || n) box += pow(Real(m) * w1 + Real(n) * w2, -2 * j);
            tail[j] = c[j] / Real(2 * j - 1) - box;
        }
    }

    Cplx operator()(Cplx z) const {
        // reduce into the cell around 0
        Cplx t = z / w1;
        Real b = t.imag() / (w2 / w1).imag();
        Real a = (t - b * (w2 / w1)).real();
        z -= round(a) * w1 + round(b) * w2;
        Cplx s = Real(1) / (z * z);
        for (int m = -N; m <= N; ++m)
            for (int n = -N; n <= N; ++n) {
                if (!m && !n) continue;
                Cplx w = Real(m) * w1 + Real(n) * w2;
                s += Real(1) / ((z - w) * (z - w)) - Real(1) / (w * w);
            }
        Cplx zp = 1;
        for (int j = 2; j <= kmax; ++j) {
            zp *= z * z;  // z^(2j-2)
            s += Real(2 * j - 1) * zp * tail[j];
        }
        return s;
    }
};

Outcome criterion1() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto ctx = contexts("c23", 1).front();
    const auto& c = ctx.curve;
    LatticeWp W(ctx.periods.omega1(0, 0), ctx.periods.omega2(0, 0));
    // y^2 = x^3 + l1 x + l0 with x = wp, y = wp'/2
    Cplx g2c = Real(-4) * c.lambda_c[1], g3c = Real(-4) * c.lambda_c[0];
    Real inv = std::max(Real(abs(W.g2 - g2c)), Real(abs(W.g3 - g3c))) / std::max(Real(1), Real(abs(g2c) + abs(g3c)));
    o.info << "  curve lambda = " << lambda_text(c) << ", lattice invariants vs curve: " << sci(inv) << "\n";
    Rng rng(kSeed);
    Real worst = 0;
    for (int p = 0; p < 5; ++p) {
        auto u = admissible_point(ctx, rng);
        Cplx a = wp(ctx, {1, 1}, u).value, b = W(u[0]);
        worst = std::max(worst, Real(abs(a - b) / abs(b)));
    }
    double dt = seconds_since(t0);
    o.require(inv < Real(1e-9), "lattice g2, g3 match the curve coefficients");
    o.require(worst < Real(1e-9), "wp_11 vs lattice-sum wp at 5 points, worst " + sci(worst) + " < 1e-9");
    o.require(dt < 30, "runtime " + std::to_string(dt) + " s < 30 s");
    return o;
}

// ------------------------------------------------------------------ 2

Outcome criterion2() {
    Outcome o;
    const std::vector<std::pair<std::string, int>> curves = {{"c27", 1}, {"c34", -1}, {"c29", 1}};
    for (auto& [name, sign] : curves) {
        auto t0 = std::chrono::steady_clock::now();
        auto ctx = contexts(name, 1).front();
        const int g = ctx.genus();
        o.require(ctx.curve.parity_sign == sign, name + " parity sign " + std::to_string(sign));
        Rng rng(kSeed + 2);
        Real par = 0, quas = 0;
        for (int p = 0; p < 5; ++p) {
            auto u = admissible_point(ctx, rng);
            std::vector<Cplx> mu(g);
            for (int k = 0; k < g; ++k) mu[k] = -u[k];
            Cplx s = sigma_value(ctx, u);
            par = std::max(par, Real(abs(sigma_value(ctx, mu) - Real(sign) * s) / abs(s)));
            for (int k = 0; k < 2 * g; ++k) {
                std::vector<long long> n1(g, 0), n2(g, 0);
                (k < g ? n1 : n2)[k % g] = 1;
                std::vector<Cplx> ul = u;
                for (int a = 0; a < g; ++a) ul[a] += k < g ? ctx.periods.omega1(a, k) : ctx.periods.omega2(a, k - g);
                Cplx lhs = sigma_value(ctx, ul), rhs = quasi_periodicity_factor(ctx, u, n1, n2) * s;
                quas = std::max(quas, Real(abs(lhs - rhs) / std::max(abs(lhs), abs(rhs))));
            }
        }
        double dt = seconds_since(t0);
        o.require(par < Real(1e-6), name + " sigma(-u) = " + (sign > 0 ? "+" : "-") + "sigma(u), worst " + sci(par));
        o.require(quas < Real(1e-6), name + " quasi-periodicity over " + std::to_string(2 * g) +
                                         " generators, worst " + sci(quas));
        o.require(dt < 120, name + " runtime " + std::to_string(dt) + " s < 120 s");
    }
    return o;
}

// ------------------------------------------------------------------ 3

Outcome criterion3() {
    Outcome o;
    for (std::string name : {"c27", "c34"}) {
        auto ctx = contexts(name, 1).front();
        const int g = ctx.genus();
        Rng rng(kSeed + 3);
        Real worst = 0;
        for (int p = 0; p < 10; ++p) {
            auto P1 = random_curve_point(ctx.curve, ctx.periods, rng);
            auto P2 = random_curve_point(ctx.curve, ctx.periods, rng);
            auto u = abel_map(ctx.curve, ctx.periods, {P1, P2}).u;
            Real zero = abs(sigma_value(ctx, u)), scale = 0;
            for (int d = 0; d < 4; ++d) {
                std::vector<Cplx> v = u;
                for (int a = 0; a < g; ++a) v[a] += rng.cplx_disc(0.05);
                scale = std::max(scale, Real(abs(sigma_value(ctx, v))));
            }
            worst = std::max(worst, zero / scale);
        }
        o.require(worst < Real(1e-6), name + " |sigma(A(P1)+A(P2))| / neighbourhood scale, 10 pairs, worst " + sci(worst));
    }
    return o;
}

// ------------------------------------------------------------------ 4

Outcome criterion4() {
    Outcome o;
    for (std::string name : {"c27", "c34"}) {
        auto t0 = std::chrono::steady_clock::now();
        auto set = load_set("app_b_" + name.substr(1));
        auto ctxs = contexts(name, 3);
        auto r = verify_set(pointers(ctxs), set, 3, Real(1e-6), kSeed);
        int consumed = 0, held = 0;
        Real worst = 0;
        for (auto& row : r.rows) {
            consumed += row.consumed;
            held += !row.consumed && row.verdict == "pass";
            worst = std::max(worst, row.max_residual);
        }
        double dt = seconds_since(t0);
        o.require(r.count("pass") == 15 && r.rows.size() == 15,
                  name + " " + std::to_string(r.count("pass")) + "/15 pass, worst " + sci(worst));
        o.require(consumed == 6, name + " " + std::to_string(consumed) + " calibration-consumed rows flagged");
        o.require(held >= 9, name + " " + std::to_string(held) + " held-out rows pass");
        o.require(dt < 300, name + " runtime " + std::to_string(dt) + " s < 300 s");
    }
    return o;
}

// ------------------------------------------------------------------ 5

// ambiguous rows count when one reading passes; the report names it
bool set_passes(const VerificationReport& r, Outcome& o) {
    bool ok = true;
    for (auto& row : r.rows) {
        if (row.verdict == "pass") continue;
        if (row.verdict == "ambiguous") {
            bool any = false;
            for (auto& [reading, res] : row.candidate_residuals) {
                o.info << "         " << r.set << " row " << row.index << " reading '" << reading << "': " << sci(res)
                       << "\n";
                any = any || res < r.tol;
            }
            ok = ok && any;
            continue;
        }
        o.info << "         " << r.set << " row " << row.index << " " << row.label << " residual "
               << sci(row.max_residual) << "\n";
        ok = false;
    }
    return ok;
}

Outcome criterion5() {
    Outcome o;
    auto c27 = contexts("c27", 3);
    auto c34 = contexts("c34", 3);
    auto rc = verify_set(pointers(c27), load_set("app_c_quad27"), 3, Real(1e-6), kSeed);
    o.require(set_passes(rc, o) && rc.rows.size() == 55, "(2,7) quadratic: " + std::to_string(rc.count("pass")) + "/55 pass");
    auto rd = verify_set(pointers(c34), load_set("app_d_quad34"), 3, Real(1e-6), kSeed);
    o.require(set_passes(rd, o), "(3,4) quadratic: " + std::to_string(rd.count("pass")) + "/" +
                                     std::to_string(rd.rows.size()) + " pass, " + std::to_string(rd.count("ambiguous")) +
                                     " ambiguous row resolved by a passing reading");

    auto R = determinantal_expand({0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0});
    bool exact = false;
    for (auto& r : load_set("app_c_quad27").relations)
        if (r.label == "P333^2") exact = (r.lhs + R.lhs.scaled(-1)).is_zero() && (expand_named(r.rhs) + R.rhs.scaled(-1)).is_zero();
    o.require(exact, "determinantal expansion equals the P333^2 row exactly");

    Rng rng(kSeed + 5);
    Real worst = 0;
    for (int t = 0; t < 10; ++t) {
        auto e = [&]() {
            std::vector<int> v(5, 0);
            v[rng.integer(0, 4)] = 1;
            return v;
        };
        auto D = determinantal_expand(e(), e(), e(), e());
        const auto& ctx = c27[t % 3];
        std::map<std::string, std::vector<Cplx>> base{{"u", admissible_point(ctx, rng)}};
        PointSet ps = bind_points(ctx, {&D.lhs, &D.rhs}, base);
        Real sl = 0, sr = 0;
        Cplx l = ps.eval(CompiledPoly(D.lhs), &sl), r = ps.eval(CompiledPoly(D.rhs), &sr);
        worst = std::max(worst, relative_residual(l, sl, r, sr));
    }
    o.require(worst < Real(1e-6), "determinantal expansion at 10 random vector choices, worst " + sci(worst));
    return o;
}

// ------------------------------------------------------------------ 6

Outcome criterion6() {
    Outcome o;
    auto c27 = contexts("c27", 3);
    auto c34 = contexts("c34", 3);
    auto r27 = verify_set(pointers(c27), load_set("bilinear27"), 3, Real(1e-6), kSeed);
    o.require(r27.count("pass") == 24 && r27.rows.size() == 24, "(2,7) bilinear: " + std::to_string(r27.count("pass")) + "/24 pass");
    auto r34 = verify_set(pointers(c34), load_set("bilinear34"), 3, Real(1e-6), kSeed);
    int plain = static_cast<int>(r34.rows.size()) - r34.count("ambiguous");
    o.require(r34.rows.size() == 21 && r34.count("pass") == plain,
              "(3,4) bilinear: " + std::to_string(r34.count("pass")) + "/" + std::to_string(plain) + " unflagged rows pass");
    for (auto& row : r34.rows) {
        if (row.verdict != "ambiguous") continue;
        bool any = false;
        std::string text;
        for (auto& [reading, res] : row.candidate_residuals) {
            any = any || res < r34.tol;
            text += " '" + reading + "' " + sci(res) + ";";
        }
        o.require(row.candidate_residuals.size() >= 2,
                  "weight " + std::to_string(row.weight) + " row reported per reading:" + text +
                      (any ? " a reading passes" : " explicit double failure"));
    }
    o.require(r34.count("ambiguous") == 1, "exactly one flagged row, never reported as a plain pass");
    return o;
}

// ------------------------------------------------------------------ 7

Outcome criterion7() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::pair<std::string, std::vector<int>>> plan = {
        {"c27", {2, 3, 4}}, {"c34", {2, 3, 4}}, {"c29", {2, 3}}};
    for (auto& [name, orders] : plan) {
        auto ctx = contexts(name, 1).front();
        for (int k : orders) {
            int dim = ipow(k, ctx.genus());
            auto r = basis_rank(ctx, k, dim + 8, kSeed + k);
            o.require(r.rank == dim && r.rank_with_probe == dim && r.gap >= Real(1e4),
                      name + " pole order " + std::to_string(k) + ": rank " + std::to_string(r.rank) + "/" +
                          std::to_string(dim) + " at " + std::to_string(r.samples) + " samples, with " + r.probe +
                          " rank " + std::to_string(r.rank_with_probe) + ", gap " + sci(r.gap));
        }
        if (name == "c27") {
            auto d = dependent_pair_check(ctx, 27 + 8, kSeed + 77);
            o.require(d.rank_base == 27 && d.rank_appended == 27 && d.rank_zero_appended == 27,
                      "(2,7) appending " + d.appended + " keeps rank " + std::to_string(d.rank_appended));
        }
    }
    double dt = seconds_since(t0);
    o.require(dt < 600, "runtime " + std::to_string(dt) + " s < 600 s");
    return o;
}

// ------------------------------------------------------------------ 8

Outcome criterion8() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto report = [&](const VerificationReport& r, const std::string& what) {
        bool ok = r.count("pass") == static_cast<int>(r.rows.size());
        std::string text;
        for (auto& row : r.rows) {
            text += " [" + row.label + " " + row.verdict + " " + sci(row.max_residual) + "]";
            for (auto& [reading, res] : row.candidate_residuals)
                if (row.verdict == "ambiguous" && res < r.tol) text += " passing reading " + reading;
        }
        o.require(ok, what + ":" + text);
    };
    auto c27 = contexts("c27", 3);
    auto c34 = contexts("c34", 3);
    auto q34 = contexts("c34", 3, true);
    report(verify_addition(pointers(c27), "2t2v", 3, Real(1e-6), kSeed, 0), "(2,7) two-term formula");
    report(verify_addition(pointers(c34), "2t2v", 3, Real(1e-6), kSeed, 0), "(3,4) two-term formula");
    auto r3 = verify_addition(pointers(c34), "3t3v", 3, Real(1e-5), kSeed, 12);
    report(r3, "(3,4) three-term formula, random lambda");
    if (r3.extra.contains("lhs_over_rhs")) o.info << "         lhs/rhs: " << r3.extra["lhs_over_rhs"].dump() << "\n";
    if (r3.extra.contains("negated_rhs")) o.info << "         with rhs negated: " << r3.extra["negated_rhs"].dump() << "\n";
    report(verify_addition(pointers(q34), "4t2v", 3, Real(1e-5), kSeed, 0), "y^3 = x^4 + l0 four-term formula");
    Real z = automorphism_check(c34.front(), "zeta", 5, kSeed);
    o.require(z < Real(1e-6), "sigma([zeta]u) = zeta sigma(u), worst " + sci(z));
    Real i4 = automorphism_check(q34.front(), "quartic", 5, kSeed);
    o.require(i4 < Real(1e-6), "sigma([i]u) = -i sigma(u), worst " + sci(i4));
    double dt = seconds_since(t0);
    o.require(dt < 600, "runtime " + std::to_string(dt) + " s < 600 s");
    return o;
}

// ------------------------------------------------------------------ 9

Outcome criterion9() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    for (std::string name : {"c27", "c34"}) {
        CurveSpec c = zero_lambda_curve(name);
        GradedPoly sw = schur_weierstrass(c);
        GradedPoly d = sw;
        d -= GradedPoly::parse(c.vars, *reference_sw_text(name));
        o.require(d.is_zero(), name + " SW = " + sw.to_string());
    }
    for (auto& n : relation_set_names()) {
        auto s = load_set(n);
        int bad = 0, flagged = 0;
        for (auto& r : audit_weights(s)) {
            if (r.ok) continue;
            if (s.relations[r.index].ambiguous) {
                ++flagged;
                o.info << "         " << n << " flagged row " << r.index << ": " << r.detail << "\n";
            } else {
                ++bad;
                o.info << "         " << n << " row " << r.index << ": " << r.detail << "\n";
            }
        }
        o.require(bad == 0, "weight audit " + n + " (" + std::to_string(s.relations.size()) + " rows" +
                                (flagged ? ", " + std::to_string(flagged) + " flagged ambiguous row inhomogeneous in every reading" : "") +
                                ")");
    }
    CurveSpec c27 = zero_lambda_curve("c27"), c34 = zero_lambda_curve("c34");
    auto order = [&](const CurveSpec& c, const Poly& p, int expect, const std::string& what) {
        auto r = rational_limit_pole_order(c, p, 8);
        o.require(r.order == expect, what + " pole order " + std::to_string(r.order) + " (expected " +
                                         std::to_string(expect) + "), constant leading term: " +
                                         (r.constant_leading ? "yes" : "no"));
        return r;
    };
    order(c27, parse_poly("2*P22^3 + P222^2 - P22*P2222"), 3, "T");
    order(c27, parse_poly("P22222222 - 140*P2222^2"), 4, "G");
    order(c34, defining_poly(parse_function_id("F34")), 4, "F");
    order(c27, parse_poly("12*P22^5 - 8*P22^3*P2222 + 6*P22^2*P222^2 + P22*P2222^2 - P2222*P222^2"), 5,
                      "5-pole candidate (reading 6 P22^2 P222^2)");
    double dt = seconds_since(t0);
    o.require(dt < 60, "runtime " + std::to_string(dt) + " s < 60 s");
    return o;
}

// ------------------------------------------------------------------ 10

Outcome criterion10() {
    Outcome o;
    auto set = load_set("app_b_34");
    auto ctxs = contexts("c34", 3);
    const auto& consumed = ctxs.front().calib.consumed;
    std::size_t row = 0;
    Rational from;
    for (; row < set.relations.size(); ++row) {
        const auto& r = set.relations[row];
        if (std::find(consumed.begin(), consumed.end(), side_label(r.lhs)) != consumed.end()) continue;
        bool found = false;
        for (auto& [m, c] : r.rhs.terms)
            if (!m.empty() && c != 0) {
                from = c;
                found = true;
                break;
            }
        if (found) break;
    }
    auto bad = mutate_coefficient(set, row, from, from + Rational(1, 7));
    auto r = verify_set(pointers(ctxs), bad, 3, Real(1e-6), kSeed);
    bool others = true;
    for (auto& x : r.rows)
        if (x.index != static_cast<int>(row)) others = others && x.verdict == "pass";
    o.require(r.rows[row].verdict == "fail", "mutated row " + r.rows[row].label + " fails, residual " +
                                                 sci(r.rows[row].max_residual));
    o.require(others, "the other " + std::to_string(r.rows.size() - 1) + " rows pass");
    o.require(r.exit_code() == 1, "report exit code 1");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
        {"genus-1 lattice-sum oracle", criterion1},
        {"sigma parity and quasi-periodicity", criterion2},
        {"sigma vanishes on the Abel image of two points", criterion3},
        {"four-index relations, (2,7) and (3,4)", criterion4},
        {"quadratic relations and determinantal expansion", criterion5},
        {"bilinear relations", criterion6},
        {"basis ranks", criterion7},
        {"addition formulae and automorphisms", criterion8},
        {"exact layer: SW, weight audits, pole orders", criterion9},
        {"mutation control", criterion10},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (int i = 1; i <= 10; ++i) which.push_back(i);
    int failed = 0;
    for (int k : which) {
        if (k < 1 || k > 10) {
            std::cerr << "no criterion " << k << "\n";
            return 2;
        }
        auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = all[k - 1].second();
        } catch (const std::exception& e) {
            out.pass = false;
            out.info << "  [FAIL] exception: " << e.what() << "\n";
        }
        std::cout << out.info.str();
        std::printf("criterion %2d: %s  %s (%.1f s)\n", k, out.pass ? "PASS" : "FAIL", all[k - 1].first.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        failed += !out.pass;
    }
    return failed ? 1 : 0;
}

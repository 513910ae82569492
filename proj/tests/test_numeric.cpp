#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>

#include "kleinian/relation.hpp"
#include "kleinian/run.hpp"

using namespace kleinian;

namespace {

const EvalContext& ctx27() {
    static EvalContext c = [] {
        Rng rng(101);
        return make_context(random_curve("c27", rng), 7);
    }();
    return c;
}

const EvalContext& ctx34() {
    static EvalContext c = [] {
        Rng rng(202);
        return make_context(random_curve("c34", rng), 8);
    }();
    return c;
}

Real rel(const Cplx& a, const Cplx& b) { return abs(a - b) / std::max(Real(abs(a)), Real(abs(b))); }

Cplx eval_at(const EvalContext& ctx, const Poly& p, const std::vector<Cplx>& u) {
    PointSet ps = bind_points(ctx, {&p}, {{"u", u}});
    return ps.eval(CompiledPoly(p));
}

}  // namespace

TEST_CASE("period matrix sanity") {
    const auto& P = ctx27().periods;
    CHECK(P.tau_symmetry_residual < Real(1e-25));
    CHECK(P.im_tau_min_eig > 0);
}

TEST_CASE("wp indices are symmetric") {
    Rng rng(1);
    auto u = admissible_point(ctx27(), rng);
    CHECK(rel(wp(ctx27(), {1, 2, 3}, u).value, wp(ctx27(), {3, 1, 2}, u).value) < Real(1e-25));
    CHECK(rel(wp(ctx27(), {2, 3}, u).value, wp(ctx27(), {3, 2}, u).value) < Real(1e-25));
}

TEST_CASE("wp_ij is periodic") {
    const auto& ctx = ctx34();
    Rng rng(2);
    auto u = admissible_point(ctx, rng);
    for (int k = 0; k < 3; ++k) {
        auto v = u;
        for (int a = 0; a < 3; ++a) v[a] += ctx.periods.omega2(a, k) - ctx.periods.omega1(a, (k + 1) % 3);
        CHECK(rel(wp(ctx, {1, 3}, u).value, wp(ctx, {1, 3}, v).value) < Real(1e-20));
    }
}

TEST_CASE("four-index wp through Q on (3,4)") {
    Rng rng(3);
    auto u = admissible_point(ctx34(), rng);
    Poly lhs = parse_poly("P1333");
    Poly rhs = Poly::atom(fn_atom("Q[1,3,3,3]")) + parse_poly("6*P13*P33");
    CHECK(rel(eval_at(ctx34(), lhs, u), eval_at(ctx34(), rhs, u)) < Real(1e-20));
    CHECK(rel(named_function(ctx34(), parse_function_id("Q[1,3,3,3]"), u).value,
              hirota_q(ctx34(), {1, 3, 3, 3}, u).value) < Real(1e-20));
}

TEST_CASE("generic T class reduces to T on (2,7)") {
    Rng rng(4);
    auto u = admissible_point(ctx27(), rng);
    Cplx a = named_function(ctx27(), parse_function_id("TGEN[2,2,2,2,2,2]"), u).value;
    Cplx b = named_function(ctx27(), parse_function_id("T27"), u).value;
    CHECK(rel(a, b) < Real(1e-8));
}

TEST_CASE("sigma near the origin follows the Schur-Weierstrass polynomial") {
    const auto& ctx = ctx34();
    auto sw = schur_weierstrass(zero_lambda_curve("c34"));
    std::vector<Cplx> u0 = {Cplx(Real(0.3), Real(0.1)), Cplx(Real(-0.2), Real(0.4)), Cplx(Real(0.5), Real(-0.3))};
    std::vector<Cplx> vals(sw.vars()->size(), Cplx(0));
    for (int k = 0; k < 3; ++k) vals[k] = u0[k];
    Cplx target = sw.eval(vals);
    Real prev = 1;
    for (Real t : {Real(1e-2), Real(1e-3)}) {
        std::vector<Cplx> v(3);
        for (int k = 0; k < 3; ++k) v[k] = pow(t, ctx.curve.u_weights[k]) * u0[k];
        Cplx s = sigma_value(ctx, v) / pow(t, ctx.curve.sigma_weight);
        Real e = rel(s, target);
        CHECK(e < prev);
        prev = e;
    }
    CHECK(prev < Real(1e-2));
}

TEST_CASE("automorphism of the (3,4) curve") {
    CHECK(automorphism_check(ctx34(), "zeta", 2, 9) < Real(1e-20));
    CHECK_THROWS_AS(automorphism_apply(ctx27().curve, "zeta", 1, {Cplx(0), Cplx(0), Cplx(0)}), ValidationError);
}

TEST_CASE("pole proximity warning on the sigma zero set") {
    const auto& ctx = ctx27();
    Rng rng(5);
    auto P1 = random_curve_point(ctx.curve, ctx.periods, rng);
    auto P2 = random_curve_point(ctx.curve, ctx.periods, rng);
    auto u = abel_map(ctx.curve, ctx.periods, {P1, P2}).u;
    CHECK(wp(ctx, {3, 3}, u).pole_warning);
    auto v = admissible_point(ctx, rng);
    CHECK_FALSE(wp(ctx, {3, 3}, v).pole_warning);
}

TEST_CASE("curve file round trip reproduces sigma") {
    const auto& ctx = ctx34();
    std::string path = "roundtrip_c34.json";
    {
        std::ofstream f(path);
        f << context_to_json(ctx).dump();
    }
    auto in = load_curve_arg(path);
    REQUIRE(in.curve);
    REQUIRE(in.periods);
    REQUIRE(in.calib);
    auto again = build_contexts(in, 1, 8, 30, false, 1).front();
    Rng rng(6);
    auto u = admissible_point(ctx, rng);
    CHECK(rel(sigma_value(ctx, u), sigma_value(again, u)) < Real(1e-25));
    std::remove(path.c_str());
}

TEST_CASE("verification report on a relation set") {
    auto set = load_set("app_b_34");
    auto r = verify_set({&ctx34()}, set, 2, Real(1e-6), 3);
    CHECK(r.count("pass") == 15);
    CHECK(r.exit_code() == 0);
    auto j = report_to_json(r);
    CHECK(j["rows"].size() == 15);
    CHECK_THROWS_AS(verify_set({&ctx27()}, set, 1, Real(1e-6), 3), ValidationError);
}

TEST_CASE("ambiguous rows keep a set out of a clean pass") {
    auto r = verify_set({&ctx34()}, load_set("app_d_quad34"), 1, Real(1e-6), 4);
    CHECK(r.count("fail") == 0);
    CHECK(r.count("ambiguous") == 1);
    CHECK(r.exit_code() == 2);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kleinian/relation.hpp"

using namespace kleinian;

namespace {

GradedPoly random_poly(const VarTablePtr& v, Rng& rng, int terms) {
    GradedPoly p(v);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> e(v->size(), 0);
        for (int k = 0; k < 3; ++k) e[rng.integer(0, static_cast<int>(v->size()) - 1)] += 1;
        p.add_term(e, Rational(rng.integer(-9, 9), rng.integer(1, 5)));
    }
    return p;
}

nlohmann::json tiny_set() {
    return nlohmann::json::parse(R"({
      "set": "tiny", "curve": "c34", "declared_count": 1,
      "relations": [{"weight": -4, "lhs": {"k": "fn", "id": "P[3,3,3,3]"},
                     "rhs": {"k": "sum", "xs": [
                        {"k": "prod", "xs": [{"k": "rat", "v": "-3"}, {"k": "fn", "id": "P[2,2]"}]},
                        {"k": "prod", "xs": [{"k": "rat", "v": "6"}, {"k": "pow", "b": {"k": "fn", "id": "P[3,3]"}, "e": 2}]}]}}]
    })");
}

}  // namespace

TEST_CASE("graded polynomial ring axioms") {
    auto v = zero_lambda_curve("c27").vars;
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        auto a = random_poly(v, rng, 4), b = random_poly(v, rng, 3), c = random_poly(v, rng, 3);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(a + b == b + a);
        CHECK((a - a).is_zero());
    }
}

TEST_CASE("derivatives commute") {
    auto v = zero_lambda_curve("c34").vars;
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
        auto p = random_poly(v, rng, 6);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(p.diff(i).diff(j) == p.diff(j).diff(i));
    }
}

TEST_CASE("weights add under multiplication") {
    auto v = zero_lambda_curve("c27").vars;
    auto a = GradedPoly::parse(v, "u1 u3 + -1 * u2^2");
    auto b = GradedPoly::parse(v, "u3^2 l6");
    REQUIRE(a.weight_of().homogeneous);
    REQUIRE(b.weight_of().homogeneous);
    CHECK((a * b).weight_of().weight == a.weight_of().weight + b.weight_of().weight);
    CHECK_FALSE(GradedPoly::parse(v, "u1 + u2").weight_of().homogeneous);
}

TEST_CASE("canonical text round trip") {
    auto c = zero_lambda_curve("c27");
    auto sw = schur_weierstrass(c);
    CHECK(GradedPoly::parse(c.vars, sw.to_string()) == sw);
    CHECK_THROWS(GradedPoly::parse(c.vars, "u9^2"));
    CHECK_THROWS(GradedPoly::parse(c.vars, "u1^"));
}

TEST_CASE("curve invariants") {
    struct Row {
        std::string name;
        int genus, wt, parity;
        std::vector<int> gaps;
    };
    for (auto& r : std::vector<Row>{{"c23", 1, 1, -1, {1}},
                                    {"c27", 3, 6, 1, {5, 3, 1}},
                                    {"c34", 3, 5, -1, {5, 2, 1}},
                                    {"c29", 4, 10, 1, {7, 5, 3, 1}}}) {
        auto c = zero_lambda_curve(r.name);
        CHECK(c.genus == r.genus);
        CHECK(c.sigma_weight == r.wt);
        CHECK(c.parity_sign == r.parity);
        CHECK(c.u_weights == r.gaps);
    }
    CHECK_THROWS_AS(make_curve(3, 5, std::vector<Rational>(5)), CapabilityError);
    CHECK_THROWS_AS(make_curve(2, 4, std::vector<Rational>(4)), ValidationError);
}

TEST_CASE("Schur-Weierstrass values") {
    auto c34 = zero_lambda_curve("c34");
    auto sw34 = schur_weierstrass(c34);
    CHECK(sw34.eval_exact({{"u1", 0}, {"u2", 0}, {"u3", 0}}) == 0);
    CHECK(sw34.eval_exact({{"u1", 1}, {"u2", 0}, {"u3", 0}}) == 1);
    auto c27 = zero_lambda_curve("c27");
    CHECK(schur_weierstrass(c27).eval_exact({{"u1", 0}, {"u2", 1}, {"u3", 0}}) == -1);
    CHECK(schur_weierstrass(c34).weight_of().weight == 5);
    CHECK(schur_weierstrass(c27).weight_of().weight == 6);
}

TEST_CASE("rational-limit pole orders") {
    auto c27 = zero_lambda_curve("c27");
    CHECK(rational_limit_pole_order(c27, Poly::constant(1), 4).order == 0);
    CHECK(rational_limit_pole_order(c27, parse_poly("P33"), 4).order == 2);
    auto t = rational_limit_pole_order(c27, parse_poly("2*P22^3 + P222^2 - P22*P2222"), 6);
    CHECK(t.order == 3);
    CHECK(t.constant_leading);
    CHECK(rational_limit_pole_order(c27, defining_poly(parse_function_id("DELTA27")), 6).order == 2);
}

TEST_CASE("function id grammar") {
    CHECK(parse_function_id("P[3,1,2]").to_string() == "P[1,2,3]");
    CHECK(parse_function_id("D2(MINOR[1,3])").to_string() == "D2(MINOR[1,3])");
    CHECK_THROWS_AS(parse_function_id("P[1]"), ParseError);
    CHECK_THROWS_AS(parse_function_id("Q[1,2,3]"), ParseError);
    CHECK_THROWS_AS(parse_function_id("XYZ[1]"), ParseError);
    CHECK_THROWS_AS(parse_function_id("MINOR[4,1]"), ParseError);
}

TEST_CASE("relation file parse errors name the offending path") {
    auto doc = tiny_set();
    CHECK(parse_relation_json(doc).relations.size() == 1);

    auto extra = doc;
    extra["relations"][0]["coefficient"] = 3;
    try {
        parse_relation_json(extra);
        FAIL("accepted an unknown key");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("relations[0]: unknown key 'coefficient'") != std::string::npos);
    }

    auto badkind = doc;
    badkind["relations"][0]["rhs"]["xs"][0]["k"] = "product";
    try {
        parse_relation_json(badkind);
        FAIL("accepted an unknown node kind");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("rhs.xs[0]") != std::string::npos);
    }

    auto badrat = doc;
    badrat["relations"][0]["rhs"]["xs"][0]["xs"][0]["v"] = "3/0";
    CHECK_THROWS_AS(parse_relation_json(badrat), ParseError);

    auto count = doc;
    count["declared_count"] = 2;
    CHECK_THROWS_AS(parse_relation_json(count), IntegrityError);
}

TEST_CASE("every relation file loads with its declared count") {
    for (auto& n : relation_set_names()) {
        CAPTURE(n);
        auto s = load_set(n);
        CHECK(static_cast<int>(s.relations.size()) == s.declared_count);
    }
    CHECK(load_set("app_b_27").relations.size() == 15);
    CHECK(load_set("app_b_34").relations.size() == 15);
    CHECK(load_set("app_c_quad27").relations.size() == 55);
    CHECK(load_set("bilinear27").relations.size() == 24);
    CHECK(load_set("bilinear34").relations.size() == 21);
    CHECK_THROWS_AS(load_set("no_such_set"), ParseError);
}

TEST_CASE("weight audit on unflagged rows") {
    for (auto& n : relation_set_names()) {
        auto s = load_set(n);
        for (auto& r : audit_weights(s)) {
            if (s.relations[r.index].ambiguous) continue;
            CAPTURE(n);
            CAPTURE(r.label);
            CAPTURE(r.detail);
            CHECK(r.ok);
        }
    }
}

TEST_CASE("bilinear relations are odd under u <-> v exchange") {
    for (std::string n : {"bilinear27", "bilinear34"}) {
        auto s = load_set(n);
        for (auto& r : audit_parity(s, -1)) {
            if (s.relations[r.index].ambiguous) continue;
            CAPTURE(r.label);
            CHECK(r.ok);
        }
    }
}

TEST_CASE("quadratic relation lint") {
    for (std::string n : {"app_c_quad27", "app_d_quad34"})
        for (auto& r : audit_lint(load_set(n))) {
            CAPTURE(r.label);
            CHECK(r.ok);
        }
}

TEST_CASE("flagged ambiguities carry two readings") {
    auto b = load_set("bilinear34");
    int flagged = 0;
    for (auto& r : b.relations)
        if (r.ambiguous) {
            ++flagged;
            CHECK(r.weight == -19);
            CHECK(r.candidates.size() == 2);
        }
    CHECK(flagged == 1);
}

TEST_CASE("three-term formula declares its malformed coefficient sites") {
    auto s = load_set("add_3t3v_34");
    REQUIRE(s.typos.size() == 5);
    for (auto& t : s.typos) CHECK(t.candidates.size() >= 2);
    for (auto& r : s.relations) CHECK(r.weight == -30);
}

TEST_CASE("determinantal expansion") {
    auto R = determinantal_expand({0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0});
    CHECK(R.label == "P333^2");
    bool found = false;
    for (auto& r : load_set("app_c_quad27").relations)
        if (r.label == "P333^2") {
            found = true;
            CHECK((expand_named(r.rhs) + R.rhs.scaled(-1)).is_zero());
        }
    CHECK(found);
    CHECK_THROWS_AS(determinantal_expand({1, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}),
                    ValidationError);
    CHECK_THROWS_AS(determinantal_expand({0, 2, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}),
                    ValidationError);
}

TEST_CASE("mutation helper") {
    auto s = load_set("app_b_34");
    auto m = mutate_coefficient(s, 0, Rational(6), Rational(7));
    CHECK_FALSE((m.relations[0].rhs + s.relations[0].rhs.scaled(-1)).is_zero());
    CHECK_THROWS_AS(mutate_coefficient(s, 0, Rational(101), Rational(7)), ValidationError);
}

TEST_CASE("basis catalogue sizes") {
    CHECK(basis_catalog(zero_lambda_curve("c27"), 2).size() == 8);
    CHECK(basis_catalog(zero_lambda_curve("c27"), 3).size() == 27);
    CHECK(basis_catalog(zero_lambda_curve("c27"), 4).size() == 64);
    CHECK(basis_catalog(zero_lambda_curve("c34"), 2).size() == 8);
    CHECK(basis_catalog(zero_lambda_curve("c34"), 3).size() == 27);
    CHECK(basis_catalog(zero_lambda_curve("c34"), 4).size() == 64);
    CHECK(basis_catalog(zero_lambda_curve("c29"), 2).size() == 16);
    CHECK(basis_catalog(zero_lambda_curve("c29"), 3).size() == 81);
    CHECK(basis_catalog(zero_lambda_curve("c27"), 2).back() == "DELTA27");
}

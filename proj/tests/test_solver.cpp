#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace weq;
using namespace weq::test;
using F = PadFormula;

namespace {
LinearTerm V(PadVar v) { return LinearTerm::var(v); }
LinearTerm C(int64_t c) { return LinearTerm::of(c); }

void check_witness(const Problem& p, const Assignment& sigma, const LengthVector& lengths) {
    CHECK(check_solution(p.eq, sigma));
    for (auto& c : p.constraints)
        CHECK(nfa_accepts(nfa_slice(*c.aut, c.from, c.to), sigma.at(c.var)));
    CHECK(length_vector(sigma) == lengths);
}
}  // namespace

TEST_CASE("classify reports the structural picture", "[solver]") {
    SECTION("oriented conjugacy") {
        ClassReport r = classify(conj_problem());
        CHECK(r.quadratic);
        CHECK(r.regular);
        CHECK(r.oriented);
        REQUIRE(r.flat.has_value());
        CHECK(*r.flat);
        CHECK(r.cycles_one_var_reducing == true);
    }
    SECTION("commutation is regular but unoriented and not flat") {
        ClassReport r = classify(commute_problem());
        CHECK(r.regular);
        CHECK_FALSE(r.oriented);
        REQUIRE(r.flat.has_value());
        CHECK_FALSE(*r.flat);
    }
    SECTION("one-weak constraints keep the constrained system flat") {
        ClassReport r = classify(prop4_problem());
        CHECK(r.one_weak_constraints);
        CHECK(r.flat == true);
        CHECK(r.cycles_one_var_reducing == true);
    }
    SECTION("non-quadratic problems skip the counter-system fields") {
        Problem p;
        p.names = ab_names(2);
        p.eq = parse_equation("x x x", "y", p.names);
        ClassReport r = classify(p);
        CHECK_FALSE(r.quadratic);
        CHECK_FALSE(r.flat.has_value());
        CHECK_FALSE(r.cycles_one_var_reducing.has_value());
    }
}

TEST_CASE("solve on the worked constrained conjugacy", "[solver]") {
    Problem base = prop4_problem();
    SECTION("two does not divide five") {
        Problem p = base;
        p.length_constraint = F::conj({F::eq(V(0), C(2)), F::eq(V(2), C(5))});
        Verdict v = solve(p);
        CHECK(v.kind == Verdict::Kind::Unsat);
    }
    SECTION("two divides six, witnessed") {
        Problem p = base;
        p.length_constraint = F::conj({F::eq(V(0), C(2)), F::eq(V(2), C(6))});
        Verdict v = solve(p);
        REQUIRE(v.kind == Verdict::Kind::Sat);
        CHECK(v.lengths == lv_of({{0, 2}, {1, 2}, {2, 6}}));
        REQUIRE(v.witness.has_value());
        check_witness(p, *v.witness, v.lengths);
    }
}

TEST_CASE("solve on the unconstrained conjugacy", "[solver]") {
    Problem p = conj_problem();
    p.length_constraint = F::eq(V(0), V(2));
    Verdict v = solve(p);
    REQUIRE(v.kind == Verdict::Kind::Sat);
    CHECK(v.lengths.at(0) == v.lengths.at(2));
}

TEST_CASE("solve falls back to exact search on non-flat problems", "[solver]") {
    Problem p = commute_problem();
    SECTION("bounded constraints stay exact") {
        p.length_constraint = F::conj({F::leq(V(0), C(4)), F::leq(V(1), C(4)),
                                       F::eq(V(0) + V(1), C(5))});
        Verdict v = solve(p);
        REQUIRE(v.kind == Verdict::Kind::Sat);  // e.g. x=aa, y=aaa
        REQUIRE(v.witness.has_value());
        check_witness(p, *v.witness, v.lengths);
    }
    SECTION("bounded and unsatisfiable") {
        // commuting words of coprime positive lengths exist (powers of one
        // letter), so force an impossible combination instead
        p.length_constraint = F::conj({F::leq(V(0), C(3)), F::leq(V(1), C(3)),
                                       F::eq(V(0) + V(1), C(9))});
        Verdict v = solve(p);
        CHECK(v.kind == Verdict::Kind::Unsat);
    }
    SECTION("unbounded constraints give an honest unknown") {
        p.length_constraint = F::conj({F::eq(V(0), 2 * V(1) + C(1)), F::eq(V(0), 2 * V(1))});
        Verdict v = solve(p);
        CHECK(v.kind == Verdict::Kind::Unknown);
        CHECK(v.reason == Verdict::Reason::NotFlat);
    }
}

TEST_CASE("solve rejects non-quadratic problems", "[solver]") {
    Problem p;
    p.names = ab_names(2);
    p.eq = parse_equation("x x x", "y", p.names);
    CHECK_THROWS_AS(solve(p), NotQuadratic);
}

TEST_CASE("length_membership is the exact per-vector decision", "[solver]") {
    SECTION("gcd equation") {
        Problem p = lemma1_problem();
        SolverContext ctx(p);
        CHECK(ctx.length_membership(lv_of({{0, 3}, {1, 8}})));
        CHECK_FALSE(ctx.length_membership(lv_of({{0, 1}, {1, 2}})));
    }
    SECTION("offset-two conjugacy, including the free variable") {
        Problem p = example1_problem();
        SolverContext ctx(p);
        CHECK(ctx.length_membership(lv_of({{0, 4}, {1, 2}, {2, 7}})));
        CHECK_FALSE(ctx.length_membership(lv_of({{0, 5}, {1, 2}, {2, 7}})));
    }
    SECTION("missing variables are reported") {
        SolverContext ctx(lemma1_problem());
        CHECK_THROWS_AS(ctx.length_membership(lv_of({{0, 1}})), MissingVariable);
    }
}

TEST_CASE("synthesize_witness rebuilds concrete solutions", "[solver]") {
    SECTION("all-empty solution") {
        Problem p = conj_problem();
        SolverContext ctx(p);
        LengthVector zeros = lv_of({{0, 0}, {1, 0}, {2, 0}});
        Assignment sigma = ctx.synthesize_witness(zeros);
        check_witness(p, sigma, zeros);
        for (auto& [v, w] : sigma.map) CHECK(w.empty());
    }
    SECTION("anchored conjugates at 2,2,4") {
        Problem p = prop4_problem();
        SolverContext ctx(p);
        LengthVector lv = lv_of({{0, 2}, {1, 2}, {2, 4}});
        Assignment sigma = ctx.synthesize_witness(lv);
        check_witness(p, sigma, lv);
    }
    SECTION("gcd equation at 3,8") {
        Problem p = lemma1_problem();
        SolverContext ctx(p);
        LengthVector lv = lv_of({{0, 3}, {1, 8}});
        Assignment sigma = ctx.synthesize_witness(lv);
        check_witness(p, sigma, lv);
    }
    SECTION("non-members are rejected") {
        Problem p = lemma1_problem();
        SolverContext ctx(p);
        CHECK_THROWS_AS(ctx.synthesize_witness(lv_of({{0, 1}, {1, 2}})), NotMember);
        CHECK(synthesize_witness(p, lv_of({{0, 1}, {1, 2}})) == std::nullopt);
    }
}

TEST_CASE("solve agrees with the oracle on a small regular-oriented corpus", "[solver]") {
    std::mt19937 rng(61);
    int sat_seen = 0, unsat_seen = 0;
    for (int trial = 0; trial < 15; trial++) {
        Equation e = random_regular_oriented(rng, 3, 5);
        Problem p;
        p.names = ab_names(3);
        p.eq = e;
        // random box constraint
        std::vector<F> parts;
        LengthVector probe;
        for (VarId v : variables_of(e)) {
            uint64_t b = rng() % 5;
            parts.push_back(F::leq(V(v), C(int64_t(b))));
            probe.entries[v] = b;
        }
        for (VarId v = 0; v < p.num_vars(); v++)
            if (!variables_of(e).count(v)) parts.push_back(F::eq(V(v), C(0)));
        p.length_constraint = F::conj(parts);

        Verdict v = solve(p);
        REQUIRE(v.kind != Verdict::Kind::Unknown);

        auto solutions = enumerate_solutions(p, 5);
        bool oracle_sat = false;
        for (auto& lv : solutions) {
            bool inside = true;
            Valuation env;
            for (auto& [var, len] : lv.entries) env[var] = len;
            if (!evaluate(p.length_constraint, env)) inside = false;
            if (inside) oracle_sat = true;
        }
        INFO("equation " << equation_to_string(e, p.names));
        REQUIRE((v.kind == Verdict::Kind::Sat) == oracle_sat);
        if (v.kind == Verdict::Kind::Sat) {
            sat_seen++;
            REQUIRE(v.witness.has_value());
            check_witness(p, *v.witness, v.lengths);
        } else {
            unsat_seen++;
        }
    }
    CHECK(sat_seen > 0);
}

TEST_CASE("constraints on variables outside the equation restrict their lengths", "[solver]") {
    // y never occurs in the equation but must match #(a+b)*
    Problem p;
    p.names = SymbolNames{{"a", "b", "#"}, {"x", "y"}};
    p.eq = parse_equation("x", "a", p.names);
    auto aut = hash_ab_nfa();
    p.automata = {aut};
    p.automata_names = {"hash_ab"};
    p.constraints = {{1, 0, aut, 0, 1}};
    SolverContext ctx(p);
    CHECK(ctx.length_membership(lv_of({{0, 1}, {1, 3}})));
    CHECK_FALSE(ctx.length_membership(lv_of({{0, 1}, {1, 0}})));  // eps not anchored
    CHECK_FALSE(ctx.length_membership(lv_of({{0, 2}, {1, 3}})));  // |x| must be 1

    Assignment sigma = ctx.synthesize_witness(lv_of({{0, 1}, {1, 2}}));
    CHECK(nfa_accepts(*aut, sigma.at(1)));

    p.length_constraint = F::eq(V(1), C(0));
    Verdict v = solve(p);
    CHECK(v.kind == Verdict::Kind::Unsat);
}

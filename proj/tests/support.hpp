#pragma once

#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "weq/weq.hpp"

namespace weq::test {

// ---------------------------------------------------------------------------
// Builders

inline Word parse_word(const std::string& text, const SymbolNames& names) {
    Word w;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        if (tok == "eps") continue;
        bool found = false;
        for (size_t i = 0; i < names.vars.size() && !found; i++)
            if (names.vars[i] == tok) {
                w.push_back(Symbol::variable(VarId(i)));
                found = true;
            }
        for (size_t i = 0; i < names.letters.size() && !found; i++)
            if (names.letters[i] == tok) {
                w.push_back(Symbol::constant(Letter(i)));
                found = true;
            }
        if (!found) throw Error("unknown test symbol: " + tok);
    }
    return w;
}

inline Equation parse_equation(const std::string& lhs, const std::string& rhs,
                               const SymbolNames& names) {
    return {parse_word(lhs, names), parse_word(rhs, names)};
}

inline ConstWord parse_letters(const std::string& text, const SymbolNames& names) {
    ConstWord w;
    for (char c : text) {
        std::string s(1, c);
        bool found = false;
        for (size_t i = 0; i < names.letters.size() && !found; i++)
            if (names.letters[i] == s) {
                w.push_back(Letter(i));
                found = true;
            }
        if (!found) throw Error("unknown test letter: " + s);
    }
    return w;
}

inline Assignment make_assignment(const std::vector<std::pair<VarId, std::string>>& items,
                                  const SymbolNames& names) {
    Assignment sigma;
    for (auto& [v, w] : items) sigma.map[v] = parse_letters(w, names);
    return sigma;
}

// ---------------------------------------------------------------------------
// Canonical problems

inline SymbolNames ab_names(int nvars) {
    SymbolNames n{{"a", "b"}, {}};
    const char* vs[] = {"x", "y", "z", "w"};
    for (int i = 0; i < nvars; i++) n.vars.push_back(vs[i]);
    return n;
}

inline std::shared_ptr<Nfa> hash_ab_nfa() {
    auto aut = std::make_shared<Nfa>();
    aut->alphabet_size = 3;
    aut->num_states = 2;
    aut->initial = 0;
    aut->final = 1;
    aut->add_transition(0, 2, 1);
    aut->add_transition(1, 0, 1);
    aut->add_transition(1, 1, 1);
    return aut;
}

inline Problem lemma1_problem() {
    Problem p;
    p.names = ab_names(2);
    p.eq = parse_equation("x a b y", "y a b x", p.names);
    return p;
}

inline Problem example1_problem() {
    Problem p;
    p.names = ab_names(3);
    p.eq = parse_equation("y a b z", "z x", p.names);
    return p;
}

inline Problem prop4_problem() {
    Problem p;
    p.names = SymbolNames{{"a", "b", "#"}, {"x", "y", "z"}};
    p.eq = parse_equation("x z", "z y", p.names);
    auto aut = hash_ab_nfa();
    p.automata = {aut};
    p.automata_names = {"hash_ab"};
    p.constraints = {{0, 0, aut, 0, 1}, {1, 0, aut, 0, 1}};
    return p;
}

inline Problem conj_problem() {
    Problem p;
    p.names = ab_names(3);
    p.eq = parse_equation("x y", "y z", p.names);
    return p;
}

inline Problem commute_problem() {
    Problem p;
    p.names = ab_names(2);
    p.eq = parse_equation("x y", "y x", p.names);
    return p;
}

// ---------------------------------------------------------------------------
// Random corpora (deterministic seeds)

inline Equation random_quadratic(std::mt19937& rng, int max_vars = 3, int max_side = 8,
                                 int letters = 2) {
    std::uniform_int_distribution<int> var_count(1, max_vars);
    int nv = var_count(rng);
    while (true) {
        std::map<VarId, int> used;
        auto gen_side = [&]() {
            std::uniform_int_distribution<int> len(0, max_side);
            std::uniform_int_distribution<int> pick(0, letters + nv - 1);
            Word w;
            int n = len(rng);
            for (int i = 0; i < n; i++) {
                int c = pick(rng);
                if (c < letters) {
                    w.push_back(Symbol::constant(Letter(c)));
                } else {
                    VarId v = VarId(c - letters);
                    if (used[v] >= 2) continue;
                    used[v]++;
                    w.push_back(Symbol::variable(v));
                }
            }
            return w;
        };
        Equation e{gen_side(), gen_side()};
        if (variables_of(e).empty()) continue;
        if (is_quadratic(e)) return e;
    }
}

inline Equation random_regular_oriented(std::mt19937& rng, int max_vars = 3, int max_side = 8,
                                        int letters = 2) {
    while (true) {
        Equation e = random_quadratic(rng, max_vars, max_side, letters);
        if (is_regular(e) && is_oriented(e)) return e;
    }
}

// 1-weak by construction: forward edges on state order plus self-loops
inline std::shared_ptr<Nfa> random_one_weak_nfa(std::mt19937& rng, uint32_t alphabet,
                                                uint32_t max_states = 3) {
    std::uniform_int_distribution<uint32_t> nstates(1, max_states);
    while (true) {
        auto aut = std::make_shared<Nfa>();
        aut->alphabet_size = alphabet;
        aut->num_states = nstates(rng);
        aut->initial = 0;
        aut->final = std::uniform_int_distribution<uint32_t>(0, aut->num_states - 1)(rng);
        std::uniform_int_distribution<int> coin(0, 3);
        for (State p = 0; p < aut->num_states; p++)
            for (State q = p; q < aut->num_states; q++)
                for (Letter a = 0; a < alphabet; a++)
                    if (coin(rng) == 0) aut->add_transition(p, a, q);
        // keep only automata with a nonempty language
        detail::ConstraintContext ctx;
        if (ctx.reachability(*aut)[aut->initial][aut->final]) return aut;
    }
}

// hand-built ring of transitions (state i -> i+1 mod n), for cycle tests
inline CounterSystem make_ring_system(const std::vector<VarId>& counters,
                                      std::vector<TransitionRelation> rels) {
    CounterSystem cs;
    cs.counters = counters;
    uint32_t n = uint32_t(rels.size());
    for (uint32_t i = 0; i < n; i++) {
        RewriteState dummy;
        cs.states.push_back(dummy);
    }
    for (uint32_t i = 0; i < n; i++)
        cs.transitions.push_back({i, (i + 1) % n, std::move(rels[i]), {RuleLabel::Kind::P1, 0, 0, {}}});
    cs.root = 0;
    return cs;
}

inline TransitionRelation sub_rel(VarId y, VarId z) {
    TransitionRelation r;
    r.kind = OpKind::Sub;
    r.reduced = y;
    r.subtrahend = z;
    return r;
}

inline TransitionRelation dec_rel(VarId y) {
    TransitionRelation r;
    r.kind = OpKind::Dec;
    r.reduced = y;
    return r;
}

// ---------------------------------------------------------------------------
// Explicit cycle simulation (for differential tests against acceleration)

inline CounterSystem cycle_subsystem(const CounterSystem& cs, const std::vector<uint32_t>& cycle) {
    CounterSystem sub;
    sub.counters = cs.counters;
    std::map<uint32_t, uint32_t> remap;
    for (uint32_t t : cycle) {
        uint32_t q = cs.transitions[t].from;
        if (!remap.count(q)) {
            remap[q] = uint32_t(sub.states.size());
            sub.states.push_back(cs.states[q]);
        }
    }
    for (uint32_t t : cycle) {
        CounterTransition ct = cs.transitions[t];
        ct.from = remap.at(ct.from);
        ct.to = remap.at(ct.to);
        sub.transitions.push_back(ct);
    }
    sub.root = remap.at(cs.transitions[cycle[0]].from);
    return sub;
}

// all value vectors w with (root, v) ->* (root, w)
inline std::set<std::vector<uint64_t>> cycle_reach_set(const CounterSystem& sub,
                                                       const std::vector<uint64_t>& v,
                                                       StepSemantics semantics) {
    std::set<std::vector<uint64_t>> out;
    std::set<std::pair<uint32_t, std::vector<uint64_t>>> seen;
    std::vector<Configuration> todo{{sub.root, v}};
    seen.insert({sub.root, v});
    auto outs = sub.out_transitions();
    while (!todo.empty()) {
        Configuration cur = todo.back();
        todo.pop_back();
        if (cur.state == sub.root) out.insert(cur.values);
        for (uint32_t t : outs[cur.state]) {
            auto next = step(sub, cur, sub.transitions[t], semantics);
            if (next && seen.insert({next->state, next->values}).second) todo.push_back(*next);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Misc

inline LengthVector lv_of(std::initializer_list<std::pair<VarId, uint64_t>> items) {
    LengthVector lv;
    for (auto& [v, n] : items) lv.entries[v] = n;
    return lv;
}

template <typename F>
void for_each_grid(const std::vector<VarId>& vars, uint64_t bound, F&& fn) {
    LengthVector lv;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == vars.size()) {
            fn(lv);
            return;
        }
        for (uint64_t n = 0; n <= bound; n++) {
            lv.entries[vars[i]] = n;
            rec(i + 1);
        }
    };
    rec(0);
}

inline uint64_t gcd64(uint64_t a, uint64_t b) {
    while (b) {
        a %= b;
        std::swap(a, b);
    }
    return a;
}

}  // namespace weq::test

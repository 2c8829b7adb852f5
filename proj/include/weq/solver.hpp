#pragma once

#include <functional>
#include <optional>

#include "weq/acceleration.hpp"
#include "weq/counter_system.hpp"
#include "weq/oracle.hpp"
#include "weq/problem.hpp"

namespace weq {

struct NotMember : Error {
    NotMember() : Error("length vector is not in the length abstraction") {}
};

struct ClassReport {
    bool quadratic = false;
    bool regular = false;
    bool oriented = false;
    bool one_weak_constraints = false;
    std::optional<bool> flat;                      // quadratic problems only
    std::optional<bool> cycles_one_var_reducing;   // flat problems only
};

struct Verdict {
    enum class Kind { Sat, Unsat, Unknown } kind = Kind::Unknown;
    enum class Reason { None, NotFlat, BadCycle, SolverBound } reason = Reason::None;
    LengthVector lengths;                  // Sat only
    std::optional<Assignment> witness;     // Sat only, when synthesis stayed in budget
};

class SolverContext {
public:
    explicit SolverContext(Problem p, uint64_t budget = 1'000'000)
        : p_(std::move(p)), budget_(budget) {
        validate_problem(p_);
        auto vs = variables_of(p_.eq);
        eq_vars_.assign(vs.begin(), vs.end());
        for (auto& c : p_.constraints) {
            if (vs.count(c.var)) {
                eq_constraints_.push_back(c);
            } else {
                extra_constrained_.insert(c.var);
            }
        }
        for (VarId v : extra_constrained_) {
            std::vector<Nfa> slices;
            for (auto& c : p_.constraints)
                if (c.var == v) slices.push_back(nfa_slice(*c.aut, c.from, c.to));
            extra_sets_[v] = length_abstraction(nfa_intersection(slices));
        }
    }

    const Problem& problem() const { return p_; }
    const std::vector<VarId>& equation_vars() const { return eq_vars_; }

    const CounterSystem& counter_system() {
        if (!cs_) cs_ = build_counter_system_with_regex(p_.eq, eq_constraints_, budget_);
        return *cs_;
    }

    ClassReport classify() {
        ClassReport r;
        r.quadratic = is_quadratic(p_.eq);
        r.regular = is_regular(p_.eq);
        r.oriented = is_oriented(p_.eq);
        r.one_weak_constraints = true;
        for (auto& c : p_.constraints)
            if (!is_one_weak(*c.aut)) r.one_weak_constraints = false;
        if (!r.quadratic) return r;
        auto rep = is_flat(counter_system());
        r.flat = rep.flat;
        if (rep.flat) {
            bool ok = true;
            for (auto& cycle : rep.cycles)
                if (!cycle_shape(counter_system(), cycle)) ok = false;
            r.cycles_one_var_reducing = ok;
        }
        return r;
    }

    bool length_membership(const LengthVector& v) {
        if (!is_quadratic(p_.eq)) throw NotQuadratic();
        for (auto& [var, u] : extra_sets_)
            if (!u.contains(v.at(var))) return false;
        const CounterSystem& cs = counter_system();
        auto target = cs.success_state();
        if (!target) return false;
        Configuration start{cs.root, {}};
        for (VarId var : cs.counters) start.values.push_back(v.at(var));
        return pre_star_membership(cs, {*target}, start, StepSemantics::Strict, budget_);
    }

    Assignment synthesize_witness(const LengthVector& v) {
        if (!is_quadratic(p_.eq)) throw NotQuadratic();
        for (auto& [var, u] : extra_sets_)
            if (!u.contains(v.at(var))) throw NotMember();
        const CounterSystem& cs = counter_system();
        auto target = cs.success_state();
        if (!target) throw NotMember();
        Configuration start{cs.root, {}};
        for (VarId var : cs.counters) start.values.push_back(v.at(var));
        auto path = pre_star_path(cs, {*target}, start, StepSemantics::Strict, budget_);
        if (!path) throw NotMember();

        Assignment sigma = replay_path(cs, start, *path);

        // declared variables outside the equation
        for (VarId var = 0; var < p_.num_vars(); var++) {
            if (sigma.map.count(var)) continue;
            std::vector<RegularConstraint> group;
            for (auto& c : p_.constraints)
                if (c.var == var) group.push_back(c);
            sigma.map[var] = pick_word(group, v.at(var));
        }

        if (!check_solution(p_.eq, sigma)) throw Error("internal: reconstructed witness fails the equation");
        for (auto& c : p_.constraints)
            if (!nfa_accepts(nfa_slice(*c.aut, c.from, c.to), sigma.at(c.var)))
                throw Error("internal: reconstructed witness fails a regular constraint");
        for (auto& [var, n] : v.entries)
            if (sigma.at(var).size() != n) throw Error("internal: reconstructed witness length mismatch");
        return sigma;
    }

    Verdict solve() {
        if (!is_quadratic(p_.eq)) throw NotQuadratic();
        const CounterSystem& cs = counter_system();
        auto target = cs.success_state();
        auto rep = is_flat(cs);
        bool shapes_ok = rep.flat;
        if (rep.flat)
            for (auto& cycle : rep.cycles)
                if (!cycle_shape(cs, cycle)) shapes_ok = false;
        Verdict::Reason reason = !rep.flat          ? Verdict::Reason::NotFlat
                                 : !shapes_ok       ? Verdict::Reason::BadCycle
                                                    : Verdict::Reason::SolverBound;

        if (rep.flat && shapes_ok) {
            if (!target) return make_unsat();
            VarPool pool;
            pool.next = p_.num_vars();
            std::map<VarId, PadVar> pre;
            for (VarId v : cs.counters) pre[v] = v;
            PadFormula lambda = flat_reachability_closed(cs, cs.root, *target, pre, pool);
            std::vector<PadFormula> conjuncts{std::move(lambda), p_.length_constraint};
            for (auto& [var, u] : extra_sets_)
                conjuncts.push_back(lower_unary_membership(LinearTerm::var(var), u, pool));
            auto res = is_satisfiable(PadFormula::conj(std::move(conjuncts)));
            if (res.kind == SatResult::Kind::Sat) {
                LengthVector lengths;
                for (VarId var = 0; var < p_.num_vars(); var++) {
                    auto it = res.model.find(var);
                    lengths.entries[var] = it == res.model.end() ? 0 : it->second;
                }
                if (!length_membership(lengths))
                    throw Error("internal: symbolic model failed exact revalidation");
                return make_sat(lengths);
            }
            if (res.kind == SatResult::Kind::Unsat) return make_unsat();
        }
        return fallback_ladder(reason);
    }

private:
    Verdict make_unsat() const { return {Verdict::Kind::Unsat, Verdict::Reason::None, {}, {}}; }

    Verdict make_sat(const LengthVector& lengths) {
        Verdict v{Verdict::Kind::Sat, Verdict::Reason::None, lengths, {}};
        try {
            v.witness = synthesize_witness(lengths);
        } catch (const BudgetExceeded&) {
        }
        return v;
    }

    bool vector_satisfies(const LengthVector& lv) {
        Valuation env;
        for (auto& [var, n] : lv.entries) env[var] = n;
        if (!evaluate(p_.length_constraint, env)) return false;
        return length_membership(lv);
    }

    Verdict fallback_ladder(Verdict::Reason reason) {
        auto bounds = derive_static_bounds(p_.length_constraint);
        bool all_bounded = true;
        uint64_t product = 1;
        for (VarId v = 0; v < p_.num_vars(); v++) {
            auto it = bounds.find(v);
            if (it == bounds.end()) {
                all_bounded = false;
                break;
            }
            if (product < (1u << 21)) product *= it->second + 1;
        }

        std::vector<VarId> all_vars;
        for (VarId v = 0; v < p_.num_vars(); v++) all_vars.push_back(v);

        if (all_bounded && product <= (1u << 21)) {
            // exact: the length constraint confines solutions to a finite grid
            LengthVector lv;
            std::function<std::optional<LengthVector>(size_t)> rec =
                [&](size_t i) -> std::optional<LengthVector> {
                if (i == all_vars.size()) {
                    if (vector_satisfies(lv)) return lv;
                    return std::nullopt;
                }
                for (uint64_t n = 0; n <= bounds[all_vars[i]]; n++) {
                    lv.entries[all_vars[i]] = n;
                    if (auto hit = rec(i + 1)) return hit;
                }
                lv.entries.erase(all_vars[i]);
                return std::nullopt;
            };
            if (auto hit = rec(0)) return make_sat(*hit);
            return make_unsat();
        }

        // sound search without an exactness certificate
        uint64_t checks = 0;
        const uint64_t check_budget = 50'000;
        for (uint64_t shell = 0; shell <= 1024; shell++) {
            LengthVector lv;
            std::function<std::optional<LengthVector>(size_t, bool)> rec =
                [&](size_t i, bool hit_shell) -> std::optional<LengthVector> {
                if (checks >= check_budget) return std::nullopt;
                if (i == all_vars.size()) {
                    if (!hit_shell && shell != 0) return std::nullopt;
                    checks++;
                    if (vector_satisfies(lv)) return lv;
                    return std::nullopt;
                }
                uint64_t cap = shell;
                auto it = bounds.find(all_vars[i]);
                if (it != bounds.end()) cap = std::min(cap, it->second);
                for (uint64_t n = 0; n <= cap; n++) {
                    lv.entries[all_vars[i]] = n;
                    if (auto hit = rec(i + 1, hit_shell || n == shell)) return hit;
                }
                lv.entries.erase(all_vars[i]);
                return std::nullopt;
            };
            if (auto hit = rec(0, false)) return make_sat(*hit);
            if (checks >= check_budget) break;
        }
        return {Verdict::Kind::Unknown, reason, {}, {}};
    }

    ConstWord pick_word(const std::vector<RegularConstraint>& group, uint64_t len) {
        if (group.empty()) {
            if (len == 0) return {};
            if (p_.alphabet_size() == 0) throw NotMember();
            return ConstWord(len, 0);
        }
        std::vector<Nfa> slices;
        for (auto& c : group) slices.push_back(nfa_slice(*c.aut, c.from, c.to));
        auto w = nfa_word_of_length(nfa_intersection(slices), len);
        if (!w) throw Error("internal: guard admitted a length with no witnessing word");
        return *w;
    }

    uint64_t value_at(const CounterSystem& cs, const Configuration& c, VarId v) const {
        return c.values[cs.counter_index(v)];
    }

    // Walk an accepting run backwards, undoing each rule on the assignment.
    Assignment replay_path(const CounterSystem& cs, const Configuration& start,
                           const std::vector<PreStarStep>& path) {
        using K = RuleLabel::Kind;
        Assignment sigma;
        for (size_t i = path.size(); i-- > 0;) {
            const CounterTransition& t = cs.transitions[path[i].transition];
            const RewriteState& src = cs.states[t.from];
            const Configuration& before = i == 0 ? start : path[i - 1].config;
            const RuleLabel& label = t.rule;
            switch (label.kind) {
                case K::EraseLhsVar:
                case K::EraseRhsVar:
                    sigma.map[label.alpha] = {};
                    break;
                case K::P1: {
                    Symbol head = src.eq.lhs[0];
                    if (head.is_variable() && !sigma.map.count(head.var())) {
                        sigma.map[head.var()] =
                            pick_word(detail::constraints_on(src.constraints, head.var()),
                                      value_at(cs, before, head.var()));
                    }
                    break;
                }
                case K::P2:
                case K::P3: {
                    VarId v = label.kind == K::P2 ? label.beta : label.alpha;
                    Letter a = label.kind == K::P2 ? src.eq.lhs[0].letter() : src.eq.rhs[0].letter();
                    auto& w = sigma.map.at(v);
                    w.insert(w.begin(), a);
                    break;
                }
                case K::P4AlphaPrefix:
                case K::P4BetaPrefix: {
                    VarId prefix = label.kind == K::P4AlphaPrefix ? label.alpha : label.beta;
                    VarId longer = label.kind == K::P4AlphaPrefix ? label.beta : label.alpha;
                    ConstWord pw;
                    if (sigma.map.count(prefix)) {
                        pw = sigma.map.at(prefix);
                    } else {
                        auto post_full = apply_rule_to_constraints(src, label);
                        if (!post_full) throw Error("internal: stored rule no longer applies");
                        pw = pick_word(detail::constraints_on(*post_full, prefix),
                                       value_at(cs, before, prefix));
                        sigma.map[prefix] = pw;
                    }
                    auto& lw = sigma.map.at(longer);
                    lw.insert(lw.begin(), pw.begin(), pw.end());
                    break;
                }
            }
        }
        return sigma;
    }

    Problem p_;
    uint64_t budget_;
    std::vector<VarId> eq_vars_;
    std::vector<RegularConstraint> eq_constraints_;
    std::set<VarId> extra_constrained_;
    std::map<VarId, UnarySemilinear> extra_sets_;
    std::optional<CounterSystem> cs_;
};

inline ClassReport classify(const Problem& p, uint64_t budget = 1'000'000) {
    return SolverContext(p, budget).classify();
}

inline Verdict solve(const Problem& p, uint64_t budget = 1'000'000) {
    return SolverContext(p, budget).solve();
}

inline bool length_membership(const Problem& p, const LengthVector& v, uint64_t budget = 1'000'000) {
    return SolverContext(p, budget).length_membership(v);
}

inline std::optional<Assignment> synthesize_witness(const Problem& p, const LengthVector& v,
                                                    uint64_t budget = 1'000'000) {
    try {
        return SolverContext(p, budget).synthesize_witness(v);
    } catch (const NotMember&) {
        return std::nullopt;
    }
}

}  // namespace weq

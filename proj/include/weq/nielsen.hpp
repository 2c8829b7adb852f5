#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "weq/automata.hpp"
#include "weq/core.hpp"
#include "weq/names.hpp"

namespace weq {

struct InconsistentGuess : Error {
    explicit InconsistentGuess(const std::string& what) : Error("inconsistent guess: " + what) {}
};

// ---------------------------------------------------------------------------
// Regular constraints x in L(A_{from,to}); automata are shared and identified
// by a caller-assigned id so states hash and order deterministically.

struct RegularConstraint {
    VarId var = 0;
    uint32_t aut_id = 0;
    std::shared_ptr<const Nfa> aut;
    State from = 0;
    State to = 0;

    std::tuple<VarId, uint32_t, State, State> key() const { return {var, aut_id, from, to}; }
    friend bool operator==(const RegularConstraint& a, const RegularConstraint& b) {
        return a.key() == b.key();
    }
    friend bool operator<(const RegularConstraint& a, const RegularConstraint& b) {
        return a.key() < b.key();
    }

    bool accepts_epsilon() const { return from == to; }  // no epsilon transitions
};

struct RewriteState {
    Equation eq;
    std::vector<RegularConstraint> constraints;  // canonically sorted, deduplicated

    void canonicalize() {
        std::sort(constraints.begin(), constraints.end());
        constraints.erase(std::unique(constraints.begin(), constraints.end()), constraints.end());
    }

    bool is_success() const { return eq.lhs.empty() && eq.rhs.empty() && constraints.empty(); }

    friend bool operator==(const RewriteState& a, const RewriteState& b) {
        if (a.eq != b.eq || a.constraints.size() != b.constraints.size()) return false;
        for (size_t i = 0; i < a.constraints.size(); i++)
            if (!(a.constraints[i] == b.constraints[i])) return false;
        return true;
    }

    uint64_t hash() const {
        uint64_t h = hash_word(eq.lhs, 1);
        h = hash_word(eq.rhs, h);
        for (auto& c : constraints) {
            hash_mix(h, c.var);
            hash_mix(h, c.aut_id);
            hash_mix(h, (uint64_t(c.from) << 32) | c.to);
        }
        return h;
    }
};

struct RewriteStateHash {
    size_t operator()(const RewriteState& s) const { return size_t(s.hash()); }
};

// ---------------------------------------------------------------------------
// Rule labels

struct RuleLabel {
    enum class Kind { EraseLhsVar, EraseRhsVar, P1, P2, P3, P4AlphaPrefix, P4BetaPrefix };
    Kind kind;
    VarId alpha = 0;  // P3/P4: the lhs-head variable; Erase*: the erased variable
    VarId beta = 0;   // P2/P4: the rhs-head variable
    // one guessed midpoint per split constraint, in the canonical order of the
    // source state's constraints on the substituted variable
    std::vector<State> midpoints;

    std::string name(const SymbolNames& names) const {
        switch (kind) {
            case Kind::EraseLhsVar: return "erase_l(" + names.var(alpha) + ")";
            case Kind::EraseRhsVar: return "erase_r(" + names.var(alpha) + ")";
            case Kind::P1: return "P1";
            case Kind::P2: return "P2(" + names.var(beta) + ")";
            case Kind::P3: return "P3(" + names.var(alpha) + ")";
            case Kind::P4AlphaPrefix: return "P4a(" + names.var(alpha) + "," + names.var(beta) + ")";
            case Kind::P4BetaPrefix: return "P4b(" + names.var(alpha) + "," + names.var(beta) + ")";
        }
        return "?";
    }
};

struct RewriteEdge {
    uint32_t from = 0;
    uint32_t to = 0;
    RuleLabel label;
};

struct RewriteGraph {
    std::vector<RewriteState> nodes;
    std::vector<RewriteEdge> edges;
    uint32_t root = 0;

    std::optional<uint32_t> find(const RewriteState& s) const {
        for (uint32_t i = 0; i < nodes.size(); i++)
            if (nodes[i] == s) return i;
        return std::nullopt;
    }
    std::optional<uint32_t> success_node() const {
        for (uint32_t i = 0; i < nodes.size(); i++)
            if (nodes[i].is_success()) return i;
        return std::nullopt;
    }
};

// ---------------------------------------------------------------------------
// Rule application: equations

namespace detail {

inline Word substitute_var(const Word& w, VarId v, const Word& image) {
    Word out;
    for (Symbol s : w) {
        if (s.is_variable() && s.var() == v)
            out.insert(out.end(), image.begin(), image.end());
        else
            out.push_back(s);
    }
    return out;
}

inline Word drop_head(const Word& w) { return Word(w.begin() + 1, w.end()); }

}  // namespace detail

// The equation part of one rewriting step.
inline Equation apply_rule_to_equation(const Equation& e, const RuleLabel& label) {
    using K = RuleLabel::Kind;
    const Word& L = e.lhs;
    const Word& R = e.rhs;
    switch (label.kind) {
        case K::EraseLhsVar:
        case K::EraseRhsVar: {
            Word empty;
            return {detail::substitute_var(L, label.alpha, empty),
                    detail::substitute_var(R, label.alpha, empty)};
        }
        case K::P1:
            return {detail::drop_head(L), detail::drop_head(R)};
        case K::P2: {
            // alpha is the constant head of L, beta the variable head of R
            Word repl{L[0], Symbol::variable(label.beta)};
            Word w1 = detail::drop_head(L);
            Word w2 = detail::drop_head(R);
            Word rhs{Symbol::variable(label.beta)};
            Word w2s = detail::substitute_var(w2, label.beta, repl);
            rhs.insert(rhs.end(), w2s.begin(), w2s.end());
            return {detail::substitute_var(w1, label.beta, repl), rhs};
        }
        case K::P3: {
            Word repl{R[0], Symbol::variable(label.alpha)};
            Word w1 = detail::drop_head(L);
            Word w2 = detail::drop_head(R);
            Word lhs{Symbol::variable(label.alpha)};
            Word w1s = detail::substitute_var(w1, label.alpha, repl);
            lhs.insert(lhs.end(), w1s.begin(), w1s.end());
            return {lhs, detail::substitute_var(w2, label.alpha, repl)};
        }
        case K::P4AlphaPrefix: {
            // sigma(alpha) is a nonempty prefix of sigma(beta); the leading beta
            // keeps denoting the tail while body occurrences become alpha.beta
            Word repl{Symbol::variable(label.alpha), Symbol::variable(label.beta)};
            Word w1 = detail::drop_head(L);
            Word w2 = detail::drop_head(R);
            Word rhs{Symbol::variable(label.beta)};
            Word w2s = detail::substitute_var(w2, label.beta, repl);
            rhs.insert(rhs.end(), w2s.begin(), w2s.end());
            return {detail::substitute_var(w1, label.beta, repl), rhs};
        }
        case K::P4BetaPrefix: {
            Word repl{Symbol::variable(label.beta), Symbol::variable(label.alpha)};
            Word w1 = detail::drop_head(L);
            Word w2 = detail::drop_head(R);
            Word lhs{Symbol::variable(label.alpha)};
            Word w1s = detail::substitute_var(w1, label.alpha, repl);
            lhs.insert(lhs.end(), w1s.begin(), w1s.end());
            return {lhs, detail::substitute_var(w2, label.alpha, repl)};
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Rule application: constraints. Shared by the successor relation and by the
// counter-system guard construction.

namespace detail {

// reachability matrix memo per automaton
struct ConstraintContext {
    std::unordered_map<const Nfa*, std::vector<std::vector<bool>>> reach;

    const std::vector<std::vector<bool>>& reachability(const Nfa& aut) {
        auto it = reach.find(&aut);
        if (it != reach.end()) return it->second;
        std::vector<std::vector<bool>> m(aut.num_states, std::vector<bool>(aut.num_states, false));
        auto adj = aut.adjacency();
        for (State s = 0; s < aut.num_states; s++) {
            std::vector<State> todo{s};
            m[s][s] = true;
            while (!todo.empty()) {
                State v = todo.back();
                todo.pop_back();
                for (State w : adj[v])
                    if (!m[s][w]) {
                        m[s][w] = true;
                        todo.push_back(w);
                    }
            }
        }
        return reach.emplace(&aut, std::move(m)).first->second;
    }

    bool slice_nonempty(const RegularConstraint& c) {
        return reachability(*c.aut)[c.from][c.to];
    }

    // some word exists in the intersection of all slice languages
    bool intersection_nonempty(const std::vector<RegularConstraint>& cs) {
        if (cs.empty()) return true;
        if (cs.size() == 1) return slice_nonempty(cs[0]);
        std::vector<Nfa> slices;
        for (auto& c : cs) slices.push_back(nfa_slice(*c.aut, c.from, c.to));
        Nfa prod = nfa_intersection(slices);
        return reachability(prod)[prod.initial][prod.final];
    }
};

inline std::vector<RegularConstraint> constraints_on(const std::vector<RegularConstraint>& cs, VarId v) {
    std::vector<RegularConstraint> out;
    for (auto& c : cs)
        if (c.var == v) out.push_back(c);
    return out;
}

}  // namespace detail

// Constraint evolution along one edge, before dropping exited variables.
// Returns nullopt when the guess is inconsistent with the constraints (erase
// of a non-epsilon language, missing constant transition, midpoint mismatch).
inline std::optional<std::vector<RegularConstraint>> apply_rule_to_constraints(
    const RewriteState& s, const RuleLabel& label) {
    using K = RuleLabel::Kind;
    const auto& cs = s.constraints;
    switch (label.kind) {
        case K::EraseLhsVar:
        case K::EraseRhsVar: {
            std::vector<RegularConstraint> out;
            for (auto& c : cs) {
                if (c.var == label.alpha) {
                    if (!c.accepts_epsilon()) return std::nullopt;
                } else {
                    out.push_back(c);
                }
            }
            return out;
        }
        case K::P1:
            return cs;
        case K::P2:
        case K::P3:
        case K::P4AlphaPrefix:
        case K::P4BetaPrefix: {
            // substituted variable loses a prefix; its constraints split at the
            // guessed midpoints
            VarId subst_var =
                (label.kind == K::P2 || label.kind == K::P4AlphaPrefix) ? label.beta : label.alpha;
            bool prefix_is_var = (label.kind == K::P4AlphaPrefix || label.kind == K::P4BetaPrefix);
            VarId prefix_var = label.kind == K::P4AlphaPrefix ? label.alpha : label.beta;
            std::optional<Letter> prefix_letter;
            if (label.kind == K::P2) prefix_letter = s.eq.lhs[0].letter();
            if (label.kind == K::P3) prefix_letter = s.eq.rhs[0].letter();

            std::vector<RegularConstraint> out;
            size_t mid_idx = 0;
            for (auto& c : cs) {
                if (c.var != subst_var) {
                    out.push_back(c);
                    continue;
                }
                if (mid_idx >= label.midpoints.size()) return std::nullopt;
                State r = label.midpoints[mid_idx++];
                if (r >= c.aut->num_states) return std::nullopt;
                if (prefix_is_var) {
                    RegularConstraint head = c;
                    head.var = prefix_var;
                    head.to = r;
                    out.push_back(head);
                } else {
                    // constant prefix: the single-letter step must exist, and a
                    // positive check removes the head constraint
                    bool ok = false;
                    for (auto& t : c.aut->transitions)
                        if (t.from == c.from && t.letter == *prefix_letter && t.to == r) ok = true;
                    if (!ok) return std::nullopt;
                }
                RegularConstraint tail = c;
                tail.from = r;
                out.push_back(tail);
            }
            if (mid_idx != label.midpoints.size()) return std::nullopt;
            return out;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// One-step successors

struct Successor {
    RewriteState state;  // canonical, exited variables' constraints dropped
    RuleLabel label;
    // constraints before the drop; per-variable intersections of these are the
    // post-guards of the corresponding counter transition
    std::vector<RegularConstraint> post_constraints_full;
};

namespace detail {

inline void emit_successor(const RewriteState& s, RuleLabel label, ConstraintContext& ctx,
                           std::vector<Successor>& out) {
    auto post_full = apply_rule_to_constraints(s, label);
    if (!post_full) return;
    Equation eq2 = apply_rule_to_equation(s.eq, label);
    auto vars2 = variables_of(eq2);
    RewriteState s2;
    s2.eq = std::move(eq2);
    for (auto& c : *post_full) {
        if (vars2.count(c.var)) {
            s2.constraints.push_back(c);
        }
    }
    // exited variables: their residual constraints must be jointly satisfiable
    std::set<VarId> exited;
    for (auto& c : *post_full)
        if (!vars2.count(c.var)) exited.insert(c.var);
    for (VarId v : exited)
        if (!ctx.intersection_nonempty(constraints_on(*post_full, v))) return;
    s2.canonicalize();
    out.push_back({std::move(s2), std::move(label), std::move(*post_full)});
}

// enumerate midpoint tuples for the constraints on `subst_var`
template <typename F>
inline void for_each_midpoint_tuple(const RewriteState& s, VarId subst_var,
                                    const std::function<std::vector<State>(const RegularConstraint&)>& choices,
                                    F&& emit) {
    std::vector<const RegularConstraint*> targets;
    for (auto& c : s.constraints)
        if (c.var == subst_var) targets.push_back(&c);
    std::vector<State> tuple(targets.size());
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == targets.size()) {
            emit(tuple);
            return;
        }
        for (State r : choices(*targets[i])) {
            tuple[i] = r;
            rec(i + 1);
        }
    };
    rec(0);
}

}  // namespace detail

inline std::vector<Successor> successors_full(const RewriteState& s, detail::ConstraintContext& ctx) {
    std::vector<Successor> out;
    const Word& L = s.eq.lhs;
    const Word& R = s.eq.rhs;
    if (L.empty() && R.empty()) return out;

    // erase rules apply to a variable head of either side
    if (!L.empty() && L[0].is_variable())
        detail::emit_successor(s, {RuleLabel::Kind::EraseLhsVar, L[0].var(), 0, {}}, ctx, out);
    if (!R.empty() && R[0].is_variable())
        detail::emit_successor(s, {RuleLabel::Kind::EraseRhsVar, R[0].var(), 0, {}}, ctx, out);

    if (L.empty() || R.empty()) return out;
    Symbol alpha = L[0];
    Symbol beta = R[0];

    if (alpha == beta) {
        VarId v = alpha.is_variable() ? alpha.var() : 0;
        detail::emit_successor(s, {RuleLabel::Kind::P1, v, v, {}}, ctx, out);
        return out;
    }

    auto reach_choices = [&](bool need_head_nonempty) {
        return [&ctx, need_head_nonempty](const RegularConstraint& c) {
            std::vector<State> rs;
            auto& reach = ctx.reachability(*c.aut);
            for (State r = 0; r < c.aut->num_states; r++)
                if ((!need_head_nonempty || reach[c.from][r]) && reach[r][c.to]) rs.push_back(r);
            return rs;
        };
    };
    auto step_choices = [&](Letter a) {
        return [a, &ctx](const RegularConstraint& c) {
            std::vector<State> rs;
            auto& reach = ctx.reachability(*c.aut);
            for (auto& t : c.aut->transitions)
                if (t.from == c.from && t.letter == a && reach[t.to][c.to]) rs.push_back(t.to);
            std::sort(rs.begin(), rs.end());
            rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
            return rs;
        };
    };

    if (alpha.is_constant() && beta.is_variable()) {
        detail::for_each_midpoint_tuple(s, beta.var(), step_choices(alpha.letter()),
                                        [&](const std::vector<State>& mids) {
            detail::emit_successor(s, {RuleLabel::Kind::P2, 0, beta.var(), mids}, ctx, out);
        });
    } else if (alpha.is_variable() && beta.is_constant()) {
        detail::for_each_midpoint_tuple(s, alpha.var(), step_choices(beta.letter()),
                                        [&](const std::vector<State>& mids) {
            detail::emit_successor(s, {RuleLabel::Kind::P3, alpha.var(), 0, mids}, ctx, out);
        });
    } else if (alpha.is_variable() && beta.is_variable()) {
        detail::for_each_midpoint_tuple(s, beta.var(), reach_choices(true),
                                        [&](const std::vector<State>& mids) {
            detail::emit_successor(s, {RuleLabel::Kind::P4AlphaPrefix, alpha.var(), beta.var(), mids},
                                   ctx, out);
        });
        detail::for_each_midpoint_tuple(s, alpha.var(), reach_choices(true),
                                        [&](const std::vector<State>& mids) {
            detail::emit_successor(s, {RuleLabel::Kind::P4BetaPrefix, alpha.var(), beta.var(), mids},
                                   ctx, out);
        });
    }
    return out;
}

inline std::vector<std::pair<RewriteState, RuleLabel>> successors(const RewriteState& s) {
    detail::ConstraintContext ctx;
    std::vector<std::pair<RewriteState, RuleLabel>> out;
    for (auto& succ : successors_full(s, ctx)) out.push_back({succ.state, succ.label});
    return out;
}

// ---------------------------------------------------------------------------
// Reachable rewrite graph

inline RewriteGraph build_graph(const RewriteState& root, uint64_t node_budget = 1'000'000) {
    if (!is_quadratic(root.eq)) throw NotQuadratic();
    detail::ConstraintContext ctx;
    RewriteGraph g;
    std::unordered_map<RewriteState, uint32_t, RewriteStateHash> index;
    RewriteState canonical_root = root;
    canonical_root.canonicalize();
    g.nodes.push_back(canonical_root);
    index.emplace(canonical_root, 0);
    std::deque<uint32_t> todo{0};
    while (!todo.empty()) {
        uint32_t cur = todo.front();
        todo.pop_front();
        RewriteState state = g.nodes[cur];  // copy: g.nodes may reallocate
        for (auto& succ : successors_full(state, ctx)) {
            auto it = index.find(succ.state);
            uint32_t id;
            if (it == index.end()) {
                if (g.nodes.size() >= node_budget) throw BudgetExceeded("rewrite graph nodes");
                id = uint32_t(g.nodes.size());
                g.nodes.push_back(succ.state);
                index.emplace(succ.state, id);
                todo.push_back(id);
            } else {
                id = it->second;
            }
            g.edges.push_back({cur, id, succ.label});
        }
    }
    return g;
}

inline bool is_solvable(const RewriteState& root, uint64_t node_budget = 1'000'000) {
    if (!is_quadratic(root.eq)) throw NotQuadratic();
    detail::ConstraintContext ctx;
    std::unordered_map<RewriteState, uint32_t, RewriteStateHash> index;
    RewriteState canonical_root = root;
    canonical_root.canonicalize();
    if (canonical_root.is_success()) return true;
    index.emplace(canonical_root, 0);
    std::deque<RewriteState> todo{canonical_root};
    while (!todo.empty()) {
        RewriteState state = todo.front();
        todo.pop_front();
        for (auto& succ : successors_full(state, ctx)) {
            if (succ.state.is_success()) return true;
            if (index.count(succ.state)) continue;
            if (index.size() >= node_budget) throw BudgetExceeded("rewrite graph nodes");
            index.emplace(succ.state, uint32_t(index.size()));
            todo.push_back(succ.state);
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Annotated rewriting: how one step transforms a concrete assignment

inline Assignment annotated_step(const RewriteState& s, const Assignment& sigma,
                                 const RuleLabel& label) {
    using K = RuleLabel::Kind;
    Assignment out = sigma;
    switch (label.kind) {
        case K::EraseLhsVar:
        case K::EraseRhsVar: {
            if (!sigma.at(label.alpha).empty()) throw InconsistentGuess("erased variable is nonempty");
            break;
        }
        case K::P1:
            break;
        case K::P2:
        case K::P3: {
            VarId v = label.kind == K::P2 ? label.beta : label.alpha;
            Letter a = label.kind == K::P2 ? s.eq.lhs[0].letter() : s.eq.rhs[0].letter();
            const ConstWord& w = sigma.at(v);
            if (w.empty() || w[0] != a) throw InconsistentGuess("constant prefix mismatch");
            out.map[v] = ConstWord(w.begin() + 1, w.end());
            break;
        }
        case K::P4AlphaPrefix:
        case K::P4BetaPrefix: {
            VarId prefix = label.kind == K::P4AlphaPrefix ? label.alpha : label.beta;
            VarId longer = label.kind == K::P4AlphaPrefix ? label.beta : label.alpha;
            const ConstWord& p = sigma.at(prefix);
            const ConstWord& w = sigma.at(longer);
            if (p.empty()) throw InconsistentGuess("prefix variable guessed nonempty but is empty");
            if (p.size() > w.size() || !std::equal(p.begin(), p.end(), w.begin()))
                throw InconsistentGuess("guessed prefix does not match");
            out.map[longer] = ConstWord(w.begin() + p.size(), w.end());
            break;
        }
    }
    // domain tracks the variables still present in the equation
    Equation eq2 = apply_rule_to_equation(s.eq, label);
    auto vars2 = variables_of(eq2);
    for (auto it = out.map.begin(); it != out.map.end();) {
        if (!vars2.count(it->first))
            it = out.map.erase(it);
        else
            ++it;
    }
    return out;
}

// ---------------------------------------------------------------------------
// DOT export

inline std::string graph_to_dot(const RewriteGraph& g, const SymbolNames& names) {
    std::ostringstream os;
    os << "digraph rewrite {\n  rankdir=LR;\n";
    for (uint32_t i = 0; i < g.nodes.size(); i++) {
        const auto& n = g.nodes[i];
        std::string label = equation_to_string(n.eq, names);
        for (auto& c : n.constraints) {
            label += "\\n" + names.var(c.var) + " in A" + std::to_string(c.aut_id) + "[" +
                     std::to_string(c.from) + "," + std::to_string(c.to) + "]";
        }
        os << "  n" << i << " [label=\"" << label << "\"";
        if (i == g.root) os << ", shape=box";
        if (n.is_success()) os << ", peripheries=2";
        os << "];\n";
    }
    for (auto& e : g.edges) {
        os << "  n" << e.from << " -> n" << e.to << " [label=\"" << e.label.name(names);
        if (!e.label.midpoints.empty()) {
            os << " r=";
            for (size_t i = 0; i < e.label.midpoints.size(); i++)
                os << (i ? "," : "") << e.label.midpoints[i];
        }
        os << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace weq

#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "weq/automata.hpp"
#include "weq/core.hpp"
#include "weq/names.hpp"
#include "weq/nielsen.hpp"

namespace weq {

struct WrongState : Error {
    WrongState() : Error("configuration is not at the transition's source state") {}
};

struct NotACycle : Error {
    NotACycle() : Error("transition sequence is not a simple cycle") {}
};

struct AlphabetMismatch : Error {
    explicit AlphabetMismatch(const std::string& what) : Error("alphabet mismatch: " + what) {}
};

enum class OpKind { Id, Sub, Dec, EraseTest };

struct TransitionRelation {
    OpKind kind = OpKind::Id;
    VarId reduced = 0;     // y in Sub(y,z), Dec(y), EraseTest(y)
    VarId subtrahend = 0;  // z in Sub(y,z)
    // unary semilinear guards per counter; universal guards are omitted
    std::map<VarId, UnarySemilinear> pre_guards;
    std::map<VarId, UnarySemilinear> post_guards;

    friend bool operator==(const TransitionRelation&, const TransitionRelation&) = default;
};

struct CounterTransition {
    uint32_t from = 0;
    uint32_t to = 0;
    TransitionRelation rel;
    RuleLabel rule;  // provenance, used for witness reconstruction
};

struct CounterSystem {
    std::vector<VarId> counters;  // sorted
    std::vector<RewriteState> states;
    uint32_t root = 0;
    std::vector<CounterTransition> transitions;

    size_t counter_index(VarId v) const {
        auto it = std::lower_bound(counters.begin(), counters.end(), v);
        if (it == counters.end() || *it != v) throw MissingVariable(v);
        return size_t(it - counters.begin());
    }

    std::optional<uint32_t> success_state() const {
        for (uint32_t i = 0; i < states.size(); i++)
            if (states[i].is_success()) return i;
        return std::nullopt;
    }

    std::vector<std::vector<uint32_t>> out_transitions() const {
        std::vector<std::vector<uint32_t>> out(states.size());
        for (uint32_t t = 0; t < transitions.size(); t++) out[transitions[t].from].push_back(t);
        return out;
    }
};

struct Configuration {
    uint32_t state = 0;
    std::vector<uint64_t> values;  // aligned with CounterSystem::counters

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

// Strict strengthens Sub(y,z) with z >= 1, matching the nonempty-prefix guess
// it encodes; every run then terminates. Relaxed is the plain relational
// semantics (z may be 0).
enum class StepSemantics { Strict, Relaxed };

// ---------------------------------------------------------------------------
// Construction

namespace detail {

inline TransitionRelation base_relation(const RuleLabel& label) {
    using K = RuleLabel::Kind;
    TransitionRelation rel;
    switch (label.kind) {
        case K::EraseLhsVar:
        case K::EraseRhsVar:
            rel.kind = OpKind::EraseTest;
            rel.reduced = label.alpha;
            break;
        case K::P1:
            rel.kind = OpKind::Id;
            break;
        case K::P2:
            rel.kind = OpKind::Dec;
            rel.reduced = label.beta;
            break;
        case K::P3:
            rel.kind = OpKind::Dec;
            rel.reduced = label.alpha;
            break;
        case K::P4AlphaPrefix:
            rel.kind = OpKind::Sub;
            rel.reduced = label.beta;
            rel.subtrahend = label.alpha;
            break;
        case K::P4BetaPrefix:
            rel.kind = OpKind::Sub;
            rel.reduced = label.alpha;
            rel.subtrahend = label.beta;
            break;
    }
    return rel;
}

struct GuardCache {
    std::map<std::vector<std::tuple<uint32_t, State, State>>, UnarySemilinear> memo;

    // Len of the intersection of the slice languages
    const UnarySemilinear& lengths_of(const std::vector<RegularConstraint>& cs) {
        std::vector<std::tuple<uint32_t, State, State>> key;
        for (auto& c : cs) key.push_back({c.aut_id, c.from, c.to});
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<Nfa> slices;
        for (auto& c : cs) slices.push_back(nfa_slice(*c.aut, c.from, c.to));
        UnarySemilinear u = length_abstraction(nfa_intersection(slices));
        return memo.emplace(std::move(key), std::move(u)).first->second;
    }
};

}  // namespace weq::detail

inline CounterSystem build_counter_system_with_regex(const Equation& e,
                                                     const std::vector<RegularConstraint>& s,
                                                     uint64_t node_budget = 1'000'000) {
    if (!is_quadratic(e)) throw NotQuadratic();
    if (!s.empty()) {
        uint32_t alpha = s[0].aut->alphabet_size;
        for (auto& c : s)
            if (c.aut->alphabet_size != alpha)
                throw AlphabetMismatch("constraint automata disagree on alphabet size");
    }
    auto eq_vars = variables_of(e);
    for (auto& c : s)
        if (!eq_vars.count(c.var))
            throw Error("regular constraint on a variable not in the equation");

    RewriteState root{e, s};
    root.canonicalize();
    RewriteGraph g = build_graph(root, node_budget);

    CounterSystem cs;
    cs.counters.assign(eq_vars.begin(), eq_vars.end());

    detail::GuardCache cache;
    std::map<std::pair<uint32_t, uint32_t>, std::vector<TransitionRelation>> seen;
    std::vector<CounterTransition> raw;
    for (auto& edge : g.edges) {
        const RewriteState& src = g.nodes[edge.from];
        TransitionRelation rel = detail::base_relation(edge.label);
        auto post_full = apply_rule_to_constraints(src, edge.label);
        if (!post_full) continue;  // cannot happen for edges produced by build_graph
        bool dead = false;
        auto add_guards = [&](const std::vector<RegularConstraint>& constraint_set,
                              std::map<VarId, UnarySemilinear>& out) {
            for (VarId v : cs.counters) {
                auto group = detail::constraints_on(constraint_set, v);
                if (group.empty()) continue;
                const UnarySemilinear& u = cache.lengths_of(group);
                if (u.empty()) {
                    dead = true;
                    return;
                }
                if (!u.universal()) out[v] = u;
            }
        };
        add_guards(src.constraints, rel.pre_guards);
        if (!dead) add_guards(*post_full, rel.post_guards);
        if (dead) continue;  // guard can never be met
        auto& bucket = seen[{edge.from, edge.to}];
        if (std::find(bucket.begin(), bucket.end(), rel) != bucket.end()) continue;
        bucket.push_back(rel);
        raw.push_back({edge.from, edge.to, std::move(rel), edge.label});
    }

    // keep states reachable through live transitions
    std::vector<std::vector<uint32_t>> adj(g.nodes.size());
    for (uint32_t t = 0; t < raw.size(); t++) adj[raw[t].from].push_back(t);
    std::vector<int> remap(g.nodes.size(), -1);
    std::deque<uint32_t> todo{g.root};
    remap[g.root] = 0;
    cs.states.push_back(g.nodes[g.root]);
    while (!todo.empty()) {
        uint32_t cur = todo.front();
        todo.pop_front();
        for (uint32_t t : adj[cur]) {
            uint32_t nxt = raw[t].to;
            if (remap[nxt] == -1) {
                remap[nxt] = int(cs.states.size());
                cs.states.push_back(g.nodes[nxt]);
                todo.push_back(nxt);
            }
        }
    }
    for (auto& t : raw) {
        if (remap[t.from] == -1) continue;
        t.from = uint32_t(remap[t.from]);
        t.to = uint32_t(remap[t.to]);
        cs.transitions.push_back(std::move(t));
    }
    cs.root = 0;
    return cs;
}

inline CounterSystem build_counter_system(const Equation& e, uint64_t node_budget = 1'000'000) {
    return build_counter_system_with_regex(e, {}, node_budget);
}

// ---------------------------------------------------------------------------
// Concrete semantics

inline std::optional<Configuration> step(const CounterSystem& cs, const Configuration& c,
                                         const CounterTransition& t,
                                         StepSemantics semantics = StepSemantics::Strict) {
    if (c.state != t.from) throw WrongState();
    for (auto& [v, u] : t.rel.pre_guards)
        if (!u.contains(c.values[cs.counter_index(v)])) return std::nullopt;

    Configuration next = c;
    next.state = t.to;
    switch (t.rel.kind) {
        case OpKind::Id:
            break;
        case OpKind::Sub: {
            uint64_t y = c.values[cs.counter_index(t.rel.reduced)];
            uint64_t z = c.values[cs.counter_index(t.rel.subtrahend)];
            if (semantics == StepSemantics::Strict && z < 1) return std::nullopt;
            if (z > y) return std::nullopt;
            next.values[cs.counter_index(t.rel.reduced)] = y - z;
            break;
        }
        case OpKind::Dec: {
            uint64_t y = c.values[cs.counter_index(t.rel.reduced)];
            if (y == 0) return std::nullopt;
            next.values[cs.counter_index(t.rel.reduced)] = y - 1;
            break;
        }
        case OpKind::EraseTest: {
            if (c.values[cs.counter_index(t.rel.reduced)] != 0) return std::nullopt;
            break;
        }
    }
    for (auto& [v, u] : t.rel.post_guards)
        if (!u.contains(next.values[cs.counter_index(v)])) return std::nullopt;
    return next;
}

// ---------------------------------------------------------------------------
// Flatness and cycles

struct FlatnessReport {
    bool flat = true;
    std::vector<std::vector<uint32_t>> cycles;  // transition indices, in cycle order
    std::optional<uint32_t> offending_state;
};

inline FlatnessReport is_flat(const CounterSystem& cs) {
    FlatnessReport report;
    std::vector<std::vector<State>> adj(cs.states.size());
    for (auto& t : cs.transitions) adj[t.from].push_back(t.to);
    auto sccs = scc_decompose(uint32_t(cs.states.size()), adj);
    std::vector<uint32_t> scc_of(cs.states.size(), 0);
    for (uint32_t i = 0; i < sccs.size(); i++)
        for (State q : sccs[i]) scc_of[q] = i;

    for (uint32_t i = 0; i < sccs.size(); i++) {
        std::vector<uint32_t> intra;
        for (uint32_t t = 0; t < cs.transitions.size(); t++) {
            auto& tr = cs.transitions[t];
            if (scc_of[tr.from] == i && scc_of[tr.to] == i) intra.push_back(t);
        }
        if (intra.empty()) continue;
        std::map<uint32_t, uint32_t> outdeg, indeg;
        bool ok = intra.size() == sccs[i].size();
        for (uint32_t t : intra) {
            if (++outdeg[cs.transitions[t].from] > 1) ok = false;
            if (++indeg[cs.transitions[t].to] > 1) ok = false;
        }
        if (!ok) {
            report.flat = false;
            for (uint32_t t : intra) {
                if (outdeg[cs.transitions[t].from] > 1) {
                    report.offending_state = cs.transitions[t].from;
                    break;
                }
            }
            if (!report.offending_state) report.offending_state = sccs[i][0];
            continue;
        }
        // single simple cycle; walk it from the smallest node
        uint32_t start = *std::min_element(sccs[i].begin(), sccs[i].end());
        std::map<uint32_t, uint32_t> next_of;
        for (uint32_t t : intra) next_of[cs.transitions[t].from] = t;
        std::vector<uint32_t> cycle;
        uint32_t cur = start;
        do {
            uint32_t t = next_of.at(cur);
            cycle.push_back(t);
            cur = cs.transitions[t].to;
        } while (cur != start && cycle.size() <= intra.size());
        if (cur != start || cycle.size() != intra.size()) {
            report.flat = false;  // in/out degrees 1 but not a single cycle
            report.offending_state = start;
            continue;
        }
        report.cycles.push_back(std::move(cycle));
    }
    return report;
}

inline std::optional<VarId> cycle_shape(const CounterSystem& cs, const std::vector<uint32_t>& cycle) {
    if (cycle.empty()) throw NotACycle();
    for (size_t i = 0; i < cycle.size(); i++) {
        auto& cur = cs.transitions[cycle[i]];
        auto& nxt = cs.transitions[cycle[(i + 1) % cycle.size()]];
        if (cur.to != nxt.from) throw NotACycle();
    }
    std::optional<VarId> y;
    for (uint32_t t : cycle) {
        auto& rel = cs.transitions[t].rel;
        if (rel.kind != OpKind::Sub && rel.kind != OpKind::Dec) return std::nullopt;
        if (y && *y != rel.reduced) return std::nullopt;
        y = rel.reduced;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Exact reachability of a target state set (forward search; exhaustive since
// counters never increase, so the configuration space below a start is finite)

namespace detail {

struct ConfigHash {
    size_t operator()(const std::vector<uint64_t>& key) const {
        uint64_t h = 0xc0f1;
        for (uint64_t v : key) hash_mix(h, v);
        return size_t(h);
    }
};

inline std::vector<uint64_t> config_key(const Configuration& c) {
    std::vector<uint64_t> key{c.state};
    key.insert(key.end(), c.values.begin(), c.values.end());
    return key;
}

}  // namespace weq::detail

struct PreStarStep {
    uint32_t transition;
    Configuration config;  // configuration after the step
};

inline std::optional<std::vector<PreStarStep>> pre_star_path(
    const CounterSystem& cs, const std::set<uint32_t>& targets, const Configuration& start,
    StepSemantics semantics = StepSemantics::Strict, uint64_t budget = 1'000'000) {
    if (start.values.size() != cs.counters.size()) throw Error("configuration arity mismatch");
    auto out = cs.out_transitions();
    std::unordered_map<std::vector<uint64_t>, std::pair<std::vector<uint64_t>, uint32_t>,
                       detail::ConfigHash>
        parent;  // key -> (parent key, transition index)
    std::deque<Configuration> todo;
    auto reconstruct = [&](Configuration last) {
        std::vector<PreStarStep> path;
        auto key = detail::config_key(last);
        while (true) {
            auto it = parent.find(key);
            if (it == parent.end() || it->second.second == UINT32_MAX) break;
            path.push_back({it->second.second, last});
            key = it->second.first;
            last.state = uint32_t(key[0]);
            last.values.assign(key.begin() + 1, key.end());
        }
        std::reverse(path.begin(), path.end());
        return path;
    };

    parent.emplace(detail::config_key(start), std::make_pair(std::vector<uint64_t>{}, UINT32_MAX));
    if (targets.count(start.state)) return reconstruct(start);
    todo.push_back(start);
    while (!todo.empty()) {
        Configuration cur = std::move(todo.front());
        todo.pop_front();
        for (uint32_t t : out[cur.state]) {
            auto next = step(cs, cur, cs.transitions[t], semantics);
            if (!next) continue;
            auto key = detail::config_key(*next);
            if (parent.count(key)) continue;
            if (parent.size() >= budget) throw BudgetExceeded("reachability search configurations");
            parent.emplace(std::move(key), std::make_pair(detail::config_key(cur), t));
            if (targets.count(next->state)) return reconstruct(*next);
            todo.push_back(std::move(*next));
        }
    }
    return std::nullopt;
}

inline bool pre_star_membership(const CounterSystem& cs, const std::set<uint32_t>& targets,
                                const Configuration& start,
                                StepSemantics semantics = StepSemantics::Strict,
                                uint64_t budget = 1'000'000) {
    return pre_star_path(cs, targets, start, semantics, budget).has_value();
}

// ---------------------------------------------------------------------------
// DOT export

inline std::string semilinear_to_string(const UnarySemilinear& u) {
    std::string out = "{";
    for (size_t i = 0; i < u.offsets.size(); i++) out += (i ? "," : "") + std::to_string(u.offsets[i]);
    out += "}";
    if (!u.periodic_offsets.empty()) {
        out += "u({";
        for (size_t i = 0; i < u.periodic_offsets.size(); i++)
            out += (i ? "," : "") + std::to_string(u.periodic_offsets[i]);
        out += "}+" + std::to_string(u.period) + "N)";
    }
    return out;
}

inline std::string relation_to_string(const TransitionRelation& rel, const SymbolNames& names) {
    std::string out;
    switch (rel.kind) {
        case OpKind::Id: out = "ID"; break;
        case OpKind::Sub: out = "SUB(" + names.var(rel.reduced) + "," + names.var(rel.subtrahend) + ")"; break;
        case OpKind::Dec: out = "DEC(" + names.var(rel.reduced) + ")"; break;
        case OpKind::EraseTest: out = names.var(rel.reduced) + "=0"; break;
    }
    for (auto& [v, u] : rel.pre_guards) out += " " + names.var(v) + " in " + semilinear_to_string(u);
    for (auto& [v, u] : rel.post_guards) out += " " + names.var(v) + "' in " + semilinear_to_string(u);
    return out;
}

inline std::string counter_system_to_dot(const CounterSystem& cs, const SymbolNames& names) {
    std::ostringstream os;
    os << "digraph counters {\n  rankdir=LR;\n";
    for (uint32_t i = 0; i < cs.states.size(); i++) {
        os << "  n" << i << " [label=\"" << equation_to_string(cs.states[i].eq, names) << "\"";
        if (i == cs.root) os << ", shape=box";
        if (cs.states[i].is_success()) os << ", peripheries=2";
        os << "];\n";
    }
    for (auto& t : cs.transitions)
        os << "  n" << t.from << " -> n" << t.to << " [label=\"" << relation_to_string(t.rel, names)
           << "\"];\n";
    os << "}\n";
    return os.str();
}

}  // namespace weq

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "weq/counter_system.hpp"
#include "weq/pad.hpp"

namespace weq {

struct NotOneVarReducing : Error {
    explicit NotOneVarReducing(const std::string& what)
        : Error("cycle is not 1-variable-reducing: " + what) {}
};

struct NotFlat : Error {
    NotFlat() : Error("counter system is not flat") {}
};

struct NotAPath : Error {
    NotAPath() : Error("transitions do not form a path") {}
};

// counter -> formula variable, for the pre and post vector of a relation
struct VarMap {
    std::map<VarId, PadVar> pre;
    std::map<VarId, PadVar> post;
};

inline VarMap fresh_var_map(const std::vector<VarId>& counters, VarPool& pool) {
    VarMap vm;
    for (VarId v : counters) {
        vm.pre[v] = pool.fresh();
        vm.post[v] = pool.fresh();
    }
    return vm;
}

struct DecrementMultiset {
    uint64_t unit_count = 0;                 // number of Dec steps
    std::map<VarId, uint64_t> var_counts;    // number of Sub(y,x) steps per x

    uint64_t total() const {
        uint64_t n = unit_count;
        for (auto& [v, c] : var_counts) n += c;
        return n;
    }
};

inline DecrementMultiset decrements_of(const CounterSystem& cs, const std::vector<uint32_t>& cycle) {
    DecrementMultiset m;
    for (uint32_t t : cycle) {
        auto& rel = cs.transitions[t].rel;
        if (rel.kind == OpKind::Dec)
            m.unit_count++;
        else if (rel.kind == OpKind::Sub)
            m.var_counts[rel.subtrahend]++;
        else
            throw NotOneVarReducing("non Sub/Dec transition on cycle");
    }
    return m;
}

// ---------------------------------------------------------------------------
// Single-transition relation formula (guards lowered into membership atoms)

inline PadFormula step_formula(const CounterSystem& cs, const CounterTransition& t, const VarMap& vm,
                               VarPool& pool) {
    std::vector<PadFormula> parts;
    auto pre = [&](VarId v) { return LinearTerm::var(vm.pre.at(v)); };
    auto post = [&](VarId v) { return LinearTerm::var(vm.post.at(v)); };

    for (auto& [v, u] : t.rel.pre_guards) parts.push_back(lower_unary_membership(pre(v), u, pool));

    switch (t.rel.kind) {
        case OpKind::Id:
            for (VarId v : cs.counters) parts.push_back(PadFormula::eq(post(v), pre(v)));
            break;
        case OpKind::Sub: {
            VarId y = t.rel.reduced, z = t.rel.subtrahend;
            parts.push_back(PadFormula::leq(LinearTerm::of(1), pre(z)));
            parts.push_back(PadFormula::leq(pre(z), pre(y)));
            parts.push_back(PadFormula::eq(post(y), pre(y) - pre(z)));
            for (VarId v : cs.counters)
                if (v != y) parts.push_back(PadFormula::eq(post(v), pre(v)));
            break;
        }
        case OpKind::Dec: {
            VarId y = t.rel.reduced;
            parts.push_back(PadFormula::leq(LinearTerm::of(1), pre(y)));
            parts.push_back(PadFormula::eq(post(y), pre(y) - LinearTerm::of(1)));
            for (VarId v : cs.counters)
                if (v != y) parts.push_back(PadFormula::eq(post(v), pre(v)));
            break;
        }
        case OpKind::EraseTest: {
            parts.push_back(PadFormula::eq(pre(t.rel.reduced), LinearTerm::of(0)));
            for (VarId v : cs.counters) parts.push_back(PadFormula::eq(post(v), pre(v)));
            break;
        }
    }
    for (auto& [v, u] : t.rel.post_guards) parts.push_back(lower_unary_membership(post(v), u, pool));
    return PadFormula::conj(std::move(parts));
}

inline PadFormula identity_formula(const std::vector<VarId>& counters, const VarMap& vm) {
    std::vector<PadFormula> parts;
    for (VarId v : counters)
        parts.push_back(PadFormula::eq(LinearTerm::var(vm.post.at(v)), LinearTerm::var(vm.pre.at(v))));
    return PadFormula::conj(std::move(parts));
}

// ---------------------------------------------------------------------------
// Cycle acceleration

// Any number of full turns around an unguarded 1-variable-reducing cycle:
// the per-turn decrement total divides y - y', nothing else moves.
inline PadFormula accelerate_cycle(const CounterSystem& cs, const std::vector<uint32_t>& cycle,
                                   const VarMap& vm, VarPool& /*pool*/) {
    auto y = cycle_shape(cs, cycle);
    if (!y) throw NotOneVarReducing("no single reduced counter");
    for (uint32_t t : cycle)
        if (!cs.transitions[t].rel.pre_guards.empty() || !cs.transitions[t].rel.post_guards.empty())
            throw Error("accelerate_cycle requires an unguarded cycle");
    DecrementMultiset m = decrements_of(cs, cycle);

    auto pre = [&](VarId v) { return LinearTerm::var(vm.pre.at(v)); };
    auto post = [&](VarId v) { return LinearTerm::var(vm.post.at(v)); };
    LinearTerm divisor = LinearTerm::of(int64_t(m.unit_count));
    for (auto& [x, c] : m.var_counts) divisor += int64_t(c) * pre(x);

    std::vector<PadFormula> parts;
    parts.push_back(PadFormula::divides(divisor, pre(*y) - post(*y)));
    parts.push_back(PadFormula::leq(post(*y), pre(*y)));
    for (VarId v : cs.counters)
        if (v != *y) parts.push_back(PadFormula::eq(post(v), pre(v)));
    return PadFormula::conj(std::move(parts));
}

// Guarded variant: besides the divisibility core, every intermediate value of
// the reduced counter must satisfy the cycle's unary guards. The universal
// check collapses to finitely many checkpoints per guard (pigeonhole on the
// progressions), one conjunct per index up to maxA + |A'| + 1; extra_expansion
// widens that bound, which must never change the relation.
inline PadFormula accelerate_cycle_guarded(const CounterSystem& cs, const std::vector<uint32_t>& cycle,
                                           const VarMap& vm, VarPool& pool,
                                           uint64_t extra_expansion = 0) {
    auto y_opt = cycle_shape(cs, cycle);
    if (!y_opt) throw NotOneVarReducing("no single reduced counter");
    VarId y = *y_opt;
    const size_t n = cycle.size();

    auto pre = [&](VarId v) { return LinearTerm::var(vm.pre.at(v)); };
    auto post = [&](VarId v) { return LinearTerm::var(vm.post.at(v)); };

    // per-position decrement terms and suffix sums
    std::vector<LinearTerm> alpha(n);
    for (size_t i = 0; i < n; i++) {
        auto& rel = cs.transitions[cycle[i]].rel;
        alpha[i] = rel.kind == OpKind::Dec ? LinearTerm::of(1) : pre(rel.subtrahend);
    }
    std::vector<LinearTerm> suffix(n + 1);
    suffix[n] = LinearTerm::of(0);
    for (size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + alpha[i];
    const LinearTerm& f = suffix[0];

    // divisibility core on the guard-stripped cycle
    DecrementMultiset m = decrements_of(cs, cycle);
    LinearTerm divisor = LinearTerm::of(int64_t(m.unit_count));
    for (auto& [x, c] : m.var_counts) divisor += int64_t(c) * pre(x);

    std::vector<PadFormula> pump;
    pump.push_back(PadFormula::divides(divisor, pre(y) - post(y)));
    pump.push_back(PadFormula::leq(post(y), pre(y)));
    for (VarId v : cs.counters)
        if (v != y) pump.push_back(PadFormula::eq(post(v), pre(v)));

    // guards on frozen counters hold iff they hold at the entry values
    std::vector<std::pair<VarId, UnarySemilinear>> frozen_guards;
    auto add_frozen = [&](const std::map<VarId, UnarySemilinear>& gs) {
        for (auto& [v, u] : gs) {
            if (v == y) continue;
            std::pair<VarId, UnarySemilinear> item{v, u};
            if (std::find(frozen_guards.begin(), frozen_guards.end(), item) == frozen_guards.end())
                frozen_guards.push_back(std::move(item));
        }
    };
    for (uint32_t t : cycle) {
        add_frozen(cs.transitions[t].rel.pre_guards);
        add_frozen(cs.transitions[t].rel.post_guards);
    }
    for (auto& [v, u] : frozen_guards) pump.push_back(lower_unary_membership(pre(v), u, pool));

    // checkpoint families for guards on y: entering position i during the k-th
    // turn from the end the value is y' + k*f + suffix_i; values after the
    // last transition (including the final y') form the offset-0 family.
    struct Family {
        LinearTerm offset;
        std::vector<UnarySemilinear> guards;
    };
    std::vector<Family> families;
    for (size_t i = 0; i < n; i++) {
        Family fam{suffix[i], {}};
        auto collect = [&](const std::map<VarId, UnarySemilinear>& gs) {
            auto it = gs.find(y);
            if (it != gs.end()) fam.guards.push_back(it->second);
        };
        collect(cs.transitions[cycle[i]].rel.pre_guards);
        if (i > 0) collect(cs.transitions[cycle[i - 1]].rel.post_guards);
        if (!fam.guards.empty()) families.push_back(std::move(fam));
    }
    {
        Family fam{LinearTerm::of(0), {}};
        auto it = cs.transitions[cycle[n - 1]].rel.post_guards.find(y);
        if (it != cs.transitions[cycle[n - 1]].rel.post_guards.end()) fam.guards.push_back(it->second);
        if (!fam.guards.empty()) families.push_back(std::move(fam));
    }

    for (auto& fam : families) {
        for (auto& u : fam.guards) {
            uint64_t a = u.offsets.empty() ? 0 : u.offsets.back();
            uint64_t expansion = a + u.periodic_offsets.size() + 1 + extra_expansion;
            for (uint64_t j = 0; j <= expansion; j++) {
                LinearTerm value = post(y) + int64_t(j) * f + fam.offset;
                LinearTerm turn_bound = post(y) + int64_t(j + 1) * f;
                pump.push_back(PadFormula::disj(
                    {PadFormula::leq(pre(y) + LinearTerm::of(1), turn_bound),  // beyond the last turn
                     lower_unary_membership(value, u, pool)}));
            }
        }
    }

    return PadFormula::disj({identity_formula(cs.counters, vm), PadFormula::conj(std::move(pump))});
}

// ---------------------------------------------------------------------------
// Relational composition of a transition sequence

inline PadFormula path_formula(const CounterSystem& cs, const std::vector<uint32_t>& segment,
                               const VarMap& vm, VarPool& pool) {
    for (size_t i = 0; i + 1 < segment.size(); i++)
        if (cs.transitions[segment[i]].to != cs.transitions[segment[i + 1]].from) throw NotAPath();
    if (segment.empty()) return identity_formula(cs.counters, vm);

    std::vector<PadFormula> parts;
    std::vector<PadVar> intermediates;
    std::map<VarId, PadVar> cur = vm.pre;
    for (size_t i = 0; i < segment.size(); i++) {
        std::map<VarId, PadVar> next;
        if (i + 1 == segment.size()) {
            next = vm.post;
        } else {
            for (VarId v : cs.counters) {
                next[v] = pool.fresh();
                intermediates.push_back(next[v]);
            }
        }
        parts.push_back(step_formula(cs, cs.transitions[segment[i]], {cur, next}, pool));
        cur = std::move(next);
    }
    PadFormula body = PadFormula::conj(std::move(parts));
    for (auto it = intermediates.rbegin(); it != intermediates.rend(); ++it) {
        body = PadFormula::exists(
            *it, PadFormula::conj({PadFormula::leq(LinearTerm::of(0), LinearTerm::var(*it)), body}));
    }
    return body;
}

// ---------------------------------------------------------------------------
// Flat reachability: enumerate path schemas through the cycle-contracted dag
// and compose segment and pump formulas.

struct PathSchema {
    struct Op {
        enum class Kind { Pump, Move } kind;
        uint32_t index;  // node (Pump) or transition (Move)
    };
    uint32_t from = 0;
    uint32_t to = 0;
    std::vector<Op> ops;
};

namespace detail {

struct FlatStructure {
    FlatnessReport report;
    std::vector<int> cycle_of_node;  // -1 when not on a cycle
    std::vector<std::vector<uint32_t>> cycle_nodes;

    explicit FlatStructure(const CounterSystem& cs) : report(is_flat(cs)) {
        if (!report.flat) throw NotFlat();
        cycle_of_node.assign(cs.states.size(), -1);
        cycle_nodes.resize(report.cycles.size());
        for (size_t k = 0; k < report.cycles.size(); k++) {
            for (uint32_t t : report.cycles[k]) {
                cycle_of_node[cs.transitions[t].from] = int(k);
                cycle_nodes[k].push_back(cs.transitions[t].from);
            }
        }
    }

    bool same_class(const CounterSystem& cs, uint32_t a, uint32_t b) const {
        if (a == b) return true;
        return cycle_of_node[a] != -1 && cycle_of_node[a] == cycle_of_node[b];
    }

    // transitions along the cycle from node u up to (excluding) node w
    std::vector<uint32_t> cycle_walk(const CounterSystem& cs, uint32_t u, uint32_t w) const {
        std::vector<uint32_t> walk;
        int k = cycle_of_node[u];
        const auto& cyc = report.cycles[k];
        size_t start = 0;
        while (cs.transitions[cyc[start]].from != u) start++;
        uint32_t cur = u;
        size_t i = start;
        while (cur != w) {
            walk.push_back(cyc[i % cyc.size()]);
            cur = cs.transitions[cyc[i % cyc.size()]].to;
            i++;
            if (walk.size() > cyc.size()) throw Error("cycle walk did not close");
        }
        return walk;
    }
};

}  // namespace weq::detail

inline std::vector<PathSchema> enumerate_schemas(const CounterSystem& cs, uint32_t p, uint32_t q) {
    detail::FlatStructure fs(cs);
    std::vector<PathSchema> schemas;
    auto out = cs.out_transitions();

    std::function<void(uint32_t, std::vector<PathSchema::Op>&)> visit =
        [&](uint32_t entry, std::vector<PathSchema::Op>& ops) {
            bool cyclic = fs.cycle_of_node[entry] != -1;
            size_t mark = ops.size();
            if (cyclic) ops.push_back({PathSchema::Op::Kind::Pump, entry});

            if (fs.same_class(cs, entry, q)) {
                std::vector<PathSchema::Op> finished = ops;
                if (cyclic)
                    for (uint32_t t : fs.cycle_walk(cs, entry, q))
                        finished.push_back({PathSchema::Op::Kind::Move, t});
                schemas.push_back({p, q, std::move(finished)});
            } else {
                // leave the class through any outgoing inter-class transition
                std::vector<uint32_t> class_nodes =
                    cyclic ? fs.cycle_nodes[fs.cycle_of_node[entry]] : std::vector<uint32_t>{entry};
                for (uint32_t w : class_nodes) {
                    for (uint32_t t : out[w]) {
                        if (fs.same_class(cs, w, cs.transitions[t].to)) continue;
                        size_t mark2 = ops.size();
                        if (cyclic)
                            for (uint32_t step : fs.cycle_walk(cs, entry, w))
                                ops.push_back({PathSchema::Op::Kind::Move, step});
                        ops.push_back({PathSchema::Op::Kind::Move, t});
                        visit(cs.transitions[t].to, ops);
                        ops.resize(mark2);
                    }
                }
            }
            ops.resize(mark);
        };

    std::vector<PathSchema::Op> ops;
    visit(p, ops);
    return schemas;
}

namespace detail {

// When close_post is set, the post vector is existentially bound innermost,
// so evaluation resolves the chain left to right from a ground pre vector.
inline PadFormula schema_formula_impl(const CounterSystem& cs, const PathSchema& schema,
                                      const VarMap& vm, VarPool& pool, bool close_post) {
    FlatStructure fs(cs);
    if (schema.ops.empty())
        return close_post ? PadFormula::trivially_true() : identity_formula(cs.counters, vm);

    std::vector<PadFormula> parts;
    std::vector<PadVar> intermediates;
    std::map<VarId, PadVar> cur = vm.pre;
    for (size_t i = 0; i < schema.ops.size(); i++) {
        std::map<VarId, PadVar> next;
        if (i + 1 == schema.ops.size() && !close_post) {
            next = vm.post;
        } else {
            for (VarId v : cs.counters) {
                next[v] = pool.fresh();
                intermediates.push_back(next[v]);
            }
        }
        const auto& op = schema.ops[i];
        if (op.kind == PathSchema::Op::Kind::Move) {
            parts.push_back(step_formula(cs, cs.transitions[op.index], {cur, next}, pool));
        } else {
            int k = fs.cycle_of_node[op.index];
            const auto& cyc = fs.report.cycles[k];
            size_t start = 0;
            while (cs.transitions[cyc[start]].from != op.index) start++;
            std::vector<uint32_t> rotated;
            for (size_t j = 0; j < cyc.size(); j++) rotated.push_back(cyc[(start + j) % cyc.size()]);
            parts.push_back(accelerate_cycle_guarded(cs, rotated, {cur, next}, pool));
        }
        cur = std::move(next);
    }
    PadFormula body = PadFormula::conj(std::move(parts));
    for (auto it = intermediates.rbegin(); it != intermediates.rend(); ++it) {
        body = PadFormula::exists(
            *it, PadFormula::conj({PadFormula::leq(LinearTerm::of(0), LinearTerm::var(*it)), body}));
    }
    return body;
}

}  // namespace weq::detail

inline PadFormula schema_formula(const CounterSystem& cs, const PathSchema& schema, const VarMap& vm,
                                 VarPool& pool) {
    return detail::schema_formula_impl(cs, schema, vm, pool, false);
}

namespace detail {

inline void check_cycle_shapes(const CounterSystem& cs, const FlatStructure& fs) {
    for (size_t k = 0; k < fs.report.cycles.size(); k++)
        if (!cycle_shape(cs, fs.report.cycles[k]))
            throw NotOneVarReducing("cycle #" + std::to_string(k));
}

}  // namespace weq::detail

// Reachability relation (p, pre) ->* (q, post) for a flat counter system all
// of whose cycles are 1-variable-reducing.
inline PadFormula flat_reachability(const CounterSystem& cs, uint32_t p, uint32_t q, const VarMap& vm,
                                    VarPool& pool) {
    detail::FlatStructure fs(cs);
    detail::check_cycle_shapes(cs, fs);
    std::vector<PadFormula> branches;
    for (auto& schema : enumerate_schemas(cs, p, q))
        branches.push_back(schema_formula(cs, schema, vm, pool));
    return PadFormula::disj(std::move(branches));
}

// Same relation with the target counters existentially closed: a predicate in
// the pre vector alone, "some configuration at q is reachable".
inline PadFormula flat_reachability_closed(const CounterSystem& cs, uint32_t p, uint32_t q,
                                           const std::map<VarId, PadVar>& pre, VarPool& pool) {
    detail::FlatStructure fs(cs);
    detail::check_cycle_shapes(cs, fs);
    std::vector<PadFormula> branches;
    for (auto& schema : enumerate_schemas(cs, p, q)) {
        VarMap vm{pre, {}};
        branches.push_back(detail::schema_formula_impl(cs, schema, vm, pool, true));
    }
    return PadFormula::disj(std::move(branches));
}

}  // namespace weq

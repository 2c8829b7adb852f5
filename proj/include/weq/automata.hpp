#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "weq/core.hpp"

namespace weq {

using State = uint32_t;

struct BadState : Error {
    explicit BadState(State q) : Error("state out of range: " + std::to_string(q)) {}
};

struct EmptyList : Error {
    EmptyList() : Error("empty automaton list") {}
};

// ---------------------------------------------------------------------------
// NFA with a single initial and a single final state, no epsilon moves.

struct NfaTransition {
    State from;
    Letter letter;
    State to;
    friend auto operator<=>(const NfaTransition&, const NfaTransition&) = default;
};

struct Nfa {
    uint32_t alphabet_size = 0;
    uint32_t num_states = 0;
    std::vector<NfaTransition> transitions;
    State initial = 0;
    State final = 0;

    void check_state(State q) const {
        if (q >= num_states) throw BadState(q);
    }

    void add_transition(State p, Letter a, State q) {
        check_state(p);
        check_state(q);
        transitions.push_back({p, a, q});
    }

    // successor states per source state, letters merged (length projection)
    std::vector<std::vector<State>> adjacency() const {
        std::vector<std::vector<State>> adj(num_states);
        for (auto& t : transitions) adj[t.from].push_back(t.to);
        return adj;
    }

    friend bool operator==(const Nfa&, const Nfa&) = default;
};

inline Nfa nfa_slice(const Nfa& aut, State p, State q) {
    aut.check_state(p);
    aut.check_state(q);
    Nfa out = aut;
    out.initial = p;
    out.final = q;
    return out;
}

inline bool nfa_accepts(const Nfa& aut, const ConstWord& w) {
    std::vector<bool> cur(aut.num_states, false);
    cur[aut.initial] = true;
    for (Letter a : w) {
        std::vector<bool> next(aut.num_states, false);
        bool any = false;
        for (auto& t : aut.transitions)
            if (t.letter == a && cur[t.from]) {
                next[t.to] = true;
                any = true;
            }
        if (!any) return false;
        cur = std::move(next);
    }
    return cur[aut.final];
}

inline Nfa nfa_product(const Nfa& a, const Nfa& b) {
    Nfa out;
    out.alphabet_size = std::max(a.alphabet_size, b.alphabet_size);
    out.num_states = a.num_states * b.num_states;
    auto enc = [&](State p, State q) { return p * b.num_states + q; };
    for (auto& ta : a.transitions)
        for (auto& tb : b.transitions)
            if (ta.letter == tb.letter)
                out.transitions.push_back({enc(ta.from, tb.from), ta.letter, enc(ta.to, tb.to)});
    out.initial = enc(a.initial, b.initial);
    out.final = enc(a.final, b.final);
    return out;
}

inline Nfa nfa_intersection(const std::vector<Nfa>& auts) {
    if (auts.empty()) throw EmptyList();
    Nfa out = auts[0];
    for (size_t i = 1; i < auts.size(); i++) out = nfa_product(out, auts[i]);
    return out;
}

// ---------------------------------------------------------------------------
// SCC decomposition (iterative Tarjan), used for 1-weak detection.

inline std::vector<std::vector<State>> scc_decompose(uint32_t n, const std::vector<std::vector<State>>& adj) {
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<State> stack;
    std::vector<std::vector<State>> sccs;
    int next_index = 0;

    struct Frame {
        State v;
        size_t child;
    };
    for (State root = 0; root < n; root++) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.child < adj[f.v].size()) {
                State w = adj[f.v][f.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                State v = f.v;
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
                if (low[v] == index[v]) {
                    std::vector<State> comp;
                    while (true) {
                        State w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp.push_back(w);
                        if (w == v) break;
                    }
                    sccs.push_back(std::move(comp));
                }
            }
        }
    }
    return sccs;
}

inline bool is_one_weak(const Nfa& aut) {
    for (auto& comp : scc_decompose(aut.num_states, aut.adjacency()))
        if (comp.size() > 1) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Unary semilinear sets A u (A' + bN)

struct UnarySemilinear {
    std::vector<uint64_t> offsets;           // A, sorted
    std::vector<uint64_t> periodic_offsets;  // A', sorted
    uint64_t period = 1;                     // b >= 1

    bool empty() const { return offsets.empty() && periodic_offsets.empty(); }

    bool contains(uint64_t n) const {
        if (std::binary_search(offsets.begin(), offsets.end(), n)) return true;
        for (uint64_t a : periodic_offsets)
            if (n >= a && (n - a) % period == 0) return true;
        return false;
    }

    // true iff the set is all of N
    bool universal() const {
        uint64_t horizon = period;
        for (uint64_t a : offsets) horizon = std::max(horizon, a + 1);
        for (uint64_t a : periodic_offsets) horizon = std::max(horizon, a + 1);
        for (uint64_t n = 0; n <= horizon + period; n++)
            if (!contains(n)) return false;
        return true;
    }

    uint64_t max_magnitude() const {
        uint64_t m = period;
        for (uint64_t a : offsets) m = std::max(m, a);
        for (uint64_t a : periodic_offsets) m = std::max(m, a);
        return m;
    }

    static UnarySemilinear all_naturals() { return {{}, {0}, 1}; }
    static UnarySemilinear none() { return {{}, {}, 1}; }

    friend bool operator==(const UnarySemilinear&, const UnarySemilinear&) = default;
};

inline bool semilinear_contains(const UnarySemilinear& u, uint64_t n) { return u.contains(n); }

namespace detail {

struct BitsetHash {
    size_t operator()(const std::vector<uint64_t>& v) const {
        uint64_t h = 0x12345;
        for (uint64_t w : v) hash_mix(h, w);
        return size_t(h);
    }
};

// Restrict to states reachable from the initial state and co-reachable from
// the final state; returns the kept-state mask.
inline std::vector<bool> useful_states(const Nfa& aut) {
    auto adj = aut.adjacency();
    std::vector<std::vector<State>> radj(aut.num_states);
    for (auto& t : aut.transitions) radj[t.to].push_back(t.from);
    auto bfs = [&](State start, const std::vector<std::vector<State>>& g) {
        std::vector<bool> seen(aut.num_states, false);
        std::vector<State> todo{start};
        seen[start] = true;
        while (!todo.empty()) {
            State v = todo.back();
            todo.pop_back();
            for (State w : g[v])
                if (!seen[w]) {
                    seen[w] = true;
                    todo.push_back(w);
                }
        }
        return seen;
    };
    auto fwd = bfs(aut.initial, adj);
    auto bwd = bfs(aut.final, radj);
    std::vector<bool> keep(aut.num_states);
    for (State q = 0; q < aut.num_states; q++) keep[q] = fwd[q] && bwd[q];
    return keep;
}

}  // namespace detail

// Exact set of accepted word lengths, as a single-period semilinear set.
// Works on the unary projection: iterate reachable state subsets per length
// until the subset sequence repeats, then minimize period and threshold.
// The representation magnitudes are checked against the quadratic bound
// n^2+n in the (trimmed) state count.
inline UnarySemilinear length_abstraction(const Nfa& aut, uint64_t max_steps = 1u << 16) {
    auto keep = detail::useful_states(aut);
    if (!keep[aut.initial] || !keep[aut.final]) return UnarySemilinear::none();

    // compact renumbering of useful states
    std::vector<int> remap(aut.num_states, -1);
    uint32_t n = 0;
    for (State q = 0; q < aut.num_states; q++)
        if (keep[q]) remap[q] = int(n++);
    const uint32_t words = (n + 63) / 64;
    std::vector<std::vector<uint64_t>> adj_bits(n, std::vector<uint64_t>(words, 0));
    for (auto& t : aut.transitions)
        if (keep[t.from] && keep[t.to]) {
            uint32_t to = uint32_t(remap[t.to]);
            adj_bits[remap[t.from]][to / 64] |= 1ull << (to % 64);
        }
    const uint32_t init = uint32_t(remap[aut.initial]);
    const uint32_t fin = uint32_t(remap[aut.final]);

    std::vector<uint64_t> cur(words, 0);
    cur[init / 64] |= 1ull << (init % 64);

    std::unordered_map<std::vector<uint64_t>, uint64_t, detail::BitsetHash> seen;
    std::vector<bool> accept_at;  // membership bit per length
    uint64_t transient = 0, seq_period = 0;
    for (uint64_t step = 0;; step++) {
        auto it = seen.find(cur);
        if (it != seen.end()) {
            transient = it->second;
            seq_period = step - it->second;
            break;
        }
        if (step >= max_steps) throw BudgetExceeded("length abstraction subset iteration");
        seen.emplace(cur, step);
        accept_at.push_back((cur[fin / 64] >> (fin % 64)) & 1);
        std::vector<uint64_t> next(words, 0);
        for (uint32_t q = 0; q < n; q++)
            if ((cur[q / 64] >> (q % 64)) & 1)
                for (uint32_t w = 0; w < words; w++) next[w] |= adj_bits[q][w];
        cur = std::move(next);
        bool any = false;
        for (uint64_t w : cur) any |= (w != 0);
        if (!any) {  // dead end: finite length set
            transient = step + 1;
            seq_period = 1;
            accept_at.push_back(false);
            break;
        }
    }

    auto member = [&](uint64_t k) -> bool {
        if (k < accept_at.size() && k < transient) return accept_at[k];
        uint64_t base = transient + (k - transient) % seq_period;
        return accept_at[base];
    };

    // minimal eventual period: smallest divisor of seq_period valid above transient
    uint64_t b = seq_period;
    for (uint64_t d = 1; d <= seq_period; d++) {
        if (seq_period % d != 0) continue;
        bool ok = true;
        for (uint64_t k = transient; k < transient + seq_period && ok; k++)
            ok = (member(k) == member(k + d));
        if (ok) {
            b = d;
            break;
        }
    }
    // minimal threshold for period b
    uint64_t threshold = transient;
    while (threshold > 0 && member(threshold - 1) == member(threshold - 1 + b)) threshold--;

    UnarySemilinear out;
    out.period = b;
    for (uint64_t k = 0; k < threshold; k++)
        if (member(k)) out.offsets.push_back(k);
    for (uint64_t k = threshold; k < threshold + b; k++)
        if (member(k)) out.periodic_offsets.push_back(k);
    if (out.periodic_offsets.empty()) out.period = 1;

    uint64_t bound = uint64_t(n) * n + n;
    if (out.max_magnitude() > std::max<uint64_t>(bound, 1))
        throw Error("length abstraction exceeded the quadratic magnitude bound (" +
                    std::to_string(out.max_magnitude()) + " > " + std::to_string(bound) + ")");
    return out;
}

// Finds some accepted word of exact length len, if any (smallest-letter-first).
inline std::optional<ConstWord> nfa_word_of_length(const Nfa& aut, uint64_t len) {
    // reach[r][q]: final reachable from q in exactly r steps
    std::vector<std::vector<bool>> reach(len + 1, std::vector<bool>(aut.num_states, false));
    reach[0][aut.final] = true;
    for (uint64_t r = 1; r <= len; r++)
        for (auto& t : aut.transitions)
            if (reach[r - 1][t.to]) reach[r][t.from] = true;
    if (!reach[len][aut.initial]) return std::nullopt;
    ConstWord out;
    State q = aut.initial;
    for (uint64_t r = len; r > 0; r--) {
        const NfaTransition* best = nullptr;
        for (auto& t : aut.transitions)
            if (t.from == q && reach[r - 1][t.to] && (!best || t.letter < best->letter)) best = &t;
        out.push_back(best->letter);
        q = best->to;
    }
    return out;
}

}  // namespace weq

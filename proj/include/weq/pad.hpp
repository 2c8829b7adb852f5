#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "weq/automata.hpp"
#include "weq/core.hpp"

namespace weq {

using PadVar = uint32_t;
using Valuation = std::map<PadVar, uint64_t>;

struct UnboundVariable : Error {
    explicit UnboundVariable(PadVar v) : Error("unbound variable #" + std::to_string(v)) {}
};

struct UnboundedExistential : Error {
    UnboundedExistential() : Error("cannot derive a finite range for an existential variable") {}
};

// ---------------------------------------------------------------------------
// Linear terms over naturals with integer coefficients

struct LinearTerm {
    std::map<PadVar, int64_t> coeffs;
    int64_t constant = 0;

    static LinearTerm var(PadVar v) {
        LinearTerm t;
        t.coeffs[v] = 1;
        return t;
    }
    static LinearTerm of(int64_t c) {
        LinearTerm t;
        t.constant = c;
        return t;
    }

    LinearTerm& operator+=(const LinearTerm& o) {
        for (auto& [v, c] : o.coeffs)
            if ((coeffs[v] += c) == 0) coeffs.erase(v);
        constant += o.constant;
        return *this;
    }
    friend LinearTerm operator+(LinearTerm a, const LinearTerm& b) { return a += b; }
    friend LinearTerm operator-(LinearTerm a, const LinearTerm& b) {
        for (auto& [v, c] : b.coeffs)
            if ((a.coeffs[v] -= c) == 0) a.coeffs.erase(v);
        a.constant -= b.constant;
        return a;
    }
    friend LinearTerm operator*(int64_t k, LinearTerm t) {
        if (k == 0) return LinearTerm::of(0);
        for (auto& [v, c] : t.coeffs) c *= k;
        t.constant *= k;
        return t;
    }

    int64_t value(const Valuation& env) const {
        int64_t acc = constant;
        for (auto& [v, c] : coeffs) {
            auto it = env.find(v);
            if (it == env.end()) throw UnboundVariable(v);
            acc += c * int64_t(it->second);
        }
        return acc;
    }

    friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

// ---------------------------------------------------------------------------
// Existential PAD formulas (negation-free by construction)

class PadFormula {
public:
    enum class Kind { Leq, Eq, Divides, And, Or, Exists };

    struct Node {
        Kind kind;
        LinearTerm t1, t2;               // atoms
        std::vector<PadFormula> children;  // And/Or
        PadVar bound = 0;                // Exists
    };

    PadFormula() : node_(trivially_true().node_) {}

    static PadFormula leq(LinearTerm a, LinearTerm b) { return atom(Kind::Leq, std::move(a), std::move(b)); }
    static PadFormula eq(LinearTerm a, LinearTerm b) { return atom(Kind::Eq, std::move(a), std::move(b)); }
    static PadFormula divides(LinearTerm d, LinearTerm n) { return atom(Kind::Divides, std::move(d), std::move(n)); }

    // desugared comparisons (negation-free)
    static PadFormula lt(LinearTerm a, LinearTerm b) { return leq(std::move(a) + LinearTerm::of(1), std::move(b)); }
    static PadFormula geq(LinearTerm a, LinearTerm b) { return leq(std::move(b), std::move(a)); }
    static PadFormula gt(LinearTerm a, LinearTerm b) { return lt(std::move(b), std::move(a)); }
    static PadFormula neq(LinearTerm a, LinearTerm b) { return disj({lt(a, b), gt(a, b)}); }

    static PadFormula conj(std::vector<PadFormula> fs) {
        std::vector<PadFormula> flat;
        for (auto& f : fs) {
            if (f.kind() == Kind::And) {
                for (auto& c : f.node_->children) flat.push_back(c);
            } else {
                flat.push_back(std::move(f));
            }
        }
        if (flat.size() == 1) return flat[0];
        auto n = std::make_shared<Node>();
        n->kind = Kind::And;
        n->children = std::move(flat);
        return PadFormula(std::move(n));
    }

    static PadFormula disj(std::vector<PadFormula> fs) {
        std::vector<PadFormula> flat;
        for (auto& f : fs) {
            if (f.kind() == Kind::Or) {
                for (auto& c : f.node_->children) flat.push_back(c);
            } else {
                flat.push_back(std::move(f));
            }
        }
        if (flat.size() == 1) return flat[0];
        auto n = std::make_shared<Node>();
        n->kind = Kind::Or;
        n->children = std::move(flat);
        return PadFormula(std::move(n));
    }

    static PadFormula exists(PadVar v, PadFormula body) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Exists;
        n->bound = v;
        n->children.push_back(std::move(body));
        return PadFormula(std::move(n));
    }

    static PadFormula trivially_true() { return conj({}); }
    static PadFormula trivially_false() { return disj({}); }

    Kind kind() const { return node_->kind; }
    const LinearTerm& lhs() const { return node_->t1; }
    const LinearTerm& rhs() const { return node_->t2; }
    const std::vector<PadFormula>& children() const { return node_->children; }
    PadVar bound_var() const { return node_->bound; }

    bool structurally_equal(const PadFormula& o) const {
        if (node_ == o.node_) return true;
        if (kind() != o.kind()) return false;
        switch (kind()) {
            case Kind::Leq:
            case Kind::Eq:
            case Kind::Divides:
                return lhs() == o.lhs() && rhs() == o.rhs();
            case Kind::Exists:
                if (bound_var() != o.bound_var()) return false;
                [[fallthrough]];
            case Kind::And:
            case Kind::Or: {
                if (children().size() != o.children().size()) return false;
                for (size_t i = 0; i < children().size(); i++)
                    if (!children()[i].structurally_equal(o.children()[i])) return false;
                return true;
            }
        }
        return false;
    }

private:
    static PadFormula atom(Kind k, LinearTerm a, LinearTerm b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->t1 = std::move(a);
        n->t2 = std::move(b);
        return PadFormula(std::move(n));
    }
    explicit PadFormula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

struct VarPool {
    PadVar next = 0;
    PadVar fresh() { return next++; }
    void reserve_up_to(PadVar v) { next = std::max(next, v + 1); }
};

inline void collect_free_vars(const PadFormula& f, std::set<PadVar>& out, std::set<PadVar>& bound) {
    switch (f.kind()) {
        case PadFormula::Kind::Leq:
        case PadFormula::Kind::Eq:
        case PadFormula::Kind::Divides:
            for (auto* t : {&f.lhs(), &f.rhs()})
                for (auto& [v, c] : t->coeffs)
                    if (!bound.count(v)) out.insert(v);
            break;
        case PadFormula::Kind::Exists: {
            bool fresh_here = bound.insert(f.bound_var()).second;
            collect_free_vars(f.children()[0], out, bound);
            if (fresh_here) bound.erase(f.bound_var());
            break;
        }
        default:
            for (auto& c : f.children()) collect_free_vars(c, out, bound);
    }
}

inline std::set<PadVar> free_vars(const PadFormula& f) {
    std::set<PadVar> out, bound;
    collect_free_vars(f, out, bound);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation. Existentials are resolved by searching a finite range derived
// from the ground context (equalities pin exact candidates; inequalities and
// divisibility by a nonzero ground dividend give upper bounds).

namespace detail {

struct Candidates {
    // exact: the witness, if any, is one of `values`; otherwise any value up
    // to `bound` may be a witness.
    bool exact = false;
    std::vector<uint64_t> values;
    std::optional<uint64_t> bound;

    static Candidates none() { return {}; }
    static Candidates empty_set() { return {true, {}, std::nullopt}; }
    bool informative() const { return exact || bound.has_value(); }
};

inline std::optional<int64_t> partial_value(const LinearTerm& t, const Valuation& env, PadVar skip,
                                            int64_t& skip_coeff) {
    int64_t acc = t.constant;
    skip_coeff = 0;
    for (auto& [v, c] : t.coeffs) {
        if (v == skip) {
            skip_coeff = c;
            continue;
        }
        auto it = env.find(v);
        if (it == env.end()) return std::nullopt;
        acc += c * int64_t(it->second);
    }
    return acc;
}

inline Candidates derive_candidates(const PadFormula& f, PadVar x, const Valuation& env) {
    using K = PadFormula::Kind;
    switch (f.kind()) {
        case K::Eq: {
            LinearTerm d = f.lhs() - f.rhs();
            int64_t c = 0;
            auto rest = partial_value(d, env, x, c);
            if (!rest || c == 0) return Candidates::none();
            int64_t num = -*rest;
            if (num % c != 0 || num / c < 0) return Candidates::empty_set();
            return {true, {uint64_t(num / c)}, std::nullopt};
        }
        case K::Leq: {
            LinearTerm d = f.lhs() - f.rhs();  // d <= 0
            int64_t c = 0;
            auto rest = partial_value(d, env, x, c);
            if (!rest || c <= 0) return Candidates::none();
            int64_t num = -*rest;
            if (num < 0) return Candidates::empty_set();
            return {false, {}, uint64_t(num / c)};
        }
        case K::Divides: {
            int64_t c = 0;
            auto rest = partial_value(f.lhs(), env, x, c);
            if (!rest || c == 0) return Candidates::none();
            int64_t n_coeff = 0;
            auto nval = partial_value(f.rhs(), env, x, n_coeff);
            if (!nval || n_coeff != 0 || *nval == 0) return Candidates::none();
            // |c*x + rest| <= |n|
            int64_t mag = *nval < 0 ? -*nval : *nval;
            int64_t hi = c > 0 ? (mag - *rest) : (-mag - *rest);
            int64_t ub = hi / c;
            if (c > 0 && hi < 0) return Candidates::empty_set();
            if (ub < 0) return Candidates::empty_set();
            return {false, {}, uint64_t(ub)};
        }
        case K::And: {
            Candidates best = Candidates::none();
            for (auto& ch : f.children()) {
                Candidates c = derive_candidates(ch, x, env);
                if (!c.informative()) continue;
                if (c.exact && (!best.exact || c.values.size() < best.values.size())) best = c;
                if (!best.exact && c.bound && (!best.bound || *c.bound < *best.bound)) best = c;
            }
            return best;
        }
        case K::Or: {
            if (f.children().empty()) return Candidates::empty_set();
            Candidates acc{true, {}, std::nullopt};
            for (auto& ch : f.children()) {
                Candidates c = derive_candidates(ch, x, env);
                if (!c.informative()) return Candidates::none();
                if (c.exact) {
                    if (acc.exact) {
                        acc.values.insert(acc.values.end(), c.values.begin(), c.values.end());
                    } else {
                        for (uint64_t v : c.values) acc.bound = std::max(*acc.bound, v);
                    }
                } else {
                    if (acc.exact) {
                        uint64_t m = *c.bound;
                        for (uint64_t v : acc.values) m = std::max(m, v);
                        acc = {false, {}, m};
                    } else {
                        acc.bound = std::max(*acc.bound, *c.bound);
                    }
                }
            }
            return acc;
        }
        case K::Exists:
            return derive_candidates(f.children()[0], x, env);
    }
    return Candidates::none();
}

}  // namespace detail

inline bool evaluate(const PadFormula& f, Valuation& env) {
    using K = PadFormula::Kind;
    switch (f.kind()) {
        case K::Leq:
            return f.lhs().value(env) <= f.rhs().value(env);
        case K::Eq:
            return f.lhs().value(env) == f.rhs().value(env);
        case K::Divides: {
            int64_t d = f.lhs().value(env);
            int64_t n = f.rhs().value(env);
            return d == 0 ? n == 0 : n % d == 0;
        }
        case K::And:
            for (auto& c : f.children())
                if (!evaluate(c, env)) return false;
            return true;
        case K::Or:
            for (auto& c : f.children())
                if (evaluate(c, env)) return true;
            return false;
        case K::Exists: {
            PadVar x = f.bound_var();
            const PadFormula& body = f.children()[0];
            auto cand = detail::derive_candidates(body, x, env);
            if (!cand.informative()) throw UnboundedExistential();
            auto saved = env.find(x) != env.end() ? std::optional<uint64_t>(env[x]) : std::nullopt;
            bool found = false;
            auto try_value = [&](uint64_t v) {
                env[x] = v;
                if (evaluate(body, env)) found = true;
                return found;
            };
            if (cand.exact) {
                for (uint64_t v : cand.values)
                    if (try_value(v)) break;
            } else {
                if (*cand.bound > (1u << 22)) throw UnboundedExistential();
                for (uint64_t v = 0; v <= *cand.bound; v++)
                    if (try_value(v)) break;
            }
            if (saved)
                env[x] = *saved;
            else
                env.erase(x);
            return found;
        }
    }
    return false;
}

inline bool evaluate(const PadFormula& f, const Valuation& env) {
    Valuation scratch = env;
    return evaluate(f, scratch);
}

// ---------------------------------------------------------------------------
// Unary semilinear membership as a PAD formula

inline PadFormula lower_unary_membership(const LinearTerm& t, const UnarySemilinear& u, VarPool& pool) {
    std::vector<PadFormula> parts;
    for (uint64_t a : u.offsets) parts.push_back(PadFormula::eq(t, LinearTerm::of(int64_t(a))));
    for (uint64_t a : u.periodic_offsets) {
        PadVar k = pool.fresh();
        parts.push_back(PadFormula::exists(
            k, PadFormula::conj({PadFormula::leq(LinearTerm::of(0), LinearTerm::var(k)),
                                 PadFormula::eq(t, LinearTerm::of(int64_t(a)) +
                                                       int64_t(u.period) * LinearTerm::var(k))})));
    }
    return PadFormula::disj(std::move(parts));
}

// ---------------------------------------------------------------------------
// Bounded-model satisfiability

struct SatResult {
    enum class Kind { Sat, Unsat, Unknown } kind;
    Valuation model;       // over free variables, Sat only
    uint64_t bound = 0;    // largest bound explored (Unknown)
};

struct SatOptions {
    std::vector<uint64_t> schedule = {16, 64, 256, 1024};
    uint64_t max_evaluations = 4'000'000;
};

namespace detail {

struct StaticBounds {
    bool dead = false;  // node cannot be satisfied
    std::map<PadVar, uint64_t> ub;
};

// One analysis pass. `global` accumulates bounds across passes; bound
// variables have globally-unique ids and occur only under their binder, so
// their discovered bounds are promoted into `global` as well, which lets
// equality chains across sibling conjuncts resolve over a few passes.
// Bounds for shared variables cross an Or only via the all-branches rule.
inline StaticBounds analyze_bounds(const PadFormula& f, std::map<PadVar, uint64_t>& global) {
    using K = PadFormula::Kind;
    StaticBounds out;
    auto known = [&](PadVar v) -> std::optional<uint64_t> {
        auto it = out.ub.find(v);
        auto jt = global.find(v);
        if (it != out.ub.end() && jt != global.end()) return std::min(it->second, jt->second);
        if (it != out.ub.end()) return it->second;
        if (jt != global.end()) return jt->second;
        return std::nullopt;
    };
    auto range_rest = [&](const LinearTerm& d, PadVar x, bool want_min, int64_t& result) -> bool {
        // min or max of d - coeff(x)*x over naturals within the known bounds
        result = d.constant;
        for (auto& [v, c] : d.coeffs) {
            if (v == x) continue;
            if ((c > 0) == want_min) continue;  // contributes 0 at its minimum
            auto b = known(v);
            if (!b) return false;
            result += c * int64_t(*b);
        }
        return true;
    };
    auto record = [&](PadVar x, int64_t hi, int64_t coeff_mag) {
        if (hi < 0) {
            out.dead = true;
            return;
        }
        uint64_t b = uint64_t(hi / coeff_mag);
        auto it = out.ub.find(x);
        if (it == out.ub.end() || b < it->second) out.ub[x] = b;
    };
    switch (f.kind()) {
        case K::Leq: {
            LinearTerm d = f.lhs() - f.rhs();  // d <= 0
            if (d.coeffs.empty() && d.constant > 0) out.dead = true;
            for (auto& [x, c] : d.coeffs) {
                if (c <= 0) continue;
                int64_t mn;
                if (!range_rest(d, x, /*want_min=*/true, mn)) continue;
                record(x, -mn, c);
            }
            break;
        }
        case K::Eq: {
            LinearTerm d = f.lhs() - f.rhs();  // d = 0
            if (d.coeffs.empty() && d.constant != 0) out.dead = true;
            for (auto& [x, c] : d.coeffs) {
                int64_t rest;
                if (c > 0) {
                    if (range_rest(d, x, true, rest)) record(x, -rest, c);
                } else {
                    if (range_rest(d, x, false, rest)) record(x, rest, -c);
                }
            }
            break;
        }
        case K::Divides: {
            // only the statically-constant dividend case is worth the trouble
            if (!f.rhs().coeffs.empty() || f.rhs().constant == 0) break;
            int64_t mag = f.rhs().constant < 0 ? -f.rhs().constant : f.rhs().constant;
            for (auto& [x, c] : f.lhs().coeffs) {
                int64_t rest;
                bool ok = c > 0 ? range_rest(f.lhs(), x, true, rest) : range_rest(f.lhs(), x, false, rest);
                if (!ok) continue;
                record(x, c > 0 ? mag - rest : -(-mag - rest), c > 0 ? c : -c);
            }
            break;
        }
        case K::And: {
            for (auto& ch : f.children()) {
                StaticBounds b = analyze_bounds(ch, global);
                if (b.dead) out.dead = true;
                for (auto& [v, u] : b.ub) {
                    auto it = out.ub.find(v);
                    if (it == out.ub.end() || u < it->second) out.ub[v] = u;
                }
            }
            break;
        }
        case K::Or: {
            bool first = true;
            for (auto& ch : f.children()) {
                StaticBounds b = analyze_bounds(ch, global);
                if (b.dead) continue;
                if (first) {
                    out.ub = b.ub;
                    first = false;
                } else {
                    for (auto it = out.ub.begin(); it != out.ub.end();) {
                        auto jt = b.ub.find(it->first);
                        if (jt == b.ub.end()) {
                            it = out.ub.erase(it);
                        } else {
                            it->second = std::max(it->second, jt->second);
                            ++it;
                        }
                    }
                }
            }
            out.dead = first;  // no satisfiable branch (or no branches at all)
            if (out.dead) out.ub.clear();
            break;
        }
        case K::Exists: {
            out = analyze_bounds(f.children()[0], global);
            auto it = out.ub.find(f.bound_var());
            if (it != out.ub.end()) {
                auto jt = global.find(f.bound_var());
                if (jt == global.end() || it->second < jt->second) global[f.bound_var()] = it->second;
                out.ub.erase(it);
            }
            break;
        }
    }
    return out;
}

}  // namespace detail

inline std::map<PadVar, uint64_t> derive_static_bounds(const PadFormula& f) {
    std::map<PadVar, uint64_t> global;
    for (int round = 0; round < 100; round++) {
        std::map<PadVar, uint64_t> before = global;
        auto b = detail::analyze_bounds(f, global);
        if (b.dead) {
            std::map<PadVar, uint64_t> collapsed;
            for (PadVar v : free_vars(f)) collapsed[v] = 0;  // unsatisfiable; box collapses
            return collapsed;
        }
        for (auto& [v, u] : b.ub) {
            auto it = global.find(v);
            if (it == global.end() || u < it->second) global[v] = u;
        }
        if (global == before) break;
    }
    std::map<PadVar, uint64_t> out;
    for (PadVar v : free_vars(f)) {
        auto it = global.find(v);
        if (it != global.end()) out[v] = it->second;
    }
    return out;
}

inline SatResult is_satisfiable(const PadFormula& f, const SatOptions& opts = {}) {
    std::set<PadVar> fv = free_vars(f);
    std::vector<PadVar> vars(fv.begin(), fv.end());
    auto bounds = derive_static_bounds(f);

    bool exact = true;
    uint64_t max_cap = 0;
    std::vector<std::optional<uint64_t>> caps(vars.size());
    for (size_t i = 0; i < vars.size(); i++) {
        auto it = bounds.find(vars[i]);
        if (it != bounds.end()) {
            caps[i] = it->second;
            max_cap = std::max(max_cap, it->second);
        } else {
            exact = false;
        }
    }
    uint64_t limit = exact ? max_cap : opts.schedule.back();
    if (exact && limit > opts.schedule.back() && vars.size() > 1) {
        // box too large to sweep exhaustively; fall back to the schedule
        exact = false;
        limit = opts.schedule.back();
    }

    uint64_t evals = 0;
    bool truncated = false;
    std::vector<uint64_t> vals(vars.size(), 0);
    Valuation env;
    auto eval_current = [&]() -> std::optional<bool> {
        if (++evals > opts.max_evaluations) {
            truncated = true;
            return std::nullopt;
        }
        env.clear();
        for (size_t i = 0; i < vars.size(); i++) env[vars[i]] = vals[i];
        try {
            return evaluate(f, env);
        } catch (const UnboundedExistential&) {
            truncated = true;
            return std::nullopt;
        }
    };

    if (vars.empty()) {
        auto r = eval_current();
        if (!r) return {SatResult::Kind::Unknown, {}, 0};
        return {r.value() ? SatResult::Kind::Sat : SatResult::Kind::Unsat, {}, 0};
    }

    // sweep shells of increasing max-norm so small models are found first
    for (uint64_t shell = 0; shell <= limit && !truncated; shell++) {
        // enumerate valuations with per-var value <= min(shell, cap) and max == shell
        std::function<std::optional<Valuation>(size_t, bool)> rec =
            [&](size_t i, bool hit_shell) -> std::optional<Valuation> {
            if (i == vars.size()) {
                if (!hit_shell && shell != 0) return std::nullopt;
                auto r = eval_current();
                if (r && *r) return env;
                return std::nullopt;
            }
            uint64_t hi = caps[i] ? std::min<uint64_t>(*caps[i], shell) : shell;
            for (uint64_t v = 0; v <= hi; v++) {
                vals[i] = v;
                auto res = rec(i + 1, hit_shell || v == shell);
                if (res) return res;
                if (truncated) return std::nullopt;
            }
            return std::nullopt;
        };
        auto model = rec(0, false);
        if (model) return {SatResult::Kind::Sat, *model, shell};
    }
    if (exact && !truncated) return {SatResult::Kind::Unsat, {}, limit};
    return {SatResult::Kind::Unknown, {}, std::min<uint64_t>(limit, opts.schedule.back())};
}

// ---------------------------------------------------------------------------
// Printing (prefix syntax)

inline std::string print_term(const LinearTerm& t, const std::function<std::string(PadVar)>& name) {
    std::vector<std::string> parts;
    for (auto& [v, c] : t.coeffs) {
        if (c == 1)
            parts.push_back(name(v));
        else
            parts.push_back("(* " + std::to_string(c) + " " + name(v) + ")");
    }
    if (t.constant != 0 || parts.empty()) parts.push_back(std::to_string(t.constant));
    if (parts.size() == 1) return parts[0];
    std::string out = "(+";
    for (auto& p : parts) out += " " + p;
    return out + ")";
}

inline std::string print_formula(const PadFormula& f, const std::function<std::string(PadVar)>& name) {
    using K = PadFormula::Kind;
    switch (f.kind()) {
        case K::Leq:
            return "(<= " + print_term(f.lhs(), name) + " " + print_term(f.rhs(), name) + ")";
        case K::Eq:
            return "(= " + print_term(f.lhs(), name) + " " + print_term(f.rhs(), name) + ")";
        case K::Divides:
            return "(| " + print_term(f.lhs(), name) + " " + print_term(f.rhs(), name) + ")";
        case K::And: {
            if (f.children().empty()) return "(true)";
            std::string out = "(and";
            for (auto& c : f.children()) out += " " + print_formula(c, name);
            return out + ")";
        }
        case K::Or: {
            if (f.children().empty()) return "(false)";
            std::string out = "(or";
            for (auto& c : f.children()) out += " " + print_formula(c, name);
            return out + ")";
        }
        case K::Exists:
            return "(exists " + name(f.bound_var()) + " " + print_formula(f.children()[0], name) + ")";
    }
    return "?";
}

inline std::string default_var_name(PadVar v) { return "v" + std::to_string(v); }

}  // namespace weq

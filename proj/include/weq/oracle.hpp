#pragma once

#include <functional>
#include <optional>
#include <set>

#include "weq/problem.hpp"

namespace weq {

struct UnknownName : Error {
    explicit UnknownName(const std::string& n) : Error("unknown reference formula: " + n) {}
};

// ---------------------------------------------------------------------------
// Brute-force ground truth: every assignment with all image lengths <= max_len
// is considered; early pruning on constant prefixes/suffixes, side-length
// intervals, and per-variable regular constraints keeps this usable at the
// grid sizes the tests need.

namespace detail {

struct OracleSearch {
    const Problem& p;
    uint64_t max_len;
    uint64_t budget;
    uint64_t work = 0;

    std::vector<VarId> eq_vars;
    std::map<VarId, std::vector<ConstWord>> candidate_words;
    std::map<VarId, ConstWord> assigned;
    std::set<LengthVector> results;  // over eq_vars only

    OracleSearch(const Problem& prob, uint64_t ml, uint64_t b) : p(prob), max_len(ml), budget(b) {
        auto vs = variables_of(p.eq);
        eq_vars.assign(vs.begin(), vs.end());
        for (VarId v : eq_vars) candidate_words[v] = words_for(v);
    }

    void charge(uint64_t n = 1) {
        work += n;
        if (work > budget) throw BudgetExceeded("oracle enumeration");
    }

    bool word_ok(VarId v, const ConstWord& w) const {
        for (auto& c : p.constraints)
            if (c.var == v && !nfa_accepts(nfa_slice(*c.aut, c.from, c.to), w)) return false;
        return true;
    }

    std::vector<ConstWord> words_for(VarId v) {
        std::vector<ConstWord> out;
        std::vector<ConstWord> layer{{}};
        for (uint64_t len = 0; len <= max_len; len++) {
            for (auto& w : layer) {
                charge();
                if (word_ok(v, w)) out.push_back(w);
            }
            if (len == max_len) break;
            std::vector<ConstWord> next;
            for (auto& w : layer)
                for (Letter a = 0; a < p.alphabet_size(); a++) {
                    ConstWord w2 = w;
                    w2.push_back(a);
                    next.push_back(std::move(w2));
                }
            layer = std::move(next);
        }
        return out;
    }

    // substituted side: maximal constant prefix, maximal constant suffix, and
    // the length interval [lo, hi] over the unassigned variables
    struct SideView {
        ConstWord prefix, suffix_rev;
        uint64_t lo = 0, hi = 0;
        std::vector<VarId> holes;  // unassigned occurrences, left to right
        size_t first_hole_pos = 0;
    };

    SideView view(const Word& w) const {
        SideView sv;
        bool in_prefix = true;
        for (Symbol s : w) {
            if (s.is_constant()) {
                if (in_prefix) {
                    sv.prefix.push_back(s.letter());
                    sv.first_hole_pos++;
                }
                sv.lo++;
                sv.hi++;
            } else {
                auto it = assigned.find(s.var());
                if (it != assigned.end()) {
                    if (in_prefix) {
                        sv.prefix.insert(sv.prefix.end(), it->second.begin(), it->second.end());
                        sv.first_hole_pos += it->second.size();
                    }
                    sv.lo += it->second.size();
                    sv.hi += it->second.size();
                } else {
                    in_prefix = false;
                    sv.holes.push_back(s.var());
                    sv.hi += max_len;
                }
            }
        }
        for (size_t i = w.size(); i-- > 0;) {
            Symbol s = w[i];
            if (s.is_constant()) {
                sv.suffix_rev.push_back(s.letter());
            } else {
                auto it = assigned.find(s.var());
                if (it == assigned.end()) break;
                sv.suffix_rev.insert(sv.suffix_rev.end(), it->second.rbegin(), it->second.rend());
            }
        }
        return sv;
    }

    static bool overlap_mismatch(const ConstWord& a, const ConstWord& b) {
        size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; i++)
            if (a[i] != b[i]) return true;
        return false;
    }

    bool prune() {
        SideView l = view(p.eq.lhs);
        SideView r = view(p.eq.rhs);
        if (overlap_mismatch(l.prefix, r.prefix)) return true;
        if (overlap_mismatch(l.suffix_rev, r.suffix_rev)) return true;
        if (l.lo > r.hi || r.lo > l.hi) return true;
        if (l.holes.empty() && r.holes.empty()) return false;
        // full sides must also not overrun one another when one is closed
        if (l.holes.empty() && (r.lo > l.lo || l.lo > r.hi)) return true;
        if (r.holes.empty() && (l.lo > r.lo || r.lo > l.hi)) return true;
        return false;
    }

    void record() {
        charge();
        Assignment sigma;
        for (auto& [v, w] : assigned) sigma.map[v] = w;
        if (!check_solution(p.eq, sigma)) return;
        LengthVector lv;
        for (VarId v : eq_vars) lv.entries[v] = assigned.at(v).size();
        results.insert(lv);
    }

    // exactly one unassigned variable, occurring once overall: solve directly
    bool try_direct_solve(VarId v) {
        int occ = 0;
        for (const Word* w : {&p.eq.lhs, &p.eq.rhs})
            for (Symbol s : *w)
                if (s.is_variable() && s.var() == v) occ++;
        if (occ != 1) return false;
        bool in_lhs = false;
        for (Symbol s : p.eq.lhs)
            if (s.is_variable() && s.var() == v) in_lhs = true;
        const Word& open = in_lhs ? p.eq.lhs : p.eq.rhs;
        const Word& closed = in_lhs ? p.eq.rhs : p.eq.lhs;

        Assignment sigma;
        for (auto& [u, w] : assigned) sigma.map[u] = w;
        ConstWord target = apply_homomorphism(closed, sigma);
        ConstWord before, after;
        bool seen_hole = false;
        for (Symbol s : open) {
            ConstWord piece;
            if (s.is_constant()) {
                piece.push_back(s.letter());
            } else if (s.var() == v) {
                seen_hole = true;
                continue;
            } else {
                piece = assigned.at(s.var());
            }
            auto& dst = seen_hole ? after : before;
            dst.insert(dst.end(), piece.begin(), piece.end());
        }
        charge();
        if (target.size() < before.size() + after.size()) return true;
        if (!std::equal(before.begin(), before.end(), target.begin())) return true;
        if (!std::equal(after.rbegin(), after.rend(), target.rbegin())) return true;
        ConstWord mid(target.begin() + before.size(), target.end() - after.size());
        if (mid.size() > max_len || !word_ok(v, mid)) return true;
        assigned[v] = std::move(mid);
        record();
        assigned.erase(v);
        return true;
    }

    VarId pick_variable() const {
        // the unassigned variable at the leftmost undetermined position
        SideView l = view(p.eq.lhs);
        SideView r = view(p.eq.rhs);
        bool lhs_first;
        if (l.holes.empty())
            lhs_first = false;
        else if (r.holes.empty())
            lhs_first = true;
        else if (l.first_hole_pos != r.first_hole_pos)
            lhs_first = l.first_hole_pos < r.first_hole_pos;
        else
            lhs_first = l.holes[0] <= r.holes[0];
        return lhs_first ? l.holes[0] : r.holes[0];
    }

    void dfs() {
        charge();
        std::vector<VarId> open;
        for (VarId v : eq_vars)
            if (!assigned.count(v)) open.push_back(v);
        if (open.empty()) {
            record();
            return;
        }
        if (prune()) return;
        if (open.size() == 1 && try_direct_solve(open[0])) return;
        VarId v = pick_variable();
        for (const ConstWord& w : candidate_words.at(v)) {
            charge();
            assigned[v] = w;
            if (!prune()) dfs();
            assigned.erase(v);
        }
    }
};

}  // namespace weq::detail

// Length vectors (over all declared variables) of all solutions of the word
// equation plus regular constraints with every image length <= max_len. The
// problem's length constraint is not applied here; callers filter.
inline std::set<LengthVector> enumerate_solutions(const Problem& p, uint64_t max_len,
                                                  uint64_t budget = 200'000'000) {
    detail::OracleSearch search(p, max_len, budget);
    search.dfs();

    // declared-but-unused variables contribute independent length choices
    std::vector<VarId> extra;
    std::map<VarId, std::vector<uint64_t>> extra_lengths;
    auto eq_vars = variables_of(p.eq);
    for (VarId v = 0; v < p.num_vars(); v++) {
        if (eq_vars.count(v)) continue;
        extra.push_back(v);
        std::vector<Nfa> slices;
        for (auto& c : p.constraints)
            if (c.var == v) slices.push_back(nfa_slice(*c.aut, c.from, c.to));
        std::vector<uint64_t> lens;
        if (slices.empty()) {
            for (uint64_t n = 0; n <= max_len; n++)
                if (n == 0 || p.alphabet_size() > 0) lens.push_back(n);
        } else {
            UnarySemilinear u = length_abstraction(nfa_intersection(slices));
            for (uint64_t n = 0; n <= max_len; n++)
                if (u.contains(n)) lens.push_back(n);
        }
        extra_lengths[v] = std::move(lens);
    }

    std::set<LengthVector> out;
    std::function<void(size_t, LengthVector&)> expand = [&](size_t i, LengthVector& lv) {
        if (i == extra.size()) {
            out.insert(lv);
            return;
        }
        for (uint64_t n : extra_lengths[extra[i]]) {
            lv.entries[extra[i]] = n;
            expand(i + 1, lv);
        }
        lv.entries.erase(extra[i]);
    };
    for (const LengthVector& base : search.results) {
        LengthVector lv = base;
        expand(0, lv);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form characterizations used by the acceptance tests. Variable ids
// follow the canonical problems' declaration order (x=0, y=1, z=2).

enum class RefFormula { Lemma1, Example1, Prop4 };

inline RefFormula reference_formula_from_name(const std::string& name) {
    if (name == "lemma1") return RefFormula::Lemma1;
    if (name == "example1") return RefFormula::Example1;
    if (name == "prop4") return RefFormula::Prop4;
    throw UnknownName(name);
}

inline PadFormula reference_formula(RefFormula which) {
    using F = PadFormula;
    LinearTerm x = LinearTerm::var(0), y = LinearTerm::var(1), z = LinearTerm::var(2);
    switch (which) {
        case RefFormula::Lemma1: {
            PadVar d = 3;
            F common_divisor = F::exists(
                d, F::conj({F::leq(LinearTerm::of(2), LinearTerm::var(d)),
                            F::divides(LinearTerm::var(d), x + LinearTerm::of(2)),
                            F::divides(LinearTerm::var(d), y + LinearTerm::of(2))}));
            return F::disj({F::eq(x, y),
                            F::conj({F::eq(x, LinearTerm::of(0)), F::divides(LinearTerm::of(2), y)}),
                            F::conj({F::eq(y, LinearTerm::of(0)), F::divides(LinearTerm::of(2), x)}),
                            F::conj({F::leq(LinearTerm::of(1), x), F::leq(LinearTerm::of(1), y),
                                     common_divisor})});
        }
        case RefFormula::Example1:
            return F::eq(x, y + LinearTerm::of(2));
        case RefFormula::Prop4:
            return F::conj({F::eq(x, y), F::leq(LinearTerm::of(1), x), F::divides(x, z)});
    }
    throw UnknownName("?");
}

}  // namespace weq

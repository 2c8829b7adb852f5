#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace weq {

using VarId = uint32_t;
using Letter = uint32_t;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingVariable : Error {
    explicit MissingVariable(VarId v)
        : Error("assignment is missing variable #" + std::to_string(v)), var(v) {}
    VarId var;
};

struct BudgetExceeded : Error {
    explicit BudgetExceeded(const std::string& what) : Error("budget exceeded: " + what) {}
};

struct NotQuadratic : Error {
    NotQuadratic() : Error("equation is not quadratic") {}
};

// ---------------------------------------------------------------------------
// Symbols, words, equations

// A symbol is either a constant letter or a variable; both are interned
// small-integer codes into the problem's declared alphabet/variable set.
class Symbol {
public:
    static Symbol constant(Letter a) { return Symbol(0, a); }
    static Symbol variable(VarId v) { return Symbol(1, v); }

    bool is_constant() const { return tag_ == 0; }
    bool is_variable() const { return tag_ == 1; }
    Letter letter() const { return index_; }
    VarId var() const { return index_; }

    friend auto operator<=>(const Symbol&, const Symbol&) = default;

private:
    Symbol(uint8_t tag, uint32_t index) : tag_(tag), index_(index) {}
    uint8_t tag_;
    uint32_t index_;
};

using Word = std::vector<Symbol>;
using ConstWord = std::vector<Letter>;  // image words contain constants only

struct Equation {
    Word lhs;
    Word rhs;

    friend auto operator<=>(const Equation&, const Equation&) = default;

    size_t size() const { return lhs.size() + rhs.size(); }
};

// Total map from variables to constant-only words.
struct Assignment {
    std::map<VarId, ConstWord> map;

    bool has(VarId v) const { return map.count(v) != 0; }
    const ConstWord& at(VarId v) const {
        auto it = map.find(v);
        if (it == map.end()) throw MissingVariable(v);
        return it->second;
    }

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct LengthVector {
    std::map<VarId, uint64_t> entries;

    uint64_t at(VarId v) const {
        auto it = entries.find(v);
        if (it == entries.end()) throw MissingVariable(v);
        return it->second;
    }

    friend auto operator<=>(const LengthVector&, const LengthVector&) = default;
};

// ---------------------------------------------------------------------------
// Basic queries

inline std::set<VarId> variables_of(const Word& w) {
    std::set<VarId> out;
    for (Symbol s : w)
        if (s.is_variable()) out.insert(s.var());
    return out;
}

inline std::set<VarId> variables_of(const Equation& e) {
    std::set<VarId> out = variables_of(e.lhs);
    for (Symbol s : e.rhs)
        if (s.is_variable()) out.insert(s.var());
    return out;
}

inline std::map<VarId, int> occurrence_counts(const Equation& e) {
    std::map<VarId, int> counts;
    for (const Word* w : {&e.lhs, &e.rhs})
        for (Symbol s : *w)
            if (s.is_variable()) counts[s.var()]++;
    return counts;
}

// ---------------------------------------------------------------------------
// Operations

inline ConstWord apply_homomorphism(const Word& w, const Assignment& sigma) {
    ConstWord out;
    out.reserve(w.size());
    for (Symbol s : w) {
        if (s.is_constant()) {
            out.push_back(s.letter());
        } else {
            const ConstWord& image = sigma.at(s.var());
            out.insert(out.end(), image.begin(), image.end());
        }
    }
    return out;
}

inline bool check_solution(const Equation& e, const Assignment& sigma) {
    return apply_homomorphism(e.lhs, sigma) == apply_homomorphism(e.rhs, sigma);
}

inline bool is_quadratic(const Equation& e) {
    for (auto& [v, n] : occurrence_counts(e))
        if (n > 2) return false;
    return true;
}

inline bool is_regular(const Equation& e) {
    for (const Word* w : {&e.lhs, &e.rhs}) {
        std::map<VarId, int> per_side;
        for (Symbol s : *w)
            if (s.is_variable() && ++per_side[s.var()] > 1) return false;
    }
    return true;
}

// A strict total variable order respected by both sides exists iff the
// occurrence-precedence digraph (edges between consecutive variable
// occurrences on each side) is acyclic.
inline bool is_oriented(const Equation& e) {
    std::map<VarId, std::set<VarId>> succ;
    std::set<VarId> nodes;
    for (const Word* w : {&e.lhs, &e.rhs}) {
        VarId prev = 0;
        bool have_prev = false;
        for (Symbol s : *w) {
            if (!s.is_variable()) continue;
            nodes.insert(s.var());
            if (have_prev) {
                if (prev == s.var()) return false;  // needs v < v
                succ[prev].insert(s.var());
            }
            prev = s.var();
            have_prev = true;
        }
    }
    // cycle check by iterative DFS with colors
    std::map<VarId, int> color;  // 0 white, 1 gray, 2 black
    for (VarId root : nodes) {
        if (color[root] != 0) continue;
        std::vector<std::pair<VarId, bool>> stack{{root, false}};
        while (!stack.empty()) {
            auto [v, done] = stack.back();
            stack.pop_back();
            if (done) {
                color[v] = 2;
                continue;
            }
            if (color[v] == 1) continue;
            color[v] = 1;
            stack.push_back({v, true});
            for (VarId w : succ[v]) {
                if (color[w] == 1) return false;
                if (color[w] == 0) stack.push_back({w, false});
            }
        }
    }
    return true;
}

inline LengthVector length_vector(const Assignment& sigma) {
    LengthVector out;
    for (auto& [v, image] : sigma.map) out.entries[v] = image.size();
    return out;
}

// ---------------------------------------------------------------------------
// Hash support

inline void hash_mix(uint64_t& h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
}

inline uint64_t hash_word(const Word& w, uint64_t seed = 0) {
    uint64_t h = seed;
    for (Symbol s : w) hash_mix(h, (uint64_t(s.is_variable()) << 32) | (s.is_variable() ? s.var() : s.letter()));
    hash_mix(h, 0xabcdu);
    return h;
}

}  // namespace weq

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "weq/automata.hpp"
#include "weq/core.hpp"
#include "weq/names.hpp"
#include "weq/nielsen.hpp"
#include "weq/pad.hpp"

namespace weq {

// A single word equation with regular constraints and a divisibility-free
// length constraint over the variables' lengths (PadVar id == VarId).
struct Problem {
    SymbolNames names;  // declaration order fixes the interned codes
    Equation eq;
    std::vector<std::shared_ptr<const Nfa>> automata;  // aut_id == index
    std::vector<std::string> automata_names;
    std::vector<RegularConstraint> constraints;
    PadFormula length_constraint = PadFormula::trivially_true();

    uint32_t alphabet_size() const { return uint32_t(names.letters.size()); }
    uint32_t num_vars() const { return uint32_t(names.vars.size()); }
};

inline bool contains_divisibility(const PadFormula& f) {
    using K = PadFormula::Kind;
    if (f.kind() == K::Divides) return true;
    for (auto& c : f.children())
        if (contains_divisibility(c)) return true;
    return false;
}

inline void validate_problem(const Problem& p) {
    for (Symbol s : p.eq.lhs)
        if (s.is_constant() ? s.letter() >= p.alphabet_size() : s.var() >= p.num_vars())
            throw Error("equation symbol out of range");
    for (Symbol s : p.eq.rhs)
        if (s.is_constant() ? s.letter() >= p.alphabet_size() : s.var() >= p.num_vars())
            throw Error("equation symbol out of range");
    for (auto& c : p.constraints) {
        if (c.var >= p.num_vars()) throw Error("constraint variable out of range");
        if (!c.aut) throw Error("constraint without automaton");
        if (c.aut->alphabet_size != p.alphabet_size())
            throw AlphabetMismatch("constraint automaton alphabet differs from the problem's");
        c.aut->check_state(c.from);
        c.aut->check_state(c.to);
    }
    if (contains_divisibility(p.length_constraint))
        throw Error("length constraint must be divisibility-free");
    for (PadVar v : free_vars(p.length_constraint))
        if (v >= p.num_vars()) throw Error("length constraint mentions an undeclared variable");
}

// builder helpers, mostly for tests
inline Word make_word(std::initializer_list<Symbol> syms) { return Word(syms); }

}  // namespace weq

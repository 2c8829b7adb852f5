#pragma once

#include <string>
#include <vector>

#include "weq/core.hpp"

namespace weq {

// Display names for interned letter/variable codes. Falls back to generated
// names so library-level structures can always be printed.
struct SymbolNames {
    std::vector<std::string> letters;
    std::vector<std::string> vars;

    std::string letter(Letter a) const {
        if (a < letters.size()) return letters[a];
        return "a" + std::to_string(a);
    }
    std::string var(VarId v) const {
        if (v < vars.size()) return vars[v];
        return "x" + std::to_string(v);
    }
    std::string symbol(Symbol s) const { return s.is_constant() ? letter(s.letter()) : var(s.var()); }
};

inline std::string word_to_string(const Word& w, const SymbolNames& names) {
    if (w.empty()) return "eps";
    std::string out;
    for (size_t i = 0; i < w.size(); i++) {
        if (i) out += " ";
        out += names.symbol(w[i]);
    }
    return out;
}

inline std::string const_word_to_string(const ConstWord& w, const SymbolNames& names) {
    std::string out;
    for (Letter a : w) out += names.letter(a);
    return out.empty() ? "eps" : out;
}

inline std::string equation_to_string(const Equation& e, const SymbolNames& names) {
    return word_to_string(e.lhs, names) + " = " + word_to_string(e.rhs, names);
}

}  // namespace weq

#pragma once

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "weq/problem.hpp"

namespace weq {

struct ParseError : Error {
    ParseError(int line, int col, const std::string& what)
        : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + what),
          line(line),
          col(col) {}
    int line, col;
};

struct UnknownSymbol : ParseError {
    UnknownSymbol(int line, int col, const std::string& name)
        : ParseError(line, col, "unknown symbol '" + name + "'") {}
};

namespace detail {

struct Token {
    enum class Kind { Ident, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 0, col = 0;
};

inline std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    bool line_start = true;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; k++) {
            if (text[i] == '\n') {
                line++;
                col = 1;
                line_start = true;
            } else {
                col++;
            }
            i++;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#' && line_start) {  // comment line; '#' elsewhere is a letter token
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        line_start = false;
        int tl = line, tc = col;
        if (std::isalpha(uint8_t(c)) || c == '_') {
            std::string s;
            while (i < text.size() && (std::isalnum(uint8_t(text[i])) || text[i] == '_')) {
                s += text[i];
                advance(1);
            }
            out.push_back({Token::Kind::Ident, s, tl, tc});
            continue;
        }
        if (std::isdigit(uint8_t(c))) {
            std::string s;
            while (i < text.size() && std::isdigit(uint8_t(text[i]))) {
                s += text[i];
                advance(1);
            }
            out.push_back({Token::Kind::Number, s, tl, tc});
            continue;
        }
        if (c == '#') {
            out.push_back({Token::Kind::Ident, "#", tl, tc});
            advance(1);
            continue;
        }
        auto two = text.substr(i, 2);
        if (two == "&&" || two == "<=" || two == ">=" || two == "!=") {
            out.push_back({Token::Kind::Punct, two, tl, tc});
            advance(2);
            continue;
        }
        static const std::string singles = ":;{}(),=|<>+-*";
        if (singles.find(c) != std::string::npos) {
            out.push_back({Token::Kind::Punct, std::string(1, c), tl, tc});
            advance(1);
            continue;
        }
        throw ParseError(tl, tc, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::Kind::End, "", line, col});
    return out;
}

struct TokenStream {
    std::vector<Token> toks;
    size_t pos = 0;

    const Token& peek(size_t ahead = 0) const {
        size_t k = std::min(pos + ahead, toks.size() - 1);
        return toks[k];
    }
    const Token& next() {
        const Token& t = toks[pos];
        if (pos + 1 < toks.size()) pos++;
        return t;
    }
    bool at_punct(const std::string& p, size_t ahead = 0) const {
        return peek(ahead).kind == Token::Kind::Punct && peek(ahead).text == p;
    }
    void expect_punct(const std::string& p) {
        if (!at_punct(p)) throw ParseError(peek().line, peek().col, "expected '" + p + "'");
        next();
    }
    std::string expect_ident(const std::string& what) {
        if (peek().kind != Token::Kind::Ident)
            throw ParseError(peek().line, peek().col, "expected " + what);
        return next().text;
    }
    uint64_t expect_number(const std::string& what) {
        if (peek().kind != Token::Kind::Number)
            throw ParseError(peek().line, peek().col, "expected " + what);
        return std::stoull(next().text);
    }
    // statements end at ';' or at the start of the next line
    bool statement_done(int stmt_line) const {
        if (peek().kind == Token::Kind::End) return true;
        if (at_punct(";")) return true;
        return peek().line != stmt_line;
    }
    void finish_statement(int stmt_line) {
        if (at_punct(";")) next();
        else if (peek().kind != Token::Kind::End && peek().line == stmt_line)
            throw ParseError(peek().line, peek().col, "expected ';' or end of line");
    }
};

// phi := disj; disj := conj ('||' conj)*; conj := atom ('&&' atom)*
// atom := '(' disj ')' | term REL term; term := prod (('+'|'-') prod)*
// prod := NUM '*' prim | NUM | prim; prim := '|' var '|'
struct PhiParser {
    TokenStream& ts;
    const SymbolNames& names;

    PadVar resolve_var(const Token& t) {
        for (size_t i = 0; i < names.vars.size(); i++)
            if (names.vars[i] == t.text) return PadVar(i);
        throw UnknownSymbol(t.line, t.col, t.text);
    }

    LinearTerm parse_prim() {
        if (ts.peek().kind == Token::Kind::Number)
            return LinearTerm::of(int64_t(ts.expect_number("number")));
        ts.expect_punct("|");
        const Token& v = ts.peek();
        std::string name = ts.expect_ident("variable name");
        ts.expect_punct("|");
        return LinearTerm::var(resolve_var({Token::Kind::Ident, name, v.line, v.col}));
    }

    LinearTerm parse_prod() {
        if (ts.peek().kind == Token::Kind::Number && ts.at_punct("*", 1)) {
            int64_t k = int64_t(ts.expect_number("number"));
            ts.expect_punct("*");
            return k * parse_prim();
        }
        return parse_prim();
    }

    LinearTerm parse_term() {
        LinearTerm t = parse_prod();
        while (ts.at_punct("+") || ts.at_punct("-")) {
            bool plus = ts.next().text == "+";
            LinearTerm rhs = parse_prod();
            t = plus ? t + rhs : t - rhs;
        }
        return t;
    }

    PadFormula parse_atom() {
        if (ts.at_punct("(")) {
            ts.next();
            PadFormula f = parse_disj();
            ts.expect_punct(")");
            return f;
        }
        LinearTerm a = parse_term();
        const Token& op = ts.peek();
        if (op.kind != Token::Kind::Punct)
            throw ParseError(op.line, op.col, "expected comparison operator");
        std::string rel = ts.next().text;
        LinearTerm b = parse_term();
        if (rel == "<=") return PadFormula::leq(a, b);
        if (rel == ">=") return PadFormula::geq(a, b);
        if (rel == "<") return PadFormula::lt(a, b);
        if (rel == ">") return PadFormula::gt(a, b);
        if (rel == "=") return PadFormula::eq(a, b);
        if (rel == "!=") return PadFormula::neq(a, b);
        throw ParseError(op.line, op.col, "unknown comparison '" + rel + "'");
    }

    PadFormula parse_conj() {
        std::vector<PadFormula> parts{parse_atom()};
        while (ts.at_punct("&&")) {
            ts.next();
            parts.push_back(parse_atom());
        }
        return parts.size() == 1 ? parts[0] : PadFormula::conj(std::move(parts));
    }

    PadFormula parse_disj() {
        std::vector<PadFormula> parts{parse_conj()};
        while (ts.at_punct("|") && ts.at_punct("|", 1)) {
            ts.next();
            ts.next();
            parts.push_back(parse_conj());
        }
        return parts.size() == 1 ? parts[0] : PadFormula::disj(std::move(parts));
    }
};

}  // namespace weq::detail

inline PadFormula parse_phi(const std::string& text, const SymbolNames& names) {
    auto toks = detail::tokenize(text);
    detail::TokenStream ts{std::move(toks)};
    detail::PhiParser pp{ts, names};
    PadFormula f = pp.parse_disj();
    if (ts.peek().kind != detail::Token::Kind::End)
        throw ParseError(ts.peek().line, ts.peek().col, "trailing input after formula");
    return f;
}

inline Problem parse_problem(const std::string& text) {
    using detail::Token;
    auto toks = detail::tokenize(text);
    detail::TokenStream ts{std::move(toks)};
    Problem p;
    bool have_eq = false;
    std::map<std::string, uint32_t> automaton_by_name;

    auto resolve_symbol = [&](const Token& t) -> Symbol {
        for (size_t i = 0; i < p.names.vars.size(); i++)
            if (p.names.vars[i] == t.text) return Symbol::variable(VarId(i));
        for (size_t i = 0; i < p.names.letters.size(); i++)
            if (p.names.letters[i] == t.text) return Symbol::constant(Letter(i));
        throw UnknownSymbol(t.line, t.col, t.text);
    };
    auto resolve_letter = [&](const Token& t) -> Letter {
        for (size_t i = 0; i < p.names.letters.size(); i++)
            if (p.names.letters[i] == t.text) return Letter(i);
        throw AlphabetMismatch("letter '" + t.text + "' at " + std::to_string(t.line) + ":" +
                               std::to_string(t.col) + " is not in the alphabet");
    };
    auto resolve_var = [&](const Token& t) -> VarId {
        for (size_t i = 0; i < p.names.vars.size(); i++)
            if (p.names.vars[i] == t.text) return VarId(i);
        throw UnknownSymbol(t.line, t.col, t.text);
    };

    while (ts.peek().kind != Token::Kind::End) {
        const Token& head = ts.peek();
        if (head.kind != Token::Kind::Ident)
            throw ParseError(head.line, head.col, "expected a declaration keyword");
        std::string kw = ts.next().text;
        int stmt_line = head.line;
        if (kw == "alphabet") {
            ts.expect_punct(":");
            while (!ts.statement_done(stmt_line)) {
                std::string letter = ts.expect_ident("letter name");
                if (letter == "eps") throw ParseError(stmt_line, 0, "'eps' is reserved");
                p.names.letters.push_back(letter);
            }
            ts.finish_statement(stmt_line);
        } else if (kw == "vars") {
            ts.expect_punct(":");
            while (!ts.statement_done(stmt_line)) {
                std::string var = ts.expect_ident("variable name");
                if (var == "eps") throw ParseError(stmt_line, 0, "'eps' is reserved");
                p.names.vars.push_back(var);
            }
            ts.finish_statement(stmt_line);
        } else if (kw == "eq") {
            ts.expect_punct(":");
            auto parse_side = [&](bool lhs) {
                Word w;
                while (!ts.statement_done(stmt_line) && !(lhs && ts.at_punct("="))) {
                    const Token& t = ts.peek();
                    if (t.kind != Token::Kind::Ident)
                        throw ParseError(t.line, t.col, "expected a symbol");
                    ts.next();
                    if (t.text == "eps") continue;
                    w.push_back(resolve_symbol(t));
                }
                return w;
            };
            p.eq.lhs = parse_side(true);
            ts.expect_punct("=");
            p.eq.rhs = parse_side(false);
            ts.finish_statement(stmt_line);
            have_eq = true;
        } else if (kw == "nfa") {
            std::string name = ts.expect_ident("automaton name");
            ts.expect_punct("{");
            auto aut = std::make_shared<Nfa>();
            aut->alphabet_size = p.alphabet_size();
            bool have_states = false;
            while (!ts.at_punct("}")) {
                const Token& inner = ts.peek();
                std::string field = ts.expect_ident("nfa field");
                int field_line = inner.line;
                if (field == "states") {
                    aut->num_states = uint32_t(ts.expect_number("state count"));
                    have_states = true;
                } else if (field == "init") {
                    aut->initial = State(ts.expect_number("initial state"));
                } else if (field == "final") {
                    aut->final = State(ts.expect_number("final state"));
                } else if (field == "trans") {
                    if (!have_states) throw ParseError(field_line, inner.col, "'states' must come first");
                    while (ts.at_punct("(")) {
                        ts.next();
                        State from = State(ts.expect_number("source state"));
                        ts.expect_punct(",");
                        const Token& lt = ts.peek();
                        Letter a = resolve_letter({Token::Kind::Ident, ts.expect_ident("letter"),
                                                   lt.line, lt.col});
                        ts.expect_punct(",");
                        State to = State(ts.expect_number("target state"));
                        ts.expect_punct(")");
                        if (from >= aut->num_states || to >= aut->num_states)
                            throw ParseError(lt.line, lt.col, "transition state out of range");
                        aut->add_transition(from, a, to);
                    }
                } else {
                    throw ParseError(inner.line, inner.col, "unknown nfa field '" + field + "'");
                }
                if (ts.at_punct(";")) ts.next();
            }
            ts.expect_punct("}");
            if (!have_states) throw ParseError(stmt_line, head.col, "nfa block lacks 'states'");
            aut->check_state(aut->initial);
            aut->check_state(aut->final);
            if (automaton_by_name.count(name))
                throw ParseError(stmt_line, head.col, "duplicate nfa name '" + name + "'");
            automaton_by_name[name] = uint32_t(p.automata.size());
            p.automata.push_back(aut);
            p.automata_names.push_back(name);
        } else if (kw == "re") {
            ts.expect_punct(":");
            const Token& vt = ts.peek();
            VarId var = resolve_var({Token::Kind::Ident, ts.expect_ident("variable"), vt.line, vt.col});
            if (ts.expect_ident("'in'") != "in") throw ParseError(vt.line, vt.col, "expected 'in'");
            if (ts.expect_ident("'nfa'") != "nfa") throw ParseError(vt.line, vt.col, "expected 'nfa'");
            const Token& nt = ts.peek();
            std::string name = ts.expect_ident("automaton name");
            auto it = automaton_by_name.find(name);
            if (it == automaton_by_name.end())
                throw ParseError(nt.line, nt.col, "undeclared nfa '" + name + "'");
            auto aut = p.automata[it->second];
            State from = aut->initial, to = aut->final;
            if (!ts.statement_done(stmt_line) && ts.peek().text == "from") {
                ts.next();
                from = State(ts.expect_number("slice start state"));
                if (ts.expect_ident("'to'") != "to") throw ParseError(nt.line, nt.col, "expected 'to'");
                to = State(ts.expect_number("slice end state"));
            }
            aut->check_state(from);
            aut->check_state(to);
            p.constraints.push_back({var, it->second, aut, from, to});
            ts.finish_statement(stmt_line);
        } else if (kw == "phi") {
            ts.expect_punct(":");
            detail::PhiParser pp{ts, p.names};
            p.length_constraint = pp.parse_disj();
            ts.finish_statement(stmt_line);
        } else {
            throw ParseError(head.line, head.col, "unknown declaration '" + kw + "'");
        }
    }
    if (!have_eq) throw ParseError(1, 1, "missing 'eq:' declaration");
    std::sort(p.constraints.begin(), p.constraints.end());
    validate_problem(p);
    return p;
}

// ---------------------------------------------------------------------------
// Printing (canonical form; parse . print is the identity on parser output)

inline std::string phi_term_to_string(const LinearTerm& t, const SymbolNames& names) {
    std::string out;
    bool first = true;
    auto append = [&](bool neg, const std::string& part) {
        if (first) {
            if (neg) out += "0 - ";
            out += part;
            first = false;
        } else {
            out += neg ? " - " : " + ";
            out += part;
        }
    };
    for (auto& [v, c] : t.coeffs) {
        int64_t mag = c < 0 ? -c : c;
        std::string part = (mag == 1 ? "" : std::to_string(mag) + " * ") + "|" + names.var(v) + "|";
        append(c < 0, part);
    }
    if (t.constant != 0 || first)
        append(t.constant < 0, std::to_string(t.constant < 0 ? -t.constant : t.constant));
    return out;
}

inline std::string phi_to_string(const PadFormula& f, const SymbolNames& names) {
    using K = PadFormula::Kind;
    switch (f.kind()) {
        case K::Leq:
            return phi_term_to_string(f.lhs(), names) + " <= " + phi_term_to_string(f.rhs(), names);
        case K::Eq:
            return phi_term_to_string(f.lhs(), names) + " = " + phi_term_to_string(f.rhs(), names);
        case K::And: {
            std::string out;
            for (size_t i = 0; i < f.children().size(); i++) {
                if (i) out += " && ";
                bool paren = f.children()[i].kind() == K::Or;
                out += paren ? "(" + phi_to_string(f.children()[i], names) + ")"
                             : phi_to_string(f.children()[i], names);
            }
            return out;
        }
        case K::Or: {
            std::string out;
            for (size_t i = 0; i < f.children().size(); i++) {
                if (i) out += " || ";
                out += phi_to_string(f.children()[i], names);
            }
            return out;
        }
        default:
            throw Error("length constraints are divisibility- and quantifier-free");
    }
}

inline std::string print_problem(const Problem& p) {
    std::ostringstream os;
    os << "alphabet:";
    for (auto& a : p.names.letters) os << " " << a;
    os << ";\n";
    os << "vars:";
    for (auto& v : p.names.vars) os << " " << v;
    os << ";\n";
    os << "eq: " << word_to_string(p.eq.lhs, p.names) << " = " << word_to_string(p.eq.rhs, p.names)
       << ";\n";
    for (size_t i = 0; i < p.automata.size(); i++) {
        const Nfa& a = *p.automata[i];
        os << "nfa " << p.automata_names[i] << " { states " << a.num_states << "; init " << a.initial
           << "; final " << a.final << ";";
        if (!a.transitions.empty()) {
            os << " trans";
            for (auto& t : a.transitions)
                os << " (" << t.from << ", " << p.names.letter(t.letter) << ", " << t.to << ")";
            os << ";";
        }
        os << " }\n";
    }
    for (auto& c : p.constraints) {
        os << "re: " << p.names.var(c.var) << " in nfa " << p.automata_names[c.aut_id];
        if (c.from != p.automata[c.aut_id]->initial || c.to != p.automata[c.aut_id]->final)
            os << " from " << c.from << " to " << c.to;
        os << ";\n";
    }
    if (!(p.length_constraint.kind() == PadFormula::Kind::And &&
          p.length_constraint.children().empty()))
        os << "phi: " << phi_to_string(p.length_constraint, p.names) << ";\n";
    return os.str();
}

}  // namespace weq

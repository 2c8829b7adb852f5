#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "weq/weq.hpp"

namespace {

constexpr int kExitSat = 0;
constexpr int kExitUnsat = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitError = 3;

uint64_t node_budget() {
    if (const char* env = std::getenv("WEQ_BUDGET")) {
        char* end = nullptr;
        uint64_t v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
        throw weq::Error("WEQ_BUDGET must be a positive integer");
    }
    return 1'000'000;
}

weq::Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw weq::Error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return weq::parse_problem(buf.str());
}

std::string lengths_to_string(const weq::LengthVector& v, const weq::SymbolNames& names) {
    std::string out;
    for (auto& [var, n] : v.entries) {
        if (!out.empty()) out += " ";
        out += "|" + names.var(var) + "|=" + std::to_string(n);
    }
    return out.empty() ? "(no variables)" : out;
}

int run_solve(const std::string& path, const std::string& phi_override) {
    weq::Problem p = load_problem(path);
    if (!phi_override.empty()) p.length_constraint = weq::parse_phi(phi_override, p.names);
    weq::Verdict v = weq::solve(p, node_budget());
    switch (v.kind) {
        case weq::Verdict::Kind::Sat: {
            std::cout << "sat " << lengths_to_string(v.lengths, p.names) << "\n";
            if (v.witness) {
                for (auto& [var, w] : v.witness->map)
                    std::cout << "  " << p.names.var(var) << " = "
                              << weq::const_word_to_string(w, p.names) << "\n";
            }
            return kExitSat;
        }
        case weq::Verdict::Kind::Unsat:
            std::cout << "unsat\n";
            return kExitUnsat;
        case weq::Verdict::Kind::Unknown: {
            const char* why = v.reason == weq::Verdict::Reason::NotFlat    ? "not flat"
                              : v.reason == weq::Verdict::Reason::BadCycle ? "bad cycle"
                                                                           : "solver bound";
            std::cout << "unknown (" << why << ")\n";
            return kExitUnknown;
        }
    }
    return kExitError;
}

int run_classify(const std::string& path) {
    weq::Problem p = load_problem(path);
    weq::ClassReport r = weq::classify(p, node_budget());
    auto b = [](bool v) { return v ? "true" : "false"; };
    std::cout << "quadratic=" << b(r.quadratic) << " regular=" << b(r.regular)
              << " oriented=" << b(r.oriented) << " one_weak_constraints=" << b(r.one_weak_constraints);
    if (r.flat) std::cout << " flat=" << b(*r.flat);
    if (r.cycles_one_var_reducing) std::cout << " cycles_one_var_reducing=" << b(*r.cycles_one_var_reducing);
    std::cout << "\n";
    return 0;
}

int run_lengths(const std::string& path, uint64_t grid) {
    weq::Problem p = load_problem(path);
    weq::SolverContext ctx(p, node_budget());
    std::vector<weq::VarId> vars;
    for (weq::VarId v = 0; v < p.num_vars(); v++) vars.push_back(v);
    std::cout << "#";
    for (weq::VarId v : vars) std::cout << " |" << p.names.var(v) << "|";
    std::cout << " member\n";
    weq::LengthVector lv;
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == vars.size()) {
            bool in = ctx.length_membership(lv);
            for (weq::VarId v : vars) std::cout << " " << lv.entries[v];
            std::cout << " " << (in ? "in" : "out") << "\n";
            return;
        }
        for (uint64_t n = 0; n <= grid; n++) {
            lv.entries[vars[i]] = n;
            rec(i + 1);
        }
    };
    rec(0);
    return 0;
}

int run_graph(const std::string& path, const std::string& dot_path, bool counter) {
    weq::Problem p = load_problem(path);
    std::string dot;
    if (counter) {
        weq::SolverContext ctx(p, node_budget());
        dot = weq::counter_system_to_dot(ctx.counter_system(), p.names);
    } else {
        std::vector<weq::RegularConstraint> eq_constraints;
        auto vs = weq::variables_of(p.eq);
        for (auto& c : p.constraints)
            if (vs.count(c.var)) eq_constraints.push_back(c);
        weq::RewriteState root{p.eq, eq_constraints};
        dot = weq::graph_to_dot(weq::build_graph(root, node_budget()), p.names);
    }
    std::ofstream out(dot_path);
    if (!out) throw weq::Error("cannot write '" + dot_path + "'");
    out << dot;
    std::cout << "wrote " << dot_path << "\n";
    return 0;
}

int run_accelerate(const std::string& path, bool emit) {
    weq::Problem p = load_problem(path);
    weq::SolverContext ctx(p, node_budget());
    const weq::CounterSystem& cs = ctx.counter_system();
    auto target = cs.success_state();
    weq::VarPool pool;
    pool.next = p.num_vars();
    std::map<weq::VarId, weq::PadVar> pre;
    for (weq::VarId v : cs.counters) pre[v] = v;
    weq::PadFormula lambda =
        target ? weq::flat_reachability_closed(cs, cs.root, *target, pre, pool)
               : weq::PadFormula::trivially_false();
    if (emit) {
        auto name = [&](weq::PadVar v) {
            if (v < p.num_vars()) return "|" + p.names.var(weq::VarId(v)) + "|";
            return "k" + std::to_string(v);
        };
        std::cout << weq::print_formula(lambda, name) << "\n";
    } else {
        std::cout << "cycles accelerated; use --emit-formula to print the result\n";
    }
    return 0;
}

int run_oracle(const std::string& path, uint64_t max_len) {
    weq::Problem p = load_problem(path);
    auto solutions = weq::enumerate_solutions(p, max_len);
    std::cout << "#";
    for (weq::VarId v = 0; v < p.num_vars(); v++) std::cout << " |" << p.names.var(v) << "|";
    std::cout << "\n";
    for (auto& lv : solutions) {
        for (weq::VarId v = 0; v < p.num_vars(); v++) std::cout << " " << lv.entries.at(v);
        std::cout << "\n";
    }
    std::cout << "# " << solutions.size() << " length vectors with all lengths <= " << max_len << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decision procedures for quadratic word equations with length constraints"};
    app.require_subcommand(1);

    std::string file, phi, dot_path = "graph.dot";
    uint64_t grid = 6, max_len = 6;
    bool counter = false, emit = false;

    auto* solve_cmd = app.add_subcommand("solve", "decide satisfiability and print a verdict");
    solve_cmd->add_option("file", file, "problem file")->required();
    solve_cmd->add_option("--phi", phi, "length constraint overriding the file's phi");

    auto* classify_cmd = app.add_subcommand("classify", "report the syntactic and structural class");
    classify_cmd->add_option("file", file, "problem file")->required();

    auto* lengths_cmd = app.add_subcommand("lengths", "tabulate exact length-abstraction membership");
    lengths_cmd->add_option("file", file, "problem file")->required();
    lengths_cmd->add_option("--grid", grid, "grid bound per variable");

    auto* graph_cmd = app.add_subcommand("graph", "export the rewrite graph or counter system as DOT");
    graph_cmd->add_option("file", file, "problem file")->required();
    graph_cmd->add_option("--dot", dot_path, "output path")->required();
    graph_cmd->add_flag("--counter", counter, "export the counter system instead of the rewrite graph");

    auto* accel_cmd = app.add_subcommand("accelerate", "accelerate cycles into a reachability formula");
    accel_cmd->add_option("file", file, "problem file")->required();
    accel_cmd->add_flag("--emit-formula", emit, "print the formula");

    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force table of solution length vectors");
    oracle_cmd->add_option("file", file, "problem file")->required();
    oracle_cmd->add_option("--max-len", max_len, "image length bound");

    try {
        app.parse(argc, argv);
        if (solve_cmd->parsed()) return run_solve(file, phi);
        if (classify_cmd->parsed()) return run_classify(file);
        if (lengths_cmd->parsed()) return run_lengths(file, grid);
        if (graph_cmd->parsed()) return run_graph(file, dot_path, counter);
        if (accel_cmd->parsed()) return run_accelerate(file, emit);
        if (oracle_cmd->parsed()) return run_oracle(file, max_len);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

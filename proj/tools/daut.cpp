// daut: trace inclusion for networks of data automata.
#include "daut/checker.hpp"
#include "daut/model.hpp"
#include "daut/oracle.hpp"
#include "daut/simulation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace daut;

namespace {

enum Exit { kIncluded = 0, kCounterexample = 1, kUsage = 2, kInconclusive = 3 };

struct SolverFlags {
    std::string solver = "builtin";
    long timeout_ms = 10000;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    cmd->add_option("--solver", f.solver, "builtin or ext:<command>")->envname("DAUT_SOLVER");
    cmd->add_option("--timeout-ms", f.timeout_ms, "per-query timeout of an external solver")
        ->envname("DAUT_TIMEOUT_MS")
        ->check(CLI::PositiveNumber);
}

bool has_integers(const Model& m) {
    auto any = [](const std::vector<VarRef>& vs) {
        for (const auto& v : vs)
            if (v.sort == Sort::Integer) return true;
        return false;
    };
    if (any(m.net.params) || any(m.observer.vars)) return true;
    for (const auto& c : m.net.components)
        if (any(c.vars)) return true;
    return false;
}

// The builtin engine runs integer models in its rational relaxation.
std::unique_ptr<Solver> open_solver(const SolverFlags& f, const Model& m) {
    SolverOptions opts;
    if (f.solver == "builtin" && has_integers(m)) opts.integers = IntegerMode::Relax;
    return make_solver(f.solver, std::chrono::milliseconds(f.timeout_ms), opts);
}

std::string valuation_text(const Valuation& nu) {
    std::string s = "{";
    bool first = true;
    for (const auto& [v, q] : nu) {
        if (!first) s += ",";
        first = false;
        s += v.base + "=" + to_string(q);
    }
    return s + "}";
}

void print_trace(std::ostream& os, const Trace& w) {
    for (std::size_t i = 0; i < w.vals.size(); ++i)
        os << "step " << i << ": " << valuation_text(w.vals[i]) << " --"
           << (i < w.events.size() ? w.events[i] : std::string(kPadding)) << "-->\n";
}

const DataAutomaton* find_automaton(const Model& m, const std::string& name) {
    if (name.empty() || name == m.observer.name) return &m.observer;
    for (const auto& c : m.net.components)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<Rational> parse_grid(const std::string& text) {
    std::vector<Rational> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        Rational q;
        if (!try_parse_rational(item, q)) throw CLI::ValidationError("--grid", "'" + item + "' is not a number");
        out.push_back(q);
    }
    return out;
}

struct CheckFlags {
    std::string model;
    SolverFlags solver;
    std::string search = "bfs";
    bool use_simulation = false;
    std::size_t max_nodes = CheckerConfig{}.max_nodes;
    std::size_t max_refinements = CheckerConfig{}.max_refinements;
    std::string dump_dot;
    bool stats = false;
};

int cmd_check(const CheckFlags& f) {
    Model m = load_model(f.model);
    auto solver = open_solver(f.solver, m);
    CheckerConfig cfg;
    cfg.search = f.search == "dfs" ? SearchOrder::Dfs : SearchOrder::Bfs;
    cfg.max_nodes = f.max_nodes;
    cfg.max_refinements = f.max_refinements;
    Checker checker(m.net, m.observer, *solver, cfg);
    NetworkSimulation sims;
    if (f.use_simulation) {
        sims = compute_network_simulation(m.net, m.observer);
        checker.set_subsumption([&](const ProductState& s, const ProductState& t) {
            return subsumes_sim(s, t, m.net, sims, *solver);
        });
    }
    Verdict v = checker.run();
    std::cout << to_string(v.kind) << "\n";
    if (v.kind == Verdict::Kind::Counterexample) {
        if (v.relaxed) std::cout << "relaxation: rational\n";
        print_trace(std::cout, v.trace);
    } else if (v.kind == Verdict::Kind::Inconclusive) {
        std::cout << "reason: " << v.reason << "\n";
    }
    if (f.stats) std::cout << checker.stats_text();
    if (!f.dump_dot.empty()) {
        std::ofstream out(f.dump_dot);
        if (!out) throw std::runtime_error("cannot write " + f.dump_dot);
        out << checker.dump_dot();
    }
    switch (v.kind) {
    case Verdict::Kind::Included: return kIncluded;
    case Verdict::Kind::Counterexample: return kCounterexample;
    default: return kInconclusive;
    }
}

int cmd_simulate(const std::string& path, const std::string& name, int k) {
    Model m = load_model(path);
    const DataAutomaton* a = find_automaton(m, name);
    if (!a) throw std::runtime_error("no automaton named '" + name + "'");
    SimConfig cfg;
    cfg.K = k;
    if (a != &m.observer) {
        cfg.frozen = m.net.params;
        for (const auto& g : m.net.globals)
            if (std::find(a->vars.begin(), a->vars.end(), g) != a->vars.end()) cfg.globals.push_back(g);
    }
    std::cout << matrix_text(*a, compute_simulation(*a, cfg));
    return 0;
}

int cmd_oracle(const std::string& path, const SolverFlags& sf, std::size_t depth, const std::string& grid) {
    Model m = load_model(path);
    auto solver = open_solver(sf, m);
    BoundedResult r;
    if (grid.empty()) {
        r = bounded_emptiness(m.net, m.observer, depth, *solver);
    } else {
        const auto values = parse_grid(grid);
        for_each_grid_trace(m.observer.vars, m.net.alphabet(), depth, values, [&](const Trace& w) {
            if (r.found || trace_membership(m.observer, w) || !trace_membership(m.net, w, *solver)) return;
            r.found = true;
            r.trace = w;
            r.depth = w.length();
        });
    }
    if (!r.found) {
        std::cout << "NONE_FOUND depth=" << depth << "\n";
        return 0;
    }
    std::cout << "FOUND depth=" << r.depth << "\n";
    print_trace(std::cout, r.trace);
    return 1;
}

int cmd_product(const std::string& path, const SolverFlags& sf, std::size_t bound) {
    Model m = load_model(path);
    auto solver = open_solver(sf, m);
    DataAutomaton net = flatten(m.net, *solver);
    DataAutomaton comp = complement(m.observer, *solver, bound);
    DataAutomaton p = product(net, comp, *solver);
    p.name = net.name + "_x_not_" + m.observer.name;
    std::cout << print_automaton(p);
    return 0;
}

int cmd_determinize(const std::string& path, const SolverFlags& sf, const std::string& name, std::size_t bound) {
    Model m = load_model(path);
    const DataAutomaton* a = find_automaton(m, name);
    if (!a) throw std::runtime_error("no automaton named '" + name + "'");
    auto solver = open_solver(sf, m);
    std::cout << print_automaton(determinize(*a, *solver, bound));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace inclusion checking for networks of data automata"};
    app.require_subcommand(1);

    CheckFlags check;
    auto* c = app.add_subcommand("check", "decide whether the network's traces are included in the observer's");
    c->add_option("model", check.model)->required();
    add_solver_flags(c, check.solver);
    c->add_option("--search", check.search)->envname("DAUT_SEARCH")->check(CLI::IsMember({"bfs", "dfs"}));
    c->add_flag("--use-simulation", check.use_simulation)->envname("DAUT_USE_SIMULATION");
    c->add_option("--max-nodes", check.max_nodes)->envname("DAUT_MAX_NODES");
    c->add_option("--max-refinements", check.max_refinements)->envname("DAUT_MAX_REFINEMENTS");
    c->add_option("--dump-dot", check.dump_dot, "write the final search tree")->envname("DAUT_DUMP_DOT");
    c->add_flag("--stats", check.stats)->envname("DAUT_STATS");

    std::string sim_model, sim_name;
    int sim_k = SimConfig{}.K;
    auto* s = app.add_subcommand("simulate", "print the data simulation of one automaton");
    s->add_option("model", sim_model)->required();
    s->add_option("--automaton", sim_name, "defaults to the observer");
    s->add_option("--K", sim_k, "refinement budget per entry")->envname("DAUT_SIM_K")->check(CLI::PositiveNumber);

    std::string or_model, or_grid;
    std::size_t or_depth = 3;
    SolverFlags or_solver;
    auto* o = app.add_subcommand("oracle", "bounded search for a counterexample");
    o->add_option("model", or_model)->required();
    o->add_option("--depth", or_depth)->envname("DAUT_DEPTH");
    o->add_option("--grid", or_grid, "enumerate observer values from a,b,c instead of solving")->envname("DAUT_GRID");
    add_solver_flags(o, or_solver);

    std::string pr_model;
    std::size_t pr_bound = kDefaultStateBound;
    SolverFlags pr_solver;
    auto* p = app.add_subcommand("product", "print the network expansion times the observer complement");
    p->add_option("model", pr_model)->required();
    p->add_option("--bound", pr_bound, "state bound for determinizing the observer")->envname("DAUT_BOUND");
    add_solver_flags(p, pr_solver);

    std::string de_model, de_name;
    std::size_t de_bound = kDefaultStateBound;
    SolverFlags de_solver;
    auto* d = app.add_subcommand("determinize", "print the determinized automaton");
    d->add_option("model", de_model)->required();
    d->add_option("--automaton", de_name, "defaults to the observer");
    d->add_option("--bound", de_bound)->envname("DAUT_BOUND");
    add_solver_flags(d, de_solver);

    std::string du_model;
    auto* u = app.add_subcommand("dump", "parse and pretty-print a model");
    u->add_option("model", du_model)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (c->parsed()) return cmd_check(check);
        if (s->parsed()) return cmd_simulate(sim_model, sim_name, sim_k);
        if (o->parsed()) return cmd_oracle(or_model, or_solver, or_depth, or_grid);
        if (p->parsed()) return cmd_product(pr_model, pr_solver, pr_bound);
        if (d->parsed()) return cmd_determinize(de_model, de_solver, de_name, de_bound);
        if (u->parsed()) {
            std::cout << print_model(load_model(du_model));
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const SolverError& e) {
        std::cerr << "error: solver: " << e.what() << "\n";
        return kInconclusive;
    } catch (const OracleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInconclusive;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

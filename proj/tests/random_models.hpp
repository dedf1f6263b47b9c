#pragma once

#include "helpers.hpp"

#include "daut/automata.hpp"
#include "daut/model.hpp"

#include <random>
#include <string>
#include <vector>

namespace daut::test {

struct RandomShape {
    int max_states = 4;
    int max_vars = 2;
    int max_events = 2;
    int max_rules_per_pair = 2; // per (state, event)
};

inline std::string random_atom(std::mt19937& rng, const std::vector<std::string>& vars) {
    static const char* rels[] = {"=", "<", "<=", "!="};
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    const std::string rel = rels[pick(4)];
    const std::string c = std::to_string(pick(2));
    const std::string x = vars[pick(static_cast<int>(vars.size()))];
    const std::string y = vars[pick(static_cast<int>(vars.size()))];
    switch (pick(5)) {
    case 0: return "(" + rel + " " + x + "' " + c + ")";
    case 1: return "(" + rel + " " + x + "' " + y + ")";
    case 2: return "(" + rel + " " + x + "' (+ " + y + " " + c + "))";
    case 3: return "(" + rel + " " + x + " " + c + ")";
    default: return "(" + rel + " " + x + " " + y + "')";
    }
}

inline std::string random_guard(std::mt19937& rng, const std::vector<std::string>& vars) {
    int n = std::uniform_int_distribution<int>(0, 2)(rng);
    if (n == 0) return "true";
    if (n == 1) return random_atom(rng, vars);
    std::string op = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? "or" : "and";
    return "(" + op + " " + random_atom(rng, vars) + " " + random_atom(rng, vars) + ")";
}

// Rational-sorted automaton over vars from {x, y} and events from {a, b}.
inline DataAutomaton random_automaton(std::mt19937& rng, const RandomShape& shape = {}) {
    auto upto = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int nq = upto(1, shape.max_states);
    std::vector<std::string> vars{"x", "y"};
    vars.resize(static_cast<std::size_t>(upto(1, shape.max_vars)));
    std::vector<std::string> events{"a", "b"};
    events.resize(static_cast<std::size_t>(upto(1, shape.max_events)));

    DataAutomaton a;
    a.name = "R";
    for (const auto& v : vars) a.vars.push_back(VarRef::plain(v));
    a.alphabet = events;
    for (int q = 0; q < nq; ++q) a.add_state("s" + std::to_string(q));
    a.initial = 0;
    for (int q = 0; q < nq; ++q)
        if (upto(0, 1)) a.finals.insert(q);
    for (int q = 0; q < nq; ++q)
        for (const auto& e : events)
            for (int k = upto(0, shape.max_rules_per_pair); k > 0; --k)
                a.rules.push_back(Rule{q, e, F(random_guard(rng, vars)), upto(0, nq - 1)});
    a.validate();
    return a;
}

inline std::vector<Rational> small_grid() { return {Rational(0), Rational(1, 2), Rational(1)}; }

inline Model load_corpus(const std::string& name) {
    return load_model(std::string(DAUT_MODELS_DIR) + "/" + name);
}

inline SolverOptions relaxed() { return SolverOptions{100000, IntegerMode::Relax}; }

} // namespace daut::test

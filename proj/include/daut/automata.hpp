#pragma once

#include "daut/formula.hpp"
#include "daut/solver.hpp"

#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace daut {

inline constexpr const char* kPadding = "<pad>";

struct AutomatonError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sorted, duplicate-free set of state indices.
using StateSet = std::vector<int>;

std::string to_string(const StateSet& s, const std::vector<std::string>& names);

struct Rule {
    int src = 0;
    std::string event;
    Formula guard; // over plain and primed vars
    int dst = 0;
};

struct DataAutomaton {
    std::string name;
    std::vector<std::string> alphabet;
    std::vector<VarRef> vars; // plain
    std::vector<std::string> states;
    int initial = 0;
    std::set<int> finals;
    std::vector<Rule> rules;
    // set by determinize: guards out of each state partition all valuation pairs
    bool complete_deterministic = false;

    int state_index(const std::string& s) const; // -1 if absent
    int add_state(const std::string& s);         // existing index if present
    bool is_final(int q) const { return finals.count(q) > 0; }
    bool has_event(const std::string& e) const;
    VarSet var_set() const;

    // Checks the structural invariants (guard vocabulary, no padding rule).
    // `extra` lists further readable variables, such as network parameters.
    void validate(const std::vector<VarRef>& extra = {}) const;
};

struct Network {
    std::vector<DataAutomaton> components;
    std::vector<VarRef> params;
    std::vector<VarRef> globals;

    std::vector<std::string> alphabet() const; // union, sorted
    std::vector<VarRef> vars() const;          // union of component vars and params, sorted
    std::vector<int> initial() const;
    bool is_final(const std::vector<int>& q) const;
    bool is_param(const VarRef& v) const;
};

std::string to_string(const std::vector<int>& qvec, const Network& net);

struct Trace {
    std::vector<Valuation> vals;     // n+1 valuations over plain variables
    std::vector<std::string> events; // n events; the padding symbol is implicit at the end

    std::size_t length() const { return events.size(); }
};

Trace trace_restrict(const Trace& w, const VarSet& ys);

struct ExpansionStep {
    std::vector<int> next;
    Formula guard;
    std::vector<int> active; // components that moved
};

// One result per choice of rule for each component that has a σ-rule at its
// current state; idle components keep their state and receive frames for
// variables no active component owns; parameters always receive frames.
std::vector<ExpansionStep> expansion_successors(const Network& net, const std::vector<int>& q, const std::string& event);

struct DetStep {
    StateSet next;
    Formula guard;
};

inline constexpr std::size_t kMaxSuccessorPool = 16;

// Successors of the subset state P in the determinized automaton, subsets in
// order of size then lexicographic. Candidates with unsatisfiable guards are
// dropped when a solver is supplied.
std::vector<DetStep> det_successors(const DataAutomaton& b, const StateSet& p, const std::string& event,
                                    Solver* prune = nullptr);

struct ProductStep {
    std::vector<int> next;
    StateSet obs;
    Formula guard;
    std::vector<int> active;
};

std::vector<ProductStep> product_successors(const Network& net, const DataAutomaton& b, const std::vector<int>& q,
                                            const StateSet& p, const std::string& event, Solver& solver);

bool product_accepting(const Network& net, const DataAutomaton& b, const std::vector<int>& q, const StateSet& p);

inline constexpr std::size_t kDefaultStateBound = 12;

DataAutomaton determinize(const DataAutomaton& a, Solver& solver, std::size_t state_bound = kDefaultStateBound);
DataAutomaton complement(const DataAutomaton& a, Solver& solver, std::size_t state_bound = kDefaultStateBound);
DataAutomaton product(const DataAutomaton& a, const DataAutomaton& b, Solver& solver);
DataAutomaton automaton_union(const DataAutomaton& a, const DataAutomaton& b, Solver& solver,
                              std::size_t state_bound = kDefaultStateBound);

// The network as a single automaton over state vectors (reachable part only).
DataAutomaton flatten(const Network& net, Solver& solver, std::size_t state_bound = 4096);

} // namespace daut

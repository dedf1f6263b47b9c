#pragma once

#include "daut/automata.hpp"
#include "daut/solver.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace daut {

// Brute-force bounded procedures. They use neither abstraction nor
// interpolation nor the subset construction, only eval and satisfiability.

struct BoundedResult {
    bool found = false;
    std::size_t depth = 0;         // explored bound when nothing was found
    Trace trace;                   // witness when found
    std::vector<std::string> path; // control states along the witness
};

struct OracleOptions {
    std::size_t path_cap = 1000000;
};

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Symbolic network moves computed directly from the rule sets.
struct NetMove {
    std::vector<int> next;
    Formula guard;
};
std::vector<NetMove> network_moves(const Network& net, const std::vector<int>& q, const std::string& event);

// Searches traces w of length <= depth in L(net)↓x_B \ L(B), shortest first.
BoundedResult bounded_emptiness(const Network& net, const DataAutomaton& b, std::size_t depth, Solver& solver,
                                const OracleOptions& opts = {});

// Run search on concrete valuations; w must cover the automaton's variables.
bool trace_membership(const DataAutomaton& a, const Trace& w);
bool trace_membership_from(const DataAutomaton& a, const StateSet& start, const Trace& w);

// w ∈ L(net)↓ys where ys is the domain of w's valuations: some network path
// with w's events admits values of the remaining variables.
bool trace_membership(const Network& net, const Trace& w, Solver& solver);

// Residual-language escape: a trace accepted by the product of the expansion
// and the complemented observer from s but not from t. Traces range over all
// network variables.
struct ResidualState {
    std::vector<int> qvec;
    StateSet pset;
    Formula phi;
};
BoundedResult residual_escape_check(const Network& net, const DataAutomaton& b, const ResidualState& s,
                                    const ResidualState& t, std::size_t depth, Solver& solver,
                                    const OracleOptions& opts = {});

// Every trace over a's variables and alphabet with values from the grid and
// length <= depth, in order of length, then events, then values.
void for_each_grid_trace(const std::vector<VarRef>& vars, const std::vector<std::string>& alphabet, std::size_t depth,
                         const std::vector<Rational>& grid, const std::function<void(const Trace&)>& fn);
std::vector<Trace> grid_traces(const DataAutomaton& a, std::size_t depth, const std::vector<Rational>& grid);

} // namespace daut

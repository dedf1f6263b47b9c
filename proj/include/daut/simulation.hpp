#pragma once

#include "daut/automata.hpp"
#include "daut/checker.hpp"
#include "daut/solver.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace daut {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// m[i][j] is the set of valuations under which state j simulates state i.
using SimMatrix = std::vector<std::vector<Formula>>;

struct SimConfig {
    int K = 3;
    std::vector<VarRef> globals; // closed universally in every entry
    std::vector<VarRef> frozen;  // read by guards but never updated (network parameters)
    bool test_mode = false;      // check SimInv1/SimInv2 at every loop head
};

struct SimStats {
    std::uint64_t activations = 0;   // rows processed by the worklist loop
    std::uint64_t decrements = 0;
    std::uint64_t forced_false = 0;
    std::uint64_t presim_calls = 0;
    std::vector<std::string> violations;
};

SimMatrix identity_matrix(std::size_t k);
SimMatrix top_matrix(std::size_t k);

// ∀x'. φ(x,x') → ⋁_{j -σ,ψ-> m} ψ(x,x') ∧ R_ℓm(x') for the rule i -σ,φ-> ℓ,
// quantifier-free. Computed over the rationals.
Formula presim(const DataAutomaton& a, const Rule& rule, int j, const SimMatrix& r, const SimConfig& cfg = {});

SimMatrix compute_simulation(const DataAutomaton& a, const SimConfig& cfg = {}, SimStats* stats = nullptr);

// Finals are only simulated by finals, and every move from i under R_ij is
// matched from j into a related pair.
bool is_simulation(const DataAutomaton& a, const SimMatrix& r, Solver& solver,
                   const std::vector<VarRef>& frozen = {}, std::string* why = nullptr);

// No entry constrains the globals.
bool check_assumption1(const SimMatrix& r, const std::vector<VarRef>& globals, Solver& solver);

std::string matrix_text(const DataAutomaton& a, const SimMatrix& r);

struct NetworkSimulation {
    std::vector<SimMatrix> components; // over locals and parameters
    SimMatrix observer;
};

// Requires every variable shared between components to be declared global.
void require_global_split(const Network& net);
NetworkSimulation compute_network_simulation(const Network& net, const DataAutomaton& b, const SimConfig& cfg = {},
                                             SimStats* stats = nullptr);

// s ⊑_sim t. Besides the entailments, a component of t may only have events
// enabled at its state that are also enabled at the corresponding state of s,
// so that an idle step of s is matched by an idle step of t.
bool subsumes_sim(const ProductState& s, const ProductState& t, const Network& net, const NetworkSimulation& sims,
                  Solver& solver);

} // namespace daut

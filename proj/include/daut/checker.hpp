#pragma once

#include "daut/automata.hpp"
#include "daut/oracle.hpp"
#include "daut/solver.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace daut {

struct ProductState {
    std::vector<int> qvec;
    StateSet pset;
    Formula phi; // over plain network variables
};

std::string to_string(const ProductState& s, const Network& net, const DataAutomaton& b);

// Component indices (increasing) with their states, plus an observer set.
struct Substate {
    std::vector<int> indices;
    std::vector<int> states;
    StateSet oset;

    friend bool operator<(const Substate& a, const Substate& b) {
        return std::tie(a.indices, a.states, a.oset) < std::tie(b.indices, b.states, b.oset);
    }
    friend bool operator==(const Substate& a, const Substate& b) {
        return a.indices == b.indices && a.states == b.states && a.oset == b.oset;
    }
};

bool is_substate(const Substate& r, const std::vector<int>& qvec, const StateSet& pset);
std::string to_string(const Substate& r, const Network& net, const DataAutomaton& b);

using PredicateMap = std::map<Substate, std::vector<Formula>>;

struct Path {
    std::vector<ProductState> states; // s_0 .. s_k
    std::vector<std::string> events;  // σ_1 .. σ_k
    std::vector<Formula> thetas;      // θ_1 .. θ_k, thetas[i] leads into states[i+1]
    std::size_t length() const { return thetas.size(); }
};

struct Successor {
    std::string event;
    Formula theta;
    ProductState state;
};

enum class SearchOrder { Bfs, Dfs };

struct CheckerConfig {
    SearchOrder search = SearchOrder::Bfs;
    std::size_t max_nodes = 200000;
    std::size_t max_refinements = 10000;
    std::chrono::milliseconds wall{0}; // 0 = unlimited
    std::size_t cnf_budget = 64;       // clauses per interpolant element
    bool test_mode = false;            // assert invariants while running
};

struct Verdict {
    enum class Kind { Included, Counterexample, Inconclusive };
    Kind kind = Kind::Inconclusive;
    Trace trace;                   // over observer variables
    std::vector<std::string> path; // control states along the counterexample
    bool relaxed = false;          // integer variables took non-integral values
    std::string reason;            // for Inconclusive
};

const char* to_string(Verdict::Kind k);

struct CheckerStats {
    std::uint64_t nodes_expanded = 0;
    std::uint64_t nodes_created = 0;
    std::uint64_t refinements = 0;
    std::uint64_t subsume_edges = 0;
    std::uint64_t solver_queries = 0;
    std::uint64_t wall_ms = 0;
};

// A claimed subsumption s ⊑ t that the search relied on.
struct SubsumptionRecord {
    ProductState s;
    ProductState t;
};

// Added predicate with the substate it was attached to.
struct Refinement {
    Substate key;
    Formula pred;
};

class Checker {
public:
    using Subsumption = std::function<bool(const ProductState&, const ProductState&)>;

    Checker(const Network& net, const DataAutomaton& b, Solver& solver, CheckerConfig cfg = {});

    Verdict run();

    // Building blocks, usable on their own.
    ProductState root() const;
    bool is_accepting(const ProductState& s) const;
    std::vector<Successor> post_concrete(const ProductState& s);
    std::vector<Successor> post_abstract(const ProductState& s);
    Formula abstract_image(const Formula& psi, const std::vector<int>& qvec, const StateSet& pset);
    Formula concrete_image(const Formula& phi, const Formula& theta) const;
    int pivot(const Path& rho);
    std::vector<Refinement> refine(const Path& rho, int j);
    bool subsumes_img(const ProductState& s, const ProductState& t); // s ⊑ t
    bool subsumes(const ProductState& s, const ProductState& t);
    Trace extract_counterexample(const Path& rho, bool* relaxed = nullptr);

    void set_subsumption(Subsumption f) { custom_ = std::move(f); }
    PredicateMap& predicates() { return pi_; }
    const PredicateMap& predicates() const { return pi_; }
    // All predicates whose key is a substate of (qvec, pset).
    std::vector<Formula> applicable(const std::vector<int>& qvec, const StateSet& pset) const;

    const CheckerStats& stats() const { return stats_; }
    std::string stats_text() const;
    const std::vector<SubsumptionRecord>& subsumption_log() const { return sublog_; }
    const std::vector<std::string>& violations() const { return violations_; }
    std::uint64_t interpolants_checked() const { return itp_checked_; }
    std::string dump_dot() const;

private:
    enum class Status { Next, Visited, Removed };
    struct Node {
        ProductState state;
        int parent = -1;
        std::string event;
        Formula theta;
        std::vector<int> pos;
        Status status = Status::Next;
        int next_child = 0;
        std::vector<int> children;
    };

    int add_node(ProductState s, int parent, std::string event, Formula theta);
    Path path_to(int id) const;
    std::vector<int> path_ids(int id) const;
    void requeue(int id);
    std::set<int> subtree(int id) const;
    void remove_nodes(const std::set<int>& rem);
    bool is_ancestor(int a, int b) const;
    enum class Outcome { Final, Refined, Dropped };
    // Final: the run is over and verdict_ is set.
    Outcome handle_accepting(int id);
    void expand(int id);
    void check_closed();
    bool out_of_budget(std::string& why) const;
    VarSet component_vars(std::size_t i) const;

    const Network& net_;
    const DataAutomaton& b_;
    Solver& solver_;
    CheckerConfig cfg_;
    Subsumption custom_;
    VarSet obs_vars_;
    std::vector<VarRef> pre_vars_;

    PredicateMap pi_;
    std::vector<Node> nodes_;
    std::deque<int> work_;
    std::set<std::pair<int, int>> subsume_;
    std::vector<SubsumptionRecord> sublog_;
    std::vector<std::string> violations_;
    std::uint64_t itp_checked_ = 0;
    CheckerStats stats_;
    std::chrono::steady_clock::time_point start_;
    Verdict verdict_;
    bool done_ = false;
};

} // namespace daut

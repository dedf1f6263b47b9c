#pragma once

#include "daut/formula.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace daut {

class SolverError : public std::runtime_error {
public:
    enum class Kind { Timeout, ProtocolError, Crash, UnsupportedSort, BudgetExceeded, SatInput, Unsupported };
    SolverError(Kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

const char* to_string(SolverError::Kind k);

// Σ λ_i·t_i over the cube atoms collapses to a constant that contradicts the
// combined relation. λ_i > 0 for inequalities, any sign for equalities.
struct FarkasCertificate {
    std::vector<std::pair<Atom, Rational>> combination;
};

bool verify_certificate(const FarkasCertificate& cert);

struct SatResult {
    bool sat = false;
    Valuation model;                            // when sat, covers the free variables
    std::optional<FarkasCertificate> certificate; // for unsat single cubes
};

enum class IntegerMode { Reject, Relax };

struct SolverOptions {
    std::size_t cube_budget = 100000;
    IntegerMode integers = IntegerMode::Reject;
};

// ---- builtin engine, usable without a Solver object

SatResult check_sat(const Formula& f, const SolverOptions& opts = {});
// Feasibility of a conjunction of atoms (no !=) with model or certificate.
SatResult check_cube(const Cube& cube, const SolverOptions& opts = {});
// ∃vars. f as a quantifier-free formula (DNF of projected cubes).
Formula fm_eliminate(const std::vector<VarRef>& vars, const Formula& f, const SolverOptions& opts = {});
// Removes all quantifiers.
Formula eliminate_quantifiers(const Formula& f, const SolverOptions& opts = {});
// Craig interpolant of an unsat pair of quantifier-free formulas.
Formula interpolate(const Formula& a, const Formula& b, const SolverOptions& opts = {});
// Semantically cleaned DNF: infeasible cubes dropped, redundant atoms removed,
// cubes entailing another cube dropped.
Formula simplify(const Formula& f, const SolverOptions& opts = {});

class Solver {
public:
    virtual ~Solver() = default;

    virtual SatResult check(const Formula& f) = 0;
    // Sequence interpolant ⟨I_0..I_m⟩ over plain variables for Φ and θ_1..θ_m
    // (θ over plain and primed variables). Throws SolverError(SatInput) if the
    // path formula is satisfiable.
    virtual std::vector<Formula> sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas) = 0;
    virtual std::string name() const = 0;

    bool is_sat(const Formula& f) { return check(f).sat; }
    bool entails(const Formula& a, const Formula& b);
    bool equivalent(const Formula& a, const Formula& b) { return entails(a, b) && entails(b, a); }

    std::uint64_t queries() const { return queries_; }
    const SolverOptions& options() const { return opts_; }
    void set_integer_mode(IntegerMode m) { opts_.integers = m; }

protected:
    explicit Solver(SolverOptions opts) : opts_(opts) {}
    std::uint64_t queries_ = 0;
    SolverOptions opts_;
};

class BuiltinSolver : public Solver {
public:
    explicit BuiltinSolver(SolverOptions opts = {}) : Solver(opts) {}
    SatResult check(const Formula& f) override;
    std::vector<Formula> sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas) override;
    std::string name() const override { return "builtin"; }
};

// Conversational SMT-LIB 2.6 session with a subprocess. Interpolation uses
// (get-interpolant); results that fail validation fall back to the builtin
// interpolation scheme.
class ExternalSolver : public Solver {
public:
    ExternalSolver(std::string command, std::chrono::milliseconds timeout, SolverOptions opts = {});
    ~ExternalSolver() override;
    ExternalSolver(const ExternalSolver&) = delete;
    ExternalSolver& operator=(const ExternalSolver&) = delete;

    SatResult check(const Formula& f) override;
    std::vector<Formula> sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas) override;
    std::string name() const override { return "ext:" + command_; }

    std::uint64_t interpolation_fallbacks() const { return fallbacks_; }

    // Lower-level access, mainly for tests.
    std::string raw_command(const std::string& cmd);

private:
    void start();
    void stop();
    void send(const std::string& text);
    std::string read_response();
    std::vector<std::string> batch(const std::string& cmds);
    std::string declare(const VarSet& vars) const;

    std::string command_;
    std::chrono::milliseconds timeout_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::uint64_t fallbacks_ = 0;
};

std::unique_ptr<Solver> make_solver(const std::string& spec, std::chrono::milliseconds timeout, SolverOptions opts = {});

// SMT-LIB rendering of a formula; variable names are |quoted|.
std::string to_smtlib(const Formula& f);
std::string smt_name(const VarRef& v);

// Renames Φ to step 0 and θ_i to steps (i-1, i).
Formula path_formula(const Formula& phi, const std::vector<Formula>& thetas);

// Checks Φ → I_0, I_{i-1} ∧ θ_i → I_i', I_m unsat, and that each I_i only
// mentions variables shared by the prefix and the suffix at cut i.
bool validate_interpolant(Solver& s, const Formula& phi, const std::vector<Formula>& thetas,
                          const std::vector<Formula>& seq, std::string* why = nullptr);

// The builtin scheme: I_0 = Itp(Φ, θ_1..m), I_i = Itp(I_{i-1} ∧ θ_i, θ_{i+1..m}).
std::vector<Formula> builtin_sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas,
                                                  const SolverOptions& opts = {});

} // namespace daut

#pragma once

#include "daut/rational.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace daut {

enum class Sort : std::uint8_t { Rational, Integer };

// Plain is the pre-state copy, Primed the post-state copy, Step(i) the copy at
// position i of an unrolled path. Aux is reserved for solver-internal fresh names.
enum class Tag : std::uint8_t { Plain, Primed, Step, Aux };

struct VarRef {
    std::string base;
    Tag tag = Tag::Plain;
    int index = 0;
    Sort sort = Sort::Rational;

    static VarRef plain(std::string base, Sort s = Sort::Rational) { return {std::move(base), Tag::Plain, 0, s}; }
    static VarRef primed(std::string base, Sort s = Sort::Rational) { return {std::move(base), Tag::Primed, 0, s}; }
    static VarRef step(std::string base, int i, Sort s = Sort::Rational) { return {std::move(base), Tag::Step, i, s}; }

    VarRef with_tag(Tag t, int i = 0) const { return {base, t, i, sort}; }
    std::string name() const;

    // sort is an attribute of the name, not part of its identity
    friend bool operator==(const VarRef& a, const VarRef& b) {
        return a.base == b.base && a.tag == b.tag && a.index == b.index;
    }
    friend bool operator<(const VarRef& a, const VarRef& b) {
        if (a.base != b.base) return a.base < b.base;
        if (a.tag != b.tag) return a.tag < b.tag;
        return a.index < b.index;
    }
    friend bool operator!=(const VarRef& a, const VarRef& b) { return !(a == b); }
};

using VarSet = std::set<VarRef>;
using Valuation = std::map<VarRef, Rational>;

class LinTerm {
public:
    using Entry = std::pair<VarRef, Rational>;

    LinTerm() = default;
    static LinTerm var(const VarRef& v, const Rational& c = 1);
    static LinTerm constant(const Rational& c);

    const std::vector<Entry>& coeffs() const { return coeffs_; }
    const Rational& constant() const { return constant_; }
    Rational coeff(const VarRef& v) const;
    bool is_constant() const { return coeffs_.empty(); }

    LinTerm& operator+=(const LinTerm& o);
    LinTerm& operator-=(const LinTerm& o);
    LinTerm& operator*=(const Rational& c);
    friend LinTerm operator+(LinTerm a, const LinTerm& b) { return a += b; }
    friend LinTerm operator-(LinTerm a, const LinTerm& b) { return a -= b; }
    friend LinTerm operator*(LinTerm a, const Rational& c) { return a *= c; }
    friend LinTerm operator*(const Rational& c, LinTerm a) { return a *= c; }
    LinTerm operator-() const { return *this * Rational(-1); }

    void add_term(const VarRef& v, const Rational& c);
    void set_constant(const Rational& c) { constant_ = c; }
    // drops variable v, returning its coefficient
    Rational remove(const VarRef& v);

    Rational eval(const Valuation& val) const;
    LinTerm rename(const std::function<VarRef(const VarRef&)>& f) const;
    // replaces v by the term t
    LinTerm substitute(const VarRef& v, const LinTerm& t) const;

    friend bool operator==(const LinTerm& a, const LinTerm& b) {
        return a.constant_ == b.constant_ && a.coeffs_ == b.coeffs_;
    }
    friend int compare(const LinTerm& a, const LinTerm& b);

private:
    std::vector<Entry> coeffs_; // sorted by variable, no zero coefficients
    Rational constant_ = 0;
};

// term <rel> 0
enum class Rel : std::uint8_t { Lt, Le, Eq, Ne };

struct Atom {
    LinTerm term;
    Rel rel = Rel::Le;

    friend bool operator==(const Atom& a, const Atom& b) { return a.rel == b.rel && a.term == b.term; }
    bool holds(const Valuation& val) const;
};

int compare(const Atom& a, const Atom& b);
inline bool operator<(const Atom& a, const Atom& b) { return compare(a, b) < 0; }

// Canonical form: integer coefficients with gcd 1; = and != have a positive
// leading coefficient. Returns nullopt together with the truth value in
// `constant` when the atom has no variables.
std::optional<Atom> canonical_atom(LinTerm term, Rel rel, bool* constant = nullptr);
// For atoms over Integer-sorted variables only: t < 0 becomes t + 1 <= 0 and
// constants are rounded, which keeps the integer solutions unchanged.
// Other atoms are returned as they are.
std::optional<Atom> tighten(const Atom& a, bool* constant = nullptr);
Atom negate(const Atom& a); // != stays a single atom

enum class Kind : std::uint8_t { True, False, Atom, Not, And, Or, Exists, Forall };

class Formula {
public:
    Formula(); // true

    Kind kind() const;
    bool is_true() const { return kind() == Kind::True; }
    bool is_false() const { return kind() == Kind::False; }
    bool is_quantifier() const { return kind() == Kind::Exists || kind() == Kind::Forall; }

    const Atom& atom() const;
    const std::vector<Formula>& args() const;
    const std::vector<VarRef>& bound() const;
    const Formula& body() const { return args().front(); }

    struct Node;
    explicit Formula(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
    const Node* node() const { return n_.get(); }

private:
    std::shared_ptr<const Node> n_;
};

Formula top();
Formula bottom();
Formula mk_bool(bool b);
Formula mk_atom(const Atom& a); // re-canonicalizes
Formula mk_atom(const LinTerm& term, Rel rel);
Formula mk_cmp(const LinTerm& lhs, Rel rel, const LinTerm& rhs); // lhs rel rhs
Formula mk_not(const Formula& f);
Formula mk_and(std::vector<Formula> fs);
Formula mk_or(std::vector<Formula> fs);
Formula mk_and(const Formula& a, const Formula& b);
Formula mk_or(const Formula& a, const Formula& b);
Formula mk_implies(const Formula& a, const Formula& b);
Formula mk_exists(std::vector<VarRef> vars, const Formula& body);
Formula mk_forall(std::vector<VarRef> vars, const Formula& body);

int compare(const Formula& a, const Formula& b);
inline bool operator==(const Formula& a, const Formula& b) { return compare(a, b) == 0; }
inline bool operator!=(const Formula& a, const Formula& b) { return compare(a, b) != 0; }
inline bool operator<(const Formula& a, const Formula& b) { return compare(a, b) < 0; }

std::size_t size(const Formula& f);
VarSet free_vars(const Formula& f);
bool is_quantifier_free(const Formula& f);

// Renames free occurrences; bound variables are left alone.
Formula rename(const Formula& f, const std::function<VarRef(const VarRef&)>& fn);
Formula retag(const Formula& f, Tag from, int from_index, Tag to, int to_index);
inline Formula prime(const Formula& f) { return retag(f, Tag::Plain, 0, Tag::Primed, 0); }
inline Formula unprime(const Formula& f) { return retag(f, Tag::Primed, 0, Tag::Plain, 0); }
// x -> x@(i), x' -> x@(i+1)
Formula to_step(const Formula& f, int i);
Formula substitute(const Formula& f, const VarRef& v, const LinTerm& t);

// Sorted, deduplicated, double negations removed. Idempotent.
Formula canonicalize(const Formula& f);

// Negation pushed to atoms. With split_ne, t != 0 becomes t < 0 or -t < 0.
Formula nnf(const Formula& f, bool split_ne = true);

// Quantifier-free only.
bool eval(const Formula& f, const Valuation& val);

using Cube = std::vector<Atom>;
// DNF of a quantifier-free formula without any feasibility pruning.
// Visitor returns false to stop. Returns false iff stopped early.
bool for_each_cube(const Formula& f, const std::function<bool(const Cube&)>& visit);
// CNF of a quantifier-free formula by distribution, each clause a disjunction.
std::vector<Formula> cnf_clauses(const Formula& f);

std::string to_string(const LinTerm& t);
std::string to_string(const Atom& a);
std::string to_string(const Formula& f);

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(int l, int c, const std::string& msg);
};

// Maps an identifier (without prime) to its sort; nullopt means unknown.
using SortLookup = std::function<std::optional<Sort>(const std::string&)>;

// Accepts the textual s-expression syntax plus the SMT-LIB constructs that
// solvers emit (let, >=, >, distinct, =>, /, to_real, |quoted| symbols).
Formula parse_formula(std::string_view text, const SortLookup& sorts, int line = 1, int col = 1);
LinTerm parse_term(std::string_view text, const SortLookup& sorts);

} // namespace daut

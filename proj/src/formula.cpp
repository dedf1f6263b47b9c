#include "daut/formula.hpp"

#include "daut/sexpr.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_map>

namespace daut {

std::string VarRef::name() const {
    switch (tag) {
    case Tag::Plain: return base;
    case Tag::Primed: return base + "'";
    case Tag::Step: return base + "@" + std::to_string(index);
    case Tag::Aux: return base + "#" + std::to_string(index);
    }
    return base;
}

// ---------------------------------------------------------------- LinTerm

LinTerm LinTerm::var(const VarRef& v, const Rational& c) {
    LinTerm t;
    t.add_term(v, c);
    return t;
}

LinTerm LinTerm::constant(const Rational& c) {
    LinTerm t;
    t.constant_ = c;
    return t;
}

Rational LinTerm::coeff(const VarRef& v) const {
    auto it = std::lower_bound(coeffs_.begin(), coeffs_.end(), v,
                               [](const Entry& e, const VarRef& x) { return e.first < x; });
    if (it != coeffs_.end() && it->first == v) return it->second;
    return 0;
}

void LinTerm::add_term(const VarRef& v, const Rational& c) {
    if (c == 0) return;
    auto it = std::lower_bound(coeffs_.begin(), coeffs_.end(), v,
                               [](const Entry& e, const VarRef& x) { return e.first < x; });
    if (it != coeffs_.end() && it->first == v) {
        it->second += c;
        if (it->second == 0) coeffs_.erase(it);
    } else {
        coeffs_.insert(it, {v, c});
    }
}

LinTerm& LinTerm::operator+=(const LinTerm& o) {
    std::vector<Entry> out;
    out.reserve(coeffs_.size() + o.coeffs_.size());
    auto a = coeffs_.cbegin();
    auto b = o.coeffs_.cbegin();
    while (a != coeffs_.cend() || b != o.coeffs_.cend()) {
        if (b == o.coeffs_.cend() || (a != coeffs_.cend() && a->first < b->first)) {
            out.push_back(*a++);
        } else if (a == coeffs_.cend() || b->first < a->first) {
            out.push_back(*b++);
        } else {
            Rational s = a->second + b->second;
            if (s != 0) out.emplace_back(a->first, s);
            ++a, ++b;
        }
    }
    coeffs_ = std::move(out);
    constant_ += o.constant_;
    return *this;
}

LinTerm& LinTerm::operator-=(const LinTerm& o) {
    return *this += -o;
}

LinTerm& LinTerm::operator*=(const Rational& c) {
    if (c == 0) {
        coeffs_.clear();
        constant_ = 0;
        return *this;
    }
    for (auto& e : coeffs_) e.second *= c;
    constant_ *= c;
    return *this;
}

Rational LinTerm::remove(const VarRef& v) {
    auto it = std::lower_bound(coeffs_.begin(), coeffs_.end(), v,
                               [](const Entry& e, const VarRef& x) { return e.first < x; });
    if (it == coeffs_.end() || !(it->first == v)) return 0;
    Rational c = it->second;
    coeffs_.erase(it);
    return c;
}

Rational LinTerm::eval(const Valuation& val) const {
    Rational r = constant_;
    for (const auto& [v, c] : coeffs_) {
        auto it = val.find(v);
        if (it == val.end()) throw std::out_of_range("no value for variable " + v.name());
        r += c * it->second;
    }
    return r;
}

LinTerm LinTerm::rename(const std::function<VarRef(const VarRef&)>& f) const {
    LinTerm t = LinTerm::constant(constant_);
    for (const auto& [v, c] : coeffs_) t.add_term(f(v), c);
    return t;
}

LinTerm LinTerm::substitute(const VarRef& v, const LinTerm& t) const {
    LinTerm r = *this;
    Rational c = r.remove(v);
    if (c == 0) return r;
    return r + t * c;
}

int compare(const LinTerm& a, const LinTerm& b) {
    std::size_t n = std::min(a.coeffs_.size(), b.coeffs_.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [va, ca] = a.coeffs_[i];
        const auto& [vb, cb] = b.coeffs_[i];
        if (va < vb) return -1;
        if (vb < va) return 1;
        if (int c = cmp(ca, cb)) return c < 0 ? -1 : 1;
    }
    if (a.coeffs_.size() != b.coeffs_.size()) return a.coeffs_.size() < b.coeffs_.size() ? -1 : 1;
    int c = cmp(a.constant_, b.constant_);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

// ---------------------------------------------------------------- atoms

static bool rel_holds(const Rational& v, Rel r) {
    switch (r) {
    case Rel::Lt: return v < 0;
    case Rel::Le: return v <= 0;
    case Rel::Eq: return v == 0;
    case Rel::Ne: return v != 0;
    }
    return false;
}

bool Atom::holds(const Valuation& val) const {
    return rel_holds(term.eval(val), rel);
}

int compare(const Atom& a, const Atom& b) {
    if (int c = compare(a.term, b.term)) return c;
    if (a.rel != b.rel) return a.rel < b.rel ? -1 : 1;
    return 0;
}

std::optional<Atom> canonical_atom(LinTerm term, Rel rel, bool* constant) {
    if (term.is_constant()) {
        if (constant) *constant = rel_holds(term.constant(), rel);
        return std::nullopt;
    }
    mpz_class lcm = 1;
    for (const auto& e : term.coeffs()) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), e.second.get_den_mpz_t());
    mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), term.constant().get_den_mpz_t());
    term *= Rational(lcm);
    mpz_class g = 0;
    for (const auto& e : term.coeffs()) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), e.second.get_num_mpz_t());
    if (term.constant() != 0) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), term.constant().get_num_mpz_t());
    if (g != 1) term *= Rational(1, g);
    if ((rel == Rel::Eq || rel == Rel::Ne) && term.coeffs().front().second < 0) term *= Rational(-1);
    return Atom{std::move(term), rel};
}

std::optional<Atom> tighten(const Atom& a, bool* constant) {
    const auto& cs = a.term.coeffs();
    if (!std::all_of(cs.begin(), cs.end(), [](const auto& e) { return e.first.sort == Sort::Integer; })) return a;
    LinTerm term = a.term;
    Rel rel = a.rel;
    mpz_class lcm = 1;
    for (const auto& e : cs) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), e.second.get_den_mpz_t());
    term *= Rational(lcm);
    mpz_class g = 0;
    for (const auto& e : term.coeffs()) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), e.second.get_num_mpz_t());
    if (g != 1) term *= Rational(1, g);
    const Rational c = term.constant();
    switch (rel) {
    case Rel::Lt:
        term.set_constant(is_integral(c) ? Rational(c + 1) : ceil(c));
        rel = Rel::Le;
        break;
    case Rel::Le: term.set_constant(ceil(c)); break;
    case Rel::Eq:
    case Rel::Ne:
        if (!is_integral(c)) {
            if (constant) *constant = rel == Rel::Ne;
            return std::nullopt;
        }
        break;
    }
    return canonical_atom(std::move(term), rel, constant);
}

Atom negate(const Atom& a) {
    LinTerm t = a.term;
    Rel r = a.rel;
    switch (a.rel) {
    case Rel::Lt: t = -t; r = Rel::Le; break;
    case Rel::Le: t = -t; r = Rel::Lt; break;
    case Rel::Eq: r = Rel::Ne; break;
    case Rel::Ne: r = Rel::Eq; break;
    }
    auto c = canonical_atom(std::move(t), r);
    assert(c);
    return *c;
}

// ---------------------------------------------------------------- formulas

struct Formula::Node {
    Kind kind = Kind::True;
    Atom atom;
    std::vector<Formula> args;
    std::vector<VarRef> bound;
};

namespace {

std::shared_ptr<const Formula::Node> make_node(Kind k) {
    auto n = std::make_shared<Formula::Node>();
    n->kind = k;
    return n;
}

const std::shared_ptr<const Formula::Node>& true_node() {
    static const auto n = make_node(Kind::True);
    return n;
}

const std::shared_ptr<const Formula::Node>& false_node() {
    static const auto n = make_node(Kind::False);
    return n;
}

const std::vector<Formula> kNoArgs;
const std::vector<VarRef> kNoVars;

} // namespace

Formula::Formula() : n_(true_node()) {}

Kind Formula::kind() const {
    return n_->kind;
}

const Atom& Formula::atom() const {
    assert(n_->kind == Kind::Atom);
    return n_->atom;
}

const std::vector<Formula>& Formula::args() const {
    return n_->args;
}

const std::vector<VarRef>& Formula::bound() const {
    return n_->kind == Kind::Exists || n_->kind == Kind::Forall ? n_->bound : kNoVars;
}

Formula top() {
    return Formula(true_node());
}

Formula bottom() {
    return Formula(false_node());
}

Formula mk_bool(bool b) {
    return b ? top() : bottom();
}

Formula mk_atom(const LinTerm& term, Rel rel) {
    bool value = false;
    auto a = canonical_atom(term, rel, &value);
    if (!a) return mk_bool(value);
    auto n = std::make_shared<Formula::Node>();
    n->kind = Kind::Atom;
    n->atom = std::move(*a);
    return Formula(std::move(n));
}

Formula mk_atom(const Atom& a) {
    return mk_atom(a.term, a.rel);
}

Formula mk_cmp(const LinTerm& lhs, Rel rel, const LinTerm& rhs) {
    return mk_atom(lhs - rhs, rel);
}

Formula mk_not(const Formula& f) {
    if (f.is_true()) return bottom();
    if (f.is_false()) return top();
    auto n = std::make_shared<Formula::Node>();
    n->kind = Kind::Not;
    n->args = {f};
    return Formula(std::move(n));
}

static Formula mk_nary(Kind k, std::vector<Formula> fs) {
    const Kind unit = k == Kind::And ? Kind::True : Kind::False;
    const Kind zero = k == Kind::And ? Kind::False : Kind::True;
    std::vector<Formula> flat;
    flat.reserve(fs.size());
    auto push = [&](const Formula& g) {
        for (const auto& h : flat)
            if (h == g) return;
        flat.push_back(g);
    };
    for (auto& f : fs) {
        if (f.kind() == unit) continue;
        if (f.kind() == zero) return Formula(zero == Kind::True ? true_node() : false_node());
        if (f.kind() == k) {
            for (const auto& g : f.args()) push(g);
        } else {
            push(f);
        }
    }
    if (flat.empty()) return Formula(unit == Kind::True ? true_node() : false_node());
    if (flat.size() == 1) return flat.front();
    auto n = std::make_shared<Formula::Node>();
    n->kind = k;
    n->args = std::move(flat);
    return Formula(std::move(n));
}

Formula mk_and(std::vector<Formula> fs) {
    return mk_nary(Kind::And, std::move(fs));
}

Formula mk_or(std::vector<Formula> fs) {
    return mk_nary(Kind::Or, std::move(fs));
}

Formula mk_and(const Formula& a, const Formula& b) {
    return mk_and(std::vector<Formula>{a, b});
}

Formula mk_or(const Formula& a, const Formula& b) {
    return mk_or(std::vector<Formula>{a, b});
}

Formula mk_implies(const Formula& a, const Formula& b) {
    return mk_or(mk_not(a), b);
}

static Formula mk_quant(Kind k, std::vector<VarRef> vars, const Formula& body) {
    if (body.is_true() || body.is_false()) return body;
    VarSet fv = free_vars(body);
    std::vector<VarRef> kept;
    for (auto& v : vars)
        if (fv.count(v) && std::find(kept.begin(), kept.end(), v) == kept.end()) kept.push_back(v);
    if (kept.empty()) return body;
    auto n = std::make_shared<Formula::Node>();
    n->kind = k;
    n->args = {body};
    n->bound = std::move(kept);
    return Formula(std::move(n));
}

Formula mk_exists(std::vector<VarRef> vars, const Formula& body) {
    return mk_quant(Kind::Exists, std::move(vars), body);
}

Formula mk_forall(std::vector<VarRef> vars, const Formula& body) {
    return mk_quant(Kind::Forall, std::move(vars), body);
}

int compare(const Formula& a, const Formula& b) {
    if (a.node() == b.node()) return 0;
    if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
    switch (a.kind()) {
    case Kind::True:
    case Kind::False: return 0;
    case Kind::Atom: return compare(a.atom(), b.atom());
    default: break;
    }
    const auto& ba = a.bound();
    const auto& bb = b.bound();
    if (ba.size() != bb.size()) return ba.size() < bb.size() ? -1 : 1;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        if (ba[i] < bb[i]) return -1;
        if (bb[i] < ba[i]) return 1;
    }
    const auto& xa = a.args();
    const auto& xb = b.args();
    std::size_t n = std::min(xa.size(), xb.size());
    for (std::size_t i = 0; i < n; ++i)
        if (int c = compare(xa[i], xb[i])) return c;
    if (xa.size() != xb.size()) return xa.size() < xb.size() ? -1 : 1;
    return 0;
}

std::size_t size(const Formula& f) {
    std::size_t s = 1;
    for (const auto& g : f.args()) s += size(g);
    return s;
}

static void collect_free(const Formula& f, VarSet& out, std::vector<VarRef>& bound_stack) {
    switch (f.kind()) {
    case Kind::True:
    case Kind::False: return;
    case Kind::Atom:
        for (const auto& [v, c] : f.atom().term.coeffs())
            if (std::find(bound_stack.begin(), bound_stack.end(), v) == bound_stack.end()) out.insert(v);
        return;
    case Kind::Exists:
    case Kind::Forall: {
        std::size_t mark = bound_stack.size();
        bound_stack.insert(bound_stack.end(), f.bound().begin(), f.bound().end());
        collect_free(f.body(), out, bound_stack);
        bound_stack.resize(mark);
        return;
    }
    default:
        for (const auto& g : f.args()) collect_free(g, out, bound_stack);
    }
}

VarSet free_vars(const Formula& f) {
    VarSet out;
    std::vector<VarRef> stack;
    collect_free(f, out, stack);
    return out;
}

bool is_quantifier_free(const Formula& f) {
    if (f.is_quantifier()) return false;
    for (const auto& g : f.args())
        if (!is_quantifier_free(g)) return false;
    return true;
}

static Formula rebuild(const Formula& f, std::vector<Formula> args) {
    switch (f.kind()) {
    case Kind::Not: return mk_not(args[0]);
    case Kind::And: return mk_and(std::move(args));
    case Kind::Or: return mk_or(std::move(args));
    case Kind::Exists: return mk_exists(f.bound(), args[0]);
    case Kind::Forall: return mk_forall(f.bound(), args[0]);
    default: return f;
    }
}

static Formula rename_rec(const Formula& f, const std::function<VarRef(const VarRef&)>& fn,
                          std::vector<VarRef>& bound_stack) {
    switch (f.kind()) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: {
        LinTerm t = f.atom().term.rename([&](const VarRef& v) {
            if (std::find(bound_stack.begin(), bound_stack.end(), v) != bound_stack.end()) return v;
            return fn(v);
        });
        return mk_atom(t, f.atom().rel);
    }
    case Kind::Exists:
    case Kind::Forall: {
        std::size_t mark = bound_stack.size();
        bound_stack.insert(bound_stack.end(), f.bound().begin(), f.bound().end());
        Formula body = rename_rec(f.body(), fn, bound_stack);
        bound_stack.resize(mark);
        return rebuild(f, {body});
    }
    default: {
        std::vector<Formula> args;
        args.reserve(f.args().size());
        for (const auto& g : f.args()) args.push_back(rename_rec(g, fn, bound_stack));
        return rebuild(f, std::move(args));
    }
    }
}

Formula rename(const Formula& f, const std::function<VarRef(const VarRef&)>& fn) {
    std::vector<VarRef> stack;
    return rename_rec(f, fn, stack);
}

Formula retag(const Formula& f, Tag from, int from_index, Tag to, int to_index) {
    return rename(f, [&](const VarRef& v) {
        if (v.tag == from && v.index == from_index) return v.with_tag(to, to_index);
        return v;
    });
}

Formula to_step(const Formula& f, int i) {
    return rename(f, [&](const VarRef& v) {
        if (v.tag == Tag::Plain) return v.with_tag(Tag::Step, i);
        if (v.tag == Tag::Primed) return v.with_tag(Tag::Step, i + 1);
        return v;
    });
}

Formula substitute(const Formula& f, const VarRef& x, const LinTerm& t) {
    switch (f.kind()) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: return mk_atom(f.atom().term.substitute(x, t), f.atom().rel);
    case Kind::Exists:
    case Kind::Forall:
        if (std::find(f.bound().begin(), f.bound().end(), x) != f.bound().end()) return f;
        [[fallthrough]];
    default: {
        std::vector<Formula> args;
        for (const auto& g : f.args()) args.push_back(substitute(g, x, t));
        return rebuild(f, std::move(args));
    }
    }
}

Formula canonicalize(const Formula& f) {
    switch (f.kind()) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: return mk_atom(f.atom());
    case Kind::Not: {
        if (f.body().kind() == Kind::Not) return canonicalize(f.body().body());
        return mk_not(canonicalize(f.body()));
    }
    case Kind::And:
    case Kind::Or: {
        std::vector<Formula> args;
        for (const auto& g : f.args()) args.push_back(canonicalize(g));
        Formula r = f.kind() == Kind::And ? mk_and(std::move(args)) : mk_or(std::move(args));
        if (r.kind() != f.kind()) return r;
        std::vector<Formula> sorted = r.args();
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        auto n = std::make_shared<Formula::Node>();
        n->kind = f.kind();
        n->args = std::move(sorted);
        return Formula(std::move(n));
    }
    case Kind::Exists:
    case Kind::Forall: {
        std::vector<VarRef> vars = f.bound();
        std::sort(vars.begin(), vars.end());
        Formula body = canonicalize(f.body());
        return f.kind() == Kind::Exists ? mk_exists(vars, body) : mk_forall(vars, body);
    }
    }
    return f;
}

static Formula nnf_rec(const Formula& f, bool neg, bool split_ne) {
    switch (f.kind()) {
    case Kind::True: return neg ? bottom() : top();
    case Kind::False: return neg ? top() : bottom();
    case Kind::Atom: {
        Atom a = neg ? negate(f.atom()) : f.atom();
        if (a.rel == Rel::Ne && split_ne)
            return mk_or(mk_atom(a.term, Rel::Lt), mk_atom(-a.term, Rel::Lt));
        return mk_atom(a);
    }
    case Kind::Not: return nnf_rec(f.body(), !neg, split_ne);
    case Kind::And:
    case Kind::Or: {
        std::vector<Formula> args;
        for (const auto& g : f.args()) args.push_back(nnf_rec(g, neg, split_ne));
        bool conj = (f.kind() == Kind::And) != neg;
        return conj ? mk_and(std::move(args)) : mk_or(std::move(args));
    }
    case Kind::Exists:
    case Kind::Forall: {
        Formula body = nnf_rec(f.body(), neg, split_ne);
        bool ex = (f.kind() == Kind::Exists) != neg;
        return ex ? mk_exists(f.bound(), body) : mk_forall(f.bound(), body);
    }
    }
    return f;
}

Formula nnf(const Formula& f, bool split_ne) {
    return nnf_rec(f, false, split_ne);
}

bool eval(const Formula& f, const Valuation& val) {
    switch (f.kind()) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Atom: return f.atom().holds(val);
    case Kind::Not: return !eval(f.body(), val);
    case Kind::And:
        for (const auto& g : f.args())
            if (!eval(g, val)) return false;
        return true;
    case Kind::Or:
        for (const auto& g : f.args())
            if (eval(g, val)) return true;
        return false;
    case Kind::Exists:
    case Kind::Forall: throw std::invalid_argument("eval: quantified formula");
    }
    return false;
}

namespace {

struct CubeWalker {
    const std::function<bool(const Cube&)>& visit;
    std::vector<Formula> todo;
    Cube cube;

    bool go() {
        if (todo.empty()) return visit(cube);
        Formula f = todo.back();
        todo.pop_back();
        bool r = true;
        switch (f.kind()) {
        case Kind::True: r = go(); break;
        case Kind::False: break;
        case Kind::Atom:
            cube.push_back(f.atom());
            r = go();
            cube.pop_back();
            break;
        case Kind::And: {
            for (auto it = f.args().rbegin(); it != f.args().rend(); ++it) todo.push_back(*it);
            r = go();
            todo.resize(todo.size() - f.args().size());
            break;
        }
        case Kind::Or:
            for (const auto& g : f.args()) {
                todo.push_back(g);
                r = go();
                todo.pop_back();
                if (!r) break;
            }
            break;
        default: throw std::invalid_argument("for_each_cube: formula is not quantifier-free");
        }
        todo.push_back(f);
        return r;
    }
};

} // namespace

bool for_each_cube(const Formula& f, const std::function<bool(const Cube&)>& visit) {
    CubeWalker w{visit, {nnf(f, false)}, {}};
    return w.go();
}

static std::vector<std::vector<Formula>> cnf_rec(const Formula& f) {
    switch (f.kind()) {
    case Kind::True: return {};
    case Kind::False: return {{}};
    case Kind::Atom: return {{f}};
    case Kind::And: {
        std::vector<std::vector<Formula>> out;
        for (const auto& g : f.args()) {
            auto c = cnf_rec(g);
            out.insert(out.end(), c.begin(), c.end());
        }
        return out;
    }
    case Kind::Or: {
        std::vector<std::vector<Formula>> acc{{}};
        for (const auto& g : f.args()) {
            auto c = cnf_rec(g);
            std::vector<std::vector<Formula>> next;
            for (const auto& a : acc)
                for (const auto& b : c) {
                    auto m = a;
                    m.insert(m.end(), b.begin(), b.end());
                    next.push_back(std::move(m));
                }
            acc = std::move(next);
        }
        return acc;
    }
    default: throw std::invalid_argument("cnf_clauses: formula must be quantifier-free NNF");
    }
}

std::vector<Formula> cnf_clauses(const Formula& f) {
    std::vector<Formula> out;
    for (auto& lits : cnf_rec(nnf(f, false))) {
        Formula c = canonicalize(mk_or(std::move(lits)));
        if (c.is_true()) continue;
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------- printing

std::string to_string(const LinTerm& t) {
    std::vector<std::string> parts;
    for (const auto& [v, c] : t.coeffs()) {
        if (c == 1) parts.push_back(v.name());
        else parts.push_back("(* " + to_string(c) + " " + v.name() + ")");
    }
    if (t.constant() != 0 || parts.empty()) parts.push_back(to_string(t.constant()));
    if (parts.size() == 1) return parts.front();
    std::string s = "(+";
    for (const auto& p : parts) s += " " + p;
    return s + ")";
}

static const char* rel_name(Rel r) {
    switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Eq: return "=";
    case Rel::Ne: return "!=";
    }
    return "?";
}

std::string to_string(const Atom& a) {
    LinTerm lhs = a.term;
    lhs.set_constant(0);
    return std::string("(") + rel_name(a.rel) + " " + to_string(lhs) + " " + to_string(Rational(-a.term.constant())) + ")";
}

std::string to_string(const Formula& f) {
    switch (f.kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return to_string(f.atom());
    case Kind::Not: return "(not " + to_string(f.body()) + ")";
    case Kind::And:
    case Kind::Or: {
        std::string s = f.kind() == Kind::And ? "(and" : "(or";
        for (const auto& g : f.args()) s += " " + to_string(g);
        return s + ")";
    }
    case Kind::Exists:
    case Kind::Forall: {
        std::string s = f.kind() == Kind::Exists ? "(exists (" : "(forall (";
        for (std::size_t i = 0; i < f.bound().size(); ++i) s += (i ? " " : "") + f.bound()[i].name();
        return s + ") " + to_string(f.body()) + ")";
    }
    }
    return "?";
}

// ---------------------------------------------------------------- parsing

ParseError::ParseError(int l, int c, const std::string& msg)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), col(c) {}

namespace {

struct Env {
    const Env* parent = nullptr;
    std::map<std::string, std::pair<const SExpr*, const Env*>> bindings;

    const std::pair<const SExpr*, const Env*>* find(const std::string& n) const {
        for (const Env* e = this; e; e = e->parent) {
            auto it = e->bindings.find(n);
            if (it != e->bindings.end()) return &it->second;
        }
        return nullptr;
    }
};

class Builder {
public:
    explicit Builder(const SortLookup& s) : sorts_(s) {}

    VarRef variable(const SExpr& e) const {
        std::string n = e.atom;
        Tag tag = Tag::Plain;
        int idx = 0;
        if (!n.empty() && n.back() == '\'') {
            n.pop_back();
            tag = Tag::Primed;
        } else if (auto p = n.find_last_of("@#"); p != std::string::npos && p > 0 && p + 1 < n.size() &&
                   std::all_of(n.begin() + p + 1, n.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            tag = n[p] == '@' ? Tag::Step : Tag::Aux;
            idx = std::stoi(n.substr(p + 1));
            n.resize(p);
        }
        if (n.empty()) throw ParseError(e.line, e.col, "empty identifier");
        auto s = sorts_(n);
        if (!s) throw ParseError(e.line, e.col, "unknown variable '" + n + "'");
        return VarRef{n, tag, idx, *s};
    }

    LinTerm term(const SExpr& e, const Env& env) const {
        if (!e.is_list) {
            Rational q;
            if (!e.quoted && try_parse_rational(e.atom, q)) return LinTerm::constant(q);
            if (!e.quoted)
                if (auto b = env.find(e.atom)) return term(*b->first, *b->second);
            return LinTerm::var(variable(e));
        }
        if (e.items.empty() || e.items[0].is_list) throw ParseError(e.line, e.col, "expected a term");
        const std::string& op = e.items[0].atom;
        std::size_t n = e.items.size() - 1;
        if (op == "+") {
            LinTerm t;
            for (std::size_t i = 1; i <= n; ++i) t += term(e.items[i], env);
            return t;
        }
        if (op == "-") {
            if (n == 0) throw ParseError(e.line, e.col, "'-' needs an argument");
            LinTerm t = term(e.items[1], env);
            if (n == 1) return -t;
            for (std::size_t i = 2; i <= n; ++i) t -= term(e.items[i], env);
            return t;
        }
        if (op == "*") {
            LinTerm t = LinTerm::constant(1);
            for (std::size_t i = 1; i <= n; ++i) {
                LinTerm u = term(e.items[i], env);
                if (u.is_constant()) t *= u.constant();
                else if (t.is_constant()) t = u * t.constant();
                else throw ParseError(e.items[i].line, e.items[i].col, "non-linear multiplication");
            }
            return t;
        }
        if (op == "/") {
            if (n != 2) throw ParseError(e.line, e.col, "'/' takes two arguments");
            LinTerm num = term(e.items[1], env);
            LinTerm den = term(e.items[2], env);
            if (!den.is_constant() || den.constant() == 0)
                throw ParseError(e.items[2].line, e.items[2].col, "division by a non-constant or zero");
            return num * Rational(1 / den.constant());
        }
        if (op == "to_real" || op == "to_int") {
            if (n != 1) throw ParseError(e.line, e.col, op + " takes one argument");
            return term(e.items[1], env);
        }
        if (op == "let") return with_let(e, env, [&](const SExpr& body, const Env& inner) { return term(body, inner); });
        throw ParseError(e.line, e.col, "unknown term operator '" + op + "'");
    }

    template <class F>
    auto with_let(const SExpr& e, const Env& env, F&& k) const -> decltype(k(e, env)) {
        if (e.items.size() != 3 || !e.items[1].is_list) throw ParseError(e.line, e.col, "malformed let");
        Env inner;
        inner.parent = &env;
        for (const auto& b : e.items[1].items) {
            if (!b.is_list || b.items.size() != 2 || b.items[0].is_list)
                throw ParseError(b.line, b.col, "malformed let binding");
            inner.bindings[b.items[0].atom] = {&b.items[1], &env};
        }
        return k(e.items[2], inner);
    }

    Formula formula(const SExpr& e, const Env& env) const {
        if (!e.is_list) {
            if (e.is_symbol("true")) return top();
            if (e.is_symbol("false")) return bottom();
            if (!e.quoted)
                if (auto b = env.find(e.atom)) return formula(*b->first, *b->second);
            throw ParseError(e.line, e.col, "expected a formula, got '" + e.atom + "'");
        }
        if (e.items.empty()) throw ParseError(e.line, e.col, "empty expression");
        if (e.items[0].is_list) {
            // SMT-LIB annotations arrive as (! f :named x); anything else is an error
            throw ParseError(e.line, e.col, "expected an operator");
        }
        const std::string& op = e.items[0].atom;
        std::size_t n = e.items.size() - 1;
        auto args = [&](std::size_t from) {
            std::vector<Formula> fs;
            for (std::size_t i = from; i <= n; ++i) fs.push_back(formula(e.items[i], env));
            return fs;
        };
        if (op == "and") return mk_and(args(1));
        if (op == "or") return mk_or(args(1));
        if (op == "not") {
            if (n != 1) throw ParseError(e.line, e.col, "'not' takes one argument");
            return mk_not(formula(e.items[1], env));
        }
        if (op == "=>" || op == "implies") {
            if (n < 2) throw ParseError(e.line, e.col, "'=>' takes at least two arguments");
            Formula r = formula(e.items[n], env);
            for (std::size_t i = n - 1; i >= 1; --i) r = mk_implies(formula(e.items[i], env), r);
            return r;
        }
        if (op == "!") {
            if (n < 1) throw ParseError(e.line, e.col, "malformed annotation");
            return formula(e.items[1], env);
        }
        if (op == "let") return with_let(e, env, [&](const SExpr& body, const Env& inner) { return formula(body, inner); });
        if (op == "exists" || op == "forall") {
            if (n != 2 || !e.items[1].is_list) throw ParseError(e.line, e.col, "malformed quantifier");
            std::vector<VarRef> vars;
            for (const auto& v : e.items[1].items) {
                if (v.is_list) {
                    if (v.items.empty() || v.items[0].is_list) throw ParseError(v.line, v.col, "malformed binder");
                    vars.push_back(variable(v.items[0]));
                } else {
                    vars.push_back(variable(v));
                }
            }
            Formula body = formula(e.items[2], env);
            return op == "exists" ? mk_exists(vars, body) : mk_forall(vars, body);
        }
        Rel rel;
        bool flip = false;
        if (op == "<") rel = Rel::Lt;
        else if (op == "<=") rel = Rel::Le;
        else if (op == "=") rel = Rel::Eq;
        else if (op == "!=" || op == "distinct") rel = Rel::Ne;
        else if (op == ">") rel = Rel::Lt, flip = true;
        else if (op == ">=") rel = Rel::Le, flip = true;
        else throw ParseError(e.line, e.col, "unknown operator '" + op + "'");
        if (n < 2) throw ParseError(e.line, e.col, "'" + op + "' takes at least two arguments");
        std::vector<LinTerm> ts;
        for (std::size_t i = 1; i <= n; ++i) ts.push_back(term(e.items[i], env));
        std::vector<Formula> conj;
        if (rel == Rel::Ne && n > 2) {
            for (std::size_t i = 0; i < ts.size(); ++i)
                for (std::size_t j = i + 1; j < ts.size(); ++j) conj.push_back(mk_cmp(ts[i], Rel::Ne, ts[j]));
        } else {
            for (std::size_t i = 0; i + 1 < ts.size(); ++i)
                conj.push_back(flip ? mk_cmp(ts[i + 1], rel, ts[i]) : mk_cmp(ts[i], rel, ts[i + 1]));
        }
        return mk_and(std::move(conj));
    }

private:
    const SortLookup& sorts_;
};

} // namespace

Formula parse_formula(std::string_view text, const SortLookup& sorts, int line, int col) {
    SExpr e = read_sexpr(text, line, col);
    Env env;
    return Builder(sorts).formula(e, env);
}

LinTerm parse_term(std::string_view text, const SortLookup& sorts) {
    SExpr e = read_sexpr(text);
    Env env;
    return Builder(sorts).term(e, env);
}

} // namespace daut

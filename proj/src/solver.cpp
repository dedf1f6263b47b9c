#include "daut/solver.hpp"

#include "fm.hpp"

#include <algorithm>

namespace daut {

const char* to_string(SolverError::Kind k) {
    switch (k) {
    case SolverError::Kind::Timeout: return "timeout";
    case SolverError::Kind::ProtocolError: return "protocol error";
    case SolverError::Kind::Crash: return "solver crashed";
    case SolverError::Kind::UnsupportedSort: return "unsupported sort";
    case SolverError::Kind::BudgetExceeded: return "cube budget exceeded";
    case SolverError::Kind::SatInput: return "input is satisfiable";
    case SolverError::Kind::Unsupported: return "unsupported";
    }
    return "?";
}

bool verify_certificate(const FarkasCertificate& cert) {
    LinTerm sum;
    bool strict = false, weak = false;
    for (const auto& [atom, lambda] : cert.combination) {
        if (lambda == 0) continue;
        switch (atom.rel) {
        case Rel::Lt:
            if (lambda < 0) return false;
            strict = true;
            break;
        case Rel::Le:
            if (lambda < 0) return false;
            weak = true;
            break;
        case Rel::Eq: break;
        case Rel::Ne: return false;
        }
        sum += atom.term * lambda;
    }
    if (!sum.is_constant()) return false;
    const Rational& c = sum.constant();
    if (strict) return c >= 0;
    if (weak) return c > 0;
    return c != 0;
}

namespace {


bool has_integer(const Formula& f) {
    switch (f.kind()) {
    case Kind::Atom:
        for (const auto& [v, c] : f.atom().term.coeffs())
            if (v.sort == Sort::Integer) return true;
        return false;
    case Kind::Exists:
    case Kind::Forall:
        for (const auto& v : f.bound())
            if (v.sort == Sort::Integer) return true;
        return has_integer(f.body());
    default:
        for (const auto& g : f.args())
            if (has_integer(g)) return true;
        return false;
    }
}

void check_sorts(const Formula& f, const SolverOptions& opts) {
    if (opts.integers == IntegerMode::Reject && has_integer(f))
        throw SolverError(SolverError::Kind::UnsupportedSort,
                          "builtin engine is rational; Integer-sorted variables need the external solver or relaxation mode");
}

Formula fm_eliminate_qf(const std::vector<VarRef>& vars, const Formula& f, const SolverOptions& opts);

// Removes quantifiers from an NNF formula. Existentials that are not under a
// universal become fresh free variables when `skolem` is set.
Formula prepare_rec(const Formula& f, bool positive, bool skolem, const SolverOptions& opts, int& fresh) {
    switch (f.kind()) {
    case Kind::True:
    case Kind::False:
    case Kind::Atom: return f;
    case Kind::And:
    case Kind::Or: {
        std::vector<Formula> args;
        for (const auto& g : f.args()) args.push_back(prepare_rec(g, positive, skolem, opts, fresh));
        return f.kind() == Kind::And ? mk_and(std::move(args)) : mk_or(std::move(args));
    }
    case Kind::Exists: {
        if (positive && skolem) {
            std::vector<std::pair<VarRef, VarRef>> map;
            for (const auto& v : f.bound()) map.emplace_back(v, v.with_tag(Tag::Aux, ++fresh));
            Formula body = rename(f.body(), [&](const VarRef& v) {
                for (const auto& [from, to] : map)
                    if (from == v) return to;
                return v;
            });
            return prepare_rec(body, true, skolem, opts, fresh);
        }
        Formula body = prepare_rec(f.body(), false, skolem, opts, fresh);
        return fm_eliminate_qf(f.bound(), body, opts);
    }
    case Kind::Forall: {
        Formula body = prepare_rec(f.body(), false, skolem, opts, fresh);
        Formula e = fm_eliminate_qf(f.bound(), nnf(mk_not(body)), opts);
        return nnf(mk_not(e));
    }
    case Kind::Not: return prepare_rec(nnf(f), positive, skolem, opts, fresh);
    }
    return f;
}

int max_aux(const Formula& f) {
    int m = 0;
    auto see = [&](const VarRef& v) {
        if (v.tag == Tag::Aux) m = std::max(m, v.index);
    };
    switch (f.kind()) {
    case Kind::Atom:
        for (const auto& [v, c] : f.atom().term.coeffs()) see(v);
        break;
    case Kind::Not:
    case Kind::And:
    case Kind::Or:
        for (const auto& g : f.args()) m = std::max(m, max_aux(g));
        break;
    case Kind::Exists:
    case Kind::Forall:
        for (const auto& v : f.bound()) see(v);
        m = std::max(m, max_aux(f.body()));
        break;
    default: break;
    }
    return m;
}

Formula prepare(const Formula& f, bool skolem, const SolverOptions& opts) {
    int fresh = max_aux(f);
    return prepare_rec(nnf(f, true), true, skolem, opts, fresh);
}

const Atom kFalseAtom{LinTerm::constant(1), Rel::Le};

// Depth-first cube enumeration with feasibility pruning at disjunctions.
class CubeSearch {
public:
    using Refuted = std::function<void(const Cube&, const fm::Origin&)>;
    using Feasible = std::function<bool(const Cube&, const Valuation&)>; // false stops

    CubeSearch(const SolverOptions& o, bool tighten_ints, Refuted r, Feasible s)
        : opts_(o), tighten_(tighten_ints), refuted_(std::move(r)), feasible_(std::move(s)) {}

    // Returns false iff stopped by the feasible callback.
    bool run(const Formula& f, Cube prefix, bool want_model) {
        want_model_ = want_model;
        cube_ = std::move(prefix);
        todo_ = {f};
        return go(0);
    }

private:
    bool tick() {
        if (++work_ > opts_.cube_budget)
            throw SolverError(SolverError::Kind::BudgetExceeded,
                              "more than " + std::to_string(opts_.cube_budget) + " cubes explored");
        return true;
    }

    // `checked`: cube prefix length known to be feasible
    bool go(std::size_t checked) {
        if (todo_.empty()) {
            tick();
            fm::Result r = fm::solve(cube_, want_model_);
            if (!r.feasible) {
                refuted_(cube_, r.farkas);
                return true;
            }
            return feasible_(cube_, r.model);
        }
        Formula f = todo_.back();
        todo_.pop_back();
        bool cont = true;
        switch (f.kind()) {
        case Kind::True: cont = go(checked); break;
        case Kind::False:
            cube_.push_back(kFalseAtom);
            tick();
            refuted_(cube_, {{static_cast<int>(cube_.size() - 1), Rational(1)}});
            cube_.pop_back();
            break;
        case Kind::Atom: {
            bool value = true;
            std::optional<Atom> a = tighten_ ? tighten(f.atom(), &value) : f.atom();
            if (!a) {
                if (value) {
                    cont = go(checked);
                } else {
                    cube_.push_back(kFalseAtom);
                    tick();
                    refuted_(cube_, {{static_cast<int>(cube_.size() - 1), Rational(1)}});
                    cube_.pop_back();
                }
                break;
            }
            cube_.push_back(std::move(*a));
            cont = go(checked);
            cube_.pop_back();
            break;
        }
        case Kind::And:
            for (auto it = f.args().rbegin(); it != f.args().rend(); ++it) todo_.push_back(*it);
            cont = go(checked);
            todo_.resize(todo_.size() - f.args().size());
            break;
        case Kind::Or: {
            if (cube_.size() > checked) {
                tick();
                fm::Result r = fm::solve(cube_, false);
                if (!r.feasible) {
                    refuted_(cube_, r.farkas);
                    break;
                }
                checked = cube_.size();
            }
            for (const auto& g : f.args()) {
                todo_.push_back(g);
                cont = go(checked);
                todo_.pop_back();
                if (!cont) break;
            }
            break;
        }
        default: throw std::logic_error("cube search: formula is not quantifier-free NNF");
        }
        todo_.push_back(f);
        return cont;
    }

    const SolverOptions& opts_;
    bool tighten_;
    Refuted refuted_;
    Feasible feasible_;
    bool want_model_ = false;
    Cube cube_;
    std::vector<Formula> todo_;
    std::size_t work_ = 0;
};

bool tighten_enabled(const SolverOptions& opts) {
    return opts.integers == IntegerMode::Relax;
}

FarkasCertificate make_certificate(const Cube& cube, const fm::Origin& origin) {
    FarkasCertificate c;
    for (const auto& [i, lambda] : origin) c.combination.emplace_back(cube[i], lambda);
    return c;
}

// The A-side part of a Farkas combination: implied by the A atoms and
// inconsistent with the B atoms.
Formula a_part(const Cube& cube, std::size_t a_size, const fm::Origin& origin) {
    LinTerm sum;
    bool strict = false, weak = false;
    for (const auto& [i, lambda] : origin) {
        if (static_cast<std::size_t>(i) >= a_size || lambda == 0) continue;
        const Atom& a = cube[i];
        if (a.rel == Rel::Lt) strict = true;
        else if (a.rel == Rel::Le) weak = true;
        sum += a.term * lambda;
    }
    return mk_atom(sum, strict ? Rel::Lt : (weak ? Rel::Le : Rel::Eq));
}

Formula cube_formula(const Cube& c) {
    std::vector<Formula> fs;
    for (const auto& a : c) fs.push_back(mk_atom(a));
    return mk_and(std::move(fs));
}

Formula fm_eliminate_qf(const std::vector<VarRef>& vars, const Formula& f, const SolverOptions& opts) {
    std::vector<Formula> disj;
    CubeSearch cs(
        opts, false, [](const Cube&, const fm::Origin&) {},
        [&](const Cube& c, const Valuation&) {
            if (auto p = fm::project(c, vars)) {
                Formula g = cube_formula(*p);
                if (std::find(disj.begin(), disj.end(), g) == disj.end()) disj.push_back(g);
            }
            return true;
        });
    cs.run(nnf(f, true), {}, false);
    return mk_or(std::move(disj));
}

} // namespace

SatResult check_sat(const Formula& f, const SolverOptions& opts) {
    check_sorts(f, opts);
    Formula g = prepare(f, true, opts);
    SatResult res;
    std::vector<FarkasCertificate> certs;
    CubeSearch cs(
        opts, tighten_enabled(opts), [&](const Cube& c, const fm::Origin& o) { certs.push_back(make_certificate(c, o)); },
        [&](const Cube&, const Valuation& m) {
            res.sat = true;
            res.model = m;
            return false;
        });
    cs.run(g, {}, true);
    if (res.sat) {
        Valuation out;
        for (const auto& v : free_vars(f)) {
            auto it = res.model.find(v);
            out[v] = it == res.model.end() ? Rational(0) : it->second;
        }
        res.model = std::move(out);
    } else if (certs.size() == 1) {
        res.certificate = std::move(certs.front());
    }
    return res;
}

SatResult check_cube(const Cube& cube, const SolverOptions& opts) {
    Cube c;
    for (const auto& a : cube) {
        if (a.rel == Rel::Ne) throw std::invalid_argument("check_cube: != atom");
        bool value = true;
        auto t = tighten_enabled(opts) ? tighten(a, &value) : a;
        if (t) c.push_back(*t);
        else if (!value) c.push_back(kFalseAtom);
    }
    fm::Result r = fm::solve(c, true);
    SatResult res;
    res.sat = r.feasible;
    if (r.feasible) res.model = std::move(r.model);
    else res.certificate = make_certificate(c, r.farkas);
    return res;
}

Formula fm_eliminate(const std::vector<VarRef>& vars, const Formula& f, const SolverOptions& opts) {
    if (opts.integers == IntegerMode::Reject)
        for (const auto& v : vars)
            if (v.sort == Sort::Integer)
                throw SolverError(SolverError::Kind::UnsupportedSort, "cannot eliminate Integer-sorted " + v.name());
    Formula g = prepare(f, false, opts);
    return fm_eliminate_qf(vars, g, opts);
}

Formula eliminate_quantifiers(const Formula& f, const SolverOptions& opts) {
    return prepare(f, false, opts);
}

Formula interpolate(const Formula& a, const Formula& b, const SolverOptions& opts) {
    Formula fa = prepare(a, true, opts);
    Formula fb = prepare(b, true, opts);
    const bool tight = tighten_enabled(opts);
    std::vector<Formula> disj;
    CubeSearch outer(
        opts, tight, [](const Cube&, const fm::Origin&) {},
        [&](const Cube& ca, const Valuation&) {
            std::vector<Formula> conj;
            const std::size_t na = ca.size();
            CubeSearch inner(
                opts, tight,
                [&](const Cube& c, const fm::Origin& o) {
                    Formula i = a_part(c, na, o);
                    if (std::find(conj.begin(), conj.end(), i) == conj.end()) conj.push_back(i);
                },
                [&](const Cube&, const Valuation&) -> bool {
                    throw SolverError(SolverError::Kind::SatInput, "interpolation input is satisfiable");
                });
            inner.run(fb, ca, false);
            Formula c = mk_and(std::move(conj));
            if (std::find(disj.begin(), disj.end(), c) == disj.end()) disj.push_back(c);
            return true;
        });
    outer.run(fa, {}, false);
    return mk_or(std::move(disj));
}

Formula simplify(const Formula& f, const SolverOptions& opts) {
    Formula g = prepare(f, true, opts);
    auto entails_cube = [&](const Cube& premise, const Atom& goal) {
        // premise ∧ ¬goal infeasible
        Formula q = mk_and(cube_formula(premise), mk_not(mk_atom(goal)));
        return !check_sat(q, opts).sat;
    };
    std::vector<Cube> cubes;
    // enumerate with original (untightened) atoms kept for output
    for_each_cube(g, [&](const Cube& c) {
        if (check_sat(cube_formula(c), opts).sat) {
            Cube sorted = c;
            std::sort(sorted.begin(), sorted.end());
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            cubes.push_back(std::move(sorted));
        }
        if (cubes.size() > opts.cube_budget)
            throw SolverError(SolverError::Kind::BudgetExceeded, "simplify: too many cubes");
        return true;
    });
    for (auto& c : cubes) {
        for (std::size_t k = 0; k < c.size();) {
            Cube rest = c;
            rest.erase(rest.begin() + static_cast<long>(k));
            if (entails_cube(rest, c[k])) c = std::move(rest);
            else ++k;
        }
    }
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
    std::vector<bool> dropped(cubes.size(), false);
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        for (std::size_t j = 0; j < cubes.size() && !dropped[i]; ++j) {
            if (i == j || dropped[j]) continue;
            Formula ci = cube_formula(cubes[i]), cj = cube_formula(cubes[j]);
            if (!check_sat(mk_and(ci, mk_not(cj)), opts).sat) dropped[i] = true;
        }
    }
    std::vector<Formula> disj;
    for (std::size_t i = 0; i < cubes.size(); ++i)
        if (!dropped[i]) disj.push_back(cube_formula(cubes[i]));
    return mk_or(std::move(disj));
}

// ---------------------------------------------------------------- Solver

bool Solver::entails(const Formula& a, const Formula& b) {
    return !is_sat(mk_and(a, mk_not(b)));
}

SatResult BuiltinSolver::check(const Formula& f) {
    ++queries_;
    return check_sat(f, opts_);
}

std::vector<Formula> BuiltinSolver::sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas) {
    ++queries_;
    return builtin_sequence_interpolant(phi, thetas, opts_);
}

Formula path_formula(const Formula& phi, const std::vector<Formula>& thetas) {
    std::vector<Formula> parts{to_step(phi, 0)};
    for (std::size_t i = 0; i < thetas.size(); ++i) parts.push_back(to_step(thetas[i], static_cast<int>(i)));
    return mk_and(std::move(parts));
}

std::vector<Formula> builtin_sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas,
                                                  const SolverOptions& opts) {
    check_sorts(path_formula(phi, thetas), opts);
    const int m = static_cast<int>(thetas.size());
    std::vector<Formula> steps;
    for (int i = 0; i < m; ++i) steps.push_back(to_step(thetas[i], i));
    auto suffix = [&](int i) { // θ_{i+1..m}
        return mk_and(std::vector<Formula>(steps.begin() + i, steps.end()));
    };
    Formula a0 = to_step(phi, 0);
    if (check_sat(mk_and(a0, suffix(0)), opts).sat)
        throw SolverError(SolverError::Kind::SatInput, "path formula is satisfiable");
    std::vector<Formula> seq;
    Formula cur = simplify(interpolate(a0, suffix(0), opts), opts);
    seq.push_back(cur);
    for (int i = 1; i < m; ++i) {
        cur = simplify(interpolate(mk_and(cur, steps[i - 1]), suffix(i), opts), opts);
        seq.push_back(cur);
    }
    if (m > 0) seq.push_back(bottom());
    for (int i = 0; i <= m; ++i) seq[i] = retag(seq[i], Tag::Step, i, Tag::Plain, 0);
    return seq;
}

bool validate_interpolant(Solver& s, const Formula& phi, const std::vector<Formula>& thetas,
                          const std::vector<Formula>& seq, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    const int m = static_cast<int>(thetas.size());
    if (static_cast<int>(seq.size()) != m + 1) return fail("sequence length " + std::to_string(seq.size()) +
                                                           ", expected " + std::to_string(m + 1));
    for (int i = 0; i <= m; ++i) {
        VarSet prefix = free_vars(to_step(phi, 0)), suffix;
        for (int l = 0; l < i; ++l) {
            auto vs = free_vars(to_step(thetas[l], l));
            prefix.insert(vs.begin(), vs.end());
        }
        for (int l = i; l < m; ++l) {
            auto vs = free_vars(to_step(thetas[l], l));
            suffix.insert(vs.begin(), vs.end());
        }
        for (const auto& v : free_vars(seq[i])) {
            if (v.tag != Tag::Plain) return fail("I_" + std::to_string(i) + " mentions " + v.name());
            VarRef at = v.with_tag(Tag::Step, i);
            if (!prefix.count(at) || !suffix.count(at))
                return fail("I_" + std::to_string(i) + " mentions " + v.name() + " outside the cut vocabulary");
        }
    }
    if (!s.entails(phi, seq[0])) return fail("Phi does not entail I_0");
    if (s.is_sat(seq[m])) return fail("I_m is satisfiable");
    for (int i = 1; i <= m; ++i)
        if (!s.entails(mk_and(seq[i - 1], thetas[i - 1]), prime(seq[i])))
            return fail("I_" + std::to_string(i - 1) + " and theta_" + std::to_string(i) + " do not entail I_" +
                        std::to_string(i));
    return true;
}

} // namespace daut

#include "daut/simulation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace daut {

namespace {

Formula strip_sorts(const Formula& f) {
    return rename(f, [](const VarRef& v) { return VarRef{v.base, v.tag, v.index, Sort::Rational}; });
}

using SortMap = std::map<std::string, Sort>;

Formula restore_sorts(const Formula& f, const SortMap& sorts) {
    return rename(f, [&](const VarRef& v) {
        auto it = sorts.find(v.base);
        return VarRef{v.base, v.tag, v.index, it == sorts.end() ? v.sort : it->second};
    });
}

Formula frames(const std::vector<VarRef>& frozen) {
    std::vector<Formula> fs;
    for (const auto& p : frozen)
        fs.push_back(mk_cmp(LinTerm::var(p.with_tag(Tag::Primed)), Rel::Eq, LinTerm::var(p.with_tag(Tag::Plain))));
    return mk_and(std::move(fs));
}

// The automaton with rational sorts, frames folded into the guards, and the
// variables that presim quantifies.
struct Prepared {
    const DataAutomaton& a;
    std::vector<Rule> rules;
    std::vector<VarRef> quantified; // x' for all variables, plus plain globals
    SortMap sorts;

    Prepared(const DataAutomaton& aut, const SimConfig& cfg) : a(aut) {
        Formula fr = strip_sorts(frames(cfg.frozen));
        for (const auto& r : a.rules) {
            Rule s = r;
            s.guard = mk_and(strip_sorts(r.guard), fr);
            rules.push_back(std::move(s));
        }
        std::set<VarRef> q;
        auto add = [&](const VarRef& v) {
            sorts[v.base] = v.sort;
            q.insert(VarRef{v.base, Tag::Primed, 0, Sort::Rational});
        };
        for (const auto& v : a.vars) add(v);
        for (const auto& v : cfg.frozen) add(v);
        for (const auto& r : a.rules)
            for (const auto& v : free_vars(r.guard))
                if (v.tag == Tag::Primed) q.insert(VarRef{v.base, Tag::Primed, 0, Sort::Rational});
        for (const auto& g : cfg.globals) q.insert(VarRef{g.base, Tag::Plain, 0, Sort::Rational});
        quantified.assign(q.begin(), q.end());
    }

    // Disjunction of the peer's σ-moves into related targets, over x and x'.
    Formula matched(const std::string& event, int j, int l, const SimMatrix& r) const {
        std::vector<Formula> ds;
        for (const auto& m : rules)
            if (m.src == j && m.event == event) ds.push_back(mk_and(m.guard, prime(strip_sorts(r[l][m.dst]))));
        return mk_or(std::move(ds));
    }

    Formula presim(const Rule& rule, int j, const SimMatrix& r) const {
        Formula bad = mk_and(rule.guard, mk_not(matched(rule.event, j, rule.dst, r)));
        Formula e = fm_eliminate(quantified, bad);
        return simplify(mk_not(e));
    }
};

} // namespace

SimMatrix identity_matrix(std::size_t k) {
    SimMatrix m(k, std::vector<Formula>(k, bottom()));
    for (std::size_t i = 0; i < k; ++i) m[i][i] = top();
    return m;
}

SimMatrix top_matrix(std::size_t k) {
    return SimMatrix(k, std::vector<Formula>(k, top()));
}

Formula presim(const DataAutomaton& a, const Rule& rule, int j, const SimMatrix& r, const SimConfig& cfg) {
    Prepared p(a, cfg);
    Rule s = rule;
    s.guard = mk_and(strip_sorts(rule.guard), strip_sorts(frames(cfg.frozen)));
    return restore_sorts(p.presim(s, j, r), p.sorts);
}

SimMatrix compute_simulation(const DataAutomaton& a, const SimConfig& cfg, SimStats* stats) {
    if (cfg.K < 1) throw SimulationError("K must be positive");
    SimStats local;
    SimStats& st = stats ? *stats : local;
    const Prepared p(a, cfg);
    const std::size_t k = a.states.size();
    BuiltinSolver solver;

    SimMatrix prev = top_matrix(k);
    SimMatrix sim(k, std::vector<Formula>(k));
    std::vector<std::vector<int>> cnt(k, std::vector<int>(k, cfg.K));
    auto blocked = [&](std::size_t i, std::size_t j) {
        return a.is_final(static_cast<int>(i)) && !a.is_final(static_cast<int>(j));
    };
    auto presim_into = [&](const Rule& r, std::size_t j, const SimMatrix& rel) {
        ++st.presim_calls;
        return p.presim(r, static_cast<int>(j), rel);
    };

    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (blocked(i, j)) {
                sim[i][j] = bottom();
                continue;
            }
            std::vector<Formula> conj;
            for (const auto& r : p.rules)
                if (r.src == static_cast<int>(i)) conj.push_back(presim_into(r, j, prev));
            sim[i][j] = simplify(mk_and(std::move(conj)));
        }

    auto same = [&](const Formula& x, const Formula& y) { return x == y || solver.equivalent(x, y); };

    auto check_invariants = [&] {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if (!solver.entails(sim[i][j], prev[i][j]))
                    st.violations.push_back("SimInv1 fails at (" + a.states[i] + ", " + a.states[j] + ")");
        for (const auto& r : p.rules)
            for (std::size_t j = 0; j < k; ++j) {
                Formula lhs = mk_and(sim[r.src][j], r.guard);
                if (!solver.entails(lhs, p.matched(r.event, static_cast<int>(j), r.dst, prev)))
                    st.violations.push_back("SimInv2 fails for " + a.states[r.src] + " -" + r.event + "-> " +
                                            a.states[r.dst] + " against " + a.states[j]);
            }
    };

    const std::uint64_t bound = static_cast<std::uint64_t>(cfg.K) * k * k;
    std::uint64_t activations = 0;
    for (;;) {
        if (cfg.test_mode) check_invariants();
        std::size_t l = k;
        std::vector<bool> differs(k, false);
        for (std::size_t row = 0; row < k && l == k; ++row) {
            for (std::size_t j = 0; j < k; ++j) differs[j] = !same(sim[row][j], prev[row][j]);
            if (std::find(differs.begin(), differs.end(), true) != differs.end()) l = row;
        }
        if (l == k) break;
        ++st.activations;
        if (cfg.test_mode && ++activations > bound)
            st.violations.push_back("more than K*k*k row activations");

        for (std::size_t j = 0; j < k; ++j) {
            if (!differs[j]) continue;
            ++st.decrements;
            if (--cnt[l][j] == 0) {
                sim[l][j] = bottom();
                ++st.forced_false;
            }
        }
        prev[l] = sim[l];
        // sharpen the predecessors of l against the row as just recorded
        for (const auto& r : p.rules) {
            if (r.dst != static_cast<int>(l)) continue;
            for (std::size_t j = 0; j < k; ++j) {
                if (sim[r.src][j].is_false()) continue;
                Formula ps = presim_into(r, j, prev);
                if (ps.is_true()) continue;
                sim[r.src][j] = simplify(mk_and(sim[r.src][j], ps));
            }
        }
    }

    for (auto& row : sim)
        for (auto& f : row) f = restore_sorts(f, p.sorts);
    return sim;
}

bool is_simulation(const DataAutomaton& a, const SimMatrix& r, Solver& solver, const std::vector<VarRef>& frozen,
                   std::string* why) {
    const std::size_t k = a.states.size();
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (r.size() != k) return fail("matrix has the wrong size");
    for (const auto& row : r)
        if (row.size() != k) return fail("matrix has the wrong size");
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (a.is_final(static_cast<int>(i)) && !a.is_final(static_cast<int>(j)) && solver.is_sat(r[i][j]))
                return fail("final " + a.states[i] + " related to non-final " + a.states[j]);
    const Formula fr = frames(frozen);
    for (const auto& rule : a.rules)
        for (std::size_t j = 0; j < k; ++j) {
            if (r[rule.src][j].is_false()) continue;
            std::vector<Formula> ds;
            for (const auto& m : a.rules)
                if (m.src == static_cast<int>(j) && m.event == rule.event)
                    ds.push_back(mk_and(m.guard, prime(r[rule.dst][m.dst])));
            Formula lhs = mk_and({r[rule.src][j], rule.guard, fr});
            if (!solver.entails(lhs, mk_or(std::move(ds))))
                return fail("move " + a.states[rule.src] + " -" + rule.event + "-> " + a.states[rule.dst] +
                            " is not matched from " + a.states[j]);
        }
    return true;
}

bool check_assumption1(const SimMatrix& r, const std::vector<VarRef>& globals, Solver& solver) {
    std::vector<VarRef> g;
    for (const auto& v : globals) g.push_back(VarRef{v.base, Tag::Plain, 0, Sort::Rational});
    for (const auto& row : r)
        for (const auto& f : row) {
            Formula q = strip_sorts(f);
            Formula closed = fm_eliminate(g, q);
            if (!solver.entails(closed, q)) return false;
        }
    return true;
}

std::string matrix_text(const DataAutomaton& a, const SimMatrix& r) {
    std::ostringstream os;
    os << a.name << ": " << a.states.size() << " states\n";
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r[i].size(); ++j)
            os << a.states[i] << " <= " << a.states[j] << " : " << to_string(r[i][j]) << "\n";
    return os.str();
}

void require_global_split(const Network& net) {
    std::map<std::string, int> owners;
    for (const auto& c : net.components)
        for (const auto& v : c.vars) ++owners[v.base];
    for (const auto& [base, n] : owners) {
        if (n < 2) continue;
        bool global = std::any_of(net.globals.begin(), net.globals.end(), [&](const VarRef& g) { return g.base == base; });
        if (!global)
            throw SimulationError("variable '" + base +
                                  "' is shared between automata but not declared in `globals`; simulation subsumption "
                                  "needs the global/local split");
    }
}

NetworkSimulation compute_network_simulation(const Network& net, const DataAutomaton& b, const SimConfig& cfg,
                                             SimStats* stats) {
    require_global_split(net);
    NetworkSimulation out;
    for (const auto& c : net.components) {
        SimConfig ci = cfg;
        ci.globals.clear();
        for (const auto& g : net.globals)
            if (std::find(c.vars.begin(), c.vars.end(), g) != c.vars.end()) ci.globals.push_back(g);
        ci.frozen = net.params;
        out.components.push_back(compute_simulation(c, ci, stats));
    }
    SimConfig co = cfg;
    co.globals.clear();
    co.frozen.clear();
    out.observer = compute_simulation(b, co, stats);
    return out;
}

bool subsumes_sim(const ProductState& s, const ProductState& t, const Network& net, const NetworkSimulation& sims,
                  Solver& solver) {
    if (s.qvec.size() != t.qvec.size() || s.qvec.size() != sims.components.size()) return false;
    for (std::size_t i = 0; i < s.qvec.size(); ++i) {
        if (s.qvec[i] == t.qvec[i]) continue;
        const auto& c = net.components[i];
        for (const auto& rt : c.rules) {
            if (rt.src != t.qvec[i]) continue;
            bool enabled = std::any_of(c.rules.begin(), c.rules.end(), [&](const Rule& rs) {
                return rs.src == s.qvec[i] && rs.event == rt.event;
            });
            if (!enabled) return false;
        }
    }
    std::vector<Formula> need{t.phi};
    for (std::size_t i = 0; i < s.qvec.size(); ++i) need.push_back(sims.components[i][s.qvec[i]][t.qvec[i]]);
    for (int p : t.pset) {
        std::vector<Formula> any;
        for (int q : s.pset) any.push_back(sims.observer[p][q]);
        need.push_back(mk_or(std::move(any)));
    }
    for (const auto& f : need)
        if (!f.is_true() && !solver.entails(s.phi, f)) return false;
    return true;
}

} // namespace daut

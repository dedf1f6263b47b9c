#include "daut/oracle.hpp"

#include <deque>

namespace daut {

std::vector<NetMove> network_moves(const Network& net, const std::vector<int>& q, const std::string& event) {
    std::vector<std::vector<const Rule*>> opts(net.components.size());
    VarSet moving;
    for (std::size_t i = 0; i < net.components.size(); ++i) {
        const auto& c = net.components[i];
        for (const auto& r : c.rules)
            if (r.src == q[i] && r.event == event) opts[i].push_back(&r);
        if (!opts[i].empty()) moving.insert(c.vars.begin(), c.vars.end());
    }
    if (moving.empty()) return {};
    std::vector<Formula> same;
    for (const auto& v : net.vars())
        if (net.is_param(v) || !moving.count(v))
            same.push_back(mk_cmp(LinTerm::var(v.with_tag(Tag::Primed)), Rel::Eq, LinTerm::var(v)));

    std::vector<NetMove> out{NetMove{q, mk_and(same)}};
    for (std::size_t i = 0; i < opts.size(); ++i) {
        if (opts[i].empty()) continue;
        std::vector<NetMove> grown;
        for (const auto& m : out)
            for (const Rule* r : opts[i]) {
                NetMove n = m;
                n.next[i] = r->dst;
                n.guard = mk_and(m.guard, r->guard);
                grown.push_back(std::move(n));
            }
        out = std::move(grown);
    }
    return out;
}

namespace {

// Disjunction over all accepting runs of b from `start` along `events`,
// each run's guards placed at steps (i, i+1).
Formula accepting_runs(const DataAutomaton& b, const StateSet& start, const std::vector<std::string>& events) {
    std::vector<Formula> runs;
    std::vector<Formula> guards;
    std::function<void(int, std::size_t)> go = [&](int p, std::size_t i) {
        if (i == events.size()) {
            if (b.is_final(p)) runs.push_back(mk_and(guards));
            return;
        }
        for (const auto& r : b.rules) {
            if (r.src != p || r.event != events[i]) continue;
            guards.push_back(to_step(r.guard, static_cast<int>(i)));
            go(r.dst, i + 1);
            guards.pop_back();
        }
    };
    for (int p : start) go(p, 0);
    return mk_or(runs);
}

struct Partial {
    std::vector<int> q;
    std::vector<std::string> events;
    std::vector<Formula> steps;
    std::vector<std::string> path;
};

Trace model_trace(const Valuation& model, const std::vector<std::string>& events, const std::vector<VarRef>& vars) {
    Trace w;
    w.events = events;
    for (std::size_t i = 0; i <= events.size(); ++i) {
        Valuation nu;
        for (const auto& v : vars) {
            auto it = model.find(v.with_tag(Tag::Step, static_cast<int>(i)));
            nu[v] = it == model.end() ? Rational(0) : it->second;
        }
        w.vals.push_back(std::move(nu));
    }
    return w;
}

// Breadth-first enumeration of feasible network paths from q0 with `init`
// constraining step 0. `accept` receives each path ending in a final vector
// and returns true to stop.
void explore(const Network& net, const std::vector<int>& q0, const Formula& init, std::size_t depth, Solver& solver,
             const OracleOptions& opts, const std::function<bool(const Partial&)>& accept) {
    std::deque<Partial> work;
    Partial root{q0, {}, {init}, {to_string(q0, net)}};
    if (!solver.is_sat(init)) return;
    work.push_back(root);
    std::size_t paths = 0;
    const auto alphabet = net.alphabet();
    while (!work.empty()) {
        Partial cur = std::move(work.front());
        work.pop_front();
        if (++paths > opts.path_cap) throw OracleError("path cap of " + std::to_string(opts.path_cap) + " exceeded");
        if (net.is_final(cur.q) && accept(cur)) return;
        if (cur.events.size() == depth) continue;
        const int i = static_cast<int>(cur.events.size());
        for (const auto& e : alphabet)
            for (auto& m : network_moves(net, cur.q, e)) {
                Partial n = cur;
                n.q = m.next;
                n.events.push_back(e);
                n.steps.push_back(to_step(m.guard, i));
                n.path.push_back(to_string(m.next, net));
                if (!solver.is_sat(mk_and(n.steps))) continue;
                work.push_back(std::move(n));
            }
    }
}

} // namespace

BoundedResult bounded_emptiness(const Network& net, const DataAutomaton& b, std::size_t depth, Solver& solver,
                                const OracleOptions& opts) {
    BoundedResult res;
    res.depth = depth;
    explore(net, net.initial(), top(), depth, solver, opts, [&](const Partial& p) {
        Formula f = mk_and(mk_and(p.steps), mk_not(accepting_runs(b, {b.initial}, p.events)));
        SatResult r = solver.check(f);
        if (!r.sat) return false;
        res.found = true;
        res.depth = p.events.size();
        res.trace = model_trace(r.model, p.events, b.vars);
        res.path = p.path;
        return true;
    });
    return res;
}

bool trace_membership_from(const DataAutomaton& a, const StateSet& start, const Trace& w) {
    std::set<int> cur(start.begin(), start.end());
    for (std::size_t i = 0; i < w.events.size() && !cur.empty(); ++i) {
        Valuation both = w.vals[i];
        for (const auto& [v, q] : w.vals[i + 1]) both[v.with_tag(Tag::Primed)] = q;
        std::set<int> next;
        for (const auto& r : a.rules)
            if (cur.count(r.src) && r.event == w.events[i] && eval(r.guard, both)) next.insert(r.dst);
        cur = std::move(next);
    }
    for (int q : cur)
        if (a.is_final(q)) return true;
    return false;
}

bool trace_membership(const DataAutomaton& a, const Trace& w) {
    return trace_membership_from(a, {a.initial}, w);
}

bool trace_membership(const Network& net, const Trace& w, Solver& solver) {
    std::vector<Formula> fixed;
    for (std::size_t i = 0; i < w.vals.size(); ++i)
        for (const auto& [v, q] : w.vals[i])
            fixed.push_back(mk_cmp(LinTerm::var(v.with_tag(Tag::Step, static_cast<int>(i))), Rel::Eq, LinTerm::constant(q)));
    // depth-first over moves matching w's events
    std::function<bool(const std::vector<int>&, std::vector<Formula>&)> go = [&](const std::vector<int>& q,
                                                                                std::vector<Formula>& steps) {
        std::size_t i = steps.size();
        if (i == w.events.size()) return net.is_final(q);
        for (auto& m : network_moves(net, q, w.events[i])) {
            steps.push_back(to_step(m.guard, static_cast<int>(i)));
            std::vector<Formula> all = fixed;
            all.insert(all.end(), steps.begin(), steps.end());
            bool ok = solver.is_sat(mk_and(all)) && go(m.next, steps);
            steps.pop_back();
            if (ok) return true;
        }
        return false;
    };
    std::vector<Formula> steps;
    if (!solver.is_sat(mk_and(fixed))) return false;
    return go(net.initial(), steps);
}

BoundedResult residual_escape_check(const Network& net, const DataAutomaton& b, const ResidualState& s,
                                    const ResidualState& t, std::size_t depth, Solver& solver,
                                    const OracleOptions& opts) {
    BoundedResult res;
    res.depth = depth;
    const auto vars = net.vars();
    explore(net, s.qvec, to_step(s.phi, 0), depth, solver, opts, [&](const Partial& p) {
        // accepted from s: the network path, with no accepting observer run from s.pset
        Formula from_s = mk_and(mk_and(p.steps), mk_not(accepting_runs(b, s.pset, p.events)));
        // accepted from t: φ_t at step 0, some network path from t.qvec, no observer run from t.pset
        std::vector<Formula> t_paths;
        std::function<void(const std::vector<int>&, std::vector<Formula>&)> go = [&](const std::vector<int>& q,
                                                                                     std::vector<Formula>& steps) {
            std::size_t i = steps.size();
            if (i == p.events.size()) {
                if (net.is_final(q)) t_paths.push_back(mk_and(steps));
                return;
            }
            for (auto& m : network_moves(net, q, p.events[i])) {
                steps.push_back(to_step(m.guard, static_cast<int>(i)));
                go(m.next, steps);
                steps.pop_back();
            }
        };
        std::vector<Formula> steps;
        go(t.qvec, steps);
        Formula in_t = mk_and({to_step(t.phi, 0), mk_or(t_paths), mk_not(accepting_runs(b, t.pset, p.events))});
        SatResult r = solver.check(mk_and(from_s, mk_not(in_t)));
        if (!r.sat) return false;
        res.found = true;
        res.depth = p.events.size();
        res.trace = model_trace(r.model, p.events, vars);
        res.path = p.path;
        return true;
    });
    return res;
}

void for_each_grid_trace(const std::vector<VarRef>& vars, const std::vector<std::string>& alphabet, std::size_t depth,
                         const std::vector<Rational>& grid, const std::function<void(const Trace&)>& fn) {
    if (grid.empty() && !vars.empty()) return;
    // all valuations over the grid
    std::vector<Valuation> vals{Valuation{}};
    for (const auto& v : vars) {
        std::vector<Valuation> grown;
        for (const auto& nu : vals)
            for (const auto& c : grid) {
                Valuation n = nu;
                n[v.with_tag(Tag::Plain)] = c;
                grown.push_back(std::move(n));
            }
        vals = std::move(grown);
    }
    for (std::size_t n = 0; n <= depth; ++n) {
        if (n > 0 && alphabet.empty()) break;
        std::vector<std::size_t> ev(n, 0), vi(n + 1, 0);
        Trace w;
        w.events.resize(n);
        w.vals.resize(n + 1);
        for (;;) {
            for (std::size_t i = 0; i < n; ++i) w.events[i] = alphabet[ev[i]];
            for (;;) {
                for (std::size_t i = 0; i <= n; ++i) w.vals[i] = vals[vi[i]];
                fn(w);
                std::size_t k = n + 1;
                while (k > 0 && ++vi[k - 1] == vals.size()) vi[--k] = 0;
                if (k == 0) break;
            }
            std::size_t k = n;
            while (k > 0 && ++ev[k - 1] == alphabet.size()) ev[--k] = 0;
            if (k == 0) break;
        }
    }
}

std::vector<Trace> grid_traces(const DataAutomaton& a, std::size_t depth, const std::vector<Rational>& grid) {
    std::vector<Trace> out;
    for_each_grid_trace(a.vars, a.alphabet, depth, grid, [&](const Trace& w) {
        if (trace_membership(a, w)) out.push_back(w);
    });
    return out;
}

} // namespace daut

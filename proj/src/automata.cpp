#include "daut/automata.hpp"

#include <algorithm>
#include <deque>

namespace daut {

std::string to_string(const StateSet& s, const std::vector<std::string>& names) {
    std::string out = "{";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + names[s[i]];
    return out + "}";
}

int DataAutomaton::state_index(const std::string& s) const {
    auto it = std::find(states.begin(), states.end(), s);
    return it == states.end() ? -1 : static_cast<int>(it - states.begin());
}

int DataAutomaton::add_state(const std::string& s) {
    int i = state_index(s);
    if (i >= 0) return i;
    states.push_back(s);
    return static_cast<int>(states.size() - 1);
}

bool DataAutomaton::has_event(const std::string& e) const {
    return std::find(alphabet.begin(), alphabet.end(), e) != alphabet.end();
}

VarSet DataAutomaton::var_set() const {
    return VarSet(vars.begin(), vars.end());
}

void DataAutomaton::validate(const std::vector<VarRef>& extra) const {
    VarSet allowed;
    std::vector<VarRef> all = vars;
    all.insert(all.end(), extra.begin(), extra.end());
    for (const auto& v : all) {
        allowed.insert(v.with_tag(Tag::Plain));
        allowed.insert(v.with_tag(Tag::Primed));
    }
    for (const auto& r : rules) {
        if (r.event == kPadding) throw AutomatonError(name + ": the padding symbol cannot label a rule");
        if (!has_event(r.event)) throw AutomatonError(name + ": event '" + r.event + "' is not in the alphabet");
        if (r.src < 0 || r.dst < 0 || r.src >= static_cast<int>(states.size()) || r.dst >= static_cast<int>(states.size()))
            throw AutomatonError(name + ": rule with unknown state");
        for (const auto& v : free_vars(r.guard))
            if (!allowed.count(v))
                throw AutomatonError(name + ": guard of " + states[r.src] + " -> " + states[r.dst] + " uses " + v.name() +
                                     ", which is not a declared variable");
    }
}

std::vector<std::string> Network::alphabet() const {
    std::set<std::string> s;
    for (const auto& c : components) s.insert(c.alphabet.begin(), c.alphabet.end());
    return {s.begin(), s.end()};
}

std::vector<VarRef> Network::vars() const {
    VarSet s(params.begin(), params.end());
    for (const auto& c : components) s.insert(c.vars.begin(), c.vars.end());
    return {s.begin(), s.end()};
}

std::vector<int> Network::initial() const {
    std::vector<int> q;
    for (const auto& c : components) q.push_back(c.initial);
    return q;
}

bool Network::is_final(const std::vector<int>& q) const {
    for (std::size_t i = 0; i < components.size(); ++i)
        if (!components[i].is_final(q[i])) return false;
    return true;
}

bool Network::is_param(const VarRef& v) const {
    return std::find(params.begin(), params.end(), v) != params.end();
}

std::string to_string(const std::vector<int>& qvec, const Network& net) {
    std::string s = "<";
    for (std::size_t i = 0; i < qvec.size(); ++i) s += (i ? "," : "") + net.components[i].states[qvec[i]];
    return s + ">";
}

Trace trace_restrict(const Trace& w, const VarSet& ys) {
    Trace out;
    out.events = w.events;
    for (const auto& nu : w.vals) {
        Valuation r;
        for (const auto& [v, q] : nu)
            if (ys.count(v)) r.emplace(v, q);
        out.vals.push_back(std::move(r));
    }
    return out;
}

namespace {

Formula frame(const VarRef& v) {
    return mk_cmp(LinTerm::var(v.with_tag(Tag::Primed)), Rel::Eq, LinTerm::var(v.with_tag(Tag::Plain)));
}

} // namespace

std::vector<ExpansionStep> expansion_successors(const Network& net, const std::vector<int>& q, const std::string& event) {
    bool known = false;
    for (const auto& c : net.components) known = known || c.has_event(event);
    if (!known) throw AutomatonError("unknown event '" + event + "'");
    const std::size_t n = net.components.size();
    std::vector<std::vector<const Rule*>> choices(n);
    std::vector<int> active;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& r : net.components[i].rules)
            if (r.src == q[i] && r.event == event) choices[i].push_back(&r);
        if (!choices[i].empty()) active.push_back(static_cast<int>(i));
    }
    if (active.empty()) return {};
    VarSet owned;
    for (int i : active) owned.insert(net.components[i].vars.begin(), net.components[i].vars.end());
    std::vector<Formula> frames;
    VarSet framed;
    for (std::size_t j = 0; j < n; ++j) {
        if (!choices[j].empty()) continue;
        for (const auto& v : net.components[j].vars)
            if (!owned.count(v) && !net.is_param(v) && framed.insert(v).second) frames.push_back(frame(v));
    }
    for (const auto& p : net.params) frames.push_back(frame(p));

    std::vector<ExpansionStep> out;
    std::vector<std::size_t> pick(active.size(), 0);
    for (;;) {
        ExpansionStep st;
        st.next = q;
        st.active = active;
        std::vector<Formula> parts;
        for (std::size_t k = 0; k < active.size(); ++k) {
            const Rule* r = choices[active[k]][pick[k]];
            st.next[active[k]] = r->dst;
            parts.push_back(r->guard);
        }
        parts.insert(parts.end(), frames.begin(), frames.end());
        st.guard = mk_and(std::move(parts));
        out.push_back(std::move(st));
        std::size_t k = active.size();
        while (k > 0) {
            --k;
            if (++pick[k] < choices[active[k]].size()) break;
            pick[k] = 0;
            if (k == 0) return out;
        }
        if (active.empty()) return out;
    }
}

std::vector<DetStep> det_successors(const DataAutomaton& b, const StateSet& p, const std::string& event, Solver* prune) {
    if (p.empty()) return {DetStep{{}, top()}};
    std::map<int, std::vector<Formula>> pool;
    for (const auto& r : b.rules)
        if (r.event == event && std::binary_search(p.begin(), p.end(), r.src)) pool[r.dst].push_back(r.guard);
    if (pool.size() > kMaxSuccessorPool)
        throw AutomatonError(b.name + ": successor pool of " + std::to_string(pool.size()) + " states exceeds " +
                             std::to_string(kMaxSuccessorPool));
    std::vector<int> u;
    std::vector<Formula> psi;
    for (auto& [q, gs] : pool) {
        u.push_back(q);
        psi.push_back(mk_or(gs));
    }
    const std::size_t n = u.size();
    std::vector<DetStep> out;
    // subsets by size, then lexicographically by index sequence
    for (std::size_t k = 0; k <= n; ++k) {
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        for (;;) {
            std::vector<bool> in(n, false);
            for (auto i : idx) in[i] = true;
            std::vector<Formula> parts;
            StateSet next;
            for (std::size_t i = 0; i < n; ++i) {
                if (in[i]) {
                    parts.push_back(psi[i]);
                    next.push_back(u[i]);
                } else {
                    parts.push_back(mk_not(psi[i]));
                }
            }
            Formula g = mk_and(std::move(parts));
            if (!g.is_false() && (!prune || prune->is_sat(g))) out.push_back(DetStep{std::move(next), g});
            // next combination
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return out;
}

std::vector<ProductStep> product_successors(const Network& net, const DataAutomaton& b, const std::vector<int>& q,
                                            const StateSet& p, const std::string& event, Solver& solver) {
    std::vector<ProductStep> out;
    auto exp = expansion_successors(net, q, event);
    if (exp.empty()) return out;
    auto det = det_successors(b, p, event, &solver);
    for (const auto& e : exp)
        for (const auto& d : det) {
            Formula g = mk_and(e.guard, d.guard);
            if (g.is_false() || !solver.is_sat(g)) continue;
            out.push_back(ProductStep{e.next, d.next, g, e.active});
        }
    return out;
}

bool product_accepting(const Network& net, const DataAutomaton& b, const std::vector<int>& q, const StateSet& p) {
    if (!net.is_final(q)) return false;
    for (int s : p)
        if (b.is_final(s)) return false;
    return true;
}

namespace {

std::string subset_name(const StateSet& s, const std::vector<std::string>& names) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "+" : "") + names[s[i]];
    return out + "]";
}

} // namespace

DataAutomaton determinize(const DataAutomaton& a, Solver& solver, std::size_t state_bound) {
    if (a.states.size() > state_bound)
        throw AutomatonError(a.name + " has " + std::to_string(a.states.size()) + " states, more than the bound of " +
                             std::to_string(state_bound) +
                             " for explicit determinization; use the on-the-fly checker instead");
    DataAutomaton d;
    d.name = a.name + "_det";
    d.alphabet = a.alphabet;
    d.vars = a.vars;
    d.complete_deterministic = true;
    std::map<StateSet, int> index;
    std::deque<StateSet> work;
    auto intern = [&](const StateSet& s) {
        auto [it, fresh] = index.emplace(s, static_cast<int>(d.states.size()));
        if (fresh) {
            d.states.push_back(subset_name(s, a.states));
            for (int q : s)
                if (a.is_final(q)) {
                    d.finals.insert(it->second);
                    break;
                }
            work.push_back(s);
        }
        return it->second;
    };
    d.initial = intern({a.initial});
    while (!work.empty()) {
        StateSet s = work.front();
        work.pop_front();
        int src = index.at(s);
        for (const auto& e : a.alphabet)
            for (auto& st : det_successors(a, s, e, &solver)) {
                int dst = intern(st.next);
                d.rules.push_back(Rule{src, e, st.guard, dst});
            }
    }
    return d;
}

DataAutomaton complement(const DataAutomaton& a, Solver& solver, std::size_t state_bound) {
    DataAutomaton d = a.complete_deterministic ? a : determinize(a, solver, state_bound);
    std::set<int> finals;
    for (int q = 0; q < static_cast<int>(d.states.size()); ++q)
        if (!d.is_final(q)) finals.insert(q);
    d.finals = std::move(finals);
    d.name = a.name + "_co";
    return d;
}

DataAutomaton product(const DataAutomaton& a, const DataAutomaton& b, Solver& solver) {
    DataAutomaton p;
    p.name = a.name + "_x_" + b.name;
    std::set<std::string> events(a.alphabet.begin(), a.alphabet.end());
    for (const auto& e : b.alphabet)
        if (!events.count(e)) p.alphabet.push_back(e);
    p.alphabet.insert(p.alphabet.begin(), events.begin(), events.end());
    std::sort(p.alphabet.begin(), p.alphabet.end());
    VarSet vs = a.var_set();
    vs.insert(b.vars.begin(), b.vars.end());
    p.vars.assign(vs.begin(), vs.end());
    std::set<std::string> ea(a.alphabet.begin(), a.alphabet.end()), eb(b.alphabet.begin(), b.alphabet.end());
    p.complete_deterministic = a.complete_deterministic && b.complete_deterministic && ea == eb;
    std::map<std::pair<int, int>, int> index;
    std::deque<std::pair<int, int>> work;
    auto intern = [&](int x, int y) {
        auto [it, fresh] = index.emplace(std::make_pair(x, y), static_cast<int>(p.states.size()));
        if (fresh) {
            p.states.push_back("(" + a.states[x] + "," + b.states[y] + ")");
            if (a.is_final(x) && b.is_final(y)) p.finals.insert(it->second);
            work.emplace_back(x, y);
        }
        return it->second;
    };
    p.initial = intern(a.initial, b.initial);
    while (!work.empty()) {
        auto [x, y] = work.front();
        work.pop_front();
        int src = index.at({x, y});
        for (const auto& ra : a.rules) {
            if (ra.src != x) continue;
            for (const auto& rb : b.rules) {
                if (rb.src != y || rb.event != ra.event) continue;
                Formula g = mk_and(ra.guard, rb.guard);
                if (g.is_false() || !solver.is_sat(g)) continue;
                p.rules.push_back(Rule{src, ra.event, g, intern(ra.dst, rb.dst)});
            }
        }
    }
    return p;
}

DataAutomaton automaton_union(const DataAutomaton& a, const DataAutomaton& b, Solver& solver, std::size_t state_bound) {
    DataAutomaton ca = complement(a, solver, state_bound);
    DataAutomaton cb = complement(b, solver, state_bound);
    DataAutomaton u = complement(product(ca, cb, solver), solver, std::max(state_bound, ca.states.size() * cb.states.size()));
    u.name = a.name + "_or_" + b.name;
    return u;
}

DataAutomaton flatten(const Network& net, Solver& solver, std::size_t state_bound) {
    DataAutomaton f;
    f.name = "network";
    f.alphabet = net.alphabet();
    f.vars = net.vars();
    std::map<std::vector<int>, int> index;
    std::deque<std::vector<int>> work;
    auto intern = [&](const std::vector<int>& q) {
        auto [it, fresh] = index.emplace(q, static_cast<int>(f.states.size()));
        if (fresh) {
            if (f.states.size() >= state_bound)
                throw AutomatonError("network has more than " + std::to_string(state_bound) + " reachable state vectors");
            f.states.push_back(to_string(q, net));
            if (net.is_final(q)) f.finals.insert(it->second);
            work.push_back(q);
        }
        return it->second;
    };
    f.initial = intern(net.initial());
    while (!work.empty()) {
        auto q = work.front();
        work.pop_front();
        int src = index.at(q);
        for (const auto& e : f.alphabet)
            for (auto& st : expansion_successors(net, q, e)) {
                if (!solver.is_sat(st.guard)) continue;
                f.rules.push_back(Rule{src, e, st.guard, intern(st.next)});
            }
    }
    return f;
}

} // namespace daut

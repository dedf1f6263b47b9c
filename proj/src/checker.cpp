#include "daut/checker.hpp"

#include <algorithm>
#include <sstream>

namespace daut {

std::string to_string(const ProductState& s, const Network& net, const DataAutomaton& b) {
    return "(" + to_string(s.qvec, net) + ", " + to_string(s.pset, b.states) + ", " + to_string(s.phi) + ")";
}

bool is_substate(const Substate& r, const std::vector<int>& qvec, const StateSet& pset) {
    for (std::size_t k = 0; k < r.indices.size(); ++k)
        if (qvec[r.indices[k]] != r.states[k]) return false;
    if (r.oset.empty()) return true;
    for (int p : r.oset)
        if (std::binary_search(pset.begin(), pset.end(), p)) return true;
    return false;
}

std::string to_string(const Substate& r, const Network& net, const DataAutomaton& b) {
    std::string s = "(<";
    for (std::size_t k = 0; k < r.indices.size(); ++k)
        s += (k ? "," : "") + net.components[r.indices[k]].name + ":" + net.components[r.indices[k]].states[r.states[k]];
    return s + ">, " + to_string(r.oset, b.states) + ")";
}

const char* to_string(Verdict::Kind k) {
    switch (k) {
    case Verdict::Kind::Included: return "INCLUDED";
    case Verdict::Kind::Counterexample: return "COUNTEREXAMPLE";
    case Verdict::Kind::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

namespace {

// Number of clauses distribution would produce, saturating at cap+1.
std::size_t cnf_size(const Formula& f, std::size_t cap) {
    switch (f.kind()) {
    case Kind::And: {
        std::size_t n = 0;
        for (const auto& g : f.args()) n = std::min(cap + 1, n + cnf_size(g, cap));
        return n;
    }
    case Kind::Or: {
        std::size_t n = 1;
        for (const auto& g : f.args()) n = std::min(cap + 1, n * cnf_size(g, cap));
        return n;
    }
    default: return 1;
    }
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

} // namespace

Checker::Checker(const Network& net, const DataAutomaton& b, Solver& solver, CheckerConfig cfg)
    : net_(net), b_(b), solver_(solver), cfg_(cfg), obs_vars_(b.var_set()) {
    for (const auto& v : net.vars()) pre_vars_.push_back(v.with_tag(Tag::Aux, 0));
}

ProductState Checker::root() const {
    return ProductState{net_.initial(), {b_.initial}, top()};
}

bool Checker::is_accepting(const ProductState& s) const {
    return product_accepting(net_, b_, s.qvec, s.pset);
}

VarSet Checker::component_vars(std::size_t i) const {
    VarSet vs = net_.components[i].var_set();
    vs.insert(net_.params.begin(), net_.params.end());
    return vs;
}

Formula Checker::concrete_image(const Formula& phi, const Formula& theta) const {
    Formula pre = retag(phi, Tag::Plain, 0, Tag::Aux, 0);
    Formula rel = retag(retag(theta, Tag::Plain, 0, Tag::Aux, 0), Tag::Primed, 0, Tag::Plain, 0);
    return mk_exists(pre_vars_, mk_and(pre, rel));
}

std::vector<Successor> Checker::post_concrete(const ProductState& s) {
    std::vector<Successor> out;
    for (const auto& e : net_.alphabet())
        for (auto& st : product_successors(net_, b_, s.qvec, s.pset, e, solver_)) {
            Formula psi = concrete_image(s.phi, st.guard);
            if (!solver_.is_sat(psi)) continue;
            out.push_back(Successor{e, st.guard, ProductState{st.next, st.obs, psi}});
        }
    return out;
}

std::vector<Formula> Checker::applicable(const std::vector<int>& qvec, const StateSet& pset) const {
    std::vector<Formula> out;
    for (const auto& [key, preds] : pi_)
        if (is_substate(key, qvec, pset)) out.insert(out.end(), preds.begin(), preds.end());
    return out;
}

Formula Checker::abstract_image(const Formula& psi, const std::vector<int>& qvec, const StateSet& pset) {
    std::vector<Formula> kept;
    for (const auto& pi : applicable(qvec, pset))
        if (solver_.entails(psi, pi)) kept.push_back(pi);
    return mk_and(std::move(kept));
}

std::vector<Successor> Checker::post_abstract(const ProductState& s) {
    auto out = post_concrete(s);
    for (auto& t : out) {
        Formula psi = t.state.phi;
        t.state.phi = abstract_image(psi, t.state.qvec, t.state.pset);
        if (cfg_.test_mode && !solver_.entails(psi, t.state.phi))
            violations_.push_back("abstraction is not implied by the concrete image at " + to_string(t.state, net_, b_));
    }
    return out;
}

int Checker::pivot(const Path& rho) {
    const std::size_t k = rho.length();
    if (solver_.is_sat(path_formula(rho.states[0].phi, rho.thetas))) return -1;
    for (std::size_t j = k + 1; j-- > 0;) {
        std::vector<Formula> suffix(rho.thetas.begin() + static_cast<std::ptrdiff_t>(j), rho.thetas.end());
        if (!solver_.is_sat(path_formula(rho.states[j].phi, suffix))) return static_cast<int>(j);
    }
    return 0;
}

std::vector<Refinement> Checker::refine(const Path& rho, int j) {
    std::vector<Formula> suffix(rho.thetas.begin() + j, rho.thetas.end());
    const Formula& phi = rho.states[j].phi;
    auto seq = solver_.sequence_interpolant(phi, suffix);
    if (cfg_.test_mode) {
        std::string why;
        ++itp_checked_;
        if (!validate_interpolant(solver_, phi, suffix, seq, &why))
            violations_.push_back("invalid interpolant: " + why);
    }
    std::vector<Refinement> added;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const ProductState& at = rho.states[j + i];
        const Formula& itp = seq[i];
        if (itp.is_true() || itp.is_false()) continue;
        std::vector<Formula> clauses;
        if (cnf_size(nnf(itp), cfg_.cnf_budget) > cfg_.cnf_budget) clauses.push_back(itp);
        else clauses = cnf_clauses(itp);
        for (const auto& c0 : clauses) {
            Formula c = canonicalize(c0);
            if (c.is_true() || c.is_false()) continue;
            VarSet vs = free_vars(c);
            Substate key;
            for (std::size_t n = 0; n < net_.components.size(); ++n) {
                VarSet own = component_vars(n);
                bool meets = std::any_of(vs.begin(), vs.end(), [&](const VarRef& v) { return own.count(v) > 0; });
                if (meets) {
                    key.indices.push_back(static_cast<int>(n));
                    key.states.push_back(at.qvec[n]);
                }
            }
            bool observed = std::any_of(vs.begin(), vs.end(), [&](const VarRef& v) { return obs_vars_.count(v) > 0; });
            if (observed) key.oset = at.pset;
            auto& preds = pi_[key];
            if (std::find(preds.begin(), preds.end(), c) != preds.end()) continue;
            preds.push_back(c);
            added.push_back(Refinement{key, c});
        }
    }
    return added;
}

bool Checker::subsumes_img(const ProductState& s, const ProductState& t) {
    if (s.qvec != t.qvec) return false;
    if (!std::includes(s.pset.begin(), s.pset.end(), t.pset.begin(), t.pset.end())) return false;
    return solver_.entails(s.phi, t.phi);
}

bool Checker::subsumes(const ProductState& s, const ProductState& t) {
    return custom_ ? custom_(s, t) : subsumes_img(s, t);
}

Trace Checker::extract_counterexample(const Path& rho, bool* relaxed) {
    SatResult r = solver_.check(path_formula(rho.states[0].phi, rho.thetas));
    if (!r.sat) throw std::logic_error("counterexample path is infeasible");
    Trace w;
    w.events = rho.events;
    bool rel = false;
    for (std::size_t i = 0; i <= rho.length(); ++i) {
        Valuation nu;
        for (const auto& v : net_.vars()) {
            auto it = r.model.find(v.with_tag(Tag::Step, static_cast<int>(i)));
            Rational val = it == r.model.end() ? Rational(0) : it->second;
            if (v.sort == Sort::Integer && !is_integral(val)) rel = true;
            if (obs_vars_.count(v)) nu[v] = val;
        }
        w.vals.push_back(std::move(nu));
    }
    if (relaxed) *relaxed = rel;
    return w;
}

int Checker::add_node(ProductState s, int parent, std::string event, Formula theta) {
    Node n;
    n.state = std::move(s);
    n.parent = parent;
    n.event = std::move(event);
    n.theta = std::move(theta);
    if (parent >= 0) {
        n.pos = nodes_[parent].pos;
        n.pos.push_back(nodes_[parent].next_child++);
    }
    nodes_.push_back(std::move(n));
    int id = static_cast<int>(nodes_.size() - 1);
    if (parent >= 0) nodes_[parent].children.push_back(id);
    ++stats_.nodes_created;
    return id;
}

std::vector<int> Checker::path_ids(int id) const {
    std::vector<int> ids;
    for (int n = id; n >= 0; n = nodes_[n].parent) ids.push_back(n);
    std::reverse(ids.begin(), ids.end());
    return ids;
}

Path Checker::path_to(int id) const {
    Path p;
    for (int n : path_ids(id)) {
        p.states.push_back(nodes_[n].state);
        if (nodes_[n].parent >= 0) {
            p.events.push_back(nodes_[n].event);
            p.thetas.push_back(nodes_[n].theta);
        }
    }
    return p;
}

bool Checker::is_ancestor(int a, int b) const {
    for (int n = b; n >= 0; n = nodes_[n].parent)
        if (n == a) return true;
    return false;
}

std::set<int> Checker::subtree(int id) const {
    std::set<int> out;
    std::vector<int> stack{id};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (nodes_[n].status == Status::Removed || !out.insert(n).second) continue;
        for (int c : nodes_[n].children) stack.push_back(c);
    }
    return out;
}

void Checker::requeue(int id) {
    Node& n = nodes_[id];
    if (n.status != Status::Visited) return;
    n.status = Status::Next;
    for (auto it = subsume_.begin(); it != subsume_.end();)
        it = it->first == id ? subsume_.erase(it) : std::next(it);
    work_.push_back(id);
}

void Checker::remove_nodes(const std::set<int>& rem) {
    for (int id : rem) {
        Node& n = nodes_[id];
        n.status = Status::Removed;
        if (n.parent >= 0 && !rem.count(n.parent)) {
            auto& ch = nodes_[n.parent].children;
            ch.erase(std::remove(ch.begin(), ch.end(), id), ch.end());
        }
    }
    for (auto it = subsume_.begin(); it != subsume_.end();)
        it = rem.count(it->first) || rem.count(it->second) ? subsume_.erase(it) : std::next(it);
}

Checker::Outcome Checker::handle_accepting(int id) {
    Path rho = path_to(id);
    int j = pivot(rho);
    if (j < 0) {
        Verdict v;
        Trace w = extract_counterexample(rho, &v.relaxed);
        for (int n : path_ids(id)) v.path.push_back(to_string(nodes_[n].state.qvec, net_) + " " +
                                                     to_string(nodes_[n].state.pset, b_.states));
        if (trace_membership(net_, w, solver_) && !trace_membership(b_, w)) {
            v.kind = Verdict::Kind::Counterexample;
            v.trace = std::move(w);
        } else {
            v.kind = Verdict::Kind::Inconclusive;
            v.reason = "extracted counterexample failed independent validation";
        }
        verdict_ = std::move(v);
        done_ = true;
        return Outcome::Final;
    }
    if (static_cast<std::size_t>(j) == rho.length()) {
        remove_nodes({id});
        return Outcome::Dropped;
    }
    refine(rho, j);
    ++stats_.refinements;
    int piv = path_ids(id)[j];
    std::set<int> rem = subtree(piv);
    std::vector<int> back;
    for (const auto& [n, m] : subsume_)
        if (rem.count(m) && !rem.count(n)) back.push_back(n);
    for (int n : back) requeue(n);
    for (auto it = subsume_.begin(); it != subsume_.end();)
        it = it->first == piv || it->second == piv ? subsume_.erase(it) : std::next(it);
    rem.erase(piv);
    remove_nodes(rem);
    nodes_[piv].children.clear();
    if (nodes_[piv].status == Status::Visited) requeue(piv);
    return Outcome::Refined;
}

void Checker::expand(int id) {
    ++stats_.nodes_expanded;
    ProductState cur = nodes_[id].state;
    for (auto& t : post_abstract(cur)) {
        if (is_accepting(t.state)) {
            int child = add_node(t.state, id, t.event, t.theta);
            nodes_[child].status = Status::Visited;
            Outcome o = handle_accepting(child);
            if (o == Outcome::Dropped) continue;
            return;
        }
        int subsumer = -1;
        for (int m = 0; m < static_cast<int>(nodes_.size()) && subsumer < 0; ++m)
            if (nodes_[m].status == Status::Visited && subsumes(t.state, nodes_[m].state)) subsumer = m;
        if (subsumer >= 0) {
            if (subsume_.emplace(id, subsumer).second) ++stats_.subsume_edges;
            sublog_.push_back(SubsumptionRecord{t.state, nodes_[subsumer].state});
            continue;
        }
        std::vector<int> rem;
        for (int n = 0; n < static_cast<int>(nodes_.size()); ++n) {
            if (nodes_[n].status != Status::Next || is_ancestor(n, id)) continue;
            if (subsumes(nodes_[n].state, t.state) && !subsumes(t.state, nodes_[n].state)) rem.push_back(n);
        }
        int succ = add_node(t.state, id, t.event, t.theta);
        for (int m : rem) {
            if (nodes_[m].status == Status::Removed) continue;
            int p = nodes_[m].parent;
            std::vector<int> sources;
            if (p >= 0 && nodes_[p].status == Status::Visited) sources.push_back(p);
            for (const auto& [n, x] : subsume_)
                if (x == m) sources.push_back(n);
            std::set<int> gone = subtree(m);
            std::vector<int> back;
            for (const auto& [n, x] : subsume_)
                if (x != m && gone.count(x) && !gone.count(n)) back.push_back(n);
            remove_nodes(gone);
            for (int n : sources) {
                if (nodes_[n].status == Status::Removed) continue;
                if (subsume_.emplace(n, succ).second) ++stats_.subsume_edges;
                sublog_.push_back(SubsumptionRecord{nodes_[m].state, t.state});
            }
            for (int n : back) requeue(n);
        }
        work_.push_back(succ);
    }
}

void Checker::check_closed() {
    for (int v = 0; v < static_cast<int>(nodes_.size()); ++v) {
        if (nodes_[v].status != Status::Visited) continue;
        ProductState s = nodes_[v].state;
        for (const auto& t : post_abstract(s)) {
            if (is_accepting(t.state)) {
                violations_.push_back("visited node " + std::to_string(v) + " has an accepting successor");
                continue;
            }
            bool covered = false;
            for (int c : nodes_[v].children)
                if (!covered && nodes_[c].status != Status::Removed && subsumes(t.state, nodes_[c].state)) covered = true;
            for (auto it = subsume_.lower_bound({v, -1}); !covered && it != subsume_.end() && it->first == v; ++it)
                if (subsumes(t.state, nodes_[it->second].state)) covered = true;
            if (!covered)
                violations_.push_back("successor " + to_string(t.state, net_, b_) + " of visited node " +
                                      std::to_string(v) + " is neither a child nor subsumed");
        }
    }
    for (const auto& [n, m] : subsume_)
        if (nodes_[n].status != Status::Visited || nodes_[m].status == Status::Removed)
            violations_.push_back("subsumption edge with a dead endpoint");
}

bool Checker::out_of_budget(std::string& why) const {
    if (stats_.nodes_created > cfg_.max_nodes) {
        why = "node budget of " + std::to_string(cfg_.max_nodes) + " exhausted";
        return true;
    }
    if (stats_.refinements > cfg_.max_refinements) {
        why = "refinement budget of " + std::to_string(cfg_.max_refinements) + " exhausted";
        return true;
    }
    if (cfg_.wall.count() > 0 && std::chrono::steady_clock::now() - start_ > cfg_.wall) {
        why = "wall-time budget of " + std::to_string(cfg_.wall.count()) + " ms exhausted";
        return true;
    }
    return false;
}

Verdict Checker::run() {
    start_ = std::chrono::steady_clock::now();
    const std::uint64_t q0 = solver_.queries();
    nodes_.clear();
    work_.clear();
    subsume_.clear();
    sublog_.clear();
    stats_ = {};
    done_ = false;
    verdict_ = {};
    auto finish = [&](Verdict v) {
        stats_.solver_queries = solver_.queries() - q0;
        stats_.wall_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count());
        return v;
    };
    try {
        int r = add_node(root(), -1, "", top());
        if (is_accepting(nodes_[r].state)) {
            nodes_[r].status = Status::Visited;
            handle_accepting(r);
            return finish(verdict_);
        }
        work_.push_back(r);
        while (!work_.empty()) {
            std::string why;
            if (out_of_budget(why)) {
                Verdict v;
                v.reason = why;
                return finish(v);
            }
            int id;
            if (cfg_.search == SearchOrder::Bfs) {
                id = work_.front();
                work_.pop_front();
            } else {
                id = work_.back();
                work_.pop_back();
            }
            if (nodes_[id].status != Status::Next) continue;
            if (cfg_.test_mode) check_closed();
            nodes_[id].status = Status::Visited;
            expand(id);
            if (done_) return finish(verdict_);
        }
        if (cfg_.test_mode) check_closed();
    } catch (const SolverError& e) {
        Verdict v;
        v.reason = std::string("solver failure (") + to_string(e.kind()) + "): " + e.what();
        return finish(v);
    } catch (const AutomatonError& e) {
        Verdict v;
        v.reason = e.what();
        return finish(v);
    }
    Verdict v;
    v.kind = Verdict::Kind::Included;
    return finish(v);
}

std::string Checker::stats_text() const {
    std::ostringstream os;
    os << "nodes_expanded=" << stats_.nodes_expanded << "\n"
       << "refinements=" << stats_.refinements << "\n"
       << "subsume_edges=" << stats_.subsume_edges << "\n"
       << "solver_queries=" << stats_.solver_queries << "\n"
       << "wall_ms=" << stats_.wall_ms << "\n";
    return os.str();
}

std::string Checker::dump_dot() const {
    std::ostringstream os;
    os << "digraph antichain {\n  node [shape=box, fontname=\"monospace\"];\n";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.status == Status::Removed) continue;
        std::string label = to_string(n.state.qvec, net_) + " " + to_string(n.state.pset, b_.states) + "\\n" +
                            dot_escape(to_string(n.state.phi));
        os << "  n" << i << " [label=\"" << label << "\"";
        if (is_accepting(n.state)) os << ", style=dashed";
        os << "];\n";
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.status == Status::Removed || n.parent < 0) continue;
        os << "  n" << n.parent << " -> n" << i << " [label=\"" << dot_escape(n.event) << "\"];\n";
    }
    for (const auto& [a, b] : subsume_) os << "  n" << a << " -> n" << b << " [style=dashed];\n";
    os << "}\n";
    return os.str();
}

} // namespace daut

#include "random_models.hpp"

#include "daut/checker.hpp"
#include "daut/oracle.hpp"
#include "daut/simulation.hpp"

#include <gtest/gtest.h>

using namespace daut;
using daut::test::F;

namespace {

const std::set<std::string> kInts{"x", "v", "D"};
Formula FI(const std::string& s) { return F(s, kInts); }

struct Fixture {
    Model m;
    BuiltinSolver s{test::relaxed()};
    int p0, p1, p2;
    explicit Fixture(const std::string& file = "running2.da") : m(test::load_corpus(file)) {
        p0 = m.observer.state_index("p0");
        p1 = m.observer.state_index("p1");
        p2 = m.observer.state_index("p2");
    }
};

Successor only(const std::vector<Successor>& succ, const std::string& event, const StateSet& pset) {
    const Successor* hit = nullptr;
    for (const auto& t : succ)
        if (t.event == event && t.state.pset == pset) {
            EXPECT_EQ(hit, nullptr) << "duplicate successor on " << event;
            hit = &t;
        }
    if (!hit) throw std::runtime_error("no successor on " + event);
    return *hit;
}

bool has(const std::vector<Successor>& succ, const std::string& event, const StateSet& pset) {
    for (const auto& t : succ)
        if (t.event == event && t.state.pset == pset) return true;
    return false;
}

bool some_equivalent(Solver& s, const std::vector<Formula>& fs, const Formula& g) {
    for (const auto& f : fs)
        if (s.equivalent(f, g)) return true;
    return false;
}

// The spurious path init.a2.a2 with the labels it carries in the tree
// before the second refinement.
Path spurious_path(Fixture& f, Checker& c) {
    Path rho;
    rho.states.push_back(c.root());
    const Successor s1 = only(c.post_concrete(rho.states[0]), "init", {f.p1});
    ProductState st1 = s1.state;
    st1.phi = FI("(= v 1)");
    const Successor s2 = only(c.post_concrete(st1), "a2", {f.p2});
    ProductState st2 = s2.state;
    st2.phi = FI("(< D x)");
    const Successor s3 = only(c.post_concrete(st2), "a2", {});
    ProductState st3 = s3.state;
    st3.phi = FI("(< D x)");
    rho.states = {rho.states[0], st1, st2, st3};
    rho.events = {"init", "a2", "a2"};
    rho.thetas = {s1.theta, s2.theta, s3.theta};
    return rho;
}

} // namespace

TEST(Checker, RootAndAcceptance) {
    Fixture f;
    Checker c(f.m.net, f.m.observer, f.s);
    ProductState r = c.root();
    EXPECT_EQ(r.qvec, (std::vector<int>{0, 0}));
    EXPECT_EQ(r.pset, (StateSet{f.p0}));
    EXPECT_TRUE(r.phi.is_true());
    EXPECT_FALSE(c.is_accepting(r));
    EXPECT_TRUE(c.is_accepting(ProductState{{1, 1}, {}, top()}));
    EXPECT_FALSE(c.is_accepting(ProductState{{1, 1}, {f.p2}, top()}));
}

TEST(Checker, ConcreteAndAbstractSuccessors) {
    Fixture f;
    Checker c(f.m.net, f.m.observer, f.s);
    ProductState s{{1, 1}, {f.p1}, FI("(= v 1)")};
    auto post = c.post_concrete(s);
    ASSERT_EQ(post.size(), 2u);
    const auto t1 = only(post, "a1", {f.p1});
    const auto t2 = only(post, "a2", {f.p2});
    EXPECT_TRUE(f.s.entails(t1.state.phi, FI("(= v 1)")));
    EXPECT_TRUE(f.s.entails(t2.state.phi, FI("(= v 2)")));
    EXPECT_TRUE(f.s.entails(t2.state.phi, FI("(< D x)")));

    // the predicate map of the finished example tree
    c.predicates()[Substate{{0, 1}, {1, 1}, {f.p1}}] = {FI("(= v 1)")};
    c.predicates()[Substate{{0, 1}, {1, 1}, {f.p2}}] = {FI("(< D x)"), FI("(= v 2)")};
    auto abs = c.post_abstract(s);
    ASSERT_EQ(abs.size(), 2u);
    EXPECT_TRUE(f.s.equivalent(only(abs, "a1", {f.p1}).state.phi, FI("(= v 1)")));
    EXPECT_TRUE(f.s.equivalent(only(abs, "a2", {f.p2}).state.phi, FI("(and (= v 2) (< D x))")));
}

TEST(Checker, SubstateMatching) {
    Substate both{{0, 1}, {1, 1}, {1}};
    EXPECT_TRUE(is_substate(both, {1, 1}, {1}));
    EXPECT_TRUE(is_substate(both, {1, 1}, {1, 2}));
    EXPECT_FALSE(is_substate(both, {1, 1}, {2}));
    EXPECT_FALSE(is_substate(both, {1, 0}, {1}));
    Substate loose{{1}, {1}, {}};
    EXPECT_TRUE(is_substate(loose, {0, 1}, {}));
    EXPECT_TRUE(is_substate(loose, {0, 1}, {2}));
    Substate none{{}, {}, {}};
    EXPECT_TRUE(is_substate(none, {0, 0}, {0}));
}

TEST(Checker, PathFormulaAndPivot) {
    Fixture f;
    Checker c(f.m.net, f.m.observer, f.s);
    Path rho = spurious_path(f, c);
    const auto& th = rho.thetas;
    EXPECT_FALSE(f.s.is_sat(path_formula(top(), th)));
    EXPECT_FALSE(f.s.is_sat(path_formula(rho.states[1].phi, {th[1], th[2]})));
    EXPECT_FALSE(f.s.is_sat(path_formula(top(), {th[1], th[2]})));
    EXPECT_TRUE(f.s.is_sat(path_formula(rho.states[2].phi, {th[2]})));
    EXPECT_EQ(c.pivot(rho), 1);

    std::string why;
    EXPECT_TRUE(validate_interpolant(f.s, rho.states[1].phi, {th[1], th[2]}, {top(), FI("(= v 2)"), bottom()}, &why))
        << why;
    EXPECT_FALSE(validate_interpolant(f.s, rho.states[1].phi, {th[1], th[2]}, {top(), top(), bottom()}));
}

TEST(Checker, PivotOfFeasibleAndTrivialPaths) {
    Fixture f;
    Checker c(f.m.net, f.m.observer, f.s);
    Path feasible;
    feasible.states.push_back(c.root());
    const Successor s1 = only(c.post_concrete(c.root()), "init", {f.p1});
    feasible.states.push_back(s1.state);
    feasible.events = {"init"};
    feasible.thetas = {s1.theta};
    EXPECT_EQ(c.pivot(feasible), -1);

    Path dead = feasible;
    dead.states[0].phi = FI("(<= D 0)");
    dead.states[1].phi = bottom();
    EXPECT_EQ(c.pivot(dead), 1);
}

TEST(Checker, RefinementExcludesTheSpuriousSuffix) {
    Fixture f;
    CheckerConfig cfg;
    cfg.test_mode = true;
    Checker c(f.m.net, f.m.observer, f.s, cfg);
    Path rho = spurious_path(f, c);
    auto added = c.refine(rho, 1);
    ASSERT_FALSE(added.empty());
    EXPECT_TRUE(c.violations().empty());
    EXPECT_EQ(c.interpolants_checked(), 1u);
    // every predicate landed on a substate of the state it came from
    for (const auto& r : added) {
        bool on_path = false;
        for (std::size_t i = 1; i < rho.states.size(); ++i)
            on_path = on_path || is_substate(r.key, rho.states[i].qvec, rho.states[i].pset);
        EXPECT_TRUE(on_path);
    }
    // replaying the suffix abstractly no longer reaches the accepting state
    ProductState s1 = rho.states[1];
    auto next = c.post_abstract(s1);
    const auto t = only(next, "a2", {f.p2});
    EXPECT_FALSE(has(c.post_abstract(t.state), "a2", {}));
}

TEST(Checker, RunningExampleIncluded) {
    Fixture f;
    CheckerConfig cfg;
    cfg.test_mode = true;
    Checker c(f.m.net, f.m.observer, f.s, cfg);
    Verdict v = c.run();
    EXPECT_EQ(v.kind, Verdict::Kind::Included) << v.reason;
    EXPECT_TRUE(c.violations().empty()) << c.violations().front();
    EXPECT_GT(c.stats().refinements, 0u);

    auto at_p1 = c.applicable({1, 1}, {f.p1});
    auto at_p2 = c.applicable({1, 1}, {f.p2});
    EXPECT_TRUE(some_equivalent(f.s, at_p1, FI("(= v 1)")));
    EXPECT_TRUE(some_equivalent(f.s, at_p2, FI("(= v 2)")));
    EXPECT_TRUE(some_equivalent(f.s, at_p2, FI("(< D x)")));

    std::string dot = c.dump_dot();
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);
    EXPECT_NE(dot.find("style=dashed"), std::string::npos);
    EXPECT_NE(dot.find("init"), std::string::npos);

    std::string stats = c.stats_text();
    for (const char* key : {"nodes_expanded=", "refinements=", "subsume_edges=", "solver_queries=", "wall_ms="})
        EXPECT_NE(stats.find(key), std::string::npos) << key;
}

TEST(Checker, SubsumptionExample) {
    Fixture f;
    Checker c(f.m.net, f.m.observer, f.s);
    ProductState a{{1, 1}, {f.p1}, FI("(= v 1)")};
    EXPECT_TRUE(c.subsumes_img(a, a));
    ProductState wider{{1, 1}, {f.p1, f.p2}, FI("(and (= v 1) (= x 0))")};
    EXPECT_TRUE(c.subsumes_img(wider, a));
    EXPECT_FALSE(c.subsumes_img(a, wider));
    EXPECT_FALSE(c.subsumes_img(ProductState{{1, 1}, {f.p1}, top()}, a));
    EXPECT_FALSE(c.subsumes_img(ProductState{{0, 1}, {f.p1}, FI("(= v 1)")}, a));
}

TEST(Checker, MutatedExampleCounterexample) {
    Fixture f("running2-bad.da");
    CheckerConfig cfg;
    cfg.test_mode = true;
    Checker c(f.m.net, f.m.observer, f.s, cfg);
    Verdict v = c.run();
    ASSERT_EQ(v.kind, Verdict::Kind::Counterexample) << v.reason;
    EXPECT_TRUE(c.violations().empty());
    EXPECT_EQ(v.trace.length(), 3u);
    EXPECT_TRUE(trace_membership(f.m.net, v.trace, f.s));
    EXPECT_FALSE(trace_membership(f.m.observer, v.trace));
    EXPECT_EQ(v.path.size(), v.trace.length() + 1);
    for (const auto& nu : v.trace.vals) EXPECT_EQ(nu.size(), 1u);
}

TEST(Checker, SearchOrdersAgree) {
    for (const char* file : {"running2.da", "running3.da", "running2-bad.da"}) {
        Fixture f(file);
        CheckerConfig cfg;
        cfg.search = SearchOrder::Dfs;
        Checker dfs(f.m.net, f.m.observer, f.s, cfg);
        Checker bfs(f.m.net, f.m.observer, f.s);
        EXPECT_EQ(dfs.run().kind, bfs.run().kind) << file;
    }
}

TEST(Checker, BudgetsGiveInconclusive) {
    Fixture f("running3.da");
    CheckerConfig cfg;
    cfg.max_nodes = 3;
    Checker c(f.m.net, f.m.observer, f.s, cfg);
    Verdict v = c.run();
    EXPECT_EQ(v.kind, Verdict::Kind::Inconclusive);
    EXPECT_FALSE(v.reason.empty());

    CheckerConfig r;
    r.max_refinements = 1;
    Checker c2(f.m.net, f.m.observer, f.s, r);
    EXPECT_EQ(c2.run().kind, Verdict::Kind::Inconclusive);
}

TEST(Checker, RejectedSortsAreInconclusive) {
    Fixture f;
    BuiltinSolver strict;
    Checker c(f.m.net, f.m.observer, strict);
    Verdict v = c.run();
    EXPECT_EQ(v.kind, Verdict::Kind::Inconclusive);
}

TEST(Checker, SimulationSubsumption) {
    for (const char* file : {"running2.da", "running3.da", "running2-bad.da"}) {
        Fixture f(file);
        NetworkSimulation sims = compute_network_simulation(f.m.net, f.m.observer);
        CheckerConfig cfg;
        cfg.test_mode = true;
        Checker c(f.m.net, f.m.observer, f.s, cfg);
        c.set_subsumption(
            [&](const ProductState& a, const ProductState& b) { return subsumes_sim(a, b, f.m.net, sims, f.s); });
        Verdict v = c.run();
        Checker plain(f.m.net, f.m.observer, f.s);
        EXPECT_EQ(v.kind, plain.run().kind) << file;
        EXPECT_TRUE(c.violations().empty()) << file;
    }
}

TEST(Checker, SmallRationalNetworks) {
    // n toggles between 0 and 1
    Model ok = parse_model(R"(
        automaton C { vars n; alphabet go, inc; init s; final t;
          s -> t : go, (= n' 0);
          t -> t : inc, (= n' (- 1 n)); }
        observer O { vars n; alphabet go, inc; init o; final p;
          o -> p : go, (<= 0 n');
          p -> p : inc, (and (<= 0 n') (<= n' 1)); }
    )");
    BuiltinSolver s;
    CheckerConfig cfg;
    cfg.test_mode = true;
    Checker c(ok.net, ok.observer, s, cfg);
    EXPECT_EQ(c.run().kind, Verdict::Kind::Included);
    EXPECT_TRUE(c.violations().empty());

    Model bad = parse_model(R"(
        automaton C { vars n; alphabet go, inc; init s; final t;
          s -> t : go, (= n' 0);
          t -> t : inc, (= n' (- n 1)); }
        observer O { vars n; alphabet go, inc; init o; final p;
          o -> p : go, (<= 0 n');
          p -> p : inc, (<= 0 n'); }
    )");
    Checker c2(bad.net, bad.observer, s);
    Verdict v = c2.run();
    ASSERT_EQ(v.kind, Verdict::Kind::Counterexample);
    EXPECT_FALSE(v.relaxed);
    EXPECT_TRUE(trace_membership(bad.net, v.trace, s));
    EXPECT_FALSE(trace_membership(bad.observer, v.trace));
}

TEST(Checker, UnboundedCounterNeedsBudget) {
    // included, but every refinement only rules out one more value of n
    Model m = parse_model(R"(
        automaton C { vars n; alphabet go, inc; init s; final t;
          s -> t : go, (= n' 0);
          t -> t : inc, (= n' (+ n 1)); }
        observer O { vars n; alphabet go, inc; init o; final p;
          o -> p : go, (<= 0 n');
          p -> p : inc, (and (<= 0 n') (< n n')); }
    )");
    BuiltinSolver s;
    CheckerConfig cfg;
    cfg.max_refinements = 20;
    Checker c(m.net, m.observer, s, cfg);
    Verdict v = c.run();
    EXPECT_EQ(v.kind, Verdict::Kind::Inconclusive);
    EXPECT_NE(v.reason.find("refinement"), std::string::npos);
}

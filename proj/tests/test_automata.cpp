#include "random_models.hpp"

#include "daut/oracle.hpp"

#include <gtest/gtest.h>

using namespace daut;
using daut::test::F;

namespace {

const std::set<std::string> kInts{"x", "v", "D"};

Formula FI(const std::string& s) { return F(s, kInts); }

int count_runs(const DataAutomaton& a, const Trace& w) {
    std::function<int(int, std::size_t)> go = [&](int q, std::size_t i) {
        if (i == w.events.size()) return 1;
        Valuation both = w.vals[i];
        for (const auto& [v, c] : w.vals[i + 1]) both[v.with_tag(Tag::Primed)] = c;
        int n = 0;
        for (const auto& r : a.rules)
            if (r.src == q && r.event == w.events[i] && eval(r.guard, both)) n += go(r.dst, i + 1);
        return n;
    };
    return go(a.initial, 0);
}

Valuation pair(const Valuation& pre, const Valuation& post) {
    Valuation both = pre;
    for (const auto& [v, c] : post) both[v.with_tag(Tag::Primed)] = c;
    return both;
}

DataAutomaton running_observer() {
    return test::load_corpus("running2.da").observer;
}

} // namespace

TEST(Expansion, InitSynchronizesBothComponents) {
    Model m = test::load_corpus("running2.da");
    BuiltinSolver s(test::relaxed());
    auto steps = expansion_successors(m.net, m.net.initial(), "init");
    ASSERT_EQ(steps.size(), 1u);
    EXPECT_EQ(steps[0].next, (std::vector<int>{1, 1}));
    EXPECT_EQ(steps[0].active, (std::vector<int>{0, 1}));
    EXPECT_TRUE(s.equivalent(steps[0].guard, FI("(and (= x' 0) (= v' 1) (< 0 D') (= D' D))")));
}

TEST(Expansion, IdleComponentKeepsState) {
    Model m = test::load_corpus("running2.da");
    BuiltinSolver s(test::relaxed());
    auto steps = expansion_successors(m.net, {1, 1}, "a1");
    ASSERT_EQ(steps.size(), 1u);
    EXPECT_EQ(steps[0].next, (std::vector<int>{1, 1}));
    EXPECT_EQ(steps[0].active, (std::vector<int>{0}));
    Formula a1 = FI("(and (<= 0 x) (< x D) (= x' (+ x 1)) (= v' 1) (= D' D))");
    EXPECT_TRUE(s.equivalent(steps[0].guard, a1));
}

TEST(Expansion, EventWithoutEnabledRule) {
    Model m = test::load_corpus("running2.da");
    EXPECT_TRUE(expansion_successors(m.net, {1, 1}, "init").empty());
    EXPECT_TRUE(expansion_successors(m.net, {0, 0}, "a2").empty());
}

TEST(Expansion, IdleFramesAndParameterFrames) {
    // A has a local y that B never touches; B owns z.
    Model m = parse_model(R"(
        param k : rat;
        automaton A { vars y, g; alphabet a, b; init q; final q;
          q -> q : a, (= y' (+ y k));
          q -> q : b, (= g' y); }
        automaton B { vars z, g; alphabet b, c; init r; final r;
          r -> r : b, (= z' g);
          r -> r : c, (and (= z' 0) (= g' 1)); }
        observer O { vars g; alphabet a, b, c; init o; final o; o -> o : a, true; }
    )");
    BuiltinSolver s;
    for (const std::string e : {"a", "b", "c"}) {
        for (const auto& st : expansion_successors(m.net, m.net.initial(), e)) {
            std::set<std::string> owned;
            for (int i : st.active)
                for (const auto& v : m.net.components[static_cast<std::size_t>(i)].vars) owned.insert(v.base);
            for (const auto& v : m.net.vars()) {
                if (owned.count(v.base) && !m.net.is_param(v)) continue;
                Formula same = mk_cmp(LinTerm::var(v.with_tag(Tag::Primed)), Rel::Eq, LinTerm::var(v));
                EXPECT_TRUE(s.entails(st.guard, same)) << e << " " << v.base;
            }
        }
    }
}

TEST(DetSuccessors, ObserverOnA2FromP1) {
    DataAutomaton b = running_observer();
    BuiltinSolver s(test::relaxed());
    const int p1 = b.state_index("p1"), p2 = b.state_index("p2");
    auto steps = det_successors(b, {p1}, "a2", &s);
    ASSERT_EQ(steps.size(), 2u);
    EXPECT_TRUE(steps[0].next.empty());
    EXPECT_TRUE(s.equivalent(steps[0].guard, FI("(not (= v' (+ v 1)))")));
    EXPECT_EQ(steps[1].next, (StateSet{p2}));
    EXPECT_TRUE(s.equivalent(steps[1].guard, FI("(= v' (+ v 1))")));
}

TEST(DetSuccessors, SelfLoopVariantPrunesConflictingSubset) {
    // the observer as narrated for the a2 step, with p1 -a2-> p1 kept
    DataAutomaton b = running_observer();
    const int p1 = b.state_index("p1"), p2 = b.state_index("p2");
    b.rules.push_back(Rule{p1, "a2", FI("(= v' v)"), p1});
    BuiltinSolver s(test::relaxed());

    auto all = det_successors(b, {p1}, "a2");
    ASSERT_EQ(all.size(), 4u);
    EXPECT_EQ(all[0].next, StateSet{});
    EXPECT_EQ(all[1].next, (StateSet{p1}));
    EXPECT_EQ(all[2].next, (StateSet{p2}));
    EXPECT_EQ(all[3].next, (StateSet{p1, p2}));
    EXPECT_FALSE(s.is_sat(all[3].guard));

    auto pruned = det_successors(b, {p1}, "a2", &s);
    ASSERT_EQ(pruned.size(), 3u);
    EXPECT_TRUE(s.equivalent(pruned[0].guard, FI("(and (!= v' v) (!= v' (+ v 1)))")));
    EXPECT_TRUE(s.equivalent(pruned[1].guard, FI("(= v' v)")));
    EXPECT_TRUE(s.equivalent(pruned[2].guard, FI("(= v' (+ v 1))")));
}

TEST(DetSuccessors, InitFromP0) {
    DataAutomaton b = running_observer();
    BuiltinSolver s(test::relaxed());
    auto steps = det_successors(b, {b.state_index("p0")}, "init", &s);
    ASSERT_EQ(steps.size(), 2u);
    EXPECT_TRUE(steps[0].next.empty());
    EXPECT_TRUE(s.equivalent(steps[0].guard, FI("(not (= v' 1))")));
    EXPECT_EQ(steps[1].next, (StateSet{b.state_index("p1")}));
    EXPECT_TRUE(s.equivalent(steps[1].guard, FI("(= v' 1)")));
}

TEST(DetSuccessors, EmptySetGoesToItself) {
    DataAutomaton b = running_observer();
    for (const auto& e : b.alphabet) {
        auto steps = det_successors(b, {}, e);
        ASSERT_EQ(steps.size(), 1u);
        EXPECT_TRUE(steps[0].next.empty());
        EXPECT_TRUE(steps[0].guard.is_true());
    }
}

TEST(DetSuccessors, PoolBound) {
    DataAutomaton a;
    a.name = "wide";
    a.alphabet = {"a"};
    a.add_state("s");
    for (int i = 0; i < 17; ++i) {
        int q = a.add_state("t" + std::to_string(i));
        a.rules.push_back(Rule{0, "a", top(), q});
    }
    EXPECT_THROW(det_successors(a, {0}, "a"), AutomatonError);
}

TEST(DetSuccessors, CandidatesPartitionValuationPairs) {
    std::mt19937 rng(11);
    const auto grid = test::small_grid();
    for (int round = 0; round < 40; ++round) {
        DataAutomaton a = test::random_automaton(rng);
        const int nq = static_cast<int>(a.states.size());
        for (int mask = 0; mask < (1 << nq); ++mask) {
            StateSet p;
            for (int q = 0; q < nq; ++q)
                if (mask & (1 << q)) p.push_back(q);
            for (const auto& e : a.alphabet) {
                auto steps = det_successors(a, p, e);
                for_each_grid_trace(a.vars, {e}, 1, grid, [&](const Trace& w) {
                    if (w.length() != 1) return;
                    Valuation both = pair(w.vals[0], w.vals[1]);
                    int hits = 0;
                    for (const auto& st : steps) hits += eval(st.guard, both) ? 1 : 0;
                    EXPECT_EQ(hits, 1);
                });
            }
        }
    }
}

TEST(Determinize, RunningObserverStates) {
    BuiltinSolver s(test::relaxed());
    DataAutomaton d = determinize(running_observer(), s);
    std::set<std::string> names(d.states.begin(), d.states.end());
    EXPECT_EQ(names, (std::set<std::string>{"[p0]", "[p1]", "[p2]", "[]"}));
    EXPECT_TRUE(d.complete_deterministic);

    DataAutomaton d3 = determinize(test::load_corpus("running3.da").observer, s);
    std::set<std::string> names3(d3.states.begin(), d3.states.end());
    EXPECT_EQ(names3, (std::set<std::string>{"[p0]", "[p1]", "[p2]", "[p3]", "[]"}));
}

TEST(Determinize, EmptySetIsAcceptingInComplement) {
    BuiltinSolver s(test::relaxed());
    DataAutomaton c = complement(running_observer(), s);
    int empty = c.state_index("[]");
    ASSERT_GE(empty, 0);
    EXPECT_TRUE(c.is_final(empty));
    EXPECT_FALSE(c.is_final(c.state_index("[p1]")));
}

TEST(Determinize, StateBound) {
    DataAutomaton a;
    a.name = "chain";
    a.alphabet = {"a", "b"};
    for (int i = 0; i < 13; ++i) a.add_state("c" + std::to_string(i));
    for (int i = 0; i < 13; ++i) {
        a.rules.push_back(Rule{i, "a", top(), (i + 1) % 13});
        a.rules.push_back(Rule{i, "b", top(), i});
    }
    BuiltinSolver s;
    EXPECT_THROW(determinize(a, s, 12), AutomatonError);
    EXPECT_NO_THROW(determinize(a, s, 13));
}

TEST(Determinize, SingleRunAndSameLanguageOnGrid) {
    std::mt19937 rng(3);
    BuiltinSolver s;
    const auto grid = test::small_grid();
    for (int round = 0; round < 20; ++round) {
        DataAutomaton a = test::random_automaton(rng);
        DataAutomaton d = determinize(a, s, 16);
        DataAutomaton c = complement(a, s, 16);
        for_each_grid_trace(a.vars, a.alphabet, 2, grid, [&](const Trace& w) {
            ASSERT_EQ(count_runs(d, w), 1);
            bool in = trace_membership(a, w);
            EXPECT_EQ(trace_membership(d, w), in);
            EXPECT_NE(trace_membership(c, w), in);
        });
    }
}

TEST(BooleanClosure, ProductAndUnionOnGrid) {
    std::mt19937 rng(8);
    BuiltinSolver s;
    const auto grid = test::small_grid();
    for (int round = 0; round < 10; ++round) {
        DataAutomaton a = test::random_automaton(rng);
        DataAutomaton b = test::random_automaton(rng);
        b.vars = a.vars;
        b.alphabet = a.alphabet;
        std::vector<Rule> keep;
        VarSet allowed;
        for (const auto& v : a.vars) {
            allowed.insert(v);
            allowed.insert(v.with_tag(Tag::Primed));
        }
        for (const auto& r : b.rules) {
            bool ok = a.has_event(r.event);
            for (const auto& v : free_vars(r.guard)) ok = ok && allowed.count(v);
            if (ok) keep.push_back(r);
        }
        b.rules = keep;
        DataAutomaton ab = product(a, b, s);
        DataAutomaton aub = automaton_union(a, b, s, 16);
        DataAutomaton none = product(a, complement(a, s, 16), s);
        for_each_grid_trace(a.vars, a.alphabet, 2, grid, [&](const Trace& w) {
            bool x = trace_membership(a, w), y = trace_membership(b, w);
            EXPECT_EQ(trace_membership(ab, w), x && y);
            EXPECT_EQ(trace_membership(aub, w), x || y);
            EXPECT_FALSE(trace_membership(none, w));
        });
    }
}

TEST(Trace, Restrict) {
    Trace w;
    const VarRef x = VarRef::plain("x"), v = VarRef::plain("v");
    w.vals = {{{x, 0}, {v, 0}}, {{x, 0}, {v, 1}}, {{x, 1}, {v, 1}}};
    w.events = {"init", "a1"};
    Trace r = trace_restrict(w, {v});
    ASSERT_EQ(r.vals.size(), 3u);
    EXPECT_EQ(r.vals[1], (Valuation{{v, 1}}));
    EXPECT_EQ(r.events, w.events);
    Trace full = trace_restrict(w, {x, v});
    EXPECT_EQ(full.vals, w.vals);
    Trace none = trace_restrict(w, {});
    for (const auto& nu : none.vals) EXPECT_TRUE(nu.empty());
    EXPECT_EQ(none.events, w.events);
}

TEST(Product, RunningExampleSuccessors) {
    Model m = test::load_corpus("running2.da");
    BuiltinSolver s(test::relaxed());
    const int p0 = m.observer.state_index("p0"), p1 = m.observer.state_index("p1"), p2 = m.observer.state_index("p2");
    auto first = product_successors(m.net, m.observer, m.net.initial(), {p0}, "init", s);
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].obs, (StateSet{p1}));

    auto second = product_successors(m.net, m.observer, {1, 1}, {p1}, "a2", s);
    std::set<StateSet> sets;
    for (const auto& st : second) sets.insert(st.obs);
    EXPECT_EQ(sets, (std::set<StateSet>{{}, {p2}}));

    EXPECT_TRUE(product_successors(m.net, m.observer, {1, 1}, {p1}, "init", s).empty());
    EXPECT_TRUE(product_accepting(m.net, m.observer, {1, 1}, {}));
    EXPECT_FALSE(product_accepting(m.net, m.observer, {1, 1}, {p1}));
}

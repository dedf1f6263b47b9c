#include "random_models.hpp"

#include "daut/checker.hpp"
#include "daut/oracle.hpp"
#include "daut/simulation.hpp"

#include <gtest/gtest.h>

using namespace daut;
using daut::test::F;

namespace {

Model guarded() {
    return parse_model(R"(
        automaton A { vars x; alphabet a, b; init q0; final f;
          q0 -> f : a, (= x' x);
          q1 -> f : a, (and (= x' x) (<= 0 x));
          q2 -> f : a, true;
          f -> f : b, (< x x'); }
        observer O { vars x; alphabet a, b; init o; final o; o -> o : a, true; }
    )");
}

const DataAutomaton& comp(const Model& m) { return m.net.components[0]; }

} // namespace

TEST(Presim, VacuousAndUnmatched) {
    Model m = guarded();
    const DataAutomaton& a = comp(m);
    BuiltinSolver s;
    SimMatrix top = top_matrix(a.states.size());
    Rule dead{a.state_index("q0"), "a", bottom(), a.state_index("f")};
    EXPECT_TRUE(s.equivalent(presim(a, dead, a.state_index("f"), top), daut::top()));
    // f has no a-rule, so the entry is ∀x'.¬φ
    Rule tight{a.state_index("q0"), "a", F("(and (= x' x) (< 0 x))"), a.state_index("f")};
    EXPECT_TRUE(s.equivalent(presim(a, tight, a.state_index("f"), top), F("(<= x 0)")));
    // the peer's guard only covers non-negative x
    EXPECT_TRUE(s.equivalent(presim(a, a.rules[0], a.state_index("q1"), top), F("(<= 0 x)")));
    EXPECT_TRUE(presim(a, a.rules[0], a.state_index("q2"), top).is_true());
}

TEST(Presim, RunningObserver) {
    Model m = test::load_corpus("running2.da");
    DataAutomaton b = m.observer;
    const int p1 = b.state_index("p1");
    BuiltinSolver s(test::relaxed());
    SimMatrix top = top_matrix(b.states.size());
    for (const auto& r : b.rules)
        if (r.src == p1 && r.event == "a2") EXPECT_TRUE(s.equivalent(presim(b, r, p1, top), daut::top()));
    // with the self loop p1 -a2-> p1 of the narrated observer
    b.rules.push_back(Rule{p1, "a2", F("(= v' v)", {"v"}), p1});
    const Rule& loop = b.rules.back();
    EXPECT_TRUE(s.equivalent(presim(b, loop, p1, top), daut::top()));
}

TEST(Simulation, GuardedExample) {
    Model m = guarded();
    const DataAutomaton& a = comp(m);
    SimConfig cfg;
    cfg.test_mode = true;
    SimStats st;
    SimMatrix r = compute_simulation(a, cfg, &st);
    BuiltinSolver s;
    const int q0 = a.state_index("q0"), q1 = a.state_index("q1"), q2 = a.state_index("q2"), f = a.state_index("f");
    EXPECT_TRUE(s.equivalent(r[q0][q1], F("(<= 0 x)")));
    EXPECT_TRUE(r[q0][q2].is_true());
    EXPECT_TRUE(r[q1][q0].is_true());
    EXPECT_FALSE(s.is_sat(r[q2][q0])); // q2 moves on a for any x'
    EXPECT_FALSE(s.is_sat(r[f][q0]));  // final vs non-final
    EXPECT_TRUE(r[f][f].is_true());
    std::string why;
    EXPECT_TRUE(is_simulation(a, r, s, {}, &why)) << why;
    EXPECT_TRUE(st.violations.empty()) << st.violations.front();
    EXPECT_LE(st.activations, static_cast<std::uint64_t>(cfg.K) * 16u);
}

TEST(Simulation, NoRules) {
    DataAutomaton a;
    a.name = "N";
    a.vars = {VarRef::plain("x")};
    a.alphabet = {"a"};
    for (const char* q : {"u", "v", "w"}) a.add_state(q);
    a.finals = {1};
    SimMatrix r = compute_simulation(a);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == 1 && j != 1) EXPECT_TRUE(r[i][j].is_false()) << i << j;
            else EXPECT_TRUE(r[i][j].is_true()) << i << j;
        }
}

TEST(Simulation, IsSimulationDefinition) {
    Model m = guarded();
    const DataAutomaton& a = comp(m);
    BuiltinSolver s;
    EXPECT_TRUE(is_simulation(a, identity_matrix(a.states.size()), s));
    std::string why;
    EXPECT_FALSE(is_simulation(a, top_matrix(a.states.size()), s, {}, &why));
    EXPECT_FALSE(why.empty());

    DataAutomaton sinks;
    sinks.name = "S";
    sinks.alphabet = {"a"};
    sinks.add_state("good");
    sinks.add_state("bad");
    sinks.finals = {0};
    EXPECT_FALSE(is_simulation(sinks, top_matrix(2), s, {}, &why));
    EXPECT_NE(why.find("non-final"), std::string::npos);
}

TEST(Simulation, RunningObserverAndComponents) {
    for (const char* file : {"running2.da", "running3.da", "running4.da"}) {
        Model m = test::load_corpus(file);
        BuiltinSolver s(test::relaxed());
        SimConfig cfg;
        cfg.test_mode = true;
        SimStats st;
        SimMatrix rb = compute_simulation(m.observer, cfg, &st);
        std::string why;
        EXPECT_TRUE(is_simulation(m.observer, rb, s, {}, &why)) << file << ": " << why;
        NetworkSimulation ns = compute_network_simulation(m.net, m.observer, cfg, &st);
        for (std::size_t i = 0; i < ns.components.size(); ++i) {
            EXPECT_TRUE(is_simulation(m.net.components[i], ns.components[i], s, m.net.params, &why)) << why;
            EXPECT_TRUE(check_assumption1(ns.components[i], m.net.globals, s));
        }
        EXPECT_TRUE(st.violations.empty()) << file << ": " << (st.violations.empty() ? "" : st.violations.front());
    }
}

TEST(Simulation, RandomAutomata) {
    std::mt19937 rng(17);
    BuiltinSolver s;
    for (int round = 0; round < 30; ++round) {
        DataAutomaton a = test::random_automaton(rng);
        for (int k : {1, 3}) {
            SimConfig cfg;
            cfg.K = k;
            cfg.test_mode = true;
            SimStats st;
            SimMatrix r = compute_simulation(a, cfg, &st);
            std::string why;
            EXPECT_TRUE(is_simulation(a, r, s, {}, &why)) << why << "\n" << print_automaton(a);
            EXPECT_TRUE(st.violations.empty()) << st.violations.front() << "\n" << print_automaton(a);
            const auto n = a.states.size();
            EXPECT_LE(st.activations, static_cast<std::uint64_t>(k) * n * n);
        }
    }
}

TEST(Simulation, DiagonalOfDeterministicAutomata) {
    std::mt19937 rng(29);
    BuiltinSolver s;
    int checked = 0;
    for (int round = 0; round < 200 && checked < 15; ++round) {
        DataAutomaton a = test::random_automaton(rng);
        DataAutomaton d = determinize(a, s, 16);
        if (d.states.size() > 5) continue;
        ++checked;
        SimMatrix r = compute_simulation(d);
        for (std::size_t i = 0; i < d.states.size(); ++i)
            EXPECT_TRUE(s.equivalent(r[i][i], top())) << print_automaton(d);
    }
    EXPECT_EQ(checked, 15);
}

TEST(Simulation, ResidualLanguagesOnGrid) {
    // (q_i, ν, q_j) related implies every trace accepted from (q_i, ν) is accepted from (q_j, ν)
    std::mt19937 rng(31);
    const auto grid = test::small_grid();
    for (int round = 0; round < 15; ++round) {
        DataAutomaton a = test::random_automaton(rng);
        SimMatrix r = compute_simulation(a);
        for_each_grid_trace(a.vars, a.alphabet, 2, grid, [&](const Trace& w) {
            for (std::size_t i = 0; i < a.states.size(); ++i) {
                if (!trace_membership_from(a, {static_cast<int>(i)}, w)) continue;
                for (std::size_t j = 0; j < a.states.size(); ++j)
                    if (eval(r[i][j], w.vals[0]))
                        EXPECT_TRUE(trace_membership_from(a, {static_cast<int>(j)}, w)) << print_automaton(a);
            }
        });
    }
}

TEST(Simulation, KOneCollapsesChangedEntries) {
    Model m = guarded();
    SimConfig cfg;
    cfg.K = 1;
    SimStats st;
    SimMatrix r = compute_simulation(comp(m), cfg, &st);
    BuiltinSolver s;
    EXPECT_TRUE(is_simulation(comp(m), r, s));
    // (q0, q1) differs from ⊤ right after initialisation and collapses
    EXPECT_TRUE(r[0][comp(m).state_index("q1")].is_false());
    EXPECT_GT(st.forced_false, 0u);
}

TEST(Simulation, GlobalsAreAbstracted) {
    Model m = parse_model(R"(
        globals g;
        automaton A { vars g, l; alphabet a; init q0; final f;
          q0 -> f : a, (and (= l' l) (<= 0 g));
          q1 -> f : a, (and (= l' l) (<= 0 l));
          f -> f : a, (= l' l); }
        automaton B { vars g; alphabet a; init r; final r; r -> r : a, (= g' (+ g 1)); }
        observer O { vars g; alphabet a; init o; final o; o -> o : a, true; }
    )");
    BuiltinSolver s;
    SimConfig cfg;
    cfg.globals = m.net.globals;
    SimMatrix r = compute_simulation(m.net.components[0], cfg);
    EXPECT_TRUE(check_assumption1(r, m.net.globals, s));
    EXPECT_TRUE(is_simulation(m.net.components[0], r, s));
    // q1 simulates q0 exactly when 0 <= l; without abstraction the entry would also mention g
    EXPECT_TRUE(s.equivalent(r[0][2], F("(<= 0 l)"))); // states are q0, f, q1

    SimMatrix raw = compute_simulation(m.net.components[0]);
    EXPECT_FALSE(check_assumption1(raw, m.net.globals, s));

    SimMatrix v1 = identity_matrix(2);
    v1[0][1] = F("(= g 1)");
    EXPECT_FALSE(check_assumption1(v1, m.net.globals, s));
    v1[0][1] = F("(= l 1)");
    EXPECT_TRUE(check_assumption1(v1, m.net.globals, s));
}

TEST(Simulation, SharedLocalsAreRejected) {
    Model m = parse_model(R"(
        automaton A { vars g; alphabet a; init q; final q; q -> q : a, true; }
        automaton B { vars g; alphabet a; init r; final r; r -> r : a, true; }
        observer O { vars g; alphabet a; init o; final o; o -> o : a, true; }
    )");
    EXPECT_THROW(compute_network_simulation(m.net, m.observer), SimulationError);
}

TEST(SimSubsumption, IdentityMatchesImage) {
    Model m = test::load_corpus("running2.da");
    BuiltinSolver s(test::relaxed());
    Checker c(m.net, m.observer, s);
    NetworkSimulation id;
    for (const auto& a : m.net.components) id.components.push_back(identity_matrix(a.states.size()));
    id.observer = identity_matrix(m.observer.states.size());
    std::vector<Formula> phis{top(), F("(= v 1)", {"v"}), F("(and (= v 1) (< D x))", {"v", "D", "x"}), bottom()};
    std::vector<StateSet> psets{{}, {1}, {2}, {1, 2}};
    std::vector<std::vector<int>> qs{{0, 0}, {1, 1}, {0, 1}};
    for (const auto& qa : qs)
        for (const auto& qb : qs)
            for (const auto& pa : psets)
                for (const auto& pb : psets)
                    for (const auto& fa : phis)
                        for (const auto& fb : phis) {
                            ProductState a{qa, pa, fa}, b{qb, pb, fb};
                            const bool sim = subsumes_sim(a, b, m.net, id, s), img = c.subsumes_img(a, b);
                            if (img) EXPECT_TRUE(sim);
                            // an empty a entails every entry, whatever the control states
                            if (!fa.is_false()) EXPECT_EQ(sim, img);
                        }
}

TEST(SimSubsumption, ObserverClause) {
    Model m = test::load_corpus("running2.da");
    BuiltinSolver s(test::relaxed());
    NetworkSimulation id;
    for (const auto& a : m.net.components) id.components.push_back(identity_matrix(a.states.size()));
    id.observer = identity_matrix(m.observer.states.size());
    const int p1 = m.observer.state_index("p1"), p2 = m.observer.state_index("p2");
    ProductState s12{{1, 1}, {p1, p2}, top()};
    ProductState t1{{1, 1}, {p1}, top()};
    EXPECT_TRUE(subsumes_sim(s12, t1, m.net, id, s));
    EXPECT_FALSE(subsumes_sim(t1, s12, m.net, id, s));
    // once p1 simulates p2, {p1} covers {p2}
    id.observer[p2][p1] = top();
    EXPECT_TRUE(subsumes_sim(ProductState{{1, 1}, {p1}, top()}, ProductState{{1, 1}, {p2}, top()}, m.net, id, s));
}

TEST(SimSubsumption, RecordedPairsHaveNoEscape) {
    for (const char* file : {"running2.da", "running3.da"}) {
        Model m = test::load_corpus(file);
        BuiltinSolver s(test::relaxed());
        NetworkSimulation sims = compute_network_simulation(m.net, m.observer);
        Checker c(m.net, m.observer, s);
        c.set_subsumption([&](const ProductState& a, const ProductState& b) {
            return subsumes_sim(a, b, m.net, sims, s);
        });
        ASSERT_EQ(c.run().kind, Verdict::Kind::Included);
        ASSERT_FALSE(c.subsumption_log().empty());
        for (const auto& rec : c.subsumption_log()) {
            ResidualState a{rec.s.qvec, rec.s.pset, rec.s.phi}, b{rec.t.qvec, rec.t.pset, rec.t.phi};
            EXPECT_FALSE(residual_escape_check(m.net, m.observer, a, b, 2, s).found)
                << to_string(rec.s, m.net, m.observer) << " vs " << to_string(rec.t, m.net, m.observer);
        }
    }
}

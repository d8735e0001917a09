#include <doctest.h>

#include <algorithm>

#include "rcsim/engine.hpp"
#include "rcsim/error.hpp"
#include "rcsim/protocols.hpp"

using namespace rcsim;

namespace {

// Independent propagation oracle for the ring schedule: the share of
// origin o travelling toward agent j arrives at round (hops - 1), one
// share per direction along the two disjoint arcs of the cycle.
int oracle_both_shares_round(int n, int cw_hops) {
    int ccw_hops = n - cw_hops;
    return std::max(cw_hops, ccw_hops) - 1;
}

// First round at which the trace shows agent j holding both directional
// frames of origin o.
int observed_both_shares_round(const Trace& tr, AgentId j, AgentId o) {
    bool cw = false, ccw = false;
    for (int t = 0; t < static_cast<int>(tr.rounds.size()); t++) {
        for (const auto& [src, exp] : tr.rounds[t].at(j).incoming) {
            if (!exp || !exp->is_object() || (*exp)["o"] != o) continue;
            if ((*exp)["d"] == "cw") cw = true;
            if ((*exp)["d"] == "ccw") ccw = true;
        }
        if (cw && ccw) return t;
    }
    return -1;
}

}  // namespace

TEST_CASE("ring3 input sharing completes in n-1 rounds with true views") {
    Topology t = build_topology(TopologyKind::ring, 3);
    ProtocolSpec ris = make_ris_two_path(t);
    for (const auto& e : enumerate_executions(ris, t)) {
        CHECK(e.trace.rounds.size() == 2);
        for (AgentId a : t.agents) {
            REQUIRE(e.trace.reconstructed[a].has_value());
            CHECK(*e.trace.reconstructed[a] == e.inputs);
        }
    }
}

TEST_CASE("ring5 share propagation matches the two-arc schedule") {
    Topology t = build_topology(TopologyKind::ring, 5);
    ProtocolSpec ris = make_ris_two_path(t, {.deterministic = true});
    auto runs = enumerate_executions(ris, t);
    CHECK(runs[0].trace.rounds.size() == 4);  // n-1 rounds
    const Trace& tr = runs[19].trace;
    for (AgentId j : t.agents) {
        for (AgentId o : t.agents) {
            if (o == j) continue;
            int cw_hops = ((j - o) % 5 + 5) % 5;
            CHECK(observed_both_shares_round(tr, j, o) == oracle_both_shares_round(5, cw_hops));
        }
        CHECK(*tr.reconstructed[j] == tr.inputs);
    }
    // distance-2 origins complete only after round 2
    CHECK(observed_both_shares_round(tr, 0, 2) == 2);
    CHECK(observed_both_shares_round(tr, 0, 3) == 2);
}

TEST_CASE("complete graphs share inputs in a single broadcast round") {
    Topology t = build_topology(TopologyKind::complete, 4);
    ProtocolSpec ris = make_ris_two_path(t);
    Trace tr = execute(ris, t, {0, 1, 1, 0}, RandomnessChoice{});
    CHECK(tr.rounds.size() == 1);
    for (AgentId a : t.agents) CHECK(*tr.reconstructed[a] == std::vector<int>{0, 1, 1, 0});
}

TEST_CASE("round-0 share pairs XOR to the origin's input") {
    Topology t = build_topology(TopologyKind::ring, 5);
    ProtocolSpec ris = make_ris_two_path(t);
    for (const auto& e : enumerate_executions(ris, t)) {
        for (AgentId a : t.agents) {
            const auto& out = e.trace.rounds[0].at(a).outgoing;
            int cw = -1, ccw = -1;
            for (const auto& [dst, exp] : out) {
                REQUIRE(exp.has_value());
                if ((*exp)["d"] == "cw") cw = (*exp)["b"].get<int>();
                if ((*exp)["d"] == "ccw") ccw = (*exp)["b"].get<int>();
            }
            CHECK((cw ^ ccw) == e.inputs[a]);
        }
    }
}

TEST_CASE("xor consensus decides the parity and is legal on odd rings") {
    for (int n : {3, 5}) {
        Topology t = build_topology(TopologyKind::ring, n);
        ProtocolSpec p = make_xor_consensus(t);
        for (const auto& e : enumerate_executions(p, t)) {
            int x = 0;
            for (int v : e.inputs) x ^= v;
            for (const auto& d : e.trace.decisions) CHECK(d == Decision::of(x));
            CHECK(classify_outcome(e.trace) == Outcome::legal);
        }
    }
}

TEST_CASE("even ring all-ones run violates validity") {
    Topology t = build_topology(TopologyKind::ring, 4);
    ProtocolSpec p = make_xor_consensus(t, {.deterministic = true});
    Trace tr = execute(p, t, {1, 1, 1, 1}, RandomnessChoice{});
    for (const auto& d : tr.decisions) CHECK(d == Decision::of(0));
    CHECK(classify_outcome(tr) == Outcome::validity);
}

TEST_CASE("leader election rank arithmetic") {
    CHECK(elect_leader({1, 2, 3}, {2, 5, 9}) == 2);        // L = 6 mod 3 = 0
    CHECK(elect_leader({1, 1, 1, 1}, {0, 1, 2, 3}) == 0);  // L = 4 mod 4 = 0
    CHECK_THROWS_WITH_AS(elect_leader({0, 1, 2}, {0, 1, 2}),
                         doctest::Contains("out-of-range-random"), Error);
    CHECK_THROWS_WITH_AS(elect_leader({1, 4, 1}, {0, 1, 2}),
                         doctest::Contains("out-of-range-random"), Error);
}

TEST_CASE("sweeping one random hits every leader exactly once") {
    std::vector<AgentId> ids = {3, 7, 11, 20};
    std::set<AgentId> seen;
    for (int r0 = 1; r0 <= 4; r0++) seen.insert(elect_leader({r0, 2, 4, 1}, ids));
    CHECK(seen == std::set<AgentId>(ids.begin(), ids.end()));
}

TEST_CASE("leader is invariant under pairing order and depends on the random sum") {
    CHECK(elect_leader({2, 3, 1}, {5, 9, 2}) == elect_leader({1, 2, 3}, {9, 2, 5}));
    CHECK(elect_leader({3, 3, 3}, {0, 1, 2}) == elect_leader({1, 3, 5}, {0, 1, 2}));
}

TEST_CASE("knowledge validation aborts on bad fields or duplicate ids") {
    std::vector<KnowledgeTriple> good = {{1, 1, 0}, {0, 2, 1}, {1, 3, 2}};
    CHECK(validate_knowledge(good, 3) == Validation::ok);
    std::vector<KnowledgeTriple> bad_r = {{1, 4, 0}, {0, 2, 1}, {1, 3, 2}};
    CHECK(validate_knowledge(bad_r, 3) == Validation::abort);
    std::vector<KnowledgeTriple> bad_i = {{2, 1, 0}, {0, 2, 1}, {1, 3, 2}};
    CHECK(validate_knowledge(bad_i, 3) == Validation::abort);
    std::vector<KnowledgeTriple> dup = {{1, 1, 0}, {0, 2, 0}, {1, 3, 2}};
    CHECK(validate_knowledge(dup, 3) == Validation::abort);
    CHECK_THROWS_WITH_AS(validate_knowledge(good, 4), doctest::Contains("bad-knowledge-size"),
                         Error);
}

TEST_CASE("leader consensus on complete4: worked example and uniform output") {
    Topology t = build_topology(TopologyKind::complete, 4);
    ProtocolSpec p = make_algorithm1(t);
    // randoms (1,2,3,4): L = 10 mod 4 = 2, leader id 2, D = 1^0^1 = 0
    auto slots = randomness_slots(p, t);
    RandomnessChoice rc;
    for (const auto& s : slots) {
        int want = s.agent + 1;
        for (size_t k = 0; k < s.domain.options.size(); k++)
            if (s.domain.options[k].first["r"] == want) {
                rc.selection[{s.agent, s.round}] = static_cast<int>(k);
                rc.probability *= s.domain.options[k].second;
            }
    }
    Trace tr = execute(p, t, {1, 0, 1, 1}, rc);
    for (const auto& d : tr.decisions) CHECK(d == Decision::of(0));

    Rat p1(0);
    for (const auto& e : enumerate_executions(p, t))
        if (e.trace.decisions[0] == Decision::of(1)) p1 += e.probability;
    CHECK(p1 == Rat(1, 2));
}

TEST_CASE("an out-of-range input claim makes every honest agent abort") {
    Topology t = build_topology(TopologyKind::complete, 4);
    ProtocolSpec p = make_algorithm1(t);
    SendOverrides inject;
    for (AgentId dst : {0, 1, 2}) {
        Payload body{{"i", 2}, {"r", 1}, {"id", 3}};
        inject[{3, 0, dst}] = Payload{{"o", 3}, {"b", body}};
    }
    auto slots = randomness_slots(p, t);
    RandomnessChoice rc;
    for (const auto& s : slots) rc.selection[{s.agent, s.round}] = 0;
    auto decisions = run_decisions(p, t, {1, 0, 1, 1}, rc, &inject);
    for (AgentId a : {0, 1, 2}) CHECK(decisions[a] == Decision::bot());
}

TEST_CASE("withheld or malformed shares turn the receiver to bot") {
    Topology t = build_topology(TopologyKind::ring, 3);
    ProtocolSpec p = make_xor_consensus(t);
    auto slots = randomness_slots(p, t);
    RandomnessChoice rc;
    for (const auto& s : slots) rc.selection[{s.agent, s.round}] = 0;

    SUBCASE("silence on a scheduled slot") {
        SendOverrides withhold;
        withhold[{1, 0, 0}] = std::nullopt;
        auto d = run_decisions(p, t, {1, 0, 1}, rc, &withhold);
        CHECK(d[0] == Decision::bot());
    }
    SUBCASE("EMPTY where a share is due") {
        SendOverrides empty;
        empty[{1, 0, 0}] = empty_payload();
        auto d = run_decisions(p, t, {1, 0, 1}, rc, &empty);
        CHECK(d[0] == Decision::bot());
    }
    SUBCASE("non-bit body") {
        SendOverrides junk;
        junk[{1, 0, 0}] = Payload{{"o", 1}, {"d", "ccw"}, {"b", 7}};
        auto d = run_decisions(p, t, {1, 0, 1}, rc, &junk);
        CHECK(d[0] == Decision::bot());
    }
    SUBCASE("wrong origin tag") {
        SendOverrides junk;
        junk[{1, 0, 0}] = Payload{{"o", 2}, {"d", "ccw"}, {"b", 0}};
        auto d = run_decisions(p, t, {1, 0, 1}, rc, &junk);
        CHECK(d[0] == Decision::bot());
    }
    SUBCASE("a bot agent goes EMPTY and drags the others to bot") {
        SendOverrides withhold;
        withhold[{1, 0, 0}] = std::nullopt;
        Trace tr = execute(p, t, {1, 0, 1}, rc, &withhold);
        for (AgentId a : t.agents) CHECK(tr.decisions[a] == Decision::bot());
    }
}

TEST_CASE("multi-valued candidates decide by their rule") {
    Topology k3 = build_topology(TopologyKind::complete, 3);
    SUBCASE("minimum of all inputs") {
        ProtocolSpec p = make_candidate_multivalued(k3, 3, MvRule::min_input);
        Trace tr = execute(p, k3, {2, 1, 2}, RandomnessChoice{});
        for (const auto& d : tr.decisions) CHECK(d == Decision::of(1));
    }
    SUBCASE("leader's input with randoms (1,1,1): leader is the smallest id") {
        ProtocolSpec p = make_candidate_multivalued(k3, 3, MvRule::leader_input);
        auto slots = randomness_slots(p, k3);
        RandomnessChoice rc;
        for (const auto& s : slots)
            for (size_t k = 0; k < s.domain.options.size(); k++)
                if (s.domain.options[k].first["r"] == 1)
                    rc.selection[{s.agent, s.round}] = static_cast<int>(k);
        Trace tr = execute(p, k3, {2, 0, 1}, rc);
        for (const auto& d : tr.decisions) CHECK(d == Decision::of(2));
    }
    SUBCASE("r below 3 is rejected") {
        CHECK_THROWS_WITH_AS(make_candidate_multivalued(k3, 2, MvRule::min_input),
                             doctest::Contains("bad-r"), Error);
    }
}

TEST_CASE("ring transport generalizes to custom cycles like the diamond") {
    Topology diamond = build_custom(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    ProtocolSpec ris = make_ris_two_path(diamond, {.deterministic = true});
    Trace tr = execute(ris, diamond, {1, 0, 0, 1}, RandomnessChoice{});
    for (AgentId a : diamond.agents) CHECK(*tr.reconstructed[a] == std::vector<int>{1, 0, 0, 1});
}

TEST_CASE("non-cycle, non-complete topologies are rejected") {
    // 2-vertex-connected but neither a cycle nor complete
    Topology t = build_custom(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
    CHECK(check_two_vertex_connected(t));
    CHECK_THROWS_WITH_AS(make_xor_consensus(t), doctest::Contains("unsupported-topology"), Error);
}

TEST_CASE("protocols resolve by their CLI names") {
    Topology t = build_topology(TopologyKind::ring, 3);
    CHECK(make_protocol_by_name("ris", t).name == "ris");
    CHECK(make_protocol_by_name("xor-consensus", t).name == "xor-consensus");
    CHECK(make_protocol_by_name("algorithm1", t).name == "algorithm1");
    CHECK(make_protocol_by_name("mv-min", t, 3).name == "mv-min");
    CHECK(make_protocol_by_name("mv-leader", t, 3).name == "mv-leader");
    CHECK_THROWS_WITH_AS(make_protocol_by_name("paxos", t), doctest::Contains("unknown-protocol"),
                         Error);
}

TEST_CASE("standalone input sharing decides the agent's own input") {
    Topology t = build_topology(TopologyKind::ring, 3);
    ProtocolSpec ris = make_ris_two_path(t);
    for (const auto& e : enumerate_executions(ris, t))
        for (AgentId a : t.agents) CHECK(e.trace.decisions[a] == Decision::of(e.inputs[a]));
}

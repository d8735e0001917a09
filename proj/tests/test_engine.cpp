#include <doctest.h>

#include <algorithm>

#include "rcsim/engine.hpp"
#include "rcsim/error.hpp"
#include "rcsim/protocols.hpp"
#include "rcsim/trace_io.hpp"

using namespace rcsim;

namespace {

Topology ring3() { return build_topology(TopologyKind::ring, 3); }

RandomnessChoice first_choice(const ProtocolSpec& p, const Topology& t) {
    auto slots = randomness_slots(p, t);
    RandomnessChoice rc;
    for (const auto& s : slots) {
        rc.selection[{s.agent, s.round}] = 0;
        rc.probability *= s.domain.options[0].second;
    }
    return rc;
}

}  // namespace

TEST_CASE("all-zero inputs decide zero; mixed inputs decide the parity") {
    Topology t = ring3();
    ProtocolSpec p = make_xor_consensus(t);
    RandomnessChoice rc = first_choice(p, t);
    Trace zeros = execute(p, t, {0, 0, 0}, rc);
    for (const auto& d : zeros.decisions) CHECK(d == Decision::of(0));
    Trace mixed = execute(p, t, {1, 0, 1}, rc);
    for (const auto& d : mixed.decisions) CHECK(d == Decision::of(0));
}

TEST_CASE("replay determinism: identical runs give byte-identical traces") {
    Topology t = build_topology(TopologyKind::ring, 5);
    ProtocolSpec p = make_xor_consensus(t);
    auto runs = enumerate_executions(p, t);
    const auto& e = runs[17];
    Trace again = execute(p, t, e.inputs, e.randomness);
    CHECK(trace_to_jsonl(e.trace) == trace_to_jsonl(again));
}

TEST_CASE("synchronous delivery conserves messages each round") {
    Topology t = build_topology(TopologyKind::ring, 4);
    ProtocolSpec p = make_xor_consensus(t);
    Trace tr = execute(p, t, {1, 1, 0, 1}, first_choice(p, t));
    for (const auto& round : tr.rounds) {
        std::multiset<std::string> sent, received;
        for (const auto& [agent, rec] : round) {
            for (const auto& [dst, exp] : rec.outgoing)
                if (exp) sent.insert(std::to_string(agent) + ">" + std::to_string(dst) + exp->dump());
            for (const auto& [src, exp] : rec.incoming)
                if (exp) received.insert(std::to_string(src) + ">" + std::to_string(agent) + exp->dump());
        }
        CHECK(sent == received);
    }
}

TEST_CASE("decision status changes at most once, away from undecided") {
    Topology t = build_topology(TopologyKind::ring, 5);
    ProtocolSpec p = make_xor_consensus(t);
    for (const auto& e : enumerate_executions(p, t)) {
        for (AgentId a : t.agents) {
            AgentRun run = project(e.trace, a);
            Decision last = Decision::undecided();
            for (const auto& rec : run.rounds) {
                if (last.decided()) CHECK(rec.decision == last);
                last = rec.decision;
            }
        }
    }
}

TEST_CASE("enumerate_executions covers the joint space with total probability 1") {
    Topology t = ring3();
    SUBCASE("deterministic variant: 8 input vectors") {
        auto runs = enumerate_executions(make_xor_consensus(t, {.deterministic = true}), t);
        CHECK(runs.size() == 8);
        for (const auto& e : runs) CHECK(e.probability == Rat(1, 8));
    }
    SUBCASE("leader protocol on complete4: 2^4 x 4^4 entries") {
        Topology k4 = build_topology(TopologyKind::complete, 4);
        auto runs = enumerate_executions(make_algorithm1(k4), k4);
        CHECK(runs.size() == 4096);
        Rat total(0);
        for (const auto& e : runs) total += e.probability;
        CHECK(total == Rat(1));
    }
    SUBCASE("cap exceeded raises") {
        CHECK_THROWS_WITH_AS(enumerate_executions(make_xor_consensus(t), t, nullptr, 10),
                             doctest::Contains("enumeration-cap-exceeded"), Error);
    }
}

TEST_CASE("projection partitions the trace and prefixes clip correctly") {
    Topology t = ring3();
    ProtocolSpec p = make_xor_consensus(t);
    Trace tr = execute(p, t, {1, 0, 1}, first_choice(p, t));
    size_t total_records = 0;
    for (AgentId a : t.agents) {
        AgentRun run = project(tr, a);
        CHECK(run.rounds.size() == tr.rounds.size());
        for (int k = 0; k < static_cast<int>(run.rounds.size()); k++)
            CHECK(run.rounds[k] == tr.rounds[k].at(a));
        total_records += run.rounds.size();
        CHECK(run.prefix(-1).rounds.empty());
        CHECK(run.prefix(static_cast<int>(tr.rounds.size()) - 1).rounds.size() ==
              run.rounds.size());
    }
    CHECK(total_records == tr.rounds.size() * t.n);
    CHECK_THROWS_WITH_AS(project(tr, 9), doctest::Contains("unknown-agent"), Error);
}

TEST_CASE("outcome classification: termination, agreement, validity order") {
    std::vector<int> inputs = {1, 1, 1, 1};
    std::vector<Decision> zeros(4, Decision::of(0));
    CHECK(classify_outcome(inputs, zeros) == Outcome::validity);
    CHECK(classify_outcome({0, 1, 1}, {Decision::of(1), Decision::of(1), Decision::of(0)}) ==
          Outcome::agreement);
    CHECK(classify_outcome({0, 1, 1}, {Decision::of(0), Decision::of(0), Decision::of(0)}) ==
          Outcome::legal);
    CHECK(classify_outcome({0, 1, 1}, {Decision::bot(), Decision::of(0), Decision::of(0)}) ==
          Outcome::termination);
}

TEST_CASE("honest runs of every consensus protocol are legal on their topologies") {
    auto check_all_legal = [](const ProtocolSpec& p, const Topology& t) {
        for (const auto& e : enumerate_executions(p, t))
            CHECK(classify_outcome(e.trace) == Outcome::legal);
    };
    for (int n : {3, 5}) {
        Topology ring = build_topology(TopologyKind::ring, n);
        Topology comp = build_topology(TopologyKind::complete, n);
        check_all_legal(make_xor_consensus(ring), ring);
        check_all_legal(make_xor_consensus(comp), comp);
    }
    Topology k4 = build_topology(TopologyKind::complete, 4);
    check_all_legal(make_algorithm1(k4), k4);
    Topology k3 = build_topology(TopologyKind::complete, 3);
    check_all_legal(make_candidate_multivalued(k3, 3, MvRule::min_input), k3);
    Topology r3 = ring3();
    check_all_legal(make_candidate_multivalued(r3, 3, MvRule::min_input), r3);
    check_all_legal(make_candidate_multivalued(k3, 3, MvRule::leader_input), k3);
}

TEST_CASE("jsonl export writes one object per agent-round") {
    Topology t = ring3();
    ProtocolSpec p = make_xor_consensus(t);
    Trace tr = execute(p, t, {1, 0, 1}, first_choice(p, t));
    std::string jsonl = trace_to_jsonl(tr);
    size_t lines = std::count(jsonl.begin(), jsonl.end(), '\n');
    CHECK(lines == tr.rounds.size() * t.n);
    auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(first.contains("agent"));
    CHECK(first.contains("in"));
    CHECK(first.contains("decision"));
    CHECK(nlohmann::json(empty_payload()).dump() == "\"EMPTY\"");
}

TEST_CASE("run_decisions matches the recorded execution") {
    Topology t = build_topology(TopologyKind::complete, 4);
    ProtocolSpec p = make_algorithm1(t);
    for (const auto& e : enumerate_executions(p, t)) {
        auto d = run_decisions(p, t, e.inputs, e.randomness);
        for (int a = 0; a < t.n; a++) CHECK(d[a] == e.trace.decisions[a]);
    }
}

TEST_CASE("sampling fallback is deterministic under a fixed seed") {
    Topology t = ring3();
    ProtocolSpec p = make_xor_consensus(t);
    auto a = sample_executions(p, t, nullptr, 20, 42);
    auto b = sample_executions(p, t, nullptr, 20, 42);
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); k++) {
        CHECK(a[k].inputs == b[k].inputs);
        CHECK(trace_to_jsonl(a[k].trace) == trace_to_jsonl(b[k].trace));
    }
}

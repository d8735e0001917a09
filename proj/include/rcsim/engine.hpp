#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcsim/net.hpp"
#include "rcsim/rational.hpp"

namespace rcsim {

// Message payloads are structured JSON values. The distinguished EMPTY
// payload stands for "nothing to say" on a link that must not stay silent.
using Payload = nlohmann::json;

inline Payload empty_payload() { return Payload("EMPTY"); }
inline bool is_empty_payload(const Payload& p) { return p.is_string() && p == "EMPTY"; }

enum class DecisionKind { undecided, value, bot };

struct Decision {
    DecisionKind kind = DecisionKind::undecided;
    int value = 0;

    static Decision undecided() { return {}; }
    static Decision of(int v) { return {DecisionKind::value, v}; }
    static Decision bot() { return {DecisionKind::bot, 0}; }
    bool decided() const { return kind != DecisionKind::undecided; }
    bool operator==(const Decision& o) const {
        return kind == o.kind && (kind != DecisionKind::value || value == o.value);
    }
    bool operator!=(const Decision& o) const { return !(*this == o); }
    std::string str() const;
};

// The tuple <m, t_m, src_m, dst_m>.
struct MessageRecord {
    AgentId src = 0;
    AgentId dst = 0;
    int round = 0;
    Payload payload;

    bool operator==(const MessageRecord& o) const {
        return src == o.src && dst == o.dst && round == o.round && payload == o.payload;
    }
    bool operator<(const MessageRecord& o) const;
    nlohmann::json to_json() const;
    static MessageRecord from_json(const nlohmann::json& j);
};

// A link experience: payload, or silence (nullopt).
using LinkExperience = std::optional<Payload>;

// Round t from one agent's perspective: <input, in(i,t), out(i,t), D(i,t)>.
// incoming/outgoing are keyed by exactly the agent's neighbors.
struct RoundRecord {
    AgentId agent = 0;
    int input = 0;
    std::map<AgentId, LinkExperience> incoming;
    std::map<AgentId, LinkExperience> outgoing;
    Decision decision;

    bool operator==(const RoundRecord& o) const {
        return agent == o.agent && input == o.input && incoming == o.incoming &&
               outgoing == o.outgoing && decision == o.decision;
    }
};

// One joint assignment of every agent's per-round random selections,
// with its exact probability. Keys are (agent, round); values index into
// the protocol's declared domain for that slot.
struct RandomnessChoice {
    std::map<std::pair<AgentId, int>, int> selection;
    Rat probability = Rat(1);
};

struct Trace {
    Topology topology;
    std::vector<int> inputs;
    RandomnessChoice randomness;
    std::vector<std::map<AgentId, RoundRecord>> rounds;  // rounds[t][agent]
    std::vector<Decision> decisions;
    // Per agent: the input vector it reconstructed, when the protocol
    // exposes one (input-sharing protocols do).
    std::vector<std::optional<std::vector<int>>> reconstructed;
    int terminated_at = -1;

    const RoundRecord& record(AgentId i, int t) const { return rounds.at(t).at(i); }
};

struct AgentRun {
    AgentId agent = 0;
    std::vector<RoundRecord> rounds;

    AgentRun prefix(int t) const;  // rounds 0..t (t = -1 gives empty)
};

// Protocol state machines subclass this; the engine only holds pointers.
class AgentState {
public:
    virtual ~AgentState() = default;
};

struct RandDomain {
    std::vector<std::pair<Payload, Rat>> options;  // empty = no coin this round
};

struct AgentCtx {
    AgentId id = 0;
    int input = 0;
    const Topology* topo = nullptr;
};

// Synchronous state machine in the standard msgs/trans form: at round t
// every agent first emits its round-t messages as a function of state
// (and its round-t coin), then consumes the round-t messages addressed
// to it and may decide. Decisions are final once left undecided.
struct ProtocolSpec {
    std::string name;
    int r = 2;                // input/output alphabet {0..r-1}
    int rounds_bound = 1;     // execution must halt by this many rounds
    std::vector<Rat> input_prior;  // size r; default uniform

    std::function<RandDomain(AgentId, int round)> randomness;
    std::function<std::unique_ptr<AgentState>(const AgentCtx&)> init;
    std::function<std::map<AgentId, Payload>(AgentState&, int round, const Payload* coin)> send;
    std::function<Decision(AgentState&, int round, const std::map<AgentId, LinkExperience>&)>
        receive;

    // For input-sharing protocols: the input vector as reconstructed by
    // this agent, once complete.
    std::function<std::optional<std::vector<int>>(const AgentState&)> reconstructed;

    // Schedule-conformant payload variants for a directed link at a round
    // (used to build bounded deviation spaces). Null when not applicable.
    std::function<std::vector<Payload>(AgentId src, AgentId dst, int round)> payload_alphabet;

    // Round-0 coin values a deviator would choose among. Null = the full
    // declared domain. Transports whose masks cancel expose only the
    // semantically distinct draws here.
    std::function<std::vector<Payload>(AgentId)> claimable_coins;

    bool deterministic(const Topology& t) const;
    std::vector<Rat> prior() const;
};

// Per-slot replacement of an agent's outgoing payloads: value, or silence.
// Keyed by (src, round, dst). Slots not present follow the state machine.
using SendOverrides = std::map<std::tuple<AgentId, int, AgentId>, std::optional<Payload>>;

Trace execute(const ProtocolSpec& p, const Topology& t, const std::vector<int>& inputs,
              const RandomnessChoice& rc, const SendOverrides* overrides = nullptr);

// Same execution without building the trace; for enumeration-heavy
// callers that only consume the decisions.
std::vector<Decision> run_decisions(const ProtocolSpec& p, const Topology& t,
                                    const std::vector<int>& inputs, const RandomnessChoice& rc,
                                    const SendOverrides* overrides = nullptr);

// All (agent, round) slots with a non-empty randomness domain.
struct RandSlot {
    AgentId agent;
    int round;
    RandDomain domain;
};
std::vector<RandSlot> randomness_slots(const ProtocolSpec& p, const Topology& t);

// Every joint selection over the given slots, probabilities multiplying out.
std::vector<RandomnessChoice> enumerate_randomness(const std::vector<RandSlot>& slots);

// Fetch the payload value an agent's selection picked for (agent, round).
const Payload* selected_coin(const ProtocolSpec& p, const RandomnessChoice& rc, AgentId a,
                             int round, const RandDomain& domain);

struct Enumerated {
    std::vector<int> inputs;
    RandomnessChoice randomness;
    Rat probability;  // input prior times randomness probability
    Trace trace;
};

// One entry per (input vector, randomness choice); probabilities sum to 1.
// dist = per-value input prior (defaults to the protocol's).
std::vector<Enumerated> enumerate_executions(const ProtocolSpec& p, const Topology& t,
                                             const std::vector<Rat>* dist = nullptr,
                                             long long cap = 1'000'000);

// Seeded sampling fallback for spaces above the enumeration cap.
std::vector<Enumerated> sample_executions(const ProtocolSpec& p, const Topology& t,
                                          const std::vector<Rat>* dist, int count,
                                          unsigned long long seed);

AgentRun project(const Trace& tr, AgentId i);

enum class Outcome { legal, agreement, validity, termination };
std::string to_string(Outcome o);

// Legal iff no decision is bot, all decisions equal, and the common value
// is some agent's input. Any bot reports termination; disagreement next;
// then validity.
Outcome classify_outcome(const std::vector<int>& inputs, const std::vector<Decision>& decisions);
Outcome classify_outcome(const Trace& tr);

}  // namespace rcsim

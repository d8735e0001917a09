#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcsim/engine.hpp"
#include "rcsim/net.hpp"
#include "rcsim/rational.hpp"

namespace rcsim {

// Agents that received at least one non-EMPTY message from C at round t.
std::set<AgentId> recv_set(const Trace& tr, const std::set<AgentId>& C, int t);

// Recursive closure of agents affected by message m as of round t:
// the recipient at t_m, then everyone receiving from the affected set
// round by round.
std::set<AgentId> affected_set(const Trace& tr, const MessageRecord& m, int t);

// All message records whose effect reaches agent i by the end of the run.
std::vector<MessageRecord> aff_of(const Trace& tr, AgentId i);

enum class Sharing { none, coalition };

struct KnowledgeState {
    AgentId observer = -1;
    int round = 0;
    std::map<int, Rat> posterior;  // candidate value of the target's input -> probability
    long long basis = 0;           // consistent enumerated runs

    bool point_mass() const;
};

// Cache of one exhaustive enumeration with interned per-agent observation
// prefixes, shared by the run-grouping analyses below.
class RunTable {
public:
    static RunTable build(const ProtocolSpec& p, const Topology& t,
                          const std::vector<Rat>* dist = nullptr, long long cap = 4'000'000);

    const std::vector<Enumerated>& runs() const { return runs_; }
    const Topology& topo() const { return *topo_; }
    int max_rounds() const { return max_rounds_; }

    // Interned id of agent a's knowledge through the end of round
    // `through` (-1 = its input only). Equal ids = identical observations.
    int obs_id(size_t run, AgentId a, int through) const;

    // Index of the run with these inputs and randomness selections.
    size_t find_run(const std::vector<int>& inputs, const RandomnessChoice& rc) const;

private:
    std::vector<Enumerated> runs_;
    const Topology* topo_ = nullptr;
    int max_rounds_ = 0;
    std::vector<std::vector<std::vector<int>>> ids_;  // [agent][through+1][run]
};

// Bayesian posterior over I_target given an observer's run prefix
// (enumeration over all runs consistent with it, weighted by input prior
// and randomness probability).
KnowledgeState posterior(const ProtocolSpec& p, const Topology& t, const AgentRun& prefix,
                         AgentId target, const std::vector<Rat>* dist = nullptr,
                         long long cap = 4'000'000);

// The target-i knowers at the beginning of `round`: agents j whose
// knowledge makes some value of I_i strictly more likely than its prior.
// With Sharing::coalition, j's knowledge includes every observation other
// members of V \ {i} could have relayed to it over links in time.
std::set<AgentId> knowers(const ProtocolSpec& p, const Topology& t, const Trace& tr, AgentId i,
                          int round, Sharing sharing, const std::vector<Rat>* dist = nullptr,
                          long long cap = 4'000'000);
std::set<AgentId> knowers(const RunTable& table, const ProtocolSpec& p, size_t run, AgentId i,
                          int round, Sharing sharing);

struct ResilienceViolation {
    long long run = 0;
    AgentId to = 0;
    AgentId from = 0;
    int round = 0;
};

struct RisReport {
    bool terminated = false;
    bool input_sharing_ok = false;  // terminal posteriors are point masses for all pairs
    std::vector<ResilienceViolation> violations;
    long long runs = 0;

    bool pass() const { return terminated && input_sharing_ok && violations.empty(); }
    nlohmann::json to_json() const;
};

// Checks the three input-sharing conditions over the exhaustive
// enumeration: termination, input sharing, and resilience (every message
// delivered to i from a member of Know(i,t) must be prediction-forced:
// identical across all runs consistent with i's prefix).
RisReport verify_ris_resilience(const ProtocolSpec& p, const Topology& t,
                                const std::vector<Rat>* dist = nullptr,
                                long long cap = 4'000'000);

using MessageFilter = std::function<bool(const MessageRecord&)>;

struct EncodingWitness {
    long long run_a = 0;
    long long run_b = 0;
    AgentId observer = 0;
    AgentId differing = 0;
};

struct EncodingReport {
    bool pass = false;
    std::optional<EncodingWitness> witness;
    long long runs = 0;

    nlohmann::json to_json() const;
};

// Groups all runs by (i, I_i, D_i, aff_of(i)) and checks the other
// agents' inputs are constant within every group. `keep` drops message
// records from the effect-chain computation (a deliberately lossy view
// used to produce failing witnesses). Throws "not-a-xor-protocol" unless
// every enumerated decision equals the XOR of the inputs.
EncodingReport verify_input_encoding(const ProtocolSpec& p, const Topology& t,
                                     const std::vector<Rat>* dist = nullptr,
                                     long long cap = 4'000'000,
                                     const MessageFilter* keep = nullptr);

// The piggyback wrapper: record every received <m,src,dst,t>, attach the
// buffer to every outgoing message, merge incoming buffers. Underlying
// payloads and schedule are unchanged. Deterministic protocols only.
ProtocolSpec ris_transform(const ProtocolSpec& p, const Topology& t);

// The buffer agent i holds at the end of a transformed run.
std::vector<MessageRecord> piggyback_buffer(const Trace& transformed, AgentId i);

// Remove the piggyback wrapping from a transformed trace.
Trace strip_piggyback(const Trace& transformed);

bool traces_equal(const Trace& a, const Trace& b);

// Recover the full input vector from what one agent ends a transformed
// run with; consistency enumeration over candidate input vectors.
// Throws "ambiguous-decoding" if several candidates survive and
// "decoding-mismatch" if none do.
std::vector<int> decode_inputs(int own_input, const Decision& decision,
                               const std::vector<MessageRecord>& buffer, const ProtocolSpec& p,
                               const Topology& t, AgentId self);

struct SilenceFlag {
    AgentId i = 0;      // observer
    AgentId j = 0;      // silent neighbor
    int round = 0;
    long long run_a = 0;  // witness with the silence
    long long run_b = 0;  // witness with the alternative experience
};

// Flags every (i, j, t) where silence from j is informative: an
// alternative experience exists under the same prefix and same
// other-link round, and the two condition different suffix
// distributions for i.
std::vector<SilenceFlag> detect_informative_silences(const ProtocolSpec& p, const Topology& t,
                                                     const std::vector<Rat>* dist = nullptr,
                                                     long long cap = 4'000'000);

// Every link experience that would be silence becomes an EMPTY payload.
ProtocolSpec rewrite_with_empty(const ProtocolSpec& p);

}  // namespace rcsim

#pragma once

#include <string>
#include <vector>

#include "rcsim/engine.hpp"
#include "rcsim/net.hpp"

namespace rcsim {

// One agent's contribution to the knowledge-sharing step of the
// leader-based consensus: <input, random, id>.
struct KnowledgeTriple {
    int input = 0;
    int random = 0;
    AgentId id = 0;
};

enum class Validation { ok, abort };

// Abort iff some input is outside {0,1}, some random is outside {1..n},
// or two triples claim the same id.
Validation validate_knowledge(const std::vector<KnowledgeTriple>& K, int n);

// L = (sum of randoms) mod n; the leader is the id at 0-based position L
// of the ascending-sorted id list.
AgentId elect_leader(const std::vector<int>& randoms, std::vector<AgentId> ids);

struct ProtocolOptions {
    bool deterministic = false;        // fix share masks to zero (rings)
    std::vector<Rat> input_prior = {}; // defaults to uniform
};

// Input sharing over two disjoint directed paths. On a cycle each agent
// splits its input into a random mask sent clockwise and mask^input sent
// counterclockwise; every share is forwarded one hop per round in its
// travel direction, so after n-1 rounds every agent holds both shares of
// every origin. On a complete graph inputs are broadcast in one round.
// Decides its own input; the consensus constructors replace the finisher.
ProtocolSpec make_ris_two_path(const Topology& t, ProtocolOptions opts = {});

// Shares inputs over the two-path mechanism, then decides the XOR of all
// inputs. Any malformed, missing or off-schedule message turns the
// decision to bot and the agent sends EMPTY from then on.
ProtocolSpec make_xor_consensus(const Topology& t, ProtocolOptions opts = {});

// Leader-based binary consensus: draw r_i in {1..n}, share <I,r,id>
// triples over the input-sharing mechanism, validate them, elect the
// leader from the rank of the random sum, and decide the XOR of all
// inputs except the leader's.
ProtocolSpec make_algorithm1(const Topology& t, ProtocolOptions opts = {});

enum class MvRule { min_input, leader_input };

// Multi-valued candidates used as deviation-search targets: share all
// inputs, then decide the minimum input or the elected leader's input.
ProtocolSpec make_candidate_multivalued(const Topology& t, int r, MvRule rule,
                                        ProtocolOptions opts = {});

// Name-based construction for the CLI/config surface:
// "ris", "xor-consensus", "algorithm1", "mv-min", "mv-leader".
ProtocolSpec make_protocol_by_name(const std::string& name, const Topology& t, int r = 2,
                                   ProtocolOptions opts = {});

// Test protocols.
ProtocolSpec make_toy_send_iff_one(const Topology& t);   // silence reveals the input
ProtocolSpec make_toy_always_silent(const Topology& t);  // never sends anything
ProtocolSpec make_toy_knower_leak(const Topology& t);    // a knower sends unpredictable data

}  // namespace rcsim

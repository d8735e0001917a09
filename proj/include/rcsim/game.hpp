#pragma once

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

struct UtilityFunction {
    int r = 2;
    std::string name;
    std::function<Rat(const std::vector<int>&, const std::vector<Decision>&)> payoff;
};

// Pays 1 iff the outcome is legal, the common decision is v, and some
// agent's input is v; 0 otherwise.
UtilityFunction make_preference_utility(int v, int r);

using OutcomePair = std::pair<std::vector<int>, std::vector<Decision>>;

// Every (inputs, decisions) pair at size n with decisions over
// {0..r-1, bot}.
std::vector<OutcomePair> outcome_universe(int n, int r);

// True iff within every input vector of the universe, no erroneous
// outcome pays more than any legal outcome.
bool check_solution_preference(const UtilityFunction& u, const std::vector<OutcomePair>& universe);

enum class CommMode { link_limited, telepathic };
std::string to_string(CommMode m);

// One coalition member's pre-agreed behavior. The member runs the
// protocol state machine on its claimed input; individual outgoing
// payloads can be pinned to a constant or silenced per (round, dst), and
// its protocol coins can be fixed to chosen domain values.
struct MemberPlan {
    std::optional<int> claimed_input;
    std::map<int, Payload> fixed_coins;                            // round -> coin
    std::map<std::pair<int, AgentId>, std::optional<Payload>> overrides;  // silence = nullopt
};

struct CoalitionStrategy {
    std::set<AgentId> coalition;
    CommMode mode = CommMode::link_limited;
    std::string label = "honest";
    std::map<AgentId, MemberPlan> plans;
    // The coalition's true inputs for outcome evaluation, aligned with the
    // sorted coalition ids. Unset = honest play, inputs drawn from the
    // distribution like everyone else's.
    std::optional<std::vector<int>> assumed_inputs;

    bool is_honest() const { return plans.empty() && !assumed_inputs.has_value(); }
    static CoalitionStrategy honest(std::set<AgentId> coalition = {});
};

// Exact expectation of u over honest-agent inputs and all non-fixed
// protocol randomness, with coalition agents driven by the strategy.
// Coalition members report the unanimous honest decision (breaking the
// outcome never pays more under Solution Preference).
Rat expected_utility(const ProtocolSpec& p, const Topology& t, const CoalitionStrategy& strat,
                     const UtilityFunction& u, const std::vector<Rat>* dist = nullptr,
                     long long cap = 4'000'000);

struct EquilibriumReport {
    std::string protocol;
    std::vector<AgentId> coalition;
    std::string space;
    CommMode mode = CommMode::link_limited;
    std::string utility;
    Rat honest_eu;
    Rat best_eu;
    std::string best_label;
    long long strategies_evaluated = 0;
    std::string verdict;  // "deviation-found" | "no-profitable-deviation-found"

    bool deviation_found() const { return verdict == "deviation-found"; }
    nlohmann::json to_json() const;
};

// Builds a finite pre-agreed strategy space from a JSON descriptor:
//   {"family": "misreport"}                  claimed input vectors
//   {"family": "misreport", "claim_randomness": true}
//                                            ... crossed with fixed coins
//   {"family": "split-view"}                 per-honest-target payloads
//                                            (complete graphs), or static
//                                            per-slot share views (rings)
//   {"family": "id-split"}                   relabeled/duplicated id claims
//   {"family": "withhold"}                   silenced slots per round
//   {"family": "bounded-exhaustive", "rounds": R}
//                                            every payload assignment over
//                                            the protocol alphabet + EMPTY
//                                            + silence on links into
//                                            honest agents
//   {"family": "catalog"}                    union of the applicable
//                                            families ("bounded_exhaustive_rounds"
//                                            adds the last family)
// "mode": "telepathic" tags the strategies; every family here is
// pre-agreed, so both communication modes admit them.
std::vector<CoalitionStrategy> build_strategy_space(const ProtocolSpec& p, const Topology& t,
                                                    const std::set<AgentId>& coalition,
                                                    const nlohmann::json& descriptor);

// Exact EU for every strategy in the space; strict improvement over the
// honest EU is required for a deviation verdict.
EquilibriumReport find_profitable_deviation(const ProtocolSpec& p, const Topology& t,
                                            const std::set<AgentId>& coalition,
                                            const nlohmann::json& space_descriptor,
                                            const UtilityFunction& u,
                                            const std::vector<Rat>* dist = nullptr,
                                            long long cap = 4'000'000);

// Distribution of agent i's decision when the other agents follow the
// protocol on claimed inputs s (ordered by agent id, skipping i), with
// I_i drawn from dist. Keys "0".."r-1" and "BOT".
std::map<std::string, Rat> conditional_output_distribution(const ProtocolSpec& p,
                                                           const Topology& t, AgentId i,
                                                           const std::vector<int>& s,
                                                           const std::vector<Rat>* dist = nullptr,
                                                           long long cap = 4'000'000);

// P[D_i = v and D_j = v] for the two honest agents under the given
// strategy, exact.
Rat split_leader_success(const ProtocolSpec& p, const Topology& t, int v,
                         const CoalitionStrategy& strat, const std::vector<Rat>* dist = nullptr,
                         long long cap = 4'000'000);

}  // namespace rcsim

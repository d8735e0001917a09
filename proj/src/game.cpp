#include "rcsim/game.hpp"

#include <algorithm>

#include "rcsim/error.hpp"

namespace rcsim {

std::string to_string(CommMode m) {
    return m == CommMode::telepathic ? "telepathic" : "link-limited";
}

UtilityFunction make_preference_utility(int v, int r) {
    UtilityFunction u;
    u.r = r;
    u.name = "prefer-" + std::to_string(v);
    u.payoff = [v](const std::vector<int>& inputs, const std::vector<Decision>& decisions) {
        if (classify_outcome(inputs, decisions) != Outcome::legal) return Rat(0);
        if (decisions.front().value != v) return Rat(0);
        for (int in : inputs)
            if (in == v) return Rat(1);
        return Rat(0);
    };
    return u;
}

std::vector<OutcomePair> outcome_universe(int n, int r) {
    std::vector<OutcomePair> out;
    std::vector<std::vector<int>> input_vecs;
    {
        std::vector<int> v(n, 0);
        while (true) {
            input_vecs.push_back(v);
            int k = n - 1;
            for (; k >= 0; k--) {
                if (++v[k] < r) break;
                v[k] = 0;
            }
            if (k < 0) break;
        }
    }
    std::vector<Decision> opts;
    for (int c = 0; c < r; c++) opts.push_back(Decision::of(c));
    opts.push_back(Decision::bot());
    for (const auto& inputs : input_vecs) {
        std::vector<int> idx(n, 0);
        while (true) {
            std::vector<Decision> ds;
            for (int k = 0; k < n; k++) ds.push_back(opts[idx[k]]);
            out.push_back({inputs, ds});
            int k = n - 1;
            for (; k >= 0; k--) {
                if (++idx[k] < static_cast<int>(opts.size())) break;
                idx[k] = 0;
            }
            if (k < 0) break;
        }
    }
    return out;
}

bool check_solution_preference(const UtilityFunction& u,
                               const std::vector<OutcomePair>& universe) {
    if (universe.empty()) throw Error("empty-universe", "no outcomes to check");
    // per input vector: max erroneous payoff <= min legal payoff
    std::map<std::vector<int>, std::pair<std::optional<Rat>, std::optional<Rat>>> byinput;
    for (const auto& [inputs, decisions] : universe) {
        Rat pay = u.payoff(inputs, decisions);
        auto& [max_err, min_leg] = byinput[inputs];
        if (classify_outcome(inputs, decisions) == Outcome::legal) {
            if (!min_leg || pay < *min_leg) min_leg = pay;
        } else {
            if (!max_err || pay > *max_err) max_err = pay;
        }
    }
    for (const auto& [inputs, bounds] : byinput) {
        const auto& [max_err, min_leg] = bounds;
        if (max_err && min_leg && *max_err > *min_leg) return false;
    }
    return true;
}

CoalitionStrategy CoalitionStrategy::honest(std::set<AgentId> coalition) {
    CoalitionStrategy s;
    s.coalition = std::move(coalition);
    return s;
}

namespace {

std::vector<AgentId> sorted_honest(const Topology& t, const std::set<AgentId>& coalition) {
    std::vector<AgentId> out;
    for (AgentId a : t.agents)
        if (!coalition.count(a)) out.push_back(a);
    return out;
}

std::vector<std::vector<int>> all_vectors(int len, int r) {
    std::vector<std::vector<int>> out;
    std::vector<int> v(len, 0);
    while (true) {
        out.push_back(v);
        int k = len - 1;
        for (; k >= 0; k--) {
            if (++v[k] < r) break;
            v[k] = 0;
        }
        if (k < 0) break;
    }
    return out;
}

int find_option(const RandDomain& dom, const Payload& coin) {
    for (size_t k = 0; k < dom.options.size(); k++)
        if (dom.options[k].first == coin) return static_cast<int>(k);
    throw Error("randomness-out-of-domain", "fixed coin not in declared domain");
}

// Enumerates honest input vectors and all non-fixed randomness under the
// strategy, executing each run; probabilities sum to 1 across calls.
void for_each_strategy_run(
    const ProtocolSpec& p, const Topology& t, const CoalitionStrategy& strat,
    const std::vector<Rat>& dist, long long cap,
    const std::function<void(const std::vector<int>& honest_inputs, const Rat& prob,
                             const std::vector<Decision>& decisions)>& fn) {
    std::vector<AgentId> honest = sorted_honest(t, strat.coalition);

    SendOverrides overrides;
    for (const auto& [c, plan] : strat.plans)
        for (const auto& [slot, payload] : plan.overrides)
            overrides[{c, slot.first, slot.second}] = payload;

    auto slots = randomness_slots(p, t);
    std::vector<RandSlot> open;
    std::map<std::pair<AgentId, int>, int> fixed;
    for (auto& s : slots) {
        auto it = strat.plans.find(s.agent);
        if (it != strat.plans.end()) {
            auto coin = it->second.fixed_coins.find(s.round);
            if (coin != it->second.fixed_coins.end()) {
                fixed[{s.agent, s.round}] = find_option(s.domain, coin->second);
                continue;
            }
        }
        open.push_back(std::move(s));
    }

    long long runs = 1;
    for (const auto& s : open) runs *= static_cast<long long>(s.domain.options.size());
    for (size_t k = 0; k < honest.size(); k++) runs *= p.r;
    if (runs > cap)
        throw Error("enumeration-cap-exceeded",
                    std::to_string(runs) + " runs exceed cap " + std::to_string(cap));

    auto choices = enumerate_randomness(open);
    for (auto& rc : choices)
        for (const auto& [slot, idx] : fixed) rc.selection[slot] = idx;

    for (const auto& hv : all_vectors(static_cast<int>(honest.size()), p.r)) {
        Rat pin(1);
        std::vector<int> inputs(t.n, 0);
        for (size_t k = 0; k < honest.size(); k++) {
            inputs[honest[k]] = hv[k];
            pin *= dist.at(hv[k]);
        }
        int rank = 0;
        for (AgentId c : strat.coalition) {
            auto it = strat.plans.find(c);
            if (it != strat.plans.end() && it->second.claimed_input)
                inputs[c] = *it->second.claimed_input;
            else if (strat.assumed_inputs)
                inputs[c] = strat.assumed_inputs->at(rank);
            rank++;
        }
        for (const auto& rc : choices) {
            auto decisions =
                run_decisions(p, t, inputs, rc, overrides.empty() ? nullptr : &overrides);
            fn(hv, pin * rc.probability, decisions);
        }
    }
}

// Coalition members report the unanimous honest decision; anything else
// cannot pay more under Solution Preference.
std::vector<Decision> echo_decisions(const Topology& t, const std::set<AgentId>& coalition,
                                     const std::vector<Decision>& raw) {
    std::vector<Decision> out = raw;
    std::optional<Decision> common;
    bool ok = true;
    for (AgentId a : t.agents) {
        if (coalition.count(a)) continue;
        if (raw[a].kind != DecisionKind::value) {
            ok = false;
            break;
        }
        if (!common)
            common = raw[a];
        else if (*common != raw[a])
            ok = false;
    }
    for (AgentId c : coalition) out[c] = ok && common ? *common : Decision::bot();
    return out;
}

std::vector<int> true_inputs(const Topology& t, const CoalitionStrategy& strat,
                             const std::vector<AgentId>& honest,
                             const std::vector<int>& honest_inputs) {
    std::vector<int> inputs(t.n, 0);
    for (size_t k = 0; k < honest.size(); k++) inputs[honest[k]] = honest_inputs[k];
    int rank = 0;
    for (AgentId c : strat.coalition) {
        if (strat.assumed_inputs)
            inputs[c] = strat.assumed_inputs->at(rank);
        else {
            auto it = strat.plans.find(c);
            if (it != strat.plans.end() && it->second.claimed_input)
                inputs[c] = *it->second.claimed_input;
        }
        rank++;
    }
    return inputs;
}

}  // namespace

Rat expected_utility(const ProtocolSpec& p, const Topology& t, const CoalitionStrategy& strat,
                     const UtilityFunction& u, const std::vector<Rat>* dist, long long cap) {
    std::vector<Rat> prior = dist ? *dist : p.prior();
    Rat eu(0);
    if (strat.is_honest()) {
        CoalitionStrategy everyone_honest;  // empty coalition: all inputs enumerated
        for_each_strategy_run(p, t, everyone_honest, prior, cap,
                              [&](const std::vector<int>& inputs, const Rat& prob,
                                  const std::vector<Decision>& decisions) {
                                  eu += prob * u.payoff(inputs, decisions);
                              });
        return eu;
    }
    std::vector<AgentId> honest = sorted_honest(t, strat.coalition);
    for_each_strategy_run(p, t, strat, prior, cap,
                          [&](const std::vector<int>& hv, const Rat& prob,
                              const std::vector<Decision>& raw) {
                              auto decisions = echo_decisions(t, strat.coalition, raw);
                              auto inputs = true_inputs(t, strat, honest, hv);
                              eu += prob * u.payoff(inputs, decisions);
                          });
    return eu;
}

std::map<std::string, Rat> conditional_output_distribution(const ProtocolSpec& p,
                                                           const Topology& t, AgentId i,
                                                           const std::vector<int>& s,
                                                           const std::vector<Rat>* dist,
                                                           long long cap) {
    if (static_cast<int>(s.size()) != t.n - 1)
        throw Error("bad-claim", "claim vector must cover V minus one agent");
    CoalitionStrategy strat;
    strat.label = "misreport(honest-shaped)";
    int k = 0;
    for (AgentId a : t.agents) {
        if (a == i) continue;
        strat.coalition.insert(a);
        strat.plans[a].claimed_input = s[k++];
    }
    strat.assumed_inputs = s;
    std::vector<Rat> prior = dist ? *dist : p.prior();
    std::map<std::string, Rat> out;
    for (int v = 0; v < p.r; v++) out[std::to_string(v)] = Rat(0);
    out["BOT"] = Rat(0);
    for_each_strategy_run(p, t, strat, prior, cap,
                          [&](const std::vector<int>&, const Rat& prob,
                              const std::vector<Decision>& decisions) {
                              const Decision& d = decisions[i];
                              out[d.kind == DecisionKind::value ? std::to_string(d.value)
                                                                : "BOT"] += prob;
                          });
    return out;
}

Rat split_leader_success(const ProtocolSpec& p, const Topology& t, int v,
                         const CoalitionStrategy& strat, const std::vector<Rat>* dist,
                         long long cap) {
    std::vector<Rat> prior = dist ? *dist : p.prior();
    std::vector<AgentId> honest = sorted_honest(t, strat.coalition);
    Rat success(0);
    for_each_strategy_run(p, t, strat, prior, cap,
                          [&](const std::vector<int>&, const Rat& prob,
                              const std::vector<Decision>& decisions) {
                              for (AgentId h : honest)
                                  if (decisions[h] != Decision::of(v)) return;
                              success += prob;
                          });
    return success;
}

namespace {

std::vector<int> iota_inputs(int count, int r) {
    std::vector<int> v(count);
    for (int k = 0; k < count; k++) v[k] = k % r;
    return v;
}

std::string vec_str(const std::vector<int>& v) {
    std::string s = "[";
    for (size_t k = 0; k < v.size(); k++) s += (k ? "," : "") + std::to_string(v[k]);
    return s + "]";
}

void add_misreports(std::vector<CoalitionStrategy>& out, const ProtocolSpec& p, const Topology& t,
                    const std::vector<AgentId>& C, CommMode mode, bool claim_randomness) {
    // Round-0 coin options per member, when the protocol has claimable coins.
    std::vector<Payload> coin_opts;
    if (claim_randomness && !C.empty()) {
        if (p.claimable_coins)
            coin_opts = p.claimable_coins(C.front());
        else
            for (const auto& [coin, prob] : p.randomness(C.front(), 0).options)
                coin_opts.push_back(coin);
    }
    for (const auto& claim : all_vectors(static_cast<int>(C.size()), p.r)) {
        CoalitionStrategy base;
        base.coalition.insert(C.begin(), C.end());
        base.mode = mode;
        base.assumed_inputs = claim;
        for (size_t k = 0; k < C.size(); k++) base.plans[C[k]].claimed_input = claim[k];
        base.label = "misreport" + vec_str(claim);
        if (coin_opts.empty()) {
            out.push_back(base);
            continue;
        }
        for (const auto& coins : all_vectors(static_cast<int>(C.size()),
                                             static_cast<int>(coin_opts.size()))) {
            CoalitionStrategy s = base;
            std::string suffix = "+coins[";
            for (size_t k = 0; k < C.size(); k++) {
                s.plans[C[k]].fixed_coins[0] = coin_opts[coins[k]];
                suffix += (k ? "," : "") + coin_opts[coins[k]].dump();
            }
            s.label = base.label + suffix + "]";
            out.push_back(s);
        }
    }
}

// Direct coalition->honest slots with at least one alphabet variant.
struct Slot {
    AgentId src, dst;
    int round;
    std::vector<Payload> options;
};

std::vector<Slot> honest_facing_slots(const ProtocolSpec& p, const Topology& t,
                                      const std::vector<AgentId>& C,
                                      const std::vector<AgentId>& H, int max_round) {
    std::vector<Slot> slots;
    if (!p.payload_alphabet) return slots;
    for (AgentId c : C)
        for (AgentId h : H) {
            if (!t.has_edge(c, h)) continue;
            for (int round = 0; round < std::min(max_round, p.rounds_bound); round++) {
                auto opts = p.payload_alphabet(c, h, round);
                if (!opts.empty()) slots.push_back({c, h, round, std::move(opts)});
            }
        }
    return slots;
}

void add_slot_products(std::vector<CoalitionStrategy>& out, const ProtocolSpec& p,
                       const std::vector<AgentId>& C, const std::vector<Slot>& slots,
                       CommMode mode, const std::string& family, long long cap) {
    long long count = 1;
    for (const auto& s : slots) {
        count *= static_cast<long long>(s.options.size());
        if (count > cap)
            throw Error("enumeration-cap-exceeded", family + " space exceeds cap");
    }
    std::vector<size_t> odo(slots.size(), 0);
    while (true) {
        CoalitionStrategy s;
        s.coalition.insert(C.begin(), C.end());
        s.mode = mode;
        s.assumed_inputs = iota_inputs(static_cast<int>(C.size()), p.r);
        s.label = family + "[";
        for (size_t k = 0; k < C.size(); k++) s.plans[C[k]].claimed_input = (*s.assumed_inputs)[k];
        // pin coins so scripted members add no randomness of their own
        for (AgentId c : C) {
            RandDomain dom = p.randomness(c, 0);
            if (!dom.options.empty()) s.plans[c].fixed_coins[0] = dom.options.front().first;
        }
        for (size_t k = 0; k < slots.size(); k++) {
            const auto& slot = slots[k];
            s.plans[slot.src].overrides[{slot.round, slot.dst}] = slot.options[odo[k]];
            s.label += (k ? ";" : "") + std::to_string(slot.src) + ">" +
                       std::to_string(slot.dst) + "@" + std::to_string(slot.round) + "=" +
                       slot.options[odo[k]].dump();
        }
        s.label += "]";
        out.push_back(std::move(s));
        size_t k = 0;
        for (; k < slots.size(); k++) {
            if (++odo[k] < slots[k].options.size()) break;
            odo[k] = 0;
        }
        if (k == slots.size() || slots.empty()) break;
    }
}

void add_withholds(std::vector<CoalitionStrategy>& out, const ProtocolSpec& p, const Topology& t,
                   const std::vector<AgentId>& C, const std::vector<AgentId>& H, CommMode mode) {
    std::vector<std::pair<AgentId, AgentId>> links;
    for (AgentId c : C)
        for (AgentId h : H)
            if (t.has_edge(c, h)) links.push_back({c, h});
    for (int round = 0; round < p.rounds_bound; round++) {
        for (size_t pick = 0; pick <= links.size(); pick++) {
            // one strategy per single link, plus one silencing all links
            CoalitionStrategy s;
            s.coalition.insert(C.begin(), C.end());
            s.mode = mode;
            s.assumed_inputs = iota_inputs(static_cast<int>(C.size()), p.r);
            for (size_t k = 0; k < C.size(); k++)
                s.plans[C[k]].claimed_input = (*s.assumed_inputs)[k];
            if (pick < links.size()) {
                s.plans[links[pick].first].overrides[{round, links[pick].second}] = std::nullopt;
                s.label = "withhold[r" + std::to_string(round) + " " +
                          std::to_string(links[pick].first) + ">" +
                          std::to_string(links[pick].second) + "]";
            } else {
                if (links.empty()) continue;
                for (const auto& [c, h] : links) s.plans[c].overrides[{round, h}] = std::nullopt;
                s.label = "withhold[r" + std::to_string(round) + " all]";
            }
            out.push_back(std::move(s));
        }
    }
}

void add_id_splits(std::vector<CoalitionStrategy>& out, const ProtocolSpec& p, const Topology& t,
                   const std::vector<AgentId>& C, const std::vector<AgentId>& H, CommMode mode) {
    if (!p.payload_alphabet || t.kind != TopologyKind::complete || H.empty()) return;
    // Applicable when payloads carry id claims.
    auto probe = p.payload_alphabet(C.empty() ? 0 : C.front(), H.front(), 0);
    if (probe.empty() || !probe.front().contains("b") || !probe.front()["b"].is_object() ||
        !probe.front()["b"].contains("id"))
        return;
    // Each member claims its own id or the shared fresh id n, per target.
    int combos = 1;
    for (size_t k = 0; k < C.size() * H.size(); k++) combos *= 2;
    for (int mask = 0; mask < combos; mask++) {
        CoalitionStrategy s;
        s.coalition.insert(C.begin(), C.end());
        s.mode = mode;
        s.assumed_inputs = iota_inputs(static_cast<int>(C.size()), 2);
        int bit = 0;
        for (size_t ck = 0; ck < C.size(); ck++) {
            AgentId c = C[ck];
            s.plans[c].claimed_input = (*s.assumed_inputs)[ck];
            RandDomain dom = p.randomness(c, 0);
            if (!dom.options.empty()) s.plans[c].fixed_coins[0] = dom.options.front().first;
            for (AgentId h : H) {
                AgentId id = (mask >> bit++) & 1 ? t.n : c;
                Payload body{{"i", (*s.assumed_inputs)[ck]}, {"r", 1}, {"id", id}};
                s.plans[c].overrides[{0, h}] = Payload{{"o", c}, {"b", body}};
            }
        }
        s.label = "id-split[" + std::to_string(mask) + "]";
        out.push_back(std::move(s));
    }
}

}  // namespace

std::vector<CoalitionStrategy> build_strategy_space(const ProtocolSpec& p, const Topology& t,
                                                    const std::set<AgentId>& coalition,
                                                    const nlohmann::json& descriptor) {
    std::string family = descriptor.value("family", "catalog");
    CommMode mode = descriptor.value("mode", "link-limited") == std::string("telepathic")
                        ? CommMode::telepathic
                        : CommMode::link_limited;
    long long cap = descriptor.value("cap", 2'000'000LL);
    std::vector<AgentId> C(coalition.begin(), coalition.end());
    std::vector<AgentId> H = sorted_honest(t, coalition);
    std::vector<CoalitionStrategy> out;

    // Coins carrying semantic fields (the {1..n} draws) are claimable;
    // plain share masks cancel out and are not worth crossing in.
    bool semantic_coins = false;
    if (!C.empty()) {
        RandDomain dom = p.randomness(C.front(), 0);
        semantic_coins = !dom.options.empty() && dom.options.front().first.is_object();
    }
    bool coin_claims = descriptor.value("claim_randomness", semantic_coins);

    if (family == "misreport" || family == "catalog")
        add_misreports(out, p, t, C, mode, coin_claims);
    if (family == "split-view" || family == "share-views" || family == "catalog") {
        auto slots = honest_facing_slots(p, t, C, H, p.rounds_bound);
        if (t.kind == TopologyKind::complete) {
            // keep id claims out of the frame product; id-split covers them
            for (auto& s : slots) {
                std::vector<Payload> kept;
                for (auto& opt : s.options)
                    if (!opt["b"].is_object() || !opt["b"].contains("id") ||
                        opt["b"]["id"] == s.src)
                        kept.push_back(opt);
                s.options = std::move(kept);
            }
        }
        if (!slots.empty())
            add_slot_products(out, p, C, slots,  mode,
                              t.kind == TopologyKind::complete ? "split-view" : "share-view", cap);
    }
    if (family == "id-split" || family == "catalog") add_id_splits(out, p, t, C, H, mode);
    if (family == "withhold" || family == "catalog") add_withholds(out, p, t, C, H, mode);
    if (family == "bounded-exhaustive" ||
        (family == "catalog" && descriptor.contains("bounded_exhaustive_rounds"))) {
        int rounds = descriptor.value("rounds", descriptor.value("bounded_exhaustive_rounds", 2));
        auto slots = honest_facing_slots(p, t, C, H, rounds);
        for (auto& s : slots) {
            s.options.push_back(empty_payload());
            // silence marker handled below via a distinct null option
        }
        // represent silence by extending each slot with a null payload and
        // mapping it to a withheld slot
        long long count = 1;
        for (const auto& s : slots) count *= static_cast<long long>(s.options.size() + 1);
        if (count > cap) throw Error("enumeration-cap-exceeded", "bounded-exhaustive space");
        std::vector<size_t> odo(slots.size(), 0);
        while (!slots.empty()) {
            CoalitionStrategy s;
            s.coalition.insert(C.begin(), C.end());
            s.mode = mode;
            s.assumed_inputs = iota_inputs(static_cast<int>(C.size()), p.r);
            for (size_t k = 0; k < C.size(); k++) {
                s.plans[C[k]].claimed_input = (*s.assumed_inputs)[k];
                RandDomain dom = p.randomness(C[k], 0);
                if (!dom.options.empty()) s.plans[C[k]].fixed_coins[0] = dom.options.front().first;
            }
            s.label = "be[";
            for (size_t k = 0; k < slots.size(); k++) {
                const auto& slot = slots[k];
                std::optional<Payload> pick;
                if (odo[k] < slot.options.size()) pick = slot.options[odo[k]];
                s.plans[slot.src].overrides[{slot.round, slot.dst}] = pick;
                s.label += (k ? ";" : "") + (pick ? pick->dump() : std::string("silence"));
            }
            s.label += "]";
            out.push_back(std::move(s));
            size_t k = 0;
            for (; k < slots.size(); k++) {
                if (++odo[k] < slots[k].options.size() + 1) break;
                odo[k] = 0;
            }
            if (k == slots.size()) break;
        }
    }
    return out;
}

nlohmann::json EquilibriumReport::to_json() const {
    return {{"protocol", protocol},
            {"coalition", coalition},
            {"space", space},
            {"mode", to_string(mode)},
            {"utility", utility},
            {"honest_eu", honest_eu.str()},
            {"best_deviation",
             {{"eu", best_eu.str()}, {"strategy", best_label}}},
            {"strategies_evaluated", strategies_evaluated},
            {"verdict", verdict}};
}

EquilibriumReport find_profitable_deviation(const ProtocolSpec& p, const Topology& t,
                                            const std::set<AgentId>& coalition,
                                            const nlohmann::json& space_descriptor,
                                            const UtilityFunction& u,
                                            const std::vector<Rat>* dist, long long cap) {
    if (coalition.size() >= static_cast<size_t>(t.n))
        throw Error("bad-coalition", "coalition must leave at least one honest agent");
    EquilibriumReport rep;
    rep.protocol = p.name;
    rep.coalition.assign(coalition.begin(), coalition.end());
    rep.space = space_descriptor.dump();
    rep.mode = space_descriptor.value("mode", "link-limited") == std::string("telepathic")
                   ? CommMode::telepathic
                   : CommMode::link_limited;
    rep.utility = u.name;
    rep.honest_eu = expected_utility(p, t, CoalitionStrategy::honest(coalition), u, dist, cap);
    rep.best_eu = Rat(0);

    auto space = build_strategy_space(p, t, coalition, space_descriptor);
    bool first = true;
    for (const auto& strat : space) {
        Rat eu = expected_utility(p, t, strat, u, dist, cap);
        if (first || eu > rep.best_eu) {
            rep.best_eu = eu;
            rep.best_label = strat.label;
            first = false;
        }
        rep.strategies_evaluated++;
    }
    rep.verdict = (!first && rep.best_eu > rep.honest_eu) ? "deviation-found"
                                                          : "no-profitable-deviation-found";
    return rep;
}

}  // namespace rcsim

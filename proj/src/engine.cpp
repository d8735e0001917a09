#include "rcsim/engine.hpp"

#include <algorithm>
#include <random>

#include "rcsim/error.hpp"

namespace rcsim {

std::string Decision::str() const {
    switch (kind) {
        case DecisionKind::undecided: return "?";
        case DecisionKind::bot: return "BOT";
        case DecisionKind::value: return std::to_string(value);
    }
    return "?";
}

bool MessageRecord::operator<(const MessageRecord& o) const {
    if (round != o.round) return round < o.round;
    if (src != o.src) return src < o.src;
    if (dst != o.dst) return dst < o.dst;
    return payload.dump() < o.payload.dump();
}

nlohmann::json MessageRecord::to_json() const {
    return {{"src", src}, {"dst", dst}, {"t", round}, {"m", payload}};
}

MessageRecord MessageRecord::from_json(const nlohmann::json& j) {
    return {j.at("src").get<int>(), j.at("dst").get<int>(), j.at("t").get<int>(), j.at("m")};
}

AgentRun AgentRun::prefix(int t) const {
    AgentRun out;
    out.agent = agent;
    for (int k = 0; k <= t && k < static_cast<int>(rounds.size()); k++)
        out.rounds.push_back(rounds[k]);
    return out;
}

bool ProtocolSpec::deterministic(const Topology& t) const {
    for (AgentId a : t.agents)
        for (int round = 0; round < rounds_bound; round++)
            if (!randomness(a, round).options.empty()) return false;
    return true;
}

std::vector<Rat> ProtocolSpec::prior() const {
    if (!input_prior.empty()) return input_prior;
    return std::vector<Rat>(r, Rat(1, r));
}

const Payload* selected_coin(const ProtocolSpec& p, const RandomnessChoice& rc, AgentId a,
                             int round, const RandDomain& domain) {
    if (domain.options.empty()) return nullptr;
    auto it = rc.selection.find({a, round});
    if (it == rc.selection.end())
        throw Error("randomness-missing", "no selection for agent " + std::to_string(a) +
                                              " round " + std::to_string(round));
    if (it->second < 0 || it->second >= static_cast<int>(domain.options.size()))
        throw Error("randomness-out-of-domain", "selection index out of range");
    return &domain.options[it->second].first;
}

namespace {

std::vector<Decision> run_protocol(const ProtocolSpec& p, const Topology& t,
                                   const std::vector<int>& inputs, const RandomnessChoice& rc,
                                   const SendOverrides* overrides, Trace* out) {
    if (static_cast<int>(inputs.size()) != t.n)
        throw Error("bad-inputs", "input vector size != n");
    std::vector<Decision> decisions(t.n, Decision::undecided());

    std::vector<std::unique_ptr<AgentState>> states;
    states.reserve(t.n);
    for (AgentId a : t.agents) states.push_back(p.init({a, inputs[a], &t}));

    for (int round = 0;; round++) {
        bool all_decided = std::all_of(decisions.begin(), decisions.end(),
                                       [](const Decision& d) { return d.decided(); });
        if (all_decided) break;
        if (round >= p.rounds_bound)
            throw Error("protocol-overrun",
                        p.name + " exceeded rounds_bound " + std::to_string(p.rounds_bound));

        // Send phase: round-t messages are a function of state so far.
        std::vector<std::map<AgentId, Payload>> outgoing(t.n);
        for (AgentId a : t.agents) {
            RandDomain dom = p.randomness(a, round);
            const Payload* coin = selected_coin(p, rc, a, round, dom);
            std::map<AgentId, Payload> sends = p.send(*states[a], round, coin);
            if (overrides) {
                for (AgentId nb : t.neighbors(a)) {
                    auto it = overrides->find({a, round, nb});
                    if (it == overrides->end()) continue;
                    if (it->second.has_value())
                        sends[nb] = *it->second;
                    else
                        sends.erase(nb);
                }
            }
            for (const auto& [dst, payload] : sends)
                if (!t.has_edge(a, dst))
                    throw Error("illegal-send", "agent " + std::to_string(a) +
                                                    " addressed non-neighbor " +
                                                    std::to_string(dst));
            outgoing[a] = std::move(sends);
        }

        // Same-round delivery.
        std::vector<std::map<AgentId, LinkExperience>> incoming(t.n);
        for (AgentId a : t.agents)
            for (AgentId nb : t.neighbors(a)) incoming[a][nb] = std::nullopt;
        for (AgentId src : t.agents)
            for (const auto& [dst, payload] : outgoing[src]) incoming[dst][src] = payload;

        // Receive phase: consume round-t messages, possibly decide.
        for (AgentId a : t.agents) {
            Decision d = p.receive(*states[a], round, incoming[a]);
            if (decisions[a].decided() && d != decisions[a])
                throw Error("decision-changed",
                            "agent " + std::to_string(a) + " revised a final decision");
            decisions[a] = d;
        }

        if (out) {
            out->rounds.emplace_back();
            for (AgentId a : t.agents) {
                RoundRecord rec;
                rec.agent = a;
                rec.input = inputs[a];
                rec.incoming = std::move(incoming[a]);
                for (AgentId nb : t.neighbors(a)) {
                    auto it = outgoing[a].find(nb);
                    rec.outgoing[nb] = it == outgoing[a].end() ? LinkExperience{}
                                                               : LinkExperience{std::move(it->second)};
                }
                rec.decision = decisions[a];
                out->rounds.back().emplace(a, std::move(rec));
            }
            out->terminated_at = round;
        }
    }
    if (out && p.reconstructed) {
        out->reconstructed.resize(t.n);
        for (AgentId a : t.agents) out->reconstructed[a] = p.reconstructed(*states[a]);
    }
    return decisions;
}

}  // namespace

Trace execute(const ProtocolSpec& p, const Topology& t, const std::vector<int>& inputs,
              const RandomnessChoice& rc, const SendOverrides* overrides) {
    Trace tr;
    tr.topology = t;
    tr.inputs = inputs;
    tr.randomness = rc;
    tr.decisions = run_protocol(p, t, inputs, rc, overrides, &tr);
    return tr;
}

std::vector<Decision> run_decisions(const ProtocolSpec& p, const Topology& t,
                                    const std::vector<int>& inputs, const RandomnessChoice& rc,
                                    const SendOverrides* overrides) {
    return run_protocol(p, t, inputs, rc, overrides, nullptr);
}

std::vector<RandSlot> randomness_slots(const ProtocolSpec& p, const Topology& t) {
    std::vector<RandSlot> slots;
    for (int round = 0; round < p.rounds_bound; round++)
        for (AgentId a : t.agents) {
            RandDomain dom = p.randomness(a, round);
            if (!dom.options.empty()) slots.push_back({a, round, std::move(dom)});
        }
    return slots;
}

std::vector<RandomnessChoice> enumerate_randomness(const std::vector<RandSlot>& slots) {
    std::vector<RandomnessChoice> out;
    std::vector<int> odometer(slots.size(), 0);
    while (true) {
        RandomnessChoice rc;
        for (size_t k = 0; k < slots.size(); k++) {
            rc.selection[{slots[k].agent, slots[k].round}] = odometer[k];
            rc.probability *= slots[k].domain.options[odometer[k]].second;
        }
        out.push_back(std::move(rc));
        size_t k = 0;
        for (; k < slots.size(); k++) {
            if (++odometer[k] < static_cast<int>(slots[k].domain.options.size())) break;
            odometer[k] = 0;
        }
        if (k == slots.size()) break;
    }
    return out;
}

namespace {

std::vector<std::vector<int>> all_input_vectors(int n, int r) {
    std::vector<std::vector<int>> out;
    std::vector<int> v(n, 0);
    while (true) {
        out.push_back(v);
        int k = n - 1;
        for (; k >= 0; k--) {
            if (++v[k] < r) break;
            v[k] = 0;
        }
        if (k < 0) break;
    }
    return out;
}

Rat input_probability(const std::vector<int>& inputs, const std::vector<Rat>& dist) {
    Rat p(1);
    for (int v : inputs) p *= dist.at(v);
    return p;
}

}  // namespace

std::vector<Enumerated> enumerate_executions(const ProtocolSpec& p, const Topology& t,
                                             const std::vector<Rat>* dist, long long cap) {
    std::vector<Rat> prior = dist ? *dist : p.prior();
    auto slots = randomness_slots(p, t);
    long long space = 1;
    for (const auto& s : slots) {
        space *= static_cast<long long>(s.domain.options.size());
        if (space > cap) break;
    }
    for (int k = 0; k < t.n; k++) {
        space *= p.r;
        if (space > cap) break;
    }
    if (space > cap)
        throw Error("enumeration-cap-exceeded",
                    "joint space exceeds cap " + std::to_string(cap));

    std::vector<Enumerated> out;
    auto choices = enumerate_randomness(slots);
    for (const auto& inputs : all_input_vectors(t.n, p.r)) {
        Rat pin = input_probability(inputs, prior);
        for (const auto& rc : choices) {
            Enumerated e;
            e.inputs = inputs;
            e.randomness = rc;
            e.probability = pin * rc.probability;
            e.trace = execute(p, t, inputs, rc);
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<Enumerated> sample_executions(const ProtocolSpec& p, const Topology& t,
                                          const std::vector<Rat>* dist, int count,
                                          unsigned long long seed) {
    std::vector<Rat> prior = dist ? *dist : p.prior();
    auto slots = randomness_slots(p, t);
    std::mt19937_64 rng(seed);
    std::vector<Enumerated> out;
    for (int k = 0; k < count; k++) {
        Enumerated e;
        for (int a = 0; a < t.n; a++) {
            // inverse-CDF draw over the exact prior
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double x = u(rng), acc = 0.0;
            int v = p.r - 1;
            for (int c = 0; c < p.r; c++) {
                acc += prior[c].to_double();
                if (x < acc) {
                    v = c;
                    break;
                }
            }
            e.inputs.push_back(v);
        }
        RandomnessChoice rc;
        for (const auto& s : slots) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(s.domain.options.size()) - 1);
            int idx = pick(rng);
            rc.selection[{s.agent, s.round}] = idx;
            rc.probability *= s.domain.options[idx].second;
        }
        e.randomness = rc;
        e.probability = input_probability(e.inputs, prior) * rc.probability;
        e.trace = execute(p, t, e.inputs, e.randomness);
        out.push_back(std::move(e));
    }
    return out;
}

AgentRun project(const Trace& tr, AgentId i) {
    if (i < 0 || i >= tr.topology.n) throw Error("unknown-agent", "agent " + std::to_string(i));
    AgentRun run;
    run.agent = i;
    for (const auto& round : tr.rounds) run.rounds.push_back(round.at(i));
    return run;
}

Outcome classify_outcome(const std::vector<int>& inputs, const std::vector<Decision>& decisions) {
    for (const auto& d : decisions)
        if (d.kind != DecisionKind::value) return Outcome::termination;
    for (const auto& d : decisions)
        if (d.value != decisions.front().value) return Outcome::agreement;
    int v = decisions.front().value;
    for (int in : inputs)
        if (in == v) return Outcome::legal;
    return Outcome::validity;
}

Outcome classify_outcome(const Trace& tr) { return classify_outcome(tr.inputs, tr.decisions); }

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::legal: return "legal";
        case Outcome::agreement: return "erroneous(agreement)";
        case Outcome::validity: return "erroneous(validity)";
        case Outcome::termination: return "erroneous(termination)";
    }
    return "?";
}

}  // namespace rcsim

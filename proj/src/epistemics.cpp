#include "rcsim/epistemics.hpp"

#include <algorithm>
#include <queue>

#include "rcsim/error.hpp"

namespace rcsim {

std::set<AgentId> recv_set(const Trace& tr, const std::set<AgentId>& C, int t) {
    std::set<AgentId> out;
    if (t < 0 || t >= static_cast<int>(tr.rounds.size())) return out;
    for (const auto& [agent, rec] : tr.rounds[t])
        for (const auto& [src, exp] : rec.incoming)
            if (C.count(src) && exp.has_value() && !is_empty_payload(*exp)) {
                out.insert(agent);
                break;
            }
    return out;
}

namespace {

std::vector<MessageRecord> all_messages(const Trace& tr) {
    std::vector<MessageRecord> out;
    for (int t = 0; t < static_cast<int>(tr.rounds.size()); t++)
        for (const auto& [agent, rec] : tr.rounds[t])
            for (const auto& [dst, exp] : rec.outgoing)
                if (exp.has_value() && !is_empty_payload(*exp))
                    out.push_back({agent, dst, t, *exp});
    return out;
}

std::set<AgentId> closure(const Trace& tr, const MessageRecord& m, int t) {
    std::set<AgentId> cur = {m.dst};
    for (int k = m.round + 1; k <= t && k < static_cast<int>(tr.rounds.size()); k++) {
        auto next = recv_set(tr, cur, k);
        cur.insert(next.begin(), next.end());
    }
    return cur;
}

}  // namespace

std::set<AgentId> affected_set(const Trace& tr, const MessageRecord& m, int t) {
    if (t < m.round) throw Error("bad-round", "t precedes the message");
    bool found = false;
    if (m.round < static_cast<int>(tr.rounds.size())) {
        const auto& rec = tr.rounds[m.round].at(m.src);
        auto it = rec.outgoing.find(m.dst);
        found = it != rec.outgoing.end() && it->second.has_value() && *it->second == m.payload;
    }
    if (!found) throw Error("message-not-in-trace", "no such message record");
    return closure(tr, m, t);
}

std::vector<MessageRecord> aff_of(const Trace& tr, AgentId i) {
    std::vector<MessageRecord> out;
    int t_end = static_cast<int>(tr.rounds.size()) - 1;
    for (const auto& m : all_messages(tr))
        if (closure(tr, m, t_end).count(i)) out.push_back(m);
    std::sort(out.begin(), out.end());
    return out;
}

bool KnowledgeState::point_mass() const {
    for (const auto& [value, prob] : posterior)
        if (prob == Rat(1)) return true;
    return false;
}

namespace {

std::string experience_key(const LinkExperience& e) { return e.has_value() ? e->dump() : "~"; }

std::string record_key(const RoundRecord& rec) {
    std::string s = "i" + std::to_string(rec.input) + "<";
    for (const auto& [src, exp] : rec.incoming)
        s += std::to_string(src) + ":" + experience_key(exp) + ";";
    s += ">";
    for (const auto& [dst, exp] : rec.outgoing)
        s += std::to_string(dst) + ":" + experience_key(exp) + ";";
    s += "D" + rec.decision.str();
    return s;
}

}  // namespace

RunTable RunTable::build(const ProtocolSpec& p, const Topology& t, const std::vector<Rat>* dist,
                         long long cap) {
    RunTable table;
    table.runs_ = enumerate_executions(p, t, dist, cap);
    table.topo_ = &t;
    for (const auto& e : table.runs_)
        table.max_rounds_ = std::max(table.max_rounds_, static_cast<int>(e.trace.rounds.size()));

    size_t nruns = table.runs_.size();
    table.ids_.assign(t.n, {});
    for (AgentId a : t.agents) {
        std::vector<std::string> cum(nruns);
        auto& per_agent = table.ids_[a];
        per_agent.assign(table.max_rounds_ + 1, std::vector<int>(nruns, 0));
        for (int through = -1; through < table.max_rounds_; through++) {
            std::map<std::string, int> interned;
            for (size_t run = 0; run < nruns; run++) {
                const auto& rounds = table.runs_[run].trace.rounds;
                if (through == -1)
                    cum[run] = "I" + std::to_string(table.runs_[run].inputs[a]);
                else if (through < static_cast<int>(rounds.size()))
                    cum[run] += "|" + record_key(rounds[through].at(a));
                auto [it, inserted] =
                    interned.insert({cum[run], static_cast<int>(interned.size())});
                per_agent[through + 1][run] = it->second;
            }
        }
    }
    return table;
}

int RunTable::obs_id(size_t run, AgentId a, int through) const {
    int k = std::min(through, max_rounds_ - 1) + 1;
    if (k < 0) k = 0;
    return ids_[a][k][run];
}

size_t RunTable::find_run(const std::vector<int>& inputs, const RandomnessChoice& rc) const {
    for (size_t k = 0; k < runs_.size(); k++)
        if (runs_[k].inputs == inputs && runs_[k].randomness.selection == rc.selection) return k;
    throw Error("run-not-found", "trace does not match any enumerated run");
}

KnowledgeState posterior(const ProtocolSpec& p, const Topology& t, const AgentRun& prefix,
                         AgentId target, const std::vector<Rat>* dist, long long cap) {
    auto runs = enumerate_executions(p, t, dist, cap);
    KnowledgeState ks;
    ks.observer = prefix.agent;
    ks.round = static_cast<int>(prefix.rounds.size());
    Rat total(0);
    std::map<int, Rat> mass;
    for (const auto& e : runs) {
        bool ok = true;
        for (size_t k = 0; ok && k < prefix.rounds.size(); k++) {
            if (k >= e.trace.rounds.size() ||
                !(e.trace.rounds[k].at(prefix.agent) == prefix.rounds[k]))
                ok = false;
        }
        if (!ok) continue;
        total += e.probability;
        mass[e.inputs[target]] += e.probability;
        ks.basis++;
    }
    if (ks.basis == 0) throw Error("inconsistent-prefix", "no enumerated run matches the prefix");
    for (int v = 0; v < p.r; v++) {
        auto it = mass.find(v);
        ks.posterior[v] = it == mass.end() ? Rat(0) : it->second / total;
    }
    return ks;
}

namespace {

// Hop distances from every agent to dst inside the subgraph that excludes
// `excluded` (coalition relays cannot route through the honest agent).
std::vector<int> distances_avoiding(const Topology& t, AgentId dst, AgentId excluded) {
    std::vector<int> dist(t.n, -1);
    std::queue<AgentId> q;
    dist[dst] = 0;
    q.push(dst);
    while (!q.empty()) {
        AgentId cur = q.front();
        q.pop();
        for (AgentId nb : t.neighbors(cur)) {
            if (nb == excluded || dist[nb] >= 0) continue;
            dist[nb] = dist[cur] + 1;
            q.push(nb);
        }
    }
    return dist;
}

// (agent, through) pairs whose pooled observations make up K_j^round.
std::vector<std::pair<AgentId, int>> knowledge_pool(const Topology& t, AgentId i, AgentId j,
                                                    int round, Sharing sharing) {
    std::vector<std::pair<AgentId, int>> pool;
    if (sharing == Sharing::none) {
        pool.push_back({j, round - 1});
        return pool;
    }
    auto dist = distances_avoiding(t, j, i);
    for (AgentId k : t.agents) {
        if (k == i || dist[k] < 0) continue;
        int through = round - 1 - dist[k];
        if (through >= -1) pool.push_back({k, through});
    }
    return pool;
}

}  // namespace

std::set<AgentId> knowers(const RunTable& table, const ProtocolSpec& p, size_t run, AgentId i,
                          int round, Sharing sharing) {
    const Topology& t = table.topo();
    std::vector<Rat> prior = p.prior();
    std::set<AgentId> out;
    for (AgentId j : t.agents) {
        if (j == i) continue;
        auto pool = knowledge_pool(t, i, j, round, sharing);
        auto key_of = [&](size_t r) {
            std::vector<int> key;
            for (const auto& [k, through] : pool) key.push_back(table.obs_id(r, k, through));
            return key;
        };
        auto ref = key_of(run);
        Rat total(0);
        std::map<int, Rat> mass;
        for (size_t r = 0; r < table.runs().size(); r++) {
            if (key_of(r) != ref) continue;
            total += table.runs()[r].probability;
            mass[table.runs()[r].inputs[i]] += table.runs()[r].probability;
        }
        for (const auto& [b, m] : mass)
            if (m / total > prior[b]) {
                out.insert(j);
                break;
            }
    }
    return out;
}

std::set<AgentId> knowers(const ProtocolSpec& p, const Topology& t, const Trace& tr, AgentId i,
                          int round, Sharing sharing, const std::vector<Rat>* dist,
                          long long cap) {
    RunTable table = RunTable::build(p, t, dist, cap);
    return knowers(table, p, table.find_run(tr.inputs, tr.randomness), i, round, sharing);
}

nlohmann::json RisReport::to_json() const {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& viol : violations)
        v.push_back({{"run", viol.run}, {"to", viol.to}, {"from", viol.from}, {"round", viol.round}});
    return {{"terminated", terminated},
            {"input_sharing", input_sharing_ok},
            {"resilience_violations", v},
            {"runs", runs},
            {"pass", pass()}};
}

RisReport verify_ris_resilience(const ProtocolSpec& p, const Topology& t,
                                const std::vector<Rat>* dist, long long cap) {
    RunTable table = RunTable::build(p, t, dist, cap);
    const auto& runs = table.runs();
    RisReport rep;
    rep.runs = static_cast<long long>(runs.size());

    rep.terminated = true;
    for (const auto& e : runs)
        for (const auto& d : e.trace.decisions)
            if (!d.decided()) rep.terminated = false;

    // Input sharing: identical full observations imply identical inputs
    // everywhere, i.e. every terminal posterior is a point mass.
    rep.input_sharing_ok = true;
    for (AgentId a : t.agents) {
        std::map<int, const std::vector<int>*> seen;
        for (size_t run = 0; run < runs.size(); run++) {
            int id = table.obs_id(run, a, table.max_rounds() - 1);
            auto [it, inserted] = seen.insert({id, &runs[run].inputs});
            if (!inserted && *it->second != runs[run].inputs) rep.input_sharing_ok = false;
        }
    }

    // Resilience: per (receiver i, sender j, round), group runs by i's
    // prefix, mark groups whose j->i experience is not constant, then
    // flag any run where a knower j delivers such an unforced message.
    std::vector<Rat> prior = p.prior();
    for (AgentId i : t.agents) {
        for (AgentId j : t.neighbors(i)) {
            for (int round = 0; round < table.max_rounds(); round++) {
                std::map<int, std::string> forced;  // prefix id -> experience (or "*" = varies)
                for (size_t run = 0; run < runs.size(); run++) {
                    if (round >= static_cast<int>(runs[run].trace.rounds.size())) continue;
                    int pid = table.obs_id(run, i, round - 1);
                    std::string exp =
                        experience_key(runs[run].trace.rounds[round].at(i).incoming.at(j));
                    auto [it, inserted] = forced.insert({pid, exp});
                    if (!inserted && it->second != exp) it->second = "*";
                }
                // knower groups: pooled observation key -> is j an i-knower
                std::map<std::vector<int>, bool> knower_cache;
                auto pool = knowledge_pool(t, i, j, round, Sharing::coalition);
                for (size_t run = 0; run < runs.size(); run++) {
                    if (round >= static_cast<int>(runs[run].trace.rounds.size())) continue;
                    const auto& exp = runs[run].trace.rounds[round].at(i).incoming.at(j);
                    if (!exp.has_value() || is_empty_payload(*exp)) continue;
                    std::vector<int> key;
                    for (const auto& [k, through] : pool)
                        key.push_back(table.obs_id(run, k, through));
                    auto it = knower_cache.find(key);
                    if (it == knower_cache.end()) {
                        Rat total(0);
                        std::map<int, Rat> mass;
                        for (size_t r = 0; r < runs.size(); r++) {
                            std::vector<int> k2;
                            for (const auto& [k, through] : pool)
                                k2.push_back(table.obs_id(r, k, through));
                            if (k2 != key) continue;
                            total += runs[r].probability;
                            mass[runs[r].inputs[i]] += runs[r].probability;
                        }
                        bool knows = false;
                        for (const auto& [b, m] : mass)
                            if (m / total > prior[b]) knows = true;
                        it = knower_cache.insert({key, knows}).first;
                    }
                    if (!it->second) continue;
                    if (forced[table.obs_id(run, i, round - 1)] == "*")
                        rep.violations.push_back(
                            {static_cast<long long>(run), i, j, round});
                }
            }
        }
    }
    return rep;
}

nlohmann::json EncodingReport::to_json() const {
    nlohmann::json j = {{"pass", pass}, {"runs", runs}};
    if (witness)
        j["witness"] = {{"run_a", witness->run_a},
                        {"run_b", witness->run_b},
                        {"observer", witness->observer},
                        {"differing_agent", witness->differing}};
    return j;
}

EncodingReport verify_input_encoding(const ProtocolSpec& p, const Topology& t,
                                     const std::vector<Rat>* dist, long long cap,
                                     const MessageFilter* keep) {
    auto runs = enumerate_executions(p, t, dist, cap);
    EncodingReport rep;
    rep.runs = static_cast<long long>(runs.size());
    for (const auto& e : runs) {
        int x = 0;
        for (int v : e.inputs) x ^= v;
        for (const auto& d : e.trace.decisions)
            if (d != Decision::of(x))
                throw Error("not-a-xor-protocol", p.name + " does not decide the XOR");
    }

    rep.pass = true;
    for (AgentId i : t.agents) {
        std::map<std::string, std::pair<size_t, const std::vector<int>*>> groups;
        for (size_t run = 0; run < runs.size(); run++) {
            const auto& e = runs[run];
            std::string key = "I" + std::to_string(e.inputs[i]) + "|D" +
                              e.trace.decisions[i].str() + "|";
            for (const auto& m : aff_of(e.trace, i)) {
                if (keep && !(*keep)(m)) continue;
                key += m.to_json().dump();
            }
            auto [it, inserted] = groups.insert({key, {run, &e.inputs}});
            if (inserted) continue;
            if (*it->second.second != e.inputs) {
                for (AgentId other : t.agents) {
                    if ((*it->second.second)[other] != e.inputs[other]) {
                        rep.pass = false;
                        rep.witness = {static_cast<long long>(it->second.first),
                                       static_cast<long long>(run), i, other};
                        return rep;
                    }
                }
            }
        }
    }
    return rep;
}

namespace {

struct PiggyState : AgentState {
    std::unique_ptr<AgentState> inner;
    AgentId self = 0;
    std::vector<MessageRecord> buffer;
    std::set<std::string> seen;

    void remember(const MessageRecord& rec) {
        if (seen.insert(rec.to_json().dump()).second) buffer.push_back(rec);
    }
};

nlohmann::json buffer_json(const std::vector<MessageRecord>& buffer) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : buffer) arr.push_back(rec.to_json());
    return arr;
}

bool is_wrapped(const Payload& p) { return p.is_object() && p.contains("inner") && p.contains("buf"); }

}  // namespace

ProtocolSpec ris_transform(const ProtocolSpec& p, const Topology& t) {
    if (!p.deterministic(t))
        throw Error("nondeterministic-protocol",
                    "the piggyback transform applies to deterministic protocols only");
    auto inner = std::make_shared<ProtocolSpec>(p);
    ProtocolSpec out = p;
    out.name = p.name + "+piggyback";
    out.payload_alphabet = nullptr;
    out.init = [inner](const AgentCtx& ctx) {
        auto st = std::make_unique<PiggyState>();
        st->inner = inner->init(ctx);
        st->self = ctx.id;
        return st;
    };
    out.send = [inner](AgentState& s, int round, const Payload* coin) {
        auto& st = static_cast<PiggyState&>(s);
        auto sends = inner->send(*st.inner, round, coin);
        nlohmann::json buf = buffer_json(st.buffer);
        std::map<AgentId, Payload> wrapped;
        for (auto& [dst, payload] : sends)
            wrapped[dst] = Payload{{"inner", payload}, {"buf", buf}};
        return wrapped;
    };
    out.receive = [inner](AgentState& s, int round,
                          const std::map<AgentId, LinkExperience>& incoming) {
        auto& st = static_cast<PiggyState&>(s);
        std::map<AgentId, LinkExperience> unwrapped;
        for (const auto& [src, exp] : incoming) {
            if (!exp.has_value() || !is_wrapped(*exp)) {
                unwrapped[src] = exp;
                if (exp.has_value() && !is_empty_payload(*exp))
                    st.remember({src, st.self, round, *exp});
                continue;
            }
            unwrapped[src] = (*exp)["inner"];
            if (!is_empty_payload((*exp)["inner"]))
                st.remember({src, st.self, round, (*exp)["inner"]});
            for (const auto& rec : (*exp)["buf"]) st.remember(MessageRecord::from_json(rec));
        }
        return inner->receive(*st.inner, round, unwrapped);
    };
    out.reconstructed = [inner](const AgentState& s) {
        const auto& st = static_cast<const PiggyState&>(s);
        return inner->reconstructed ? inner->reconstructed(*st.inner) : std::nullopt;
    };
    return out;
}

std::vector<MessageRecord> piggyback_buffer(const Trace& transformed, AgentId i) {
    std::vector<MessageRecord> buffer;
    std::set<std::string> seen;
    auto remember = [&](const MessageRecord& rec) {
        if (seen.insert(rec.to_json().dump()).second) buffer.push_back(rec);
    };
    for (int t = 0; t < static_cast<int>(transformed.rounds.size()); t++) {
        const auto& rec = transformed.rounds[t].at(i);
        for (const auto& [src, exp] : rec.incoming) {
            if (!exp.has_value()) continue;
            if (is_wrapped(*exp)) {
                if (!is_empty_payload((*exp)["inner"])) remember({src, i, t, (*exp)["inner"]});
                for (const auto& r : (*exp)["buf"]) remember(MessageRecord::from_json(r));
            } else if (!is_empty_payload(*exp)) {
                remember({src, i, t, *exp});
            }
        }
    }
    std::sort(buffer.begin(), buffer.end());
    return buffer;
}

Trace strip_piggyback(const Trace& transformed) {
    Trace out = transformed;
    auto unwrap = [](LinkExperience& exp) {
        if (exp.has_value() && is_wrapped(*exp)) exp = (*exp)["inner"];
    };
    for (auto& round : out.rounds)
        for (auto& [agent, rec] : round) {
            for (auto& [peer, exp] : rec.incoming) unwrap(exp);
            for (auto& [peer, exp] : rec.outgoing) unwrap(exp);
        }
    return out;
}

bool traces_equal(const Trace& a, const Trace& b) {
    if (a.inputs != b.inputs || a.terminated_at != b.terminated_at) return false;
    if (a.rounds.size() != b.rounds.size()) return false;
    for (size_t t = 0; t < a.rounds.size(); t++)
        if (!(a.rounds[t] == b.rounds[t])) return false;
    for (size_t k = 0; k < a.decisions.size(); k++)
        if (a.decisions[k] != b.decisions[k]) return false;
    return true;
}

std::vector<int> decode_inputs(int own_input, const Decision& decision,
                               const std::vector<MessageRecord>& buffer, const ProtocolSpec& p,
                               const Topology& t, AgentId self) {
    ProtocolSpec transformed = ris_transform(p, t);
    std::vector<MessageRecord> want = buffer;
    std::sort(want.begin(), want.end());

    std::optional<std::vector<int>> survivor;
    std::vector<int> candidate(t.n, 0);
    while (true) {
        if (candidate[self] == own_input) {
            Trace tr = execute(transformed, t, candidate, RandomnessChoice{});
            if (tr.decisions[self] == decision && piggyback_buffer(tr, self) == want) {
                if (survivor && *survivor != candidate)
                    throw Error("ambiguous-decoding",
                                "several input vectors are consistent with the buffer");
                survivor = candidate;
            }
        }
        int k = t.n - 1;
        for (; k >= 0; k--) {
            if (++candidate[k] < p.r) break;
            candidate[k] = 0;
        }
        if (k < 0) break;
    }
    if (!survivor)
        throw Error("decoding-mismatch", "no input vector is consistent with the buffer");
    return *survivor;
}

std::vector<SilenceFlag> detect_informative_silences(const ProtocolSpec& p, const Topology& t,
                                                     const std::vector<Rat>* dist,
                                                     long long cap) {
    RunTable table = RunTable::build(p, t, dist, cap);
    const auto& runs = table.runs();
    std::vector<SilenceFlag> flags;

    for (AgentId i : t.agents) {
        for (AgentId j : t.neighbors(i)) {
            for (int round = 0; round < table.max_rounds(); round++) {
                // same prefix + same round-t record except the j-experience
                struct Branch {
                    Rat total = Rat(0);
                    std::map<std::string, Rat> suffix;
                    size_t first_run = 0;
                    bool seen = false;
                };
                std::map<std::string, std::map<std::string, Branch>> groups;
                for (size_t run = 0; run < runs.size(); run++) {
                    const auto& tr = runs[run].trace;
                    if (round >= static_cast<int>(tr.rounds.size())) continue;
                    const auto& rec = tr.rounds[round].at(i);
                    std::string gkey = std::to_string(table.obs_id(run, i, round - 1)) + "#";
                    for (const auto& [dst, exp] : rec.outgoing)
                        gkey += std::to_string(dst) + ":" + experience_key(exp) + ";";
                    gkey += "#";
                    for (const auto& [src, exp] : rec.incoming)
                        if (src != j) gkey += std::to_string(src) + ":" + experience_key(exp) + ";";
                    gkey += "#D" + rec.decision.str();

                    std::string ekey = experience_key(rec.incoming.at(j));
                    std::string suffix;
                    for (int k = round + 1; k < static_cast<int>(tr.rounds.size()); k++)
                        suffix += record_key(tr.rounds[k].at(i)) + "|";

                    Branch& br = groups[gkey][ekey];
                    if (!br.seen) {
                        br.first_run = run;
                        br.seen = true;
                    }
                    br.total += runs[run].probability;
                    br.suffix[suffix] += runs[run].probability;
                }

                for (const auto& [gkey, branches] : groups) {
                    auto silent = branches.find("~");
                    if (silent == branches.end() || branches.size() < 2) continue;
                    auto normalized = [](const Branch& b) {
                        std::map<std::string, Rat> out;
                        for (const auto& [sfx, mass] : b.suffix) out[sfx] = mass / b.total;
                        return out;
                    };
                    auto base = normalized(silent->second);
                    for (const auto& [ekey, branch] : branches) {
                        if (ekey == "~") continue;
                        if (normalized(branch) != base) {
                            flags.push_back({i, j, round,
                                             static_cast<long long>(silent->second.first_run),
                                             static_cast<long long>(branch.first_run)});
                            break;
                        }
                    }
                    if (!flags.empty() && flags.back().i == i && flags.back().j == j &&
                        flags.back().round == round)
                        break;  // one witness per (i, j, round)
                }
            }
        }
    }
    return flags;
}

ProtocolSpec rewrite_with_empty(const ProtocolSpec& p) {
    auto inner = std::make_shared<ProtocolSpec>(p);
    ProtocolSpec out = p;
    if (out.name.find("+empty") == std::string::npos) out.name += "+empty";
    struct EmptyState : AgentState {
        std::unique_ptr<AgentState> inner;
        std::vector<AgentId> neighbors;
    };
    out.init = [inner](const AgentCtx& ctx) {
        auto st = std::make_unique<EmptyState>();
        st->inner = inner->init(ctx);
        st->neighbors = ctx.topo->neighbors(ctx.id);
        return st;
    };
    out.send = [inner](AgentState& s, int round, const Payload* coin) {
        auto& st = static_cast<EmptyState&>(s);
        auto sends = inner->send(*st.inner, round, coin);
        for (AgentId nb : st.neighbors)
            if (!sends.count(nb)) sends[nb] = empty_payload();
        return sends;
    };
    out.receive = [inner](AgentState& s, int round,
                          const std::map<AgentId, LinkExperience>& incoming) {
        auto& st = static_cast<EmptyState&>(s);
        return inner->receive(*st.inner, round, incoming);
    };
    out.reconstructed = [inner](const AgentState& s) {
        const auto& st = static_cast<const EmptyState&>(s);
        return inner->reconstructed ? inner->reconstructed(*st.inner) : std::nullopt;
    };
    return out;
}

}  // namespace rcsim

#include "rcsim/protocols.hpp"

#include <algorithm>
#include <memory>
#include <set>

#include "rcsim/error.hpp"

namespace rcsim {

Validation validate_knowledge(const std::vector<KnowledgeTriple>& K, int n) {
    if (static_cast<int>(K.size()) != n)
        throw Error("bad-knowledge-size", "expected " + std::to_string(n) + " triples");
    std::set<AgentId> ids;
    for (const auto& k : K) {
        if (k.input != 0 && k.input != 1) return Validation::abort;
        if (k.random < 1 || k.random > n) return Validation::abort;
        if (!ids.insert(k.id).second) return Validation::abort;
    }
    return Validation::ok;
}

AgentId elect_leader(const std::vector<int>& randoms, std::vector<AgentId> ids) {
    int n = static_cast<int>(ids.size());
    long long sum = 0;
    for (int r : randoms) {
        if (r < 1 || r > n) throw Error("out-of-range-random", "random " + std::to_string(r));
        sum += r;
    }
    std::sort(ids.begin(), ids.end());
    return ids[static_cast<int>(sum % n)];
}

namespace {

enum class Transport { ring, complete };
enum class Body { bit, modr, triple, value_rand };

struct RisState;

struct TransportCfg {
    Transport transport;
    Body body;
    int r = 2;
    int n = 0;
    bool deterministic = false;
    std::vector<AgentId> order;  // ring: cyclic vertex order
    std::vector<int> pos;        // ring: agent -> position in order
    std::function<Decision(const RisState&)> finish;

    AgentId at(int position) const { return order[((position % n) + n) % n]; }
    AgentId succ(AgentId a) const { return at(pos[a] + 1); }
    AgentId pred(AgentId a) const { return at(pos[a] - 1); }
    int last_round() const { return transport == Transport::ring ? n - 2 : 0; }
};

struct RisState : AgentState {
    AgentCtx ctx;
    std::shared_ptr<const TransportCfg> cfg;
    int my_mask = 0;
    int my_rand = 0;
    Decision decision;
    Payload fwd_cw, fwd_ccw;                 // frames to forward next round (ring)
    std::map<AgentId, Payload> got_cw, got_ccw;  // origin -> validated frame
    // Views of the shared data, valid once reconstruction completes.
    std::vector<int> inputs_view;
    std::vector<int> randoms_view;
    std::vector<AgentId> ids_view;
    bool complete_views = false;

    int input() const { return ctx.input; }
    AgentId id() const { return ctx.id; }
};

bool body_valid(const TransportCfg& cfg, const Payload& b, bool direct) {
    switch (cfg.body) {
        case Body::bit:
            return b.is_number_integer() && (b == 0 || b == 1);
        case Body::modr:
            return b.is_number_integer() && b.get<int>() >= 0 && b.get<int>() < cfg.r;
        case Body::triple:
            // r and id are validated semantically after the sharing step,
            // so out-of-range claims reach that check instead of dying here.
            if (!(b.is_object() && b.contains("i") && b.contains("r") && b.contains("id") &&
                  b["i"].is_number_integer() && b["r"].is_number_integer() &&
                  b["id"].is_number_integer()))
                return false;
            return direct || b["i"] == 0 || b["i"] == 1;  // masked halves are bits
        case Body::value_rand:
            return b.is_object() && b.contains("v") && b.contains("r") &&
                   b["v"].is_number_integer() && b["v"].get<int>() >= 0 &&
                   b["v"].get<int>() < cfg.r && b["r"].is_number_integer();
    }
    return false;
}

Payload make_body(const TransportCfg& cfg, const RisState& st, bool cw_half) {
    switch (cfg.body) {
        case Body::bit:
            return cw_half ? Payload(st.my_mask) : Payload(st.my_mask ^ st.input());
        case Body::modr:
            return cw_half ? Payload(st.my_mask)
                           : Payload((st.my_mask + st.input()) % cfg.r);
        case Body::triple: {
            int i = cw_half ? st.my_mask : (st.my_mask ^ st.input());
            return Payload{{"i", i}, {"r", st.my_rand}, {"id", st.id()}};
        }
        case Body::value_rand: {
            int v = cw_half ? st.my_mask : (st.my_mask + st.input()) % cfg.r;
            return Payload{{"v", v}, {"r", st.my_rand}};
        }
    }
    return Payload();
}

Payload direct_body(const TransportCfg& cfg, const RisState& st) {
    switch (cfg.body) {
        case Body::bit:
        case Body::modr:
            return Payload(st.input());
        case Body::triple:
            return Payload{{"i", st.input()}, {"r", st.my_rand}, {"id", st.id()}};
        case Body::value_rand:
            return Payload{{"v", st.input()}, {"r", st.my_rand}};
    }
    return Payload();
}

// Combine the two directional halves of one origin's share; nullopt on
// inconsistency between the clear fields of the two halves.
std::optional<Payload> combine(const TransportCfg& cfg, const Payload& cw, const Payload& ccw) {
    switch (cfg.body) {
        case Body::bit:
            return Payload(cw.get<int>() ^ ccw.get<int>());
        case Body::modr:
            return Payload(((ccw.get<int>() - cw.get<int>()) % cfg.r + cfg.r) % cfg.r);
        case Body::triple: {
            if (cw["r"] != ccw["r"] || cw["id"] != ccw["id"]) return std::nullopt;
            return Payload{{"i", cw["i"].get<int>() ^ ccw["i"].get<int>()},
                           {"r", cw["r"]},
                           {"id", cw["id"]}};
        }
        case Body::value_rand: {
            if (cw["r"] != ccw["r"]) return std::nullopt;
            int v = ((ccw["v"].get<int>() - cw["v"].get<int>()) % cfg.r + cfg.r) % cfg.r;
            return Payload{{"v", v}, {"r", cw["r"]}};
        }
    }
    return std::nullopt;
}

void fill_views(RisState& st, const std::map<AgentId, Payload>& shares) {
    const auto& cfg = *st.cfg;
    st.inputs_view.assign(cfg.n, 0);
    st.randoms_view.assign(cfg.n, 0);
    st.ids_view.assign(cfg.n, 0);
    for (AgentId a = 0; a < cfg.n; a++) {
        Payload body = a == st.id() ? direct_body(cfg, st) : shares.at(a);
        switch (cfg.body) {
            case Body::bit:
            case Body::modr:
                st.inputs_view[a] = body.get<int>();
                break;
            case Body::triple:
                st.inputs_view[a] = body["i"].get<int>();
                st.randoms_view[a] = body["r"].get<int>();
                st.ids_view[a] = body["id"].get<int>();
                break;
            case Body::value_rand:
                st.inputs_view[a] = body["v"].get<int>();
                st.randoms_view[a] = body["r"].get<int>();
                break;
        }
    }
    st.complete_views = true;
}

Decision fail(RisState& st) {
    st.decision = Decision::bot();
    return st.decision;
}

std::map<AgentId, Payload> ris_send(AgentState& state, int round, const Payload* coin) {
    auto& st = static_cast<RisState&>(state);
    const auto& cfg = *st.cfg;
    std::map<AgentId, Payload> out;
    if (st.decision.decided()) {
        for (AgentId nb : st.ctx.topo->neighbors(st.id())) out[nb] = empty_payload();
        return out;
    }
    if (round == 0 && coin) {
        if (coin->is_object()) {
            st.my_mask = coin->value("mask", 0);
            st.my_rand = coin->value("r", 0);
        } else {
            st.my_mask = coin->get<int>();
        }
    }
    if (cfg.transport == Transport::complete) {
        if (round == 0) {
            Payload frame{{"o", st.id()}, {"b", direct_body(cfg, st)}};
            for (AgentId nb : st.ctx.topo->neighbors(st.id())) out[nb] = frame;
        }
        return out;
    }
    if (round == 0) {
        out[cfg.succ(st.id())] = Payload{{"o", st.id()}, {"d", "cw"}, {"b", make_body(cfg, st, true)}};
        out[cfg.pred(st.id())] = Payload{{"o", st.id()}, {"d", "ccw"}, {"b", make_body(cfg, st, false)}};
    } else if (round <= cfg.last_round()) {
        out[cfg.succ(st.id())] = st.fwd_cw;
        out[cfg.pred(st.id())] = st.fwd_ccw;
    }
    return out;
}

Decision ris_receive(AgentState& state, int round,
                     const std::map<AgentId, LinkExperience>& incoming) {
    auto& st = static_cast<RisState&>(state);
    const auto& cfg = *st.cfg;
    if (st.decision.decided()) return st.decision;

    if (cfg.transport == Transport::complete) {
        std::map<AgentId, Payload> shares;
        for (const auto& [src, exp] : incoming) {
            if (!exp.has_value() || is_empty_payload(*exp)) return fail(st);
            const Payload& f = *exp;
            if (!(f.is_object() && f.contains("o") && f.contains("b") && f["o"] == src &&
                  body_valid(cfg, f["b"], true)))
                return fail(st);
            shares[src] = f["b"];
        }
        fill_views(st, shares);
        st.decision = cfg.finish(st);
        return st.decision;
    }

    // Ring: one clockwise-travelling share from pred, one counterclockwise
    // share from succ, every round of the schedule.
    AgentId pred = cfg.pred(st.id()), succ = cfg.succ(st.id());
    AgentId cw_origin = cfg.at(cfg.pos[st.id()] - (round + 1));
    AgentId ccw_origin = cfg.at(cfg.pos[st.id()] + (round + 1));
    auto check = [&](AgentId from, AgentId origin, const char* dir) -> const Payload* {
        auto it = incoming.find(from);
        if (it == incoming.end() || !it->second.has_value() || is_empty_payload(*it->second))
            return nullptr;
        const Payload& f = *it->second;
        if (!(f.is_object() && f.contains("o") && f.contains("d") && f.contains("b") &&
              f["o"] == origin && f["d"] == dir && body_valid(cfg, f["b"], false)))
            return nullptr;
        return &f;
    };
    const Payload* cw = check(pred, cw_origin, "cw");
    const Payload* ccw = check(succ, ccw_origin, "ccw");
    if (!cw || !ccw) return fail(st);
    st.got_cw[cw_origin] = (*cw)["b"];
    st.got_ccw[ccw_origin] = (*ccw)["b"];
    st.fwd_cw = *cw;
    st.fwd_ccw = *ccw;

    if (round < cfg.last_round()) return Decision::undecided();

    std::map<AgentId, Payload> shares;
    for (AgentId a = 0; a < cfg.n; a++) {
        if (a == st.id()) continue;
        auto c = st.got_cw.find(a);
        auto w = st.got_ccw.find(a);
        if (c == st.got_cw.end() || w == st.got_ccw.end()) return fail(st);
        auto merged = combine(cfg, c->second, w->second);
        if (!merged.has_value()) return fail(st);
        shares[a] = *merged;
    }
    fill_views(st, shares);
    st.decision = cfg.finish(st);
    return st.decision;
}

ProtocolSpec make_transport(const Topology& t, Body body, int r, bool deterministic,
                            std::vector<Rat> prior,
                            std::function<Decision(const RisState&)> finish, std::string name) {
    auto cfg = std::make_shared<TransportCfg>();
    cfg->body = body;
    cfg->r = r;
    cfg->n = t.n;
    cfg->deterministic = deterministic;
    cfg->finish = std::move(finish);
    if (t.kind == TopologyKind::complete) {
        cfg->transport = Transport::complete;
    } else if (auto order = cycle_order(t)) {
        cfg->transport = Transport::ring;
        cfg->order = *order;
        cfg->pos.assign(t.n, 0);
        for (int k = 0; k < t.n; k++) cfg->pos[cfg->order[k]] = k;
    } else {
        throw Error("unsupported-topology", name + " needs a cycle or a complete graph");
    }

    ProtocolSpec p;
    p.name = std::move(name);
    p.r = r;
    p.rounds_bound = cfg->transport == Transport::ring ? t.n - 1 : 1;
    p.input_prior = std::move(prior);
    bool ring = cfg->transport == Transport::ring;
    bool wants_rand = body == Body::triple || body == Body::value_rand;
    int n = t.n;

    p.randomness = [cfg, ring, wants_rand, deterministic, r, n](AgentId, int round) {
        RandDomain d;
        if (round != 0) return d;
        if (wants_rand) {
            // Protocol coin r_i in {1..n}; on rings each agent also draws
            // a mask for its share split.
            int masks = ring ? (cfg->body == Body::value_rand ? r : 2) : 1;
            for (int k = 1; k <= n; k++)
                for (int b = 0; b < masks; b++)
                    d.options.push_back({Payload{{"r", k}, {"mask", b}}, Rat(1, n * masks)});
        } else if (ring && !deterministic) {
            int m = cfg->body == Body::modr ? r : 2;
            for (int v = 0; v < m; v++) d.options.push_back({Payload(v), Rat(1, m)});
        }
        return d;
    };
    p.init = [cfg](const AgentCtx& ctx) {
        auto st = std::make_unique<RisState>();
        st->ctx = ctx;
        st->cfg = cfg;
        return st;
    };
    if (wants_rand)
        p.claimable_coins = [n](AgentId) {
            std::vector<Payload> out;
            for (int k = 1; k <= n; k++) out.push_back(Payload{{"r", k}, {"mask", 0}});
            return out;
        };
    p.send = ris_send;
    p.receive = ris_receive;
    p.reconstructed = [](const AgentState& s) -> std::optional<std::vector<int>> {
        const auto& st = static_cast<const RisState&>(s);
        if (!st.complete_views) return std::nullopt;
        return st.inputs_view;
    };
    p.payload_alphabet = [cfg](AgentId src, AgentId dst, int round) {
        std::vector<Payload> out;
        if (cfg->transport == Transport::complete) {
            if (round != 0) return out;
            if (cfg->body == Body::bit || cfg->body == Body::modr) {
                int m = cfg->body == Body::bit ? 2 : cfg->r;
                for (int v = 0; v < m; v++) out.push_back(Payload{{"o", src}, {"b", v}});
            } else if (cfg->body == Body::triple) {
                for (int i = 0; i < 2; i++)
                    for (int k = 1; k <= cfg->n; k++)
                        for (AgentId id : {src, static_cast<AgentId>(cfg->n)})
                            out.push_back(Payload{
                                {"o", src}, {"b", Payload{{"i", i}, {"r", k}, {"id", id}}}});
            } else {
                for (int v = 0; v < cfg->r; v++)
                    for (int k = 1; k <= cfg->n; k++)
                        out.push_back(
                            Payload{{"o", src}, {"b", Payload{{"v", v}, {"r", k}}}});
            }
            return out;
        }
        if (round > cfg->last_round()) return out;
        if (cfg->body != Body::bit && cfg->body != Body::modr) return out;
        int m = cfg->body == Body::bit ? 2 : cfg->r;
        if (dst == cfg->succ(src)) {
            AgentId origin = cfg->at(cfg->pos[src] - round);
            for (int v = 0; v < m; v++)
                out.push_back(Payload{{"o", origin}, {"d", "cw"}, {"b", v}});
        } else if (dst == cfg->pred(src)) {
            AgentId origin = cfg->at(cfg->pos[src] + round);
            for (int v = 0; v < m; v++)
                out.push_back(Payload{{"o", origin}, {"d", "ccw"}, {"b", v}});
        }
        return out;
    };
    return p;
}

Decision finish_own_input(const RisState& st) { return Decision::of(st.input()); }

Decision finish_xor(const RisState& st) {
    int x = 0;
    for (int v : st.inputs_view) x ^= v;
    return Decision::of(x);
}

Decision finish_algorithm1(const RisState& st) {
    std::vector<KnowledgeTriple> K;
    for (int a = 0; a < st.cfg->n; a++)
        K.push_back({st.inputs_view[a], st.randoms_view[a], st.ids_view[a]});
    if (validate_knowledge(K, st.cfg->n) == Validation::abort) return Decision::bot();
    std::vector<int> randoms;
    std::vector<AgentId> ids;
    for (const auto& k : K) {
        randoms.push_back(k.random);
        ids.push_back(k.id);
    }
    AgentId leader = elect_leader(randoms, ids);
    int x = 0;
    for (const auto& k : K)
        if (k.id != leader) x ^= k.input;
    return Decision::of(x);
}

Decision finish_mv_min(const RisState& st) {
    return Decision::of(*std::min_element(st.inputs_view.begin(), st.inputs_view.end()));
}

Decision finish_mv_leader(const RisState& st) {
    int n = st.cfg->n;
    for (int r : st.randoms_view)
        if (r < 1 || r > n) return Decision::bot();
    AgentId leader = elect_leader(st.randoms_view, std::vector<AgentId>(st.ctx.topo->agents));
    return Decision::of(st.inputs_view[leader]);
}

}  // namespace

ProtocolSpec make_ris_two_path(const Topology& t, ProtocolOptions opts) {
    return make_transport(t, Body::bit, 2, opts.deterministic, opts.input_prior,
                          finish_own_input, "ris");
}

ProtocolSpec make_xor_consensus(const Topology& t, ProtocolOptions opts) {
    return make_transport(t, Body::bit, 2, opts.deterministic, opts.input_prior, finish_xor,
                          "xor-consensus");
}

ProtocolSpec make_algorithm1(const Topology& t, ProtocolOptions opts) {
    return make_transport(t, Body::triple, 2, false, opts.input_prior, finish_algorithm1,
                          "algorithm1");
}

ProtocolSpec make_candidate_multivalued(const Topology& t, int r, MvRule rule,
                                        ProtocolOptions opts) {
    if (r < 3) throw Error("bad-r", "multi-valued candidates need r >= 3");
    if (rule == MvRule::min_input)
        return make_transport(t, Body::modr, r, opts.deterministic, opts.input_prior,
                              finish_mv_min, "mv-min");
    return make_transport(t, Body::value_rand, r, false, opts.input_prior, finish_mv_leader,
                          "mv-leader");
}

ProtocolSpec make_protocol_by_name(const std::string& name, const Topology& t, int r,
                                   ProtocolOptions opts) {
    if (name == "ris") return make_ris_two_path(t, opts);
    if (name == "xor-consensus") return make_xor_consensus(t, opts);
    if (name == "algorithm1") return make_algorithm1(t, opts);
    if (name == "mv-min") return make_candidate_multivalued(t, r, MvRule::min_input, opts);
    if (name == "mv-leader") return make_candidate_multivalued(t, r, MvRule::leader_input, opts);
    if (name == "toy-send-iff-one") return make_toy_send_iff_one(t);
    if (name == "toy-always-silent") return make_toy_always_silent(t);
    if (name == "toy-knower-leak") return make_toy_knower_leak(t);
    throw Error("unknown-protocol", name);
}

namespace {

struct ToyState : AgentState {
    AgentCtx ctx;
    int pings = 0;
    Decision decision;
};

std::unique_ptr<AgentState> toy_init(const AgentCtx& ctx) {
    auto st = std::make_unique<ToyState>();
    st->ctx = ctx;
    return st;
}

}  // namespace

ProtocolSpec make_toy_send_iff_one(const Topology& t) {
    ProtocolSpec p;
    p.name = "toy-send-iff-one";
    p.r = 2;
    p.rounds_bound = 2;
    p.randomness = [](AgentId, int) { return RandDomain{}; };
    p.init = toy_init;
    p.send = [](AgentState& s, int round, const Payload*) {
        auto& st = static_cast<ToyState&>(s);
        std::map<AgentId, Payload> out;
        if (round == 0 && st.ctx.input == 1)
            for (AgentId nb : st.ctx.topo->neighbors(st.ctx.id)) out[nb] = Payload{{"ping", 1}};
        if (round == 1)
            for (AgentId nb : st.ctx.topo->neighbors(st.ctx.id))
                out[nb] = Payload{{"seen", st.pings}};
        return out;
    };
    p.receive = [](AgentState& s, int round, const std::map<AgentId, LinkExperience>& in) {
        auto& st = static_cast<ToyState&>(s);
        if (round == 0) {
            for (const auto& [src, exp] : in)
                if (exp.has_value() && !is_empty_payload(*exp)) st.pings++;
            return Decision::undecided();
        }
        st.decision = Decision::of(st.ctx.input);
        return st.decision;
    };
    return p;
}

ProtocolSpec make_toy_always_silent(const Topology& t) {
    ProtocolSpec p;
    p.name = "toy-always-silent";
    p.r = 2;
    p.rounds_bound = 2;
    p.randomness = [](AgentId, int) { return RandDomain{}; };
    p.init = toy_init;
    p.send = [](AgentState&, int, const Payload*) { return std::map<AgentId, Payload>{}; };
    p.receive = [](AgentState& s, int round, const std::map<AgentId, LinkExperience>&) {
        auto& st = static_cast<ToyState&>(s);
        if (round < 1) return Decision::undecided();
        st.decision = Decision::of(st.ctx.input);
        return st.decision;
    };
    return p;
}

ProtocolSpec make_toy_knower_leak(const Topology& t) {
    ProtocolSpec p;
    p.name = "toy-knower-leak";
    p.r = 2;
    p.rounds_bound = 2;
    p.randomness = [](AgentId, int) { return RandDomain{}; };
    p.init = toy_init;
    p.send = [](AgentState& s, int round, const Payload*) {
        auto& st = static_cast<ToyState&>(s);
        std::map<AgentId, Payload> out;
        if (round == 0 && st.ctx.id == 0)
            for (AgentId nb : st.ctx.topo->neighbors(0)) out[nb] = Payload{{"x", st.ctx.input}};
        if (round == 1 && st.ctx.id == 1 && st.ctx.topo->has_edge(1, 0))
            out[0] = Payload{{"y", st.ctx.input}};
        return out;
    };
    p.receive = [](AgentState& s, int round, const std::map<AgentId, LinkExperience>&) {
        auto& st = static_cast<ToyState&>(s);
        if (round < 1) return Decision::undecided();
        st.decision = Decision::of(st.ctx.input);
        return st.decision;
    };
    return p;
}

}  // namespace rcsim

#include "rcsim/net.hpp"

#include <algorithm>
#include <queue>

#include "rcsim/error.hpp"

namespace rcsim {

std::string to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::ring: return "ring";
        case TopologyKind::complete: return "complete";
        case TopologyKind::custom: return "custom";
    }
    return "?";
}

bool Topology::has_edge(AgentId a, AgentId b) const {
    if (a > b) std::swap(a, b);
    return edges.count({a, b}) > 0;
}

void Topology::rebuild_adjacency() {
    adjacency.assign(n, {});
    for (const auto& [x, y] : edges) {
        adjacency[x].push_back(y);
        adjacency[y].push_back(x);
    }
    for (auto& nbs : adjacency) std::sort(nbs.begin(), nbs.end());
}

Topology build_topology(TopologyKind kind, int n) {
    Topology t;
    t.kind = kind;
    t.n = n;
    if (kind == TopologyKind::ring) {
        if (n < 3) throw Error("size-too-small", "ring needs n >= 3");
        for (int i = 0; i < n; i++) {
            t.agents.push_back(i);
            int j = (i + 1) % n;
            t.edges.insert({std::min(i, j), std::max(i, j)});
        }
    } else if (kind == TopologyKind::complete) {
        if (n < 2) throw Error("size-too-small", "complete graph needs n >= 2");
        for (int i = 0; i < n; i++) t.agents.push_back(i);
        for (int i = 0; i < n; i++)
            for (int j = i + 1; j < n; j++) t.edges.insert({i, j});
    } else {
        throw Error("bad-kind", "use build_custom for custom topologies");
    }
    t.rebuild_adjacency();
    return t;
}

Topology build_custom(int n, const std::vector<std::pair<int, int>>& edges) {
    Topology t;
    t.kind = TopologyKind::custom;
    t.n = n;
    for (int i = 0; i < n; i++) t.agents.push_back(i);
    for (auto [a, b] : edges) {
        if (a == b) throw Error("malformed-edge", "self-loop at agent " + std::to_string(a));
        if (a < 0 || b < 0 || a >= n || b >= n)
            throw Error("malformed-edge", "edge endpoint outside 0..n-1");
        auto e = std::make_pair(std::min(a, b), std::max(a, b));
        if (!t.edges.insert(e).second)
            throw Error("duplicate-edge",
                        "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                            ") listed twice");
    }
    t.rebuild_adjacency();
    return t;
}

namespace {

// Connectivity of the subgraph with `skip` removed (skip = -1 keeps all).
bool connected_without(const Topology& t, AgentId skip) {
    std::vector<AgentId> verts;
    for (AgentId a : t.agents)
        if (a != skip) verts.push_back(a);
    if (verts.empty()) return true;
    std::set<AgentId> seen;
    std::queue<AgentId> q;
    q.push(verts[0]);
    seen.insert(verts[0]);
    while (!q.empty()) {
        AgentId cur = q.front();
        q.pop();
        for (AgentId nb : t.neighbors(cur)) {
            if (nb == skip || seen.count(nb)) continue;
            seen.insert(nb);
            q.push(nb);
        }
    }
    return seen.size() == verts.size();
}

}  // namespace

bool check_two_vertex_connected(const Topology& t) {
    if (t.n < 3) return false;
    if (!connected_without(t, -1)) return false;
    for (AgentId a : t.agents)
        if (!connected_without(t, a)) return false;
    return true;
}

std::optional<std::vector<AgentId>> cycle_order(const Topology& t) {
    if (t.n < 3 || static_cast<int>(t.edges.size()) != t.n) return std::nullopt;
    for (AgentId a : t.agents)
        if (t.neighbors(a).size() != 2) return std::nullopt;
    std::vector<AgentId> order;
    AgentId start = t.agents.front();
    AgentId prev = start;
    AgentId cur = t.neighbors(start).front();
    order.push_back(start);
    while (cur != start) {
        order.push_back(cur);
        auto nbs = t.neighbors(cur);
        AgentId next = (nbs[0] == prev) ? nbs[1] : nbs[0];
        prev = cur;
        cur = next;
    }
    if (static_cast<int>(order.size()) != t.n) return std::nullopt;  // disconnected cycles
    return order;
}

Topology topology_from_json(const nlohmann::json& j) {
    if (j.contains("kind") && j["kind"].is_string() && j["kind"] != "custom") {
        TopologyKind k = j["kind"] == "ring" ? TopologyKind::ring : TopologyKind::complete;
        return build_topology(k, j.at("n").get<int>());
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return build_custom(j.at("n").get<int>(), edges);
}

nlohmann::json topology_to_json(const Topology& t) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : t.edges) edges.push_back({a, b});
    return {{"n", t.n}, {"kind", to_string(t.kind)}, {"edges", edges}};
}

}  // namespace rcsim

#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rcsim {

using AgentId = int;

enum class TopologyKind { ring, complete, custom };

std::string to_string(TopologyKind k);

// Undirected network over agents 0..n-1. Immutable once built; all
// protocol and analysis code shares it by const reference.
struct Topology {
    int n = 0;
    std::vector<AgentId> agents;                    // 0..n-1, ascending
    std::set<std::pair<AgentId, AgentId>> edges;    // normalized (a < b)
    TopologyKind kind = TopologyKind::custom;
    std::vector<std::vector<AgentId>> adjacency;    // per agent, ascending

    bool has_edge(AgentId a, AgentId b) const;
    const std::vector<AgentId>& neighbors(AgentId a) const { return adjacency[a]; }
    void rebuild_adjacency();
};

Topology build_topology(TopologyKind kind, int n);
Topology build_custom(int n, const std::vector<std::pair<int, int>>& edges);

// True iff n >= 3 and removing any single agent leaves the rest connected.
bool check_two_vertex_connected(const Topology& t);

// If the graph is a single simple cycle, the cyclic vertex order starting
// at the smallest id, oriented toward its smaller neighbor.
std::optional<std::vector<AgentId>> cycle_order(const Topology& t);

// { "n": int, "edges": [[a,b],...] }
Topology topology_from_json(const nlohmann::json& j);
nlohmann::json topology_to_json(const Topology& t);

}  // namespace rcsim

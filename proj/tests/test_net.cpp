#include <doctest.h>

#include "rcsim/error.hpp"
#include "rcsim/net.hpp"

using namespace rcsim;

TEST_CASE("ring construction gives the canonical cycle") {
    Topology t = build_topology(TopologyKind::ring, 3);
    CHECK(t.n == 3);
    CHECK(t.edges == std::set<std::pair<AgentId, AgentId>>{{0, 1}, {1, 2}, {0, 2}});
    CHECK_THROWS_WITH_AS(build_topology(TopologyKind::ring, 2), doctest::Contains("size-too-small"),
                         Error);
}

TEST_CASE("complete graph has n(n-1)/2 edges") {
    Topology t = build_topology(TopologyKind::complete, 4);
    CHECK(t.edges.size() == 6);
    for (int a = 0; a < 4; a++)
        for (int b = a + 1; b < 4; b++) CHECK(t.has_edge(a, b));
}

TEST_CASE("custom topologies validate their edges") {
    Topology tri = build_custom(3, {{0, 1}, {1, 2}, {2, 0}});
    CHECK(tri.kind == TopologyKind::custom);
    CHECK(tri.edges.size() == 3);

    Topology path = build_custom(4, {{0, 1}, {1, 2}, {2, 3}});
    CHECK(path.edges.size() == 3);
    CHECK_FALSE(check_two_vertex_connected(path));

    CHECK_THROWS_WITH_AS(build_custom(3, {{0, 0}}), doctest::Contains("malformed-edge"), Error);
    CHECK_THROWS_WITH_AS(build_custom(3, {{0, 1}, {1, 0}}), doctest::Contains("duplicate-edge"),
                         Error);
    CHECK_THROWS_WITH_AS(build_custom(3, {{0, 5}}), doctest::Contains("malformed-edge"), Error);
}

TEST_CASE("two-vertex-connectivity by brute-force removal") {
    CHECK(check_two_vertex_connected(build_custom(3, {{0, 1}, {1, 2}, {2, 0}})));
    CHECK_FALSE(check_two_vertex_connected(build_custom(3, {{0, 1}, {1, 2}})));
    CHECK(check_two_vertex_connected(build_topology(TopologyKind::complete, 5)));
    for (int n = 3; n <= 7; n++) {
        CHECK(check_two_vertex_connected(build_topology(TopologyKind::ring, n)));
        CHECK(check_two_vertex_connected(build_topology(TopologyKind::complete, n)));
    }
}

TEST_CASE("cycle order recovers custom cycles like the diamond") {
    Topology diamond = build_custom(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    auto order = cycle_order(diamond);
    REQUIRE(order.has_value());
    CHECK(order->size() == 4);
    CHECK((*order)[0] == 0);
    // consecutive order entries are edges, including the wrap-around
    for (int k = 0; k < 4; k++)
        CHECK(diamond.has_edge((*order)[k], (*order)[(k + 1) % 4]));

    CHECK_FALSE(cycle_order(build_topology(TopologyKind::complete, 4)).has_value());
    CHECK_FALSE(cycle_order(build_custom(4, {{0, 1}, {1, 2}, {2, 3}})).has_value());
}

TEST_CASE("topologies round-trip through JSON") {
    Topology t = topology_from_json({{"n", 4}, {"edges", {{0, 1}, {1, 2}, {2, 3}, {3, 0}}}});
    CHECK(t.n == 4);
    CHECK(t.has_edge(3, 0));
    Topology ring = topology_from_json({{"kind", "ring"}, {"n", 5}});
    CHECK(ring.kind == TopologyKind::ring);
    CHECK(topology_from_json(topology_to_json(t)).edges == t.edges);
}

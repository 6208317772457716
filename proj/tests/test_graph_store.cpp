#include <doctest.h>

#include <random>

#include "kgqa/errors.hpp"
#include "kgqa/graph_store.hpp"
#include "support.hpp"

using namespace kgqa;

namespace {

KnowledgeGraph sample() { return load_graph(testing::fixtures_dir() / "sample_graph.json"); }

}  // namespace

TEST_CASE("sample graph features and edges") {
    auto g = sample();
    CHECK(g.size() == 5);
    auto cat = get_feature(g, "1047566", "category");
    REQUIRE(cat);
    CHECK(*cat == "books");

    auto desc = get_feature(g, "1047566", "description");
    REQUIRE(desc);
    CHECK(desc->empty());

    auto color = get_feature(g, "1047566", "color");
    REQUIRE_FALSE(color);
    CHECK(color.miss() == Miss::unknown_feature);
    CHECK(get_feature(g, "nope", "title").miss() == Miss::unknown_node);

    auto nb = get_neighbours(g, "203088", "also-bought-item");
    REQUIRE(nb);
    REQUIRE(nb->size() == 1);
    CHECK((*nb)[0].value == "203010");
    CHECK(*get_degree(g, "203088", "also-bought-item") == 1);

    auto none = get_neighbours(g, "203088", "also-viewed-item");
    REQUIRE(none);
    CHECK(none->empty());
    CHECK(*get_degree(g, "330190", "also-bought-item") == 0);
    CHECK(get_degree(g, "ghost", "also-bought-item").miss() == Miss::unknown_node);
}

TEST_CASE("schema lists feature types and labels in first-seen order") {
    auto g = sample();
    CHECK(g.schema().feature_types == std::vector<std::string>{"title", "description", "price", "category"});
    CHECK(g.schema().edge_labels == std::vector<std::string>{"also-bought-item", "also-viewed-item"});
    CHECK(g.edge_count() == 7);
    CHECK(g.adjacency_key_count() == 5);
}

TEST_CASE("empty graph") {
    auto g = parse_graph(R"({"nodes": {}, "edges": {}})");
    CHECK(g.empty());
    CHECK(g.adjacency_key_count() == 0);
}

TEST_CASE("load errors") {
    CHECK_THROWS_AS(parse_graph(R"({"nodes": {"A": {"features": {}}}, "edges": {"A": {"x": ["B"]}}})"), LoadError);
    CHECK_THROWS_AS(parse_graph("{ not json"), LoadError);
    CHECK_THROWS_AS(parse_graph(R"({"nodes": {"": {"features": {}}}})"), LoadError);
    CHECK_THROWS_AS(load_graph("/nonexistent/graph.json"), LoadError);

    try {
        parse_graph(R"({"nodes": {"A": {"features": {}}}, "edges": {"A": {"x": ["B"]}}})");
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("A") != std::string::npos);
        CHECK(msg.find("x") != std::string::npos);
        CHECK(msg.find("B") != std::string::npos);
    }
}

TEST_CASE("duplicate neighbours keep first occurrence and warn") {
    auto g = parse_graph(R"({"nodes": {"A": {"features": {}}, "B": {"features": {}}, "C": {"features": {}}},
                             "edges": {"A": {"x": ["C", "B", "C", "B"]}}})");
    auto nb = get_neighbours(g, "A", "x");
    REQUIRE(nb->size() == 2);
    CHECK((*nb)[0].value == "C");
    CHECK((*nb)[1].value == "B");
    REQUIRE(g.warnings().size() == 2);
    CHECK(g.warnings()[0].find("C") != std::string::npos);
    CHECK(g.warnings()[1].find("B") != std::string::npos);
}

TEST_CASE("non-string feature values are kept as their literal text") {
    auto g = parse_graph(R"({"nodes": {"A": {"features": {"year": 1962, "price": null, "ok": true}}}})");
    CHECK(*get_feature(g, "A", "year") == "1962");
    CHECK(*get_feature(g, "A", "price") == "");
    CHECK(*get_feature(g, "A", "ok") == "true");
}

TEST_CASE("edges stay directed") {
    auto g = parse_graph(R"({"nodes": {"A": {"features": {}}, "B": {"features": {}}},
                             "edges": {"A": {"x": ["B"]}}})");
    CHECK(get_neighbours(g, "B", "x")->empty());
}

TEST_CASE("save then load reproduces the graph") {
    std::mt19937 rng(11);
    for (int i = 0; i < 10; ++i) {
        auto g = parse_graph(testing::random_graph_text(rng, 60));
        auto again = graph_from_json(graph_to_json(g));
        CHECK(graph_to_json(again) == graph_to_json(g));
    }
}

TEST_CASE("GRBENCH-shaped input is converted") {
    const char* doc = R"({
      "paper_nodes": {
        "p1": {"features": {"title": "Graph reasoning"}, "neighbors": {"author": ["a1", "a9"]}},
        "p2": {"features": {"title": "Other"}, "neighbors": {}}
      },
      "author_nodes": {
        "a1": {"features": {"name": "Ada"}, "neighbors": {"paper": ["p1"]}}
      }
    })";
    auto g = parse_graph(doc);
    CHECK(g.size() == 3);
    auto nb = get_neighbours(g, "p1", "author");
    REQUIRE(nb);
    REQUIRE(nb->size() == 1);  // a9 names no node and is dropped
    CHECK((*nb)[0].value == "a1");
    CHECK_FALSE(g.warnings().empty());
}

TEST_CASE("degree equals neighbour count and matches the raw document") {
    std::mt19937 rng(7);
    for (int round = 0; round < 20; ++round) {
        const auto text = testing::random_graph_text(rng, 120);
        const auto raw = nlohmann::json::parse(text);
        auto g = parse_graph(text);
        for (const auto& node : g.nodes()) {
            for (const auto& label : g.schema().edge_labels) {
                auto nb = get_neighbours(g, node.id.value, label);
                auto deg = get_degree(g, node.id.value, label);
                REQUIRE(nb);
                REQUIRE(deg);
                CHECK(*deg == nb->size());
                auto expected = testing::raw_neighbours(raw, node.id.value, label);
                REQUIRE(expected);
                std::vector<std::string> got;
                for (const auto& id : *nb) got.push_back(id.value);
                CHECK(got == *expected);
            }
        }
    }
}

TEST_CASE("repeat lookups are identical") {
    auto g = sample();
    auto a = get_neighbours(g, "1047566", "also-viewed-item");
    auto b = get_neighbours(g, "1047566", "also-viewed-item");
    REQUIRE(a->size() == b->size());
    CHECK(std::equal(a->begin(), a->end(), b->begin()));
}

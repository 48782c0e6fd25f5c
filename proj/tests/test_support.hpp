#pragma once

#include <netident/topology.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace netident::fixtures {

struct Instance {
    std::string name;
    NetworkTopology topo;
    SelectionSets sets;
};

inline std::vector<int> random_subset(std::mt19937_64& rng, int n) {
    std::vector<int> nodes(static_cast<std::size_t>(n));
    std::iota(nodes.begin(), nodes.end(), 1);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const int size = std::uniform_int_distribution<int>(1, n)(rng);
    nodes.resize(static_cast<std::size_t>(size));
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

/// Random network with n <= max_nodes and |E| <= max_edges, no self-loops.
inline Instance random_instance(std::mt19937_64& rng, int max_nodes = 8, int max_edges = 20) {
    const int n = std::uniform_int_distribution<int>(2, max_nodes)(rng);
    std::vector<Edge> all;
    for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= n; ++i)
            if (i != j) all.push_back({j, i});
    std::shuffle(all.begin(), all.end(), rng);
    const int cap = std::min<int>(max_edges, static_cast<int>(all.size()));
    const int count = std::uniform_int_distribution<int>(1, cap)(rng);
    all.resize(static_cast<std::size_t>(count));
    Instance inst;
    inst.topo = validate_topology(n, all);
    inst.sets = validate_selection(inst.topo, random_subset(rng, n), random_subset(rng, n));
    inst.name = "n" + std::to_string(n) + "_e" + std::to_string(count);
    return inst;
}

/// The fixed 20-instance corpus used by the property and acceptance suites.
inline std::vector<Instance> corpus(std::uint64_t seed = 20240601, int count = 20) {
    std::mt19937_64 rng(seed);
    std::vector<Instance> out;
    for (int k = 0; k < count; ++k) {
        auto inst = random_instance(rng);
        inst.name = "corpus" + std::to_string(k) + "_" + inst.name;
        out.push_back(std::move(inst));
    }
    return out;
}

inline Instance chain(std::vector<int> excited, std::vector<int> measured) {
    auto topo = validate_topology(2, std::vector<Edge>{{1, 2}});
    return {"chain", topo, validate_selection(topo, excited, measured)};
}

inline Instance two_cycle(std::vector<int> excited, std::vector<int> measured) {
    auto topo = validate_topology(2, std::vector<Edge>{{1, 2}, {2, 1}});
    return {"two_cycle", topo, validate_selection(topo, excited, measured)};
}

}  // namespace netident::fixtures

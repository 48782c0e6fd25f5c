// Sweeps every excitation/measurement allocation on a small network and prints,
// for each budget |B| + |C|, how many allocations make the whole network
// identifiable and the first one found.
//
//   demo_allocation [graph.json]
//
// Without an argument a 4-node ring with one chord is used.

#include <netident/engine.hpp>
#include <netident/report_io.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace netident;

namespace {

std::vector<int> subset(unsigned mask, int n) {
    std::vector<int> out;
    for (int v = 0; v < n; ++v)
        if (mask & (1u << v)) out.push_back(v + 1);
    return out;
}

std::string show(const std::vector<int>& s) {
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "," : "") + std::to_string(s[k]);
    return out + "}";
}

}  // namespace

int main(int argc, char** argv) {
    NetworkTopology topo;
    try {
        if (argc > 1) {
            std::ifstream in(argv[1]);
            std::stringstream text;
            text << in.rdbuf();
            topo = parse_graph(text.str()).topo;
        } else {
            topo = validate_topology(4, std::vector<Edge>{{1, 2}, {2, 3}, {3, 4}, {4, 1}, {1, 3}});
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    const int n = topo.node_count();
    if (n > 10) {
        std::cerr << "error: sweep is exponential; use n <= 10\n";
        return 1;
    }

    std::cout << "n = " << n << ", |E| = " << topo.edge_count() << '\n';
    std::vector<int> count(2 * n + 1, 0), total(2 * n + 1, 0);
    std::vector<std::string> first(2 * n + 1);
    AnalysisParams params;
    params.nsamples = 2;
    for (unsigned bm = 1; bm < (1u << n); ++bm) {
        for (unsigned cm = 1; cm < (1u << n); ++cm) {
            const auto b = subset(bm, n);
            const auto c = subset(cm, n);
            const auto report = analyze(topo, validate_selection(topo, b, c), params);
            const std::size_t budget = b.size() + c.size();
            ++total[budget];
            if (report.network) {
                if (count[budget]++ == 0) first[budget] = "B=" + show(b) + " C=" + show(c);
            }
        }
    }
    std::cout << "budget  identifiable/total  example\n";
    for (int k = 2; k <= 2 * n; ++k) {
        std::cout << "  " << k << "\t" << count[k] << "/" << total[k] << "\t\t" << first[k] << '\n';
    }
}

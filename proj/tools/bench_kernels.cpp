#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include "kgqa/graph_store.hpp"
#include "kgqa/retrieval.hpp"

namespace {

kgqa::KnowledgeGraph synthetic_graph(std::size_t nodes, std::size_t vocab, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
    std::uniform_int_distribution<int> len(3, 12);
    kgqa::GraphBuilder b;
    for (std::size_t i = 0; i < nodes; ++i) {
        std::string title;
        for (int k = len(rng); k > 0; --k) title += "w" + std::to_string(word(rng)) + ' ';
        b.add_node("n" + std::to_string(i), {{"title", title}});
    }
    return std::move(b).finish();
}

template <class F>
double time_ms(F&& f, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) f();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP retrieval scoring over a synthetic graph", "kgqa_bench"};
    std::size_t nodes = 200000, vocab = 20000, queries = 20;
    int threads = 0, reps = 3;
    std::uint64_t seed = 7;
    app.add_option("--nodes", nodes, "Indexed nodes");
    app.add_option("--vocab", vocab, "Distinct words");
    app.add_option("--queries", queries, "Queries per repetition");
    app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
    app.add_option("--reps", reps, "Repetitions");
    app.add_option("--seed", seed, "Generator seed");
    CLI11_PARSE(app, argc, argv);

    std::mt19937_64 rng(seed);
    const auto g = synthetic_graph(nodes, vocab, rng);
    const std::vector<std::string> fields{"title"};
    const auto idx = kgqa::build_index(g, fields);

    std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
    std::vector<std::vector<std::string>> qs(queries);
    for (auto& q : qs) {
        for (int k = 0; k < 3; ++k) q.push_back("w" + std::to_string(word(rng)));
    }

    bool agree = true;
    for (const auto& q : qs) agree = agree && kgqa::score_all_serial(idx, q) == kgqa::score_all_parallel(idx, q, threads);

    const double serial = time_ms([&] { for (const auto& q : qs) kgqa::score_all_serial(idx, q); }, reps);
    const double parallel = time_ms([&] { for (const auto& q : qs) kgqa::score_all_parallel(idx, q, threads); }, reps);

    std::printf("nodes=%zu queries=%zu threads=%d\n", nodes, queries, threads > 0 ? threads : omp_get_max_threads());
    std::printf("serial   %10.2f ms\n", serial);
    std::printf("parallel %10.2f ms  (speedup %.2fx)\n", parallel, serial / parallel);
    std::printf("results agree: %s\n", agree ? "yes" : "NO");
    return agree ? 0 : 1;
}

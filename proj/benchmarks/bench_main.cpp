#include <benchmark/benchmark.h>

#include <vector>

#include "defersim/nn.hpp"
#include "defersim/pipeline.hpp"
#include "defersim/rng.hpp"
#include "defersim/simplex.hpp"
#include "defersim/types.hpp"

namespace {

using namespace defersim;

void bench_network_forward(benchmark::State& state) {
    Network net({25, 64, 32, 16, 3}, Head::softmax);
    Rng rng(7);
    net.init_uniform(rng);
    std::vector<double> x(25);
    for (double& v : x) v = rng.normal();
    for (auto _ : state) {
        auto out = net.forward(x);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bench_network_forward);

void bench_network_backward(benchmark::State& state) {
    Network net({25, 64, 32, 16, 3}, Head::softmax);
    Rng rng(7);
    net.init_uniform(rng);
    std::vector<double> x(25);
    for (double& v : x) v = rng.normal();
    std::vector<double> dl = {0.4, -0.7, 0.3};
    Network::Trace trace;
    net.forward(x, trace);
    for (auto _ : state) {
        auto grads = net.backward(trace, dl);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(bench_network_backward);

void bench_project_simplex(benchmark::State& state) {
    const long n = state.range(0);
    Rng rng(11);
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = rng.normal();
    for (auto _ : state) {
        auto w = project_simplex(v);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(bench_project_simplex)->Arg(8)->Arg(41)->Arg(256);

void bench_aggregate_committee(benchmark::State& state) {
    const size_t m = 41;
    Rng rng(13);
    std::vector<double> w(m, 1.0 / m);
    SimplexVector d = SimplexVector::trusted(w);
    PredictionVector y;
    y.values.assign(m, 1.0);
    y.values.back() = 0.62;
    for (auto _ : state) {
        int vote = aggregate_committee(d, y, 5, rng);
        benchmark::DoNotOptimize(vote);
    }
}
BENCHMARK(bench_aggregate_committee);

}  // namespace

BENCHMARK_MAIN();

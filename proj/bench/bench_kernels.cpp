// Serial reference vs OpenMP kernel timings on a synthetic tensor.
// Arg(0) is the serial version, Arg(1) the parallel one.

#include <random>

#include <benchmark/benchmark.h>

#include "ketra/kernels.hpp"

using namespace ketra;
namespace k = ketra::kernels;

namespace {

constexpr std::size_t kEntities = 300, kRelations = 40;
constexpr Eigen::Index kRank = 20;

struct Fixture {
  SparseTensor3 x;
  Eigen::MatrixXd a, g;
  std::vector<Eigen::MatrixXd> r;
  std::vector<std::vector<Index>> sets;
  std::vector<Triple> items;

  static SparseTensor3 make_tensor(std::mt19937_64& rng) {
    std::bernoulli_distribution on(0.05);
    std::vector<Triple> t;
    for (Index kk = 0; kk < kRelations; ++kk)
      for (Index s = 0; s < kEntities; ++s)
        for (Index o = 0; o < kEntities; ++o)
          if (on(rng)) t.push_back({s, kk, o});
    return SparseTensor3(kEntities, kRelations, std::move(t));
  }

  explicit Fixture(std::mt19937_64 rng = std::mt19937_64(7)) : x(make_tensor(rng)) {
    a = Eigen::MatrixXd::Random(kEntities, kRank);
    g = a.transpose() * a;
    for (std::size_t i = 0; i < kRelations; ++i) r.push_back(Eigen::MatrixXd::Random(kRank, kRank));
    std::uniform_int_distribution<Index> ent(0, kEntities - 1), rel(0, kRelations - 1);
    for (int i = 0; i < 200; ++i) {
      std::vector<Index> s;
      for (Index e = 0; e < kEntities; ++e)
        if (ent(rng) % 4 == 0) s.push_back(e);
      sets.push_back(std::move(s));
    }
    for (int i = 0; i < 20000; ++i) items.push_back({ent(rng), rel(rng), ent(rng)});
  }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

void BM_slice_product_sum(benchmark::State& st) {
  const auto& f = fx();
  for (auto _ : st) {
    auto m = st.range(0) ? k::slice_product_sum(f.x, f.a, f.r, k::Side::subject)
                         : k::slice_product_sum_serial(f.x, f.a, f.r, k::Side::subject);
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_sandwich_sum(benchmark::State& st) {
  const auto& f = fx();
  for (auto _ : st) {
    auto m = st.range(0) ? k::sandwich_sum(f.r, f.g, false) : k::sandwich_sum_serial(f.r, f.g, false);
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_projected_slices(benchmark::State& st) {
  const auto& f = fx();
  for (auto _ : st) {
    auto v = st.range(0) ? k::projected_slices(f.x, f.a, f.a) : k::projected_slices_serial(f.x, f.a, f.a);
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_reconstruction_norm(benchmark::State& st) {
  const auto& f = fx();
  for (auto _ : st) {
    double v = st.range(0) ? k::reconstruction_norm(f.r, f.g, f.g) : k::reconstruction_norm_serial(f.r, f.g, f.g);
    benchmark::DoNotOptimize(v);
  }
}

void BM_score_batch(benchmark::State& st) {
  const auto& f = fx();
  for (auto _ : st) {
    auto v = st.range(0) ? k::score_batch(f.a, f.r, f.a, f.items) : k::score_batch_serial(f.a, f.r, f.a, f.items);
    benchmark::DoNotOptimize(v.data());
  }
}

void BM_jaccard_matrix(benchmark::State& st) {
  const auto& f = fx();
  const k::EntitySets bits(f.sets, kEntities);
  for (auto _ : st) {
    auto m = st.range(0) ? k::jaccard_matrix(bits, bits) : k::jaccard_matrix_serial(f.sets, f.sets);
    benchmark::DoNotOptimize(m.data());
  }
}

}  // namespace

BENCHMARK(BM_slice_product_sum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sandwich_sum)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_projected_slices)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_reconstruction_norm)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_score_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_jaccard_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

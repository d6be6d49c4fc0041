#include <benchmark/benchmark.h>

#include "taskmix/data_io.hpp"
#include "taskmix/vi.hpp"

namespace {

using namespace taskmix;

struct Workload {
  MultitaskDataset data;
  Hyperparameters hyper;
  VariationalState state;
};

// 50 tasks of 20 features with 20 rows each, fit at generous truncations;
// the state is warmed for one cycle so updates run at a realistic
// operating point.
const Workload& medium_workload() {
  static const Workload workload = [] {
    Workload w;
    GroupsParams params;
    params.n_groups = 5;
    params.tasks_per_group = 10;
    params.feature_dim = 20;
    params.train_per_task = 20;
    params.test_per_task = 1;
    w.data = gen_synthetic_groups_regression(0, params).train;
    w.hyper.truncation_f = 20;
    w.hyper.truncation_k = 10;
    w.hyper.seed = 0;
    w.state = init_state(w.data, w.hyper);
    for (Block block : {Block::gamma, Block::z, Block::rho, Block::b,
                        Block::s, Block::lambda, Block::mu}) {
      apply_block(w.state, w.data, w.hyper, block);
    }
    return w;
  }();
  return workload;
}

void bm_elbo(benchmark::State& bench) {
  const Workload& w = medium_workload();
  VariationalState state = w.state;
  for (auto _ : bench) {
    benchmark::DoNotOptimize(elbo(state, w.data, w.hyper));
  }
}
BENCHMARK(bm_elbo);

template <Block block>
void bm_block(benchmark::State& bench) {
  const Workload& w = medium_workload();
  VariationalState state = w.state;
  for (auto _ : bench) {
    benchmark::DoNotOptimize(apply_block(state, w.data, w.hyper, block));
  }
}
BENCHMARK(bm_block<Block::z>)->Name("bm_block_z");
BENCHMARK(bm_block<Block::b>)->Name("bm_block_b");
BENCHMARK(bm_block<Block::s>)->Name("bm_block_s");
BENCHMARK(bm_block<Block::lambda>)->Name("bm_block_lambda");
BENCHMARK(bm_block<Block::mu>)->Name("bm_block_mu");
BENCHMARK(bm_block<Block::theta>)->Name("bm_block_theta");

void bm_fit_small(benchmark::State& bench) {
  GroupsParams params;
  params.n_groups = 2;
  params.tasks_per_group = 5;
  params.feature_dim = 8;
  params.train_per_task = 12;
  params.test_per_task = 1;
  params.subspace_rank = 2;
  const MultitaskDataset data =
      gen_synthetic_groups_regression(0, params).train;
  Hyperparameters h;
  h.truncation_f = 5;
  h.truncation_k = 2;
  h.outer_iters = 1;
  for (auto _ : bench) {
    benchmark::DoNotOptimize(fit(data, h));
  }
}
BENCHMARK(bm_fit_small);

}  // namespace

BENCHMARK_MAIN();

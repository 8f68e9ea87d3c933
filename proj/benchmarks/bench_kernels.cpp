// Serial-reference vs OpenMP kernels on the synthetic world. The pairs run
// on identical inputs so the reported ratio is the parallel speedup.

#include <benchmark/benchmark.h>

#include <map>
#include <string>
#include <vector>

#include "support/synthetic.hpp"
#include "zsst/mock_backend.hpp"
#include "zsst/serial_ref.hpp"

using namespace zsst;

namespace {

const synth::World& world_of(std::int64_t n) {
  static std::map<std::int64_t, synth::World> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, synth::make_world(1, static_cast<std::size_t>(n), 0))
             .first;
  }
  return it->second;
}

const HypothesisTemplate& tmpl() {
  static const HypothesisTemplate t("This example is [].");
  return t;
}

struct MaskInputs {
  std::vector<std::string> texts;
  std::vector<std::string> names;
};

MaskInputs mask_inputs(const synth::World& world) {
  MaskInputs inputs;
  for (std::size_t i = 0; i < world.unlabeled.size(); ++i) {
    inputs.texts.push_back(world.unlabeled.examples[i].text);
    inputs.names.push_back(world.classes.name(i % world.classes.size()));
  }
  return inputs;
}

void bm_score_matrix_serial(benchmark::State& state) {
  const synth::World& world = world_of(state.range(0));
  MockBackend backend(world.mock_config());
  for (auto _ : state) {
    const ScoreMatrix m = serial_ref::build_score_matrix(
        backend, backend.base_handle(), world.unlabeled.examples,
        world.classes, tmpl());
    benchmark::DoNotOptimize(m.raw().data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_score_matrix_parallel(benchmark::State& state) {
  const synth::World& world = world_of(state.range(0));
  MockBackend backend(world.mock_config());
  for (auto _ : state) {
    const ScoreMatrix m = build_score_matrix(
        backend, backend.base_handle(), world.unlabeled.examples,
        world.classes, tmpl());
    benchmark::DoNotOptimize(m.raw().data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_mask_batch_serial(benchmark::State& state) {
  const synth::World& world = world_of(state.range(0));
  Masker masker(*world.store, "<unk>");
  masker.prepare(world.classes);
  const MaskInputs inputs = mask_inputs(world);
  for (auto _ : state) {
    const std::vector<MaskResult> r =
        serial_ref::mask_batch(masker, inputs.texts, inputs.names);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_mask_batch_parallel(benchmark::State& state) {
  const synth::World& world = world_of(state.range(0));
  Masker masker(*world.store, "<unk>");
  masker.prepare(world.classes);
  const MaskInputs inputs = mask_inputs(world);
  for (auto _ : state) {
    const std::vector<MaskResult> r =
        mask_batch(masker, inputs.texts, inputs.names);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_heuristic_serial(benchmark::State& state) {
  const synth::World& world = world_of(state.range(0));
  for (auto _ : state) {
    const HeuristicScores s = serial_ref::heuristic_score_matrix(
        world.unlabeled.examples, world.classes, *world.store);
    benchmark::DoNotOptimize(s.scores.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void bm_heuristic_parallel(benchmark::State& state) {
  const synth::World& world = world_of(state.range(0));
  for (auto _ : state) {
    const HeuristicScores s = heuristic_score_matrix(
        world.unlabeled.examples, world.classes, *world.store);
    benchmark::DoNotOptimize(s.scores.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(bm_score_matrix_serial)->Arg(256)->Arg(1024);
BENCHMARK(bm_score_matrix_parallel)->Arg(256)->Arg(1024);
BENCHMARK(bm_mask_batch_serial)->Arg(256)->Arg(1024);
BENCHMARK(bm_mask_batch_parallel)->Arg(256)->Arg(1024);
BENCHMARK(bm_heuristic_serial)->Arg(256)->Arg(1024);
BENCHMARK(bm_heuristic_parallel)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();

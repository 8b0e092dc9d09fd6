// Serial reference vs OpenMP version of each data-parallel kernel.

#include <benchmark/benchmark.h>

#include "hoigen/core/kinematics.hpp"
#include "hoigen/diffusion/trainer.hpp"
#include "hoigen/geometry/bps.hpp"
#include "hoigen/geometry/mesh.hpp"
#include "hoigen/keyaction/keyaction.hpp"
#include "hoigen/metrics/metrics.hpp"
#include "hoigen/synth/carry.hpp"
#include "hoigen/tracking/tracking.hpp"
#include "support/fixtures.hpp"

using namespace hoigen;

namespace {

const geometry::TriangleMesh& sphere() {
  static const auto m = geometry::make_icosphere(0.3, 3);
  return m;
}

const geometry::BasisPointSet& basis() {
  static const auto b = geometry::sample_basis_points(1, geometry::kBasisPointCount, 0.6);
  return b;
}

template <bool Parallel>
void encode_bps(benchmark::State& st) {
  for (auto _ : st) {
    auto f = Parallel ? geometry::encode_bps(sphere(), basis()) : geometry::encode_bps_serial(sphere(), basis());
    benchmark::DoNotOptimize(f.vectors.data());
  }
}

template <bool Parallel>
void signed_distances(benchmark::State& st) {
  const auto& pts = basis().points;
  for (auto _ : st) {
    auto d = Parallel ? geometry::signed_distances(sphere(), pts) : geometry::signed_distances_serial(sphere(), pts);
    benchmark::DoNotOptimize(d.data());
  }
}

const std::vector<io::MotionBundle>& corpus() {
  static const auto c = [] {
    Rng rng(2);
    std::vector<io::MotionBundle> v;
    for (int i = 0; i < 64; ++i) v.push_back(test::random_bundle(rng, 120, 8, true));
    return v;
  }();
  return c;
}

template <bool Parallel>
void extract_corpus(benchmark::State& st) {
  keyaction::ExtractionOptions opt;
  opt.epsilon = 0.02;
  opt.weights = keyaction::JointWeights::defaults(corpus().front().skeleton);
  for (auto _ : st) {
    auto k = Parallel ? keyaction::extract_corpus(corpus(), opt) : keyaction::extract_corpus_serial(corpus(), opt);
    benchmark::DoNotOptimize(k.data());
  }
}

template <bool Parallel>
void batch_loss(benchmark::State& st) {
  auto cfg = test::small_denoiser_config();
  cfg.hidden = 64;
  cfg.mlp = 128;
  const auto params = diffusion::DenoiserParams::initialize(cfg, 3);
  const auto schedule = diffusion::build_schedule(100);
  Rng rng(4);
  std::vector<diffusion::BatchItem> items;
  for (int i = 0; i < 32; ++i)
    items.push_back({test::random_example(cfg, rng), 1 + static_cast<int>(rng.below(100)),
                     test::gaussian_matrix(rng, cfg.layout.slots, cfg.layout.feature_dim())});
  for (auto _ : st) {
    auto r = Parallel ? diffusion::batch_loss(params, items, schedule)
                      : diffusion::batch_loss_serial(params, items, schedule);
    benchmark::DoNotOptimize(r.loss);
  }
}

const std::vector<tracking::RolloutReference>& references() {
  static const auto refs = [] {
    std::vector<tracking::RolloutReference> v;
    for (int i = 0; i < 16; ++i) {
      const auto seq = synth::generate_carry_sequence(synth::SynthConfig{}, i);
      const auto& b = seq.file.bundle;
      v.push_back({b.skeleton, relative_to_global(b.skeleton, b.motion), *b.object, *b.contacts, seq.mesh});
    }
    return v;
  }();
  return refs;
}

template <bool Parallel>
void oracle_rollouts(benchmark::State& st) {
  tracking::NoiseModel noise;
  noise.position_sigma = 0.01;
  for (auto _ : st) {
    auto logs = Parallel ? tracking::oracle_rollouts(references(), noise, 1, {}, {})
                         : tracking::oracle_rollouts_serial(references(), noise, 1, {}, {});
    benchmark::DoNotOptimize(logs.data());
  }
}

template <bool Parallel>
void hand_penetration(benchmark::State& st) {
  const auto& r = references().front();
  for (auto _ : st) {
    const double p = Parallel ? metrics::hand_penetration(r.human, r.skeleton, r.object, r.mesh)
                              : metrics::hand_penetration_serial(r.human, r.skeleton, r.object, r.mesh);
    benchmark::DoNotOptimize(p);
  }
}

}  // namespace

BENCHMARK(encode_bps<false>)->Name("encode_bps/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(encode_bps<true>)->Name("encode_bps/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(signed_distances<false>)->Name("signed_distances/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(signed_distances<true>)->Name("signed_distances/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(extract_corpus<false>)->Name("extract_corpus/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(extract_corpus<true>)->Name("extract_corpus/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(batch_loss<false>)->Name("batch_loss/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(batch_loss<true>)->Name("batch_loss/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(oracle_rollouts<false>)->Name("oracle_rollouts/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(oracle_rollouts<true>)->Name("oracle_rollouts/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(hand_penetration<false>)->Name("hand_penetration/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(hand_penetration<true>)->Name("hand_penetration/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pada/checkpoint.hpp"
#include "pada/dataset.hpp"
#include "pada/error.hpp"
#include "pada/experiment.hpp"
#include "pada/file_util.hpp"
#include "pada/mask_metrics.hpp"
#include "pada/pruner.hpp"
#include "pada/schedule.hpp"
#include "pada/strategies.hpp"
#include "pada/trainer.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace pada;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Mask single_mask(std::vector<std::uint8_t> bits) {
  Mask m;
  const auto n = bits.size();
  m.tensors.push_back({"w", {n}, std::move(bits)});
  return m;
}

ParameterSet four(std::vector<float> v) {
  ParameterSet ps;
  ps.add(make_tensor("encoder.0.weight", {2, 2}, std::move(v)));
  return ps;
}

// ---------------------------------------------------------------------------

Outcome mask_metric_example() {
  const auto a = single_mask({1, 0, 1, 0});
  const auto b = single_mask({1, 1, 0, 0});
  const double i = iou(a, b);
  const double m = mma(a, b);
  return {std::fabs(i - 1.0 / 3.0) <= 1e-12 && m == 0.5, fmt("iou=%.17g mma=%.17g", i, m)};
}

Outcome ump_oracle_trials() {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<std::size_t> total(1, 10000);
  std::uniform_real_distribution<double> rate(0.0, 100.0);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = total(rng);
    const std::size_t ntensors = 1 + rng() % 4;
    ParameterSet ps;
    std::size_t left = d;
    for (std::size_t t = 0; t < ntensors && left > 0; ++t) {
      const std::size_t n = t + 1 == ntensors ? left : 1 + rng() % left;
      left -= n;
      std::vector<float> v(n);
      for (auto& x : v) {
        x = normal(rng);
        if (rng() % 8 == 0) x = std::round(x * 4.0f) / 4.0f;  // exact ties
      }
      ps.add(make_tensor("t" + std::to_string(t), {n}, std::move(v), true));
      if (rng() % 3 == 0) ps.add(make_tensor("b" + std::to_string(t), {2}, {0.0f, 0.0f}, false));
    }
    const double r = rate(rng);
    const auto bits = pada::testing::flatten(compute_ump_mask(ps, PruneRate(r)));
    std::size_t zeros = 0;
    for (auto b : bits) zeros += (b == 0);
    const auto expected_zeros = static_cast<std::size_t>(std::floor(r / 100.0 * static_cast<double>(d)));
    if (bits != pada::testing::ump_oracle(ps, r) || zeros != expected_zeros) ++mismatches;
  }
  return {mismatches == 0, fmt("1000 trials, %zu mismatches", mismatches)};
}

Outcome regrowth() {
  const ModelArch arch = ModelArch{16, {32, 32}, 0, Activation::tanh, HeadKind::classification}
                             .with_classification_head(4);
  const auto ps = init_model(arch, 5);
  const auto pruned = apply_zeroing(ps, compute_ump_mask(ps, PruneRate(40)));
  DomainShiftSpec spec;
  const auto batch = full_batch(sample_labeled(5, spec, 64, Domain::target, 9));
  const auto lg = loss_and_grads(arch, pruned, batch, LossKind::cross_entropy);
  const auto next = sgd_step(pruned, lg.grads, 0.05);
  std::size_t regrown = 0;
  for (std::size_t t = 0; t < next.size(); ++t) {
    if (!next[t].prunable) continue;
    for (std::size_t e = 0; e < next[t].size(); ++e) {
      regrown += (pruned[t].data[e] == 0.0f && next[t].data[e] != 0.0f);
    }
  }
  const double before = sparsity(pruned);
  const double after = sparsity(next);
  return {after < before && regrown > 0,
          fmt("sparsity %.4f -> %.6f, %zu zeroed weights regrown", before, after, regrown)};
}

Outcome schedule_timing() {
  const auto cfg = default_experiment_config();
  const std::uint64_t seed = cfg.seeds.front();
  const auto task = gen_domain_shift(seed, cfg.task);
  const auto pretrained = build_pretrained(cfg, task, seed);
  const ModelArch arch = cfg.target_arch();
  TrainConfig tc;
  tc.learning_rate = cfg.target.learning_rate;
  tc.batch_size = cfg.target.batch_size;
  tc.seed = target_seed(seed);

  bool ok = true;
  std::string detail;
  for (Frequency f : {Frequency::dynamic_iterative, Frequency::iterative, Frequency::once}) {
    const auto sched = preset_schedule(ModelSize::large, f, 10000, 1000);
    StrategySpec spec;
    spec.rate = sched.rates.front();
    const auto r = run_pada(pretrained, spec, sched, task.target_labeled, arch, tc);
    std::vector<std::size_t> at;
    for (const auto& e : r.log.events) at.push_back(e.update);
    std::vector<std::size_t> expected{0};
    if (f != Frequency::once) expected = {0, 1000, 2000};
    ok = ok && at == expected && r.log.total_updates == 10000;
    detail += std::string(to_string(f)) + " events {";
    for (std::size_t i = 0; i < at.size(); ++i) detail += (i ? "," : "") + std::to_string(at[i]);
    detail += "} end " + std::to_string(r.log.total_updates) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome schedule_validation() {
  const auto rejected = [](Frequency f, std::vector<double> rates) {
    PruneSchedule s;
    s.freq = f;
    for (double r : rates) s.rates.emplace_back(r);
    s.total_updates = 10000;
    s.interval = 1000;
    try {
      validate(s);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::validation;
    }
    return false;
  };
  const bool a = rejected(Frequency::dynamic_iterative, {30, 30, 10});
  const bool b = rejected(Frequency::iterative, {30, 25, 20});
  bool c = true;
  try {
    const auto base = preset_schedule(ModelSize::base, Frequency::dynamic_iterative, 10000, 1000);
    validate(base);
    c = base.rates.size() == 4 && base.rates[0].percent() == 30 && base.rates[1].percent() == 25 &&
        base.rates[2].percent() == 20 && base.rates[3].percent() == 10;
  } catch (const Error&) {
    c = false;
  }
  return {a && b && c, fmt("Dynamic[30,30,10] rejected=%d Iterative[30,25,20] rejected=%d "
                           "BASE Dynamic[30,25,20,10] accepted=%d", a, b, c)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(77);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  double worst = 0.0;
  std::size_t coords = 0;
  for (auto kind : {LossKind::cross_entropy, LossKind::mse_reconstruction}) {
    ModelArch arch{10, {12, 8}, 0, Activation::tanh, HeadKind::classification};
    arch = kind == LossKind::cross_entropy ? arch.with_classification_head(4) : arch.with_reconstruction_head();
    auto ps = init_model(arch, 3);
    ps = apply_zeroing(ps, compute_ump_mask(ps, PruneRate(40)));
    Batch batch;
    batch.inputs = Matrix(8, arch.input_dim);
    for (auto& v : batch.inputs.values) v = normal(rng);
    batch.targets = Matrix(8, arch.output_dim);
    for (auto& v : batch.targets.values) v = normal(rng);
    for (std::size_t r = 0; r < 8; ++r) batch.labels.push_back(static_cast<std::uint32_t>(rng() % 4));

    const auto wide = widen(ps);
    const auto analytic = loss_and_grads_wide(arch, wide, batch, kind);
    std::vector<std::pair<std::size_t, std::size_t>> picks;
    for (int i = 0; i < 120; ++i) {
      const std::size_t t = rng() % ps.size();
      picks.emplace_back(t, rng() % ps[t].size());
    }
    std::size_t zeroed = 0;
    for (std::size_t t = 0; t < ps.size() && zeroed < 40; ++t) {
      if (!ps[t].prunable) continue;
      for (std::size_t e = 0; e < ps[t].size() && zeroed < 40; ++e) {
        if (ps[t].data[e] == 0.0f) {
          picks.emplace_back(t, e);
          ++zeroed;
        }
      }
    }
    for (const auto& [t, e] : picks) {
      const double num = pada::testing::numeric_grad(arch, wide, batch, kind, t, e, 1e-4);
      worst = std::max(worst, pada::testing::relative_error(analytic.grads[t][e], num));
    }
    coords += picks.size();
  }
  return {worst <= 1e-4, fmt("%zu coordinates over both losses (incl. zeroed), max rel err %.3g", coords, worst)};
}

Outcome strategy_semantics() {
  // TAW with 0 updates equals TAG.
  DomainShiftSpec spec;
  const auto task = gen_domain_shift(2, spec);
  const ModelArch arch = ModelArch{spec.input_dim, {32, 32}, 0, Activation::tanh, HeadKind::classification}
                             .with_classification_head(spec.classes);
  const auto pretrained = init_body(arch, 4);
  TrainConfig cfg;
  cfg.updates = 0;
  cfg.seed = 6;
  const bool taw_tag =
      taw_mask(pretrained, task.target_labeled, PruneRate(40), arch, cfg).tensors ==
      tag_mask(pretrained, PruneRate(40)).tensors;

  // CD-TAW mask unchanged by scaling the pretrained values.
  const auto donor = init_body(arch, 8);
  auto scaled = pretrained;
  for (std::size_t t = 0; t < scaled.size(); ++t) {
    for (auto& v : scaled[t].data) v *= 3.5f;
  }
  const bool invariant = cdtaw_mask(pretrained, donor, PruneRate(40)) == cdtaw_mask(scaled, donor, PruneRate(40));

  // 4-element fixture: zeroing lands on the pretrained values.
  StrategySpec s;
  s.kind = StrategyKind::cdtaw;
  s.rate = PruneRate(25);
  s.donor = four({9, 0.1f, 8, 7});
  const auto init = initial_model(four({1, 2, 3, 4}), s);
  const bool fixture = init.model[0].data == std::vector<float>{1, 0, 3, 4};

  return {taw_tag && invariant && fixture,
          fmt("TAW(0 updates)==TAG %d, CD-TAW scale-invariant %d, fixture [1,0,3,4] %d", taw_tag, invariant,
              fixture)};
}

std::vector<std::uint8_t> bytes(const fs::path& p) { return read_file_bytes(p); }

Outcome determinism(const fs::path& work) {
  auto cfg = default_experiment_config();
  cfg.seeds = {1};
  CommandOptions a;
  a.out_dir = work / "det_a";
  a.force = true;
  CommandOptions b = a;
  b.out_dir = work / "det_b";
  cmd_run(cfg, a);
  cmd_run(cfg, b);
  std::size_t compared = 0;
  bool same = bytes(a.out_dir / "table.csv") == bytes(b.out_dir / "table.csv") &&
              bytes(a.out_dir / "table.json") == bytes(b.out_dir / "table.json");
  for (const auto& entry : fs::directory_iterator(a.out_dir / "models")) {
    same = same && bytes(entry.path()) == bytes(b.out_dir / "models" / entry.path().filename());
    ++compared;
  }
  return {same && compared == 10, fmt("tables and %zu final checkpoints byte-identical: %d", compared, same)};
}

Outcome end_to_end(const fs::path& work) {
  auto cfg = default_experiment_config();
  CommandOptions opts;
  opts.out_dir = work / "e2e";
  opts.force = true;
  const auto table = cmd_run(cfg, opts);
  const auto* dft = table.find("DFT", "-");
  const auto* cd = table.find("CD-TAW", "Dynamic");
  const auto* taw = table.find("TAW", "Dynamic");
  if (!dft || !cd || !taw) return {false, "missing table rows"};
  std::printf("  mean target error over %zu seeds:\n", table.seeds.size());
  for (const auto& r : table.rows) {
    std::printf("    %-7s %-10s %.4f\n", r.strategy.c_str(), r.frequency.c_str(), r.mean_error);
  }
  const bool ordering = cd->mean_error < taw->mean_error && taw->mean_error <= dft->mean_error;
  std::printf("  ordering CD-TAW < TAW <= DFT (Dynamic, reported only): %s\n", ordering ? "holds" : "does not hold");
  const double bound = dft->mean_error + 0.005;
  return {table.seeds.size() == 10 && cd->mean_error <= bound,
          fmt("CD-TAW(Dynamic) %.4f <= DFT %.4f + 0.005", cd->mean_error, dft->mean_error)};
}

Outcome round_trip(const fs::path& work) {
  std::mt19937_64 rng(99);
  std::size_t bad = 0;
  std::size_t subnormals = 0;
  for (int i = 0; i < 100; ++i) {
    auto ps = pada::testing::random_parameter_set(rng);
    ps.set_role(static_cast<Role>(i % 4));
    for (std::size_t t = 0; t < ps.size(); ++t) {
      for (float v : ps[t].data) subnormals += (v != 0.0f && std::fpclassify(v) == FP_SUBNORMAL);
    }
    const fs::path cp = work / ("rt_" + std::to_string(i) + ".pada");
    save_checkpoint(ps, cp);
    if (!(load_checkpoint(cp) == ps)) ++bad;

    Mask m = full_mask(ps, static_cast<MaskSource>(i % 4));
    m.rate = static_cast<double>(i) + 0.5;
    for (auto& mt : m.tensors) {
      for (auto& b : mt.bits) b = static_cast<std::uint8_t>(rng() & 1u);
    }
    const fs::path mp = work / ("rt_" + std::to_string(i) + ".padm");
    save_mask(m, mp);
    if (!(load_mask(mp) == m)) ++bad;
  }
  return {bad == 0 && subnormals > 0,
          fmt("100 parameter sets + 100 masks, %zu mismatches, %zu subnormal values", bad, subnormals)};
}

}  // namespace

int main() {
  pada::testing::TempDir work;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"mask-metric exactness", mask_metric_example},
      {"UMP oracle equivalence", ump_oracle_trials},
      {"regrowth after zeroing", regrowth},
      {"schedule timing", schedule_timing},
      {"schedule validation", schedule_validation},
      {"gradient check", gradient_check},
      {"strategy semantics", strategy_semantics},
      {"determinism", [&] { return determinism(work.path()); }},
      {"end-to-end non-inferiority", [&] { return end_to_end(work.path()); }},
      {"checkpoint/mask round trip", [&] { return round_trip(work.path()); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

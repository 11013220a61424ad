#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pada/dataset.hpp"
#include "pada/error.hpp"
#include "pada/strategies.hpp"

using namespace pada;
using pada::testing::flatten;

namespace {

ParameterSet fixture(std::vector<float> values) {
  ParameterSet ps;
  ps.add(make_tensor("encoder.0.weight", {2, 2}, std::move(values)));
  ps.add(make_tensor("encoder.0.bias", {2}, {0.5f, -0.5f}));
  return ps;
}

struct SmallTask {
  DomainShiftSpec spec;
  DomainShiftTask task;
  ModelArch arch;
  ParameterSet pretrained;
  TrainConfig cfg;
};

SmallTask small_task() {
  SmallTask t;
  t.spec.input_dim = 6;
  t.spec.labeled_source = 500;
  t.task = gen_domain_shift(2, t.spec);
  t.arch = ModelArch{t.spec.input_dim, {8, 8}, 0, Activation::tanh, HeadKind::classification}
               .with_classification_head(t.spec.classes);
  t.pretrained = init_body(t.arch, 3);
  t.cfg.seed = 4;
  t.cfg.updates = 50;
  return t;
}

}  // namespace

TEST_CASE("names") {
  CHECK(strategy_from_string("CD-TAW") == StrategyKind::cdtaw);
  CHECK(to_string(StrategyKind::taw) == "TAW");
  CHECK(mask_source_for(StrategyKind::tag) == MaskSource::tag);
  CHECK_THROWS_AS(strategy_from_string("XYZ"), Error);
}

TEST_CASE("TAG") {
  const auto pre = fixture({3, 1, 2, 4});
  const auto m = tag_mask(pre, PruneRate(25));
  CHECK(flatten(m) == std::vector<std::uint8_t>{1, 0, 1, 1});
  CHECK(m.source == MaskSource::tag);
  CHECK(m.rate == 25.0);

  StrategySpec spec;
  spec.kind = StrategyKind::tag;
  spec.rate = PruneRate(0);
  const auto init = initial_model(pre, spec);
  CHECK(init.model.tensors() == pre.tensors());
  CHECK(flatten(init.mask) == std::vector<std::uint8_t>(4, 1));
}

TEST_CASE("CD-TAW takes magnitudes from the donor and zeros the pretrained weights") {
  const auto pre = fixture({1, 2, 3, 4});
  const auto donor = fixture({9, 0.1f, 8, 7});
  const auto m = cdtaw_mask(pre, donor, PruneRate(25));
  CHECK(flatten(m) == std::vector<std::uint8_t>{1, 0, 1, 1});
  CHECK(m.source == MaskSource::cdtaw);

  StrategySpec spec;
  spec.kind = StrategyKind::cdtaw;
  spec.rate = PruneRate(25);
  spec.donor = donor;
  const auto init = initial_model(pre, spec);
  CHECK(init.model.at("encoder.0.weight").data == std::vector<float>{1, 0, 3, 4});
  CHECK(init.model.at("encoder.0.bias").data == pre.at("encoder.0.bias").data);
}

TEST_CASE("CD-TAW with the pretrained model as donor equals TAG") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ps = pada::testing::random_parameter_set(rng);
    if (ps.prunable_count() == 0) continue;
    const PruneRate r(static_cast<double>(trial * 2));
    CHECK(cdtaw_mask(ps, ps, r).tensors == tag_mask(ps, r).tensors);
  }
}

TEST_CASE("CD-TAW ignores pretrained values") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const auto donor = pada::testing::random_parameter_set(rng);
    if (donor.prunable_count() == 0) continue;
    auto pre = donor;
    for (std::size_t t = 0; t < pre.size(); ++t) {
      for (auto& v : pre[t].data) v = static_cast<float>(rng() % 1000) * 0.01f - 5.0f;
    }
    auto scaled = pre;
    for (std::size_t t = 0; t < scaled.size(); ++t) {
      for (auto& v : scaled[t].data) v *= -37.5f;
    }
    const PruneRate r(40);
    CHECK(cdtaw_mask(pre, donor, r) == cdtaw_mask(scaled, donor, r));
  }
}

TEST_CASE("CD-TAW rejects structurally different donors") {
  const auto pre = fixture({1, 2, 3, 4});
  auto donor = fixture({1, 2, 3, 4});
  donor.add(make_tensor("encoder.1.weight", {1, 2}, {1, 1}));
  try {
    cdtaw_mask(pre, donor, PruneRate(10));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::structural);
    CHECK(std::string(e.what()).find("encoder.1.weight") != std::string::npos);
  }
  StrategySpec spec;
  spec.kind = StrategyKind::cdtaw;
  spec.rate = PruneRate(10);
  CHECK_THROWS_AS(initial_model(pre, spec), Error);
}

TEST_CASE("donor with permuted magnitudes changes the mask") {
  const auto pre = fixture({1, 2, 3, 4});
  auto donor = pre;
  auto& w = donor[0].data;
  std::reverse(w.begin(), w.end());
  StrategySpec cd;
  cd.kind = StrategyKind::cdtaw;
  cd.rate = PruneRate(50);
  cd.donor = donor;
  StrategySpec tag;
  tag.rate = PruneRate(50);
  CHECK(initial_model(pre, cd).mask.tensors != initial_model(pre, tag).mask.tensors);
}

TEST_CASE("TAW") {
  auto t = small_task();

  SUBCASE("zero updates equals TAG") {
    t.cfg.updates = 0;
    const auto m = taw_mask(t.pretrained, t.task.target_labeled, PruneRate(40), t.arch, t.cfg);
    CHECK(m.tensors == tag_mask(t.pretrained, PruneRate(40)).tensors);
    CHECK(m.source == MaskSource::taw);
  }
  SUBCASE("deterministic and leaves the input untouched") {
    const auto copy = t.pretrained;
    const auto a = taw_mask(t.pretrained, t.task.target_labeled, PruneRate(40), t.arch, t.cfg);
    const auto b = taw_mask(t.pretrained, t.task.target_labeled, PruneRate(40), t.arch, t.cfg);
    CHECK(a == b);
    CHECK(t.pretrained == copy);
    CHECK(a.tensors != tag_mask(t.pretrained, PruneRate(40)).tensors);
  }
  SUBCASE("rate 100 zeros everything") {
    const auto m = taw_mask(t.pretrained, t.task.target_labeled, PruneRate(100), t.arch, t.cfg);
    const auto bits = flatten(m);
    CHECK(std::all_of(bits.begin(), bits.end(), [](auto b) { return b == 0; }));
  }
  SUBCASE("needs target data") {
    StrategySpec spec;
    spec.kind = StrategyKind::taw;
    spec.rate = PruneRate(40);
    spec.taw = FinetuneSetup{t.arch, t.cfg};
    CHECK_THROWS_AS(initial_model(t.pretrained, spec), Error);
    CHECK_NOTHROW(initial_model(t.pretrained, spec, &t.task.target_labeled));
  }
}

TEST_CASE("initial model sparsity matches the prune count") {
  auto t = small_task();
  const std::size_t d = t.pretrained.prunable_count();
  for (double r : {0.0, 12.5, 40.0, 73.0}) {
    StrategySpec spec;
    spec.rate = PruneRate(r);
    const auto init = initial_model(t.pretrained, spec);
    CHECK(sparsity(init.model) ==
          static_cast<double>(prune_count(PruneRate(r), d)) / static_cast<double>(d));
  }
}

TEST_CASE("strategies differ only in where the mask comes from") {
  auto t = small_task();
  StrategySpec tag;
  tag.rate = PruneRate(30);
  StrategySpec cd;
  cd.kind = StrategyKind::cdtaw;
  cd.rate = PruneRate(30);
  cd.donor = t.pretrained;
  const auto a = initial_model(t.pretrained, tag);
  const auto b = initial_model(t.pretrained, cd);
  CHECK(a.mask.tensors == b.mask.tensors);
  CHECK(a.model == b.model);
}

#pragma once

#include <optional>
#include <string_view>

#include "pada/param_store.hpp"
#include "pada/pruner.hpp"
#include "pada/trainer.hpp"

namespace pada {

/// Where the initial mask comes from: the pre-trained weights (TAG), a copy
/// fine-tuned on the target data (TAW), or an out-of-domain fine-tuned
/// donor (CD-TAW). The mask is always applied to the pre-trained weights.
enum class StrategyKind { tag, taw, cdtaw };

std::string_view to_string(StrategyKind kind) noexcept;
StrategyKind strategy_from_string(std::string_view name);
MaskSource mask_source_for(StrategyKind kind) noexcept;

struct FinetuneSetup {
  ModelArch arch;  // classification head
  TrainConfig cfg;
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::tag;
  PruneRate rate;
  std::optional<FinetuneSetup> taw;   // required for TAW
  std::optional<ParameterSet> donor;  // required for CD-TAW, body only
};

Mask tag_mask(const ParameterSet& pretrained, PruneRate r1);

/// Fine-tunes a copy of `pretrained` on `target_data`, drops the head and
/// ranks the resulting weights. `pretrained` is not modified.
Mask taw_mask(const ParameterSet& pretrained, const LabeledSet& target_data, PruneRate r1,
              const ModelArch& arch, const TrainConfig& cfg);

/// Ranks the donor's magnitudes only; pretrained values are never read.
/// Throws Error(structural) naming the first mismatch unless the two sets
/// are shapes_compatible.
Mask cdtaw_mask(const ParameterSet& pretrained, const ParameterSet& donor, PruneRate r1);

struct InitialModel {
  ParameterSet model;  // pretrained with the masked weights zeroed
  Mask mask;
};

/// Builds the strategy's mask and zeros it out of `pretrained`.
/// `target_data` is needed for TAW only.
InitialModel initial_model(const ParameterSet& pretrained, const StrategySpec& spec,
                           const LabeledSet* target_data = nullptr);

}  // namespace pada

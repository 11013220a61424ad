#include "pada/strategies.hpp"

#include "pada/error.hpp"

namespace pada {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::tag: return "TAG";
    case StrategyKind::taw: return "TAW";
    case StrategyKind::cdtaw: return "CD-TAW";
  }
  return "TAG";
}

StrategyKind strategy_from_string(std::string_view name) {
  for (auto k : {StrategyKind::tag, StrategyKind::taw, StrategyKind::cdtaw}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::config, "unknown strategy '" + std::string(name) + "'");
}

MaskSource mask_source_for(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::tag: return MaskSource::tag;
    case StrategyKind::taw: return MaskSource::taw;
    case StrategyKind::cdtaw: return MaskSource::cdtaw;
  }
  return MaskSource::tag;
}

Mask tag_mask(const ParameterSet& pretrained, PruneRate r1) {
  return compute_ump_mask(pretrained, r1, MaskSource::tag);
}

Mask taw_mask(const ParameterSet& pretrained, const LabeledSet& target_data, PruneRate r1,
              const ModelArch& arch, const TrainConfig& cfg) {
  if (target_data.size() == 0) throw Error(ErrorKind::empty, "TAW needs target data");
  ParameterSet tuned = strip_head(finetune_supervised(arch, pretrained, target_data, cfg));
  if (!shapes_compatible(pretrained, tuned)) {
    throw Error(ErrorKind::structural,
                "fine-tuned copy does not match pretrained: " +
                    first_structural_mismatch(pretrained, tuned));
  }
  return compute_ump_mask(tuned, r1, MaskSource::taw);
}

Mask cdtaw_mask(const ParameterSet& pretrained, const ParameterSet& donor, PruneRate r1) {
  if (const auto why = first_structural_mismatch(pretrained, donor); !why.empty()) {
    throw Error(ErrorKind::structural, "donor is not compatible with pretrained: " + why);
  }
  return compute_ump_mask(donor, r1, MaskSource::cdtaw);
}

InitialModel initial_model(const ParameterSet& pretrained, const StrategySpec& spec,
                           const LabeledSet* target_data) {
  Mask mask;
  switch (spec.kind) {
    case StrategyKind::tag:
      mask = tag_mask(pretrained, spec.rate);
      break;
    case StrategyKind::taw:
      if (!spec.taw) throw Error(ErrorKind::config, "TAW strategy needs a fine-tune setup");
      if (target_data == nullptr) throw Error(ErrorKind::config, "TAW strategy needs target data");
      mask = taw_mask(pretrained, *target_data, spec.rate, spec.taw->arch, spec.taw->cfg);
      break;
    case StrategyKind::cdtaw:
      if (!spec.donor) throw Error(ErrorKind::config, "CD-TAW strategy needs a donor model");
      mask = cdtaw_mask(pretrained, *spec.donor, spec.rate);
      break;
  }
  ParameterSet model = apply_zeroing(pretrained, mask);
  return {std::move(model), std::move(mask)};
}

}  // namespace pada

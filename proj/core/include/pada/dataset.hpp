#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "pada/trainer.hpp"

namespace pada {

/// Synthetic source/target classification task. Each class is a mixture of
/// Gaussian clusters; the target domain applies a fixed feature-space
/// transform (pairwise rotation, then per-feature scaling, then extra noise)
/// to samples from the same label structure.
struct DomainShiftSpec {
  std::size_t classes = 4;
  std::size_t input_dim = 16;
  std::size_t clusters_per_class = 2;
  double center_scale = 1.0;
  double noise_std = 1.0;

  double rotation_deg = 40.0;
  double scale_min = 0.6;
  double scale_max = 1.6;
  double target_noise_std = 0.2;

  std::size_t unlabeled_source = 4000;
  std::size_t labeled_source = 5000;
  /// 0 selects labeled_source / 50.
  std::size_t labeled_target = 0;
  std::size_t target_eval = 2000;

  std::size_t effective_labeled_target() const noexcept;
  /// Throws Error(config) for degenerate settings (0 classes, empty sets, ...).
  void validate() const;
  bool is_identity_shift() const noexcept;
};

/// P, J and L analogues plus a held-out target evaluation set.
struct DomainShiftTask {
  UnlabeledSet source_unlabeled;
  LabeledSet source_labeled;
  LabeledSet target_labeled;
  LabeledSet target_eval;
};

DomainShiftTask gen_domain_shift(std::uint64_t seed, const DomainShiftSpec& spec);

enum class Domain { source, target };

/// `n` labeled draws from one domain of the task fixed by `seed`, using an
/// explicit sampling stream. gen_domain_shift uses streams 2 to 5.
LabeledSet sample_labeled(std::uint64_t seed, const DomainShiftSpec& spec, std::size_t n,
                          Domain domain, std::uint64_t stream);

/// CSV with header "label,x0,...", floats in shortest round-trip form.
std::string to_csv(const LabeledSet& data);
/// CSV with header "x0,...".
std::string to_csv(const UnlabeledSet& data);

}  // namespace pada

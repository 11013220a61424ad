#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pada/param_store.hpp"

namespace pada {

/// Pruning percentage in [0, 100].
class PruneRate {
 public:
  PruneRate() = default;
  /// Throws Error(range) outside [0, 100] or for NaN.
  explicit PruneRate(double percent);

  double percent() const noexcept { return percent_; }

  friend bool operator==(PruneRate, PruneRate) = default;

 private:
  double percent_ = 0.0;
};

/// Number of elements removed at `rate` out of `d`: floor(rate * d / 100).
std::size_t prune_count(PruneRate rate, std::size_t d);

enum class MaskSource { tag, taw, cdtaw, in_loop };

std::string_view to_string(MaskSource source) noexcept;
MaskSource mask_source_from_string(std::string_view name);

/// Bits for one prunable tensor; 1 = retained, 0 = zeroed.
struct MaskTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> bits;

  std::size_t size() const noexcept { return bits.size(); }

  friend bool operator==(const MaskTensor&, const MaskTensor&) = default;
};

/// Per-tensor bitsets aligned with the prunable tensors of a ParameterSet.
/// Non-prunable tensors have no entry and are implicitly retained.
struct Mask {
  std::vector<MaskTensor> tensors;
  MaskSource source = MaskSource::in_loop;
  double rate = 0.0;

  std::size_t size() const noexcept;
  std::size_t zero_count() const noexcept;

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// All-ones mask shaped like the prunable tensors of `ps`.
Mask full_mask(const ParameterSet& ps, MaskSource source = MaskSource::in_loop);

/// Throws Error(structural) unless `mask` has exactly one entry per
/// prunable tensor of `ps`, matching in order, name and shape.
void check_aligned(const ParameterSet& ps, const Mask& mask);

/// Throws Error(structural) unless both masks cover the same tensors.
void check_aligned(const Mask& a, const Mask& b);

/// Global unstructured magnitude pruning. Zeros exactly
/// prune_count(rate, d_prunable) bits: the smallest |value| across all
/// prunable tensors, ties going to the earlier flat index.
/// Throws Error(empty) without prunable tensors and Error(range) on
/// non-finite weights.
Mask compute_ump_mask(const ParameterSet& ps, PruneRate rate,
                      MaskSource source = MaskSource::in_loop);

/// Copy of `ps` with 0.0f wherever the mask bit is 0. The result carries no
/// mask: later updates may move those weights away from zero.
ParameterSet apply_zeroing(ParameterSet ps, const Mask& mask);

/// Fraction of exactly-zero prunable values. Throws Error(empty) when no
/// tensor is prunable.
double sparsity(const ParameterSet& ps);

inline constexpr std::uint8_t kMaskVersion = 1;

// Mask container: checkpoint layout with magic "PADM" and each payload
// packed to ceil(n/8) bytes, bit i stored at byte i/8, bit position i%8.
// Metadata carries "source" and "rate".
std::vector<std::uint8_t> encode_mask(const Mask& mask);
Mask decode_mask(std::span<const std::uint8_t> bytes);
void save_mask(const Mask& mask, const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path);

}  // namespace pada

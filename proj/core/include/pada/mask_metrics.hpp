#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pada/pruner.hpp"

namespace pada {

/// Raw agreement counts between two aligned masks.
struct MaskAgreement {
  std::uint64_t both_retained = 0;  // (a=1) & (b=1)
  std::uint64_t both_zeroed = 0;    // (a=0) & (b=0)
  std::uint64_t union_retained = 0; // (a=1) | (b=1)
  std::uint64_t total = 0;

  MaskAgreement& operator+=(const MaskAgreement& o) noexcept;

  /// Intersection over union of the retained bits. An empty union means
  /// both masks are all-zero and identical, which scores 1.0.
  double iou() const noexcept;
  bool empty_union() const noexcept { return union_retained == 0; }
  /// (both_retained + both_zeroed) / total. Throws Error(empty) when total is 0.
  double mma() const;
};

MaskAgreement agreement(const MaskTensor& a, const MaskTensor& b);
/// Throws Error(structural) for misaligned masks.
MaskAgreement agreement(const Mask& a, const Mask& b);

double iou(const Mask& a, const Mask& b);
double mma(const Mask& a, const Mask& b);

struct TensorSimilarity {
  std::string name;
  double iou = 0.0;
  double mma = 0.0;
  MaskAgreement counts;
};

struct SimilarityReport {
  double iou = 0.0;
  double mma = 0.0;
  MaskAgreement counts;
  /// One row per mask tensor, in mask order.
  std::vector<TensorSimilarity> layers;
  MaskSource source_a = MaskSource::in_loop;
  MaskSource source_b = MaskSource::in_loop;
  double rate_a = 0.0;
  double rate_b = 0.0;
};

SimilarityReport layerwise_report(const Mask& a, const Mask& b);

/// Columns: layer,name,iou,mma,agg1,agg0,union,total. Per-tensor rows use
/// their index as `layer`; the final row has layer "global".
std::string report_to_csv(const SimilarityReport& report);
std::string report_to_json(const SimilarityReport& report);

}  // namespace pada

#include "pada/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pada/error.hpp"

namespace pada {

PruneRate::PruneRate(double percent) : percent_(percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error(ErrorKind::range,
                "prune rate " + std::to_string(percent) + " outside [0, 100]");
  }
}

std::size_t prune_count(PruneRate rate, std::size_t d) {
  const double z = std::floor(rate.percent() * static_cast<double>(d) / 100.0);
  return std::min(d, static_cast<std::size_t>(z));
}

std::string_view to_string(MaskSource source) noexcept {
  switch (source) {
    case MaskSource::tag: return "TAG";
    case MaskSource::taw: return "TAW";
    case MaskSource::cdtaw: return "CD-TAW";
    case MaskSource::in_loop: return "in-loop";
  }
  return "in-loop";
}

MaskSource mask_source_from_string(std::string_view name) {
  for (auto s : {MaskSource::tag, MaskSource::taw, MaskSource::cdtaw, MaskSource::in_loop}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::format, "unknown mask source '" + std::string(name) + "'");
}

std::size_t Mask::size() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

std::size_t Mask::zero_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors) {
    n += static_cast<std::size_t>(std::count(t.bits.begin(), t.bits.end(), std::uint8_t{0}));
  }
  return n;
}

Mask full_mask(const ParameterSet& ps, MaskSource source) {
  Mask m;
  m.source = source;
  for (const Tensor& t : ps) {
    if (!t.prunable) continue;
    m.tensors.push_back({t.name, t.shape, std::vector<std::uint8_t>(t.size(), 1)});
  }
  return m;
}

void check_aligned(const ParameterSet& ps, const Mask& mask) {
  std::size_t k = 0;
  for (const Tensor& t : ps) {
    if (!t.prunable) continue;
    if (k >= mask.tensors.size()) {
      throw Error(ErrorKind::structural, "mask has no entry for tensor '" + t.name + "'");
    }
    const MaskTensor& m = mask.tensors[k++];
    if (m.name != t.name || m.shape != t.shape || m.bits.size() != t.size()) {
      throw Error(ErrorKind::structural,
                  "mask entry '" + m.name + "' does not match tensor '" + t.name + "'");
    }
  }
  if (k != mask.tensors.size()) {
    throw Error(ErrorKind::structural,
                "mask has extra entry '" + mask.tensors[k].name + "'");
  }
}

void check_aligned(const Mask& a, const Mask& b) {
  if (a.tensors.size() != b.tensors.size()) {
    throw Error(ErrorKind::structural, "masks cover " + std::to_string(a.tensors.size()) +
                                           " vs " + std::to_string(b.tensors.size()) +
                                           " tensors");
  }
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const auto& x = a.tensors[i];
    const auto& y = b.tensors[i];
    if (x.name != y.name || x.shape != y.shape || x.bits.size() != y.bits.size()) {
      throw Error(ErrorKind::structural,
                  "mask entry " + std::to_string(i) + ": '" + x.name + "' vs '" + y.name + "'");
    }
  }
}

Mask compute_ump_mask(const ParameterSet& ps, PruneRate rate, MaskSource source) {
  const std::size_t d = ps.prunable_count();
  if (d == 0) throw Error(ErrorKind::empty, "no prunable tensors to prune");

  // Flat magnitudes in view order, with per-tensor offsets into them.
  std::vector<float> magnitude;
  magnitude.reserve(d);
  for (const Tensor& t : ps) {
    if (!t.prunable) continue;
    for (float v : t.data) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::range, "non-finite weight in '" + t.name + "'");
      }
      magnitude.push_back(std::fabs(v));
    }
  }

  const std::size_t z = prune_count(rate, d);
  std::vector<std::uint8_t> flat(d, 1);
  if (z == d) {
    std::fill(flat.begin(), flat.end(), 0);
  } else if (z > 0) {
    std::vector<std::uint32_t> order(d);
    std::iota(order.begin(), order.end(), 0u);
    // (|w|, index) is a strict total order, so the first z are unique.
    auto less = [&](std::uint32_t a, std::uint32_t b) {
      return magnitude[a] < magnitude[b] || (magnitude[a] == magnitude[b] && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(z),
                     order.end(), less);
    for (std::size_t i = 0; i < z; ++i) flat[order[i]] = 0;
  }

  Mask mask;
  mask.source = source;
  mask.rate = rate.percent();
  std::size_t offset = 0;
  for (const Tensor& t : ps) {
    if (!t.prunable) continue;
    MaskTensor m{t.name, t.shape, {}};
    m.bits.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + t.size()));
    offset += t.size();
    mask.tensors.push_back(std::move(m));
  }
  return mask;
}

ParameterSet apply_zeroing(ParameterSet ps, const Mask& mask) {
  check_aligned(ps, mask);
  std::size_t k = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Tensor& t = ps[i];
    if (!t.prunable) continue;
    const auto& bits = mask.tensors[k++].bits;
    for (std::size_t e = 0; e < t.data.size(); ++e) {
      if (bits[e] == 0) t.data[e] = 0.0f;
    }
  }
  return ps;
}

double sparsity(const ParameterSet& ps) {
  const std::size_t d = ps.prunable_count();
  if (d == 0) throw Error(ErrorKind::empty, "no prunable tensors");
  std::size_t zeros = 0;
  for (const Tensor& t : ps) {
    if (!t.prunable) continue;
    for (float v : t.data) zeros += v == 0.0f ? 1 : 0;
  }
  return static_cast<double>(zeros) / static_cast<double>(d);
}

}  // namespace pada

#include "pada/param_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

#include "pada/error.hpp"

namespace pada {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::pretrained: return "pretrained";
    case Role::finetuned_target: return "finetuned_target";
    case Role::finetuned_donor: return "finetuned_donor";
    case Role::adapted: return "adapted";
  }
  return "pretrained";
}

Role role_from_string(std::string_view name) {
  for (Role r : {Role::pretrained, Role::finetuned_target,
                 Role::finetuned_donor, Role::adapted}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorKind::format, "unknown role '" + std::string(name) + "'");
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw Error(ErrorKind::format, "tensor shape has rank 0");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw Error(ErrorKind::format, "tensor shape has a zero dim");
    if (n > std::numeric_limits<std::size_t>::max() / d)
      throw Error(ErrorKind::format, "tensor shape overflows");
    n *= d;
  }
  return n;
}

Tensor make_tensor(std::string name, std::vector<std::size_t> shape,
                   std::vector<float> data, std::optional<bool> prunable) {
  if (name.empty()) throw Error(ErrorKind::format, "tensor name is empty");
  const std::size_t n = element_count(shape);
  if (n != data.size()) {
    throw Error(ErrorKind::format,
                "tensor '" + name + "' has " + std::to_string(data.size()) +
                    " values but its shape holds " + std::to_string(n));
  }
  Tensor t;
  t.prunable = prunable.value_or(shape.size() >= 2);
  t.name = std::move(name);
  t.shape = std::move(shape);
  t.data = std::move(data);
  return t;
}

Tensor zeros_tensor(std::string name, std::vector<std::size_t> shape,
                    std::optional<bool> prunable) {
  const std::size_t n = element_count(shape);
  return make_tensor(std::move(name), std::move(shape),
                     std::vector<float>(n, 0.0f), prunable);
}

void ParameterSet::add(Tensor tensor) {
  if (tensor.name.empty()) throw Error(ErrorKind::format, "tensor name is empty");
  if (find(tensor.name)) {
    throw Error(ErrorKind::format, "duplicate tensor name '" + tensor.name + "'");
  }
  if (element_count(tensor.shape) != tensor.data.size()) {
    throw Error(ErrorKind::format,
                "tensor '" + tensor.name + "' shape and data length disagree");
  }
  tensors_.push_back(std::move(tensor));
}

void ParameterSet::remove_prefix(std::string_view prefix) {
  std::erase_if(tensors_, [&](const Tensor& t) {
    return std::string_view(t.name).starts_with(prefix);
  });
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

const Tensor& ParameterSet::at(std::string_view name) const {
  if (auto i = find(name)) return tensors_[*i];
  throw Error(ErrorKind::structural, "no tensor named '" + std::string(name) + "'");
}

Tensor& ParameterSet::at(std::string_view name) {
  if (auto i = find(name)) return tensors_[*i];
  throw Error(ErrorKind::structural, "no tensor named '" + std::string(name) + "'");
}

std::size_t ParameterSet::prunable_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) {
    if (t.prunable) n += t.size();
  }
  return n;
}

std::size_t ParameterSet::total_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.name != b.name || a.shape != b.shape || a.prunable != b.prunable ||
      a.data.size() != b.data.size()) {
    return false;
  }
  return a.data.empty() ||
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  return a.role() == b.role() && a.tensors() == b.tensors();
}

std::vector<FlatEntry> flat_prunable_view(const ParameterSet& ps) {
  std::vector<FlatEntry> view;
  view.reserve(ps.prunable_count());
  for (std::size_t t = 0; t < ps.size(); ++t) {
    if (!ps[t].prunable) continue;
    const auto& data = ps[t].data;
    for (std::size_t e = 0; e < data.size(); ++e) view.push_back({t, e, data[e]});
  }
  return view;
}

std::string first_structural_mismatch(const ParameterSet& a, const ParameterSet& b) {
  const std::size_t common = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < common; ++i) {
    const Tensor& x = a[i];
    const Tensor& y = b[i];
    const std::string at = "tensor " + std::to_string(i);
    if (x.name != y.name) return at + ": name '" + x.name + "' vs '" + y.name + "'";
    if (x.shape != y.shape) return at + " ('" + x.name + "'): shapes differ";
    if (x.prunable != y.prunable) return at + " ('" + x.name + "'): prunable flags differ";
  }
  if (a.size() != b.size()) {
    const auto& longer = a.size() > b.size() ? a : b;
    return "tensor count " + std::to_string(a.size()) + " vs " +
           std::to_string(b.size()) + " (extra tensor '" + longer[common].name + "')";
  }
  return {};
}

bool shapes_compatible(const ParameterSet& a, const ParameterSet& b) {
  return first_structural_mismatch(a, b).empty();
}

}  // namespace pada

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pada {

enum class Role { pretrained, finetuned_target, finetuned_donor, adapted };

std::string_view to_string(Role role) noexcept;
/// Throws Error(format) for an unknown name.
Role role_from_string(std::string_view name);

/// A named, shaped block of 32-bit weights stored row-major.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;
  bool prunable = true;

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
};

/// Bitwise equality of name, shape, flag and raw float bits.
bool operator==(const Tensor& a, const Tensor& b);

/// Product of dims; throws Error(format) on an empty shape, a zero dim or overflow.
std::size_t element_count(const std::vector<std::size_t>& shape);

/// Builds a tensor and checks its invariants. When `prunable` is unset,
/// matrices (rank >= 2) are prunable and vectors are not.
Tensor make_tensor(std::string name, std::vector<std::size_t> shape,
                   std::vector<float> data,
                   std::optional<bool> prunable = std::nullopt);

/// Zero-filled tensor with the default prunable flag.
Tensor zeros_tensor(std::string name, std::vector<std::size_t> shape,
                    std::optional<bool> prunable = std::nullopt);

/// Ordered collection of uniquely named tensors. Iteration order is
/// insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(Role role) : role_(role) {}

  /// Appends a tensor. Throws Error(format) on an empty or duplicate name,
  /// or when shape and data length disagree.
  void add(Tensor tensor);

  /// Removes every tensor whose name starts with `prefix`.
  void remove_prefix(std::string_view prefix);

  Role role() const noexcept { return role_; }
  void set_role(Role role) noexcept { role_ = role; }

  std::size_t size() const noexcept { return tensors_.size(); }
  bool empty() const noexcept { return tensors_.empty(); }

  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }

  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }

  /// Index of the named tensor, if present.
  std::optional<std::size_t> find(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  /// Element count over prunable tensors.
  std::size_t prunable_count() const noexcept;
  /// Element count over all tensors.
  std::size_t total_count() const noexcept;

  auto begin() const noexcept { return tensors_.begin(); }
  auto end() const noexcept { return tensors_.end(); }

 private:
  std::vector<Tensor> tensors_;
  Role role_ = Role::pretrained;
};

/// Bitwise equality: names, order, shapes, flags, role and the raw bits of
/// every float (so -0.0 != 0.0 and identical NaN payloads compare equal).
bool operator==(const ParameterSet& a, const ParameterSet& b);

struct FlatEntry {
  std::size_t tensor_index;
  std::size_t element_index;
  float value;
};

/// Every prunable element, tensors in insertion order then row-major.
std::vector<FlatEntry> flat_prunable_view(const ParameterSet& ps);

/// True iff both sets have the same tensor names, order, shapes and
/// prunable flags. Values and roles are ignored.
bool shapes_compatible(const ParameterSet& a, const ParameterSet& b);

/// Describes the first structural difference between `a` and `b`, or an
/// empty string when they are compatible.
std::string first_structural_mismatch(const ParameterSet& a,
                                      const ParameterSet& b);

}  // namespace pada

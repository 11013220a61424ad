#include "pada/dataset.hpp"

#include <cmath>
#include <numbers>

#include "pada/error.hpp"
#include "pada/random.hpp"
#include "text.hpp"

namespace pada {

std::size_t DomainShiftSpec::effective_labeled_target() const noexcept {
  if (labeled_target != 0) return labeled_target;
  return std::max<std::size_t>(1, labeled_source / 50);
}

void DomainShiftSpec::validate() const {
  if (classes == 0) throw Error(ErrorKind::config, "task needs at least one class");
  if (input_dim == 0) throw Error(ErrorKind::config, "task input_dim must be positive");
  if (clusters_per_class == 0) throw Error(ErrorKind::config, "clusters_per_class must be positive");
  if (!(noise_std >= 0.0) || !(target_noise_std >= 0.0) || !(center_scale >= 0.0)) {
    throw Error(ErrorKind::config, "task noise and scale must be non-negative");
  }
  if (!(scale_min > 0.0) || !(scale_max >= scale_min)) {
    throw Error(ErrorKind::config, "task needs 0 < scale_min <= scale_max");
  }
  if (!std::isfinite(rotation_deg)) throw Error(ErrorKind::config, "rotation must be finite");
  if (unlabeled_source == 0 || labeled_source == 0 || target_eval == 0) {
    throw Error(ErrorKind::config, "task dataset sizes must be positive");
  }
}

bool DomainShiftSpec::is_identity_shift() const noexcept {
  return rotation_deg == 0.0 && scale_min == 1.0 && scale_max == 1.0 && target_noise_std == 0.0;
}

namespace {

constexpr std::uint64_t kStructureStream = 1;
constexpr std::uint64_t kUnlabeledStream = 2;
constexpr std::uint64_t kSourceStream = 3;
constexpr std::uint64_t kTargetStream = 4;
constexpr std::uint64_t kEvalStream = 5;

struct Generator {
  const DomainShiftSpec& spec;
  std::vector<double> centers;  // (class * clusters + cluster) * dim
  std::vector<double> scales;
  double cos_a = 1.0;
  double sin_a = 0.0;

  Generator(const DomainShiftSpec& s, std::uint64_t seed) : spec(s) {
    Rng rng(derive_seed(seed, kStructureStream));
    centers.resize(spec.classes * spec.clusters_per_class * spec.input_dim);
    for (double& c : centers) c = spec.center_scale * rng.normal();
    scales.resize(spec.input_dim);
    for (double& v : scales) v = rng.uniform(spec.scale_min, spec.scale_max);
    const double a = spec.rotation_deg * std::numbers::pi / 180.0;
    cos_a = std::cos(a);
    sin_a = std::sin(a);
  }

  std::uint32_t draw(Rng& rng, std::vector<double>& x) const {
    const auto label = static_cast<std::uint32_t>(rng.below(spec.classes));
    const std::size_t cluster = rng.below(spec.clusters_per_class);
    const double* c = centers.data() + (label * spec.clusters_per_class + cluster) * spec.input_dim;
    for (std::size_t i = 0; i < spec.input_dim; ++i) x[i] = c[i] + spec.noise_std * rng.normal();
    return label;
  }

  void shift(Rng& rng, std::vector<double>& x) const {
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
      const double u = x[i];
      const double v = x[i + 1];
      x[i] = cos_a * u - sin_a * v;
      x[i + 1] = sin_a * u + cos_a * v;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = scales[i] * x[i];
      if (spec.target_noise_std > 0.0) x[i] += spec.target_noise_std * rng.normal();
    }
  }

  LabeledSet labeled(std::uint64_t seed, std::size_t n, bool target) const {
    Rng rng(seed);
    LabeledSet out;
    out.classes = spec.classes;
    out.features = Matrix(n, spec.input_dim);
    out.labels.resize(n);
    std::vector<double> x(spec.input_dim);
    for (std::size_t r = 0; r < n; ++r) {
      out.labels[r] = draw(rng, x);
      if (target) shift(rng, x);
      for (std::size_t i = 0; i < x.size(); ++i) out.features(r, i) = static_cast<float>(x[i]);
    }
    return out;
  }
};

}  // namespace

DomainShiftTask gen_domain_shift(std::uint64_t seed, const DomainShiftSpec& spec) {
  spec.validate();
  const Generator gen(spec, seed);
  DomainShiftTask task;
  task.source_unlabeled.features =
      gen.labeled(derive_seed(seed, kUnlabeledStream), spec.unlabeled_source, false).features;
  task.source_labeled = gen.labeled(derive_seed(seed, kSourceStream), spec.labeled_source, false);
  task.target_labeled =
      gen.labeled(derive_seed(seed, kTargetStream), spec.effective_labeled_target(), true);
  task.target_eval = gen.labeled(derive_seed(seed, kEvalStream), spec.target_eval, true);
  return task;
}

LabeledSet sample_labeled(std::uint64_t seed, const DomainShiftSpec& spec, std::size_t n,
                          Domain domain, std::uint64_t stream) {
  spec.validate();
  const Generator gen(spec, seed);
  return gen.labeled(derive_seed(seed, stream), n, domain == Domain::target);
}

namespace {

void append_header(std::string& out, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) {
    if (c) out += ',';
    out += 'x';
    out += std::to_string(c);
  }
  out += '\n';
}

void append_row(std::string& out, std::span<const float> row) {
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c) out += ',';
    out += detail::format_number(row[c]);
  }
  out += '\n';
}

}  // namespace

std::string to_csv(const LabeledSet& data) {
  std::string out = "label,";
  append_header(out, data.features.cols);
  for (std::size_t r = 0; r < data.size(); ++r) {
    out += std::to_string(data.labels[r]);
    out += ',';
    append_row(out, data.features.row(r));
  }
  return out;
}

std::string to_csv(const UnlabeledSet& data) {
  std::string out;
  append_header(out, data.features.cols);
  for (std::size_t r = 0; r < data.size(); ++r) append_row(out, data.features.row(r));
  return out;
}

}  // namespace pada

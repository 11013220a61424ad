#include "pada/checkpoint.hpp"

#include <bit>

#include "binary.hpp"
#include "pada/error.hpp"
#include "pada/file_util.hpp"

namespace pada {

namespace {

constexpr std::string_view kMagic = "PADA";

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& ps,
                                            const Metadata& metadata) {
  detail::ByteWriter w;
  w.text(kMagic);
  w.u8(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ps.size()));
  for (const Tensor& t : ps) {
    w.string(t.name);
    w.u8(t.prunable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) w.u64(d);
    for (float v : t.data) w.f32(v);
  }
  Metadata meta = metadata;
  meta["role"] = std::string(to_string(ps.role()));
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [key, value] : meta) {
    w.string(key);
    w.string(value);
  }
  return std::move(w).take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < kMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw Error(ErrorKind::bad_magic, "not a PADA checkpoint");
  }
  r.take(kMagic.size(), "header");
  const std::uint8_t version = r.u8("header");
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::bad_version,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("header");

  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = r.string("tensor header");
    const std::uint8_t flag = r.u8("tensor header");
    if (flag > 1) throw Error(ErrorKind::format, "bad prunable flag on '" + t.name + "'");
    t.prunable = flag == 1;
    const std::uint32_t rank = r.u32("tensor header");
    if (rank > r.remaining() / 8) throw Error(ErrorKind::truncated, "truncated tensor header");
    t.shape.resize(rank);
    for (auto& d : t.shape) d = static_cast<std::size_t>(r.u64("tensor header"));
    const std::size_t n = element_count(t.shape);
    if (n > r.remaining() / sizeof(float)) {
      throw Error(ErrorKind::truncated, "truncated tensor data");
    }
    auto payload = r.take(n * sizeof(float), "tensor data");
    t.data.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
      const std::uint8_t* p = payload.data() + e * 4;
      const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                 (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
      t.data[e] = std::bit_cast<float>(bits);
    }
    ck.params.add(std::move(t));
  }

  const std::uint32_t pairs = r.u32("metadata");
  for (std::uint32_t i = 0; i < pairs; ++i) {
    std::string key = r.string("metadata");
    std::string value = r.string("metadata");
    ck.metadata[std::move(key)] = std::move(value);
  }
  if (!r.done()) throw Error(ErrorKind::format, "trailing bytes after checkpoint metadata");
  if (auto it = ck.metadata.find("role"); it != ck.metadata.end()) {
    ck.params.set_role(role_from_string(it->second));
  }
  return ck;
}

void save_checkpoint(const ParameterSet& ps, const std::filesystem::path& path,
                     const Metadata& metadata) {
  write_file_atomic(path, encode_checkpoint(ps, metadata));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  return read_checkpoint(path).params;
}

}  // namespace pada

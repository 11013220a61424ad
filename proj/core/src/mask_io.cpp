#include <map>

#include "binary.hpp"
#include "pada/error.hpp"
#include "pada/file_util.hpp"
#include "pada/pruner.hpp"
#include "text.hpp"

namespace pada {

namespace {

constexpr std::string_view kMagic = "PADM";

}  // namespace

std::vector<std::uint8_t> encode_mask(const Mask& mask) {
  detail::ByteWriter w;
  w.text(kMagic);
  w.u8(kMaskVersion);
  w.u32(static_cast<std::uint32_t>(mask.tensors.size()));
  for (const MaskTensor& t : mask.tensors) {
    w.string(t.name);
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u64(d);
    std::vector<std::uint8_t> packed((t.bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < t.bits.size(); ++i) {
      if (t.bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    w.bytes(packed);
  }
  const std::map<std::string, std::string> meta{
      {"rate", detail::format_number(mask.rate)},
      {"source", std::string(to_string(mask.source))},
  };
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [key, value] : meta) {
    w.string(key);
    w.string(value);
  }
  return std::move(w).take();
}

Mask decode_mask(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw Error(ErrorKind::bad_magic, "not a PADA mask");
  }
  detail::ByteReader r(bytes);
  r.take(kMagic.size(), "header");
  const std::uint8_t version = r.u8("header");
  if (version != kMaskVersion) {
    throw Error(ErrorKind::bad_version, "unsupported mask version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("header");
  Mask mask;
  for (std::uint32_t i = 0; i < count; ++i) {
    MaskTensor t;
    t.name = r.string("mask header");
    if (t.name.empty()) throw Error(ErrorKind::format, "mask entry with empty name");
    if (r.u8("mask header") != 1) {
      throw Error(ErrorKind::format, "mask entry '" + t.name + "' is not prunable");
    }
    const std::uint32_t rank = r.u32("mask header");
    if (rank > r.remaining() / 8) throw Error(ErrorKind::truncated, "truncated mask header");
    t.shape.resize(rank);
    for (auto& d : t.shape) d = static_cast<std::size_t>(r.u64("mask header"));
    const std::size_t n = element_count(t.shape);
    const std::size_t packed_len = n / 8 + (n % 8 != 0 ? 1 : 0);
    if (packed_len > r.remaining()) throw Error(ErrorKind::truncated, "truncated mask data");
    auto packed = r.take(packed_len, "mask data");
    t.bits.resize(n);
    for (std::size_t b = 0; b < n; ++b) t.bits[b] = (packed[b / 8] >> (b % 8)) & 1u;
    mask.tensors.push_back(std::move(t));
  }
  const std::uint32_t pairs = r.u32("metadata");
  for (std::uint32_t i = 0; i < pairs; ++i) {
    const std::string key = r.string("metadata");
    const std::string value = r.string("metadata");
    if (key == "rate") {
      mask.rate = detail::parse_double(value, "mask rate");
    } else if (key == "source") {
      mask.source = mask_source_from_string(value);
    }
  }
  if (!r.done()) throw Error(ErrorKind::format, "trailing bytes after mask metadata");
  return mask;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, encode_mask(mask));
}

Mask load_mask(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_mask(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace pada

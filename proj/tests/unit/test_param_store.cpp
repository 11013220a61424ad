#include <bit>
#include <cstring>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pada/checkpoint.hpp"
#include "pada/error.hpp"
#include "pada/file_util.hpp"
#include "pada/param_store.hpp"
#include "temp_dir.hpp"

using namespace pada;
using pada::testing::TempDir;

namespace {

ParameterSet two_tensor_set() {
  ParameterSet ps(Role::finetuned_donor);
  ps.add(make_tensor("w", {2, 3}, {0.5f, -1.0f, 2.0f, 0.0f, -0.0f, 3.25f}));
  ps.add(make_tensor("b", {2}, {0.1f, -0.2f}));
  return ps;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected pada::Error");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("prunable flag defaults by rank") {
  CHECK(make_tensor("w", {2, 2}, {1, 2, 3, 4}).prunable);
  CHECK_FALSE(make_tensor("b", {4}, {1, 2, 3, 4}).prunable);
  CHECK(make_tensor("b", {4}, {1, 2, 3, 4}, true).prunable);
}

TEST_CASE("tensor and set invariants are enforced") {
  CHECK(kind_of([] { make_tensor("w", {2, 2}, {1, 2, 3}); }) == ErrorKind::format);
  CHECK(kind_of([] { make_tensor("", {1}, {1}); }) == ErrorKind::format);
  CHECK(kind_of([] { make_tensor("w", {0, 2}, {}); }) == ErrorKind::format);
  ParameterSet ps;
  ps.add(make_tensor("w", {1}, {1}));
  CHECK(kind_of([&] { ps.add(make_tensor("w", {1}, {2})); }) == ErrorKind::format);
}

TEST_CASE("save then load reproduces a two-tensor set") {
  TempDir dir;
  const auto ps = two_tensor_set();
  save_checkpoint(ps, dir / "a.pada", {{"seed", "7"}});
  const auto ck = read_checkpoint(dir / "a.pada");
  CHECK(ck.params == ps);
  CHECK(ck.metadata.at("seed") == "7");
  CHECK(ck.metadata.at("role") == "finetuned_donor");
  CHECK(load_checkpoint(dir / "a.pada") == ps);
}

TEST_CASE("empty set encodes a zero tensor count") {
  const auto bytes = encode_checkpoint(ParameterSet{});
  REQUIRE(bytes.size() >= 9);
  CHECK(std::memcmp(bytes.data(), "PADA", 4) == 0);
  CHECK(bytes[4] == kCheckpointVersion);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 0);
  CHECK(bytes[7] == 0);
  CHECK(bytes[8] == 0);
  const auto back = decode_checkpoint(bytes);
  CHECK(back.params.empty());
}

TEST_CASE("byte layout of a one-tensor checkpoint") {
  ParameterSet ps;
  ps.add(make_tensor("w", {2}, {1.0f, -2.0f}, true));
  const std::vector<std::uint8_t> expected{
      'P', 'A', 'D', 'A', 0x01,                          // magic, version
      0x01, 0x00, 0x00, 0x00,                            // tensor count
      0x01, 0x00, 0x00, 0x00, 'w',                       // name
      0x01,                                              // prunable
      0x01, 0x00, 0x00, 0x00,                            // rank
      0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,    // dim 0
      0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0,    // 1.0f, -2.0f
      0x01, 0x00, 0x00, 0x00,                            // metadata pairs
      0x04, 0x00, 0x00, 0x00, 'r', 'o', 'l', 'e',
      0x0a, 0x00, 0x00, 0x00, 'p', 'r', 'e', 't', 'r', 'a', 'i', 'n', 'e', 'd'};
  CHECK(encode_checkpoint(ps) == expected);
}

TEST_CASE("subnormal values survive bit-exactly") {
  ParameterSet ps;
  const float sub = 1e-45f;
  REQUIRE(std::bit_cast<std::uint32_t>(sub) == 1u);
  ps.add(make_tensor("w", {3}, {sub, -sub, std::numeric_limits<float>::denorm_min() * 7}));
  const auto back = decode_checkpoint(encode_checkpoint(ps)).params;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::bit_cast<std::uint32_t>(back[0].data[i]) ==
          std::bit_cast<std::uint32_t>(ps[0].data[i]));
  }
}

TEST_CASE("decode rejects malformed files with distinct kinds") {
  auto bytes = encode_checkpoint(two_tensor_set());

  SUBCASE("wrong magic") {
    bytes[0] = 'X';
    try {
      decode_checkpoint(bytes);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::bad_magic);
      CHECK(std::string(e.what()) == "not a PADA checkpoint");
    }
  }
  SUBCASE("unsupported version") {
    bytes[4] = 9;
    CHECK(kind_of([&] { decode_checkpoint(bytes); }) == ErrorKind::bad_version);
  }
  SUBCASE("truncated payload") {
    // Cut inside the first tensor's float payload.
    const std::size_t header = 4 + 1 + 4 + 4 + 1 + 1 + 4 + 16;
    bytes.resize(header + 10);
    try {
      decode_checkpoint(bytes);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::truncated);
      CHECK(std::string(e.what()) == "truncated tensor data");
    }
  }
  SUBCASE("truncated header") {
    bytes.resize(7);
    CHECK(kind_of([&] { decode_checkpoint(bytes); }) == ErrorKind::truncated);
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(0);
    CHECK(kind_of([&] { decode_checkpoint(bytes); }) == ErrorKind::format);
  }
}

TEST_CASE("I/O failures name the path") {
  TempDir dir;
  const auto missing = dir / "nope" / "x.pada";
  try {
    load_checkpoint(missing);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
  }
  CHECK(kind_of([&] { save_checkpoint(two_tensor_set(), missing); }) == ErrorKind::io);
}

TEST_CASE("round trip is bit-exact on random sets") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    auto ps = pada::testing::random_parameter_set(rng);
    ps.set_role(static_cast<Role>(trial % 4));
    const auto back = decode_checkpoint(encode_checkpoint(ps)).params;
    REQUIRE(back == ps);
  }
}

TEST_CASE("flat prunable view") {
  SUBCASE("declared order") {
    ParameterSet ps;
    ps.add(make_tensor("a", {3}, {1, 2, 3}, true));
    ps.add(make_tensor("skip", {2}, {9, 9}, false));
    ps.add(make_tensor("b", {2}, {4, 5}, true));
    const auto view = flat_prunable_view(ps);
    REQUIRE(view.size() == 5);
    const float expected[] = {1, 2, 3, 4, 5};
    for (std::size_t i = 0; i < 5; ++i) CHECK(view[i].value == expected[i]);
    CHECK(view[3].tensor_index == 2);
    CHECK(view[3].element_index == 0);
  }
  SUBCASE("nothing prunable") {
    ParameterSet ps;
    ps.add(make_tensor("b", {2}, {1, 2}));
    CHECK(flat_prunable_view(ps).empty());
  }
  SUBCASE("length matches an independent count and order ignores values") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const auto ps = pada::testing::random_parameter_set(rng);
      std::size_t count = 0;
      for (std::size_t t = 0; t < ps.size(); ++t) {
        if (ps[t].prunable) count += ps[t].data.size();
      }
      const auto view = flat_prunable_view(ps);
      CHECK(view.size() == count);
      CHECK(ps.prunable_count() == count);

      auto shuffled = ps;
      for (std::size_t t = 0; t < shuffled.size(); ++t) {
        for (auto& v : shuffled[t].data) v = -v * 3.0f + 1.0f;
      }
      const auto other = flat_prunable_view(shuffled);
      REQUIRE(other.size() == view.size());
      for (std::size_t i = 0; i < view.size(); ++i) {
        CHECK(view[i].tensor_index == other[i].tensor_index);
        CHECK(view[i].element_index == other[i].element_index);
      }
    }
  }
}

TEST_CASE("shapes_compatible") {
  const auto a = two_tensor_set();
  CHECK(shapes_compatible(a, a));

  auto values = a;
  values[0].data[0] = 42.0f;
  values.set_role(Role::adapted);
  CHECK(shapes_compatible(a, values));

  ParameterSet dims;
  dims.add(make_tensor("w", {3, 2}, std::vector<float>(6, 0.0f)));
  dims.add(make_tensor("b", {2}, {0, 0}));
  CHECK_FALSE(shapes_compatible(a, dims));

  auto flags = a;
  flags[1].prunable = true;
  CHECK_FALSE(shapes_compatible(a, flags));

  auto extra = a;
  extra.add(make_tensor("c", {1}, {0}));
  CHECK_FALSE(shapes_compatible(a, extra));
  CHECK(first_structural_mismatch(a, extra).find("'c'") != std::string::npos);
}

TEST_CASE("shapes_compatible is an equivalence on random structures") {
  std::mt19937_64 rng(9);
  std::vector<ParameterSet> sets;
  for (int i = 0; i < 30; ++i) {
    auto ps = pada::testing::random_parameter_set(rng, 4);
    sets.push_back(ps);
    sets.push_back(ps);  // structurally equal copy
  }
  for (const auto& a : sets) {
    CHECK(shapes_compatible(a, a));
    for (const auto& b : sets) {
      CHECK(shapes_compatible(a, b) == shapes_compatible(b, a));
      if (!shapes_compatible(a, b)) continue;
      for (const auto& c : sets) {
        if (shapes_compatible(b, c)) CHECK(shapes_compatible(a, c));
      }
    }
  }
}

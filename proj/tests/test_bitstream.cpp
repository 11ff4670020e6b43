// Copyright 2026 The gtic Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <string>

#include "doctest.h"
#include "gtic/bitstream.hpp"

using namespace gtic;

namespace {

StreamHeader header_for(int rows, int cols, int K, int L) {
  StreamHeader h;
  h.orig_h = static_cast<std::uint32_t>(rows * 8);
  h.orig_w = static_cast<std::uint32_t>(cols * 8);
  h.pad_h = h.orig_h;
  h.pad_w = h.orig_w;
  h.channels = static_cast<std::uint16_t>(K);
  h.depth = static_cast<std::uint8_t>(L);
  return h;
}

// Random tensor with the channel-prefix mask structure: each position keeps
// a random number of leading channels, zeros above.
ITensor random_masked_tensor(int rows, int cols, int K, int L, Rng& rng) {
  ITensor z({rows, cols, K});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int keep = 1 + static_cast<int>(rng.next_below(K));
      for (int k = 0; k < keep; ++k)
        z.at3(r, c, k) = static_cast<std::int32_t>(rng.next_below(1u << L));
    }
  return z;
}

bool tensors_equal(const ITensor& a, const ITensor& b) {
  if (a.dims() != b.dims()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("fixed code table matches 1 / 01 / 001 / 0001 with 5-bit EOC") {
  CodeTable t = CodeTable::paper_fixed(2);
  REQUIRE(t.size() == 5);
  for (int s = 0; s < 5; ++s) {
    CHECK(t.length(s) == s + 1);
    CHECK(t.bits(s) == 1);  // s zeros then a one
  }
  CHECK(t.is_prefix_free());
  CHECK(t.kraft_sum() <= 1.0);
}

TEST_CASE("huffman lengths for counts 8/4/2/1/1") {
  CodeTable t = CodeTable::from_histogram({8, 4, 2, 1, 1}, 2);
  CHECK(t.length(0) == 1);
  CHECK(t.length(1) == 2);
  CHECK(t.length(2) == 3);
  CHECK(t.length(3) == 4);
  CHECK(t.length(4) == 4);
  CHECK(t.is_prefix_free());
  CHECK(t.kraft_sum() <= 1.0);
}

TEST_CASE("single nonzero count gets a 1-bit codeword") {
  CodeTable t = CodeTable::from_histogram({0, 7, 0, 0, 0}, 2);
  CHECK(t.length(1) == 1);
  CHECK_FALSE(t.has_code(0));
  CHECK(t.is_prefix_free());
}

TEST_CASE("empty histogram is rejected") {
  CHECK_THROWS_AS(CodeTable::from_histogram({0, 0, 0, 0, 0}, 2), Error);
}

TEST_CASE("every built table is prefix-free with Kraft sum <= 1") {
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint64_t> counts(5, 0);
    int nonzero = 0;
    for (auto& c : counts)
      if (rng.uniform(0, 1) < 0.7) {
        c = 1 + rng.next_below(1000);
        ++nonzero;
      }
    if (!nonzero) counts[rng.next_below(5)] = 3;
    CodeTable t = CodeTable::from_histogram(counts, 2);
    CHECK(t.is_prefix_free());
    CHECK(t.kraft_sum() <= 1.0 + 1e-12);
  }
}

TEST_CASE("symbols 0,0,1 emit bits 1101 under the fixed code") {
  ITensor z({1, 3, 1});
  z.at3(0, 0, 0) = 0;
  z.at3(0, 1, 0) = 0;
  z.at3(0, 2, 0) = 1;
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), header_for(1, 3, 1, 2));
  // "1" "1" "01" then EOC "00001" -> 110100001, padded to 0xD0 0x80.
  CHECK(bs.payload_bits == 9);
  REQUIRE(bs.payload.size() == 2);
  CHECK(bs.payload[0] == 0xD0);
  CHECK(bs.payload[1] == 0x80);
  auto dec = decode_stream(bs.serialize());
  CHECK(tensors_equal(dec.z, z));
}

TEST_CASE("2x2 channel with bottom row 1,2 encodes to 0100100001") {
  ITensor z({2, 2, 1});
  z.at3(1, 0, 0) = 1;  // bottom row, scanned first
  z.at3(1, 1, 0) = 2;
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), header_for(2, 2, 1, 2));
  CHECK(bs.payload_bits == 10);
  REQUIRE(bs.payload.size() == 2);
  CHECK(bs.payload[0] == 0x48);  // 01001000
  CHECK(bs.payload[1] == 0x40);  // 01......
  auto dec = decode_stream(bs.serialize());
  CHECK(tensors_equal(dec.z, z));
}

TEST_CASE("all-zero channel emits exactly one EOC") {
  ITensor z({2, 2, 1});
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), header_for(2, 2, 1, 2));
  CHECK(bs.payload_bits == 5);  // "00001"
  CHECK(bs.payload[0] == 0x08);
}

TEST_CASE("K consecutive EOCs decode to an all-zero tensor") {
  const int K = 3;
  ITensor z({2, 2, K});
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), header_for(2, 2, K, 2));
  CHECK(bs.payload_bits == 5 * K);
  auto dec = decode_stream(bs.serialize());
  for (std::size_t i = 0; i < dec.z.size(); ++i) CHECK(dec.z[i] == 0);
}

TEST_CASE("round trip: exhaustive 1x2x1 tensors over C_2") {
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      ITensor z({1, 2, 1});
      z.at3(0, 0, 0) = a;
      z.at3(0, 1, 0) = b;
      for (bool adaptive : {false, true}) {
        CodeTable t = adaptive
                          ? CodeTable::from_histogram(stream_histogram(z, 2), 2)
                          : CodeTable::paper_fixed(2);
        Bitstream bs = encode_stream(z, t, header_for(1, 2, 1, 2));
        auto dec = decode_stream(bs.serialize());
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(adaptive);
        CHECK(tensors_equal(dec.z, z));
      }
    }
}

TEST_CASE("round trip: randomized masked tensors, both table modes") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng.next_below(8));
    const int cols = 1 + static_cast<int>(rng.next_below(8));
    const int K = 1 + static_cast<int>(rng.next_below(16));
    ITensor z = random_masked_tensor(rows, cols, K, 2, rng);
    StreamHeader h = header_for(rows, cols, K, 2);
    const bool adaptive = trial % 2 == 0;
    CodeTable t = adaptive
                      ? CodeTable::from_histogram(stream_histogram(z, 2), 2)
                      : CodeTable::paper_fixed(2);
    Bitstream bs = encode_stream(z, t, h);
    auto dec = decode_stream(bs.serialize());
    CHECK(tensors_equal(dec.z, z));
    CHECK(dec.header.orig_h == h.orig_h);
    CHECK(dec.header.channels == h.channels);
  }
}

TEST_CASE("raw fixed-width payload round trips") {
  Rng rng(7);
  ITensor z = random_masked_tensor(3, 5, 4, 2, rng);
  Bitstream bs = encode_stream_raw(z, header_for(3, 5, 4, 2));
  CHECK(bs.payload_bits == 3ull * 5 * 4 * 2);
  auto dec = decode_stream(bs.serialize());
  CHECK(dec.header.raw_payload);
  CHECK(tensors_equal(dec.z, z));
}

TEST_CASE("zeroing a nonzero symbol never lengthens the fixed-code payload") {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    ITensor z = random_masked_tensor(4, 4, 6, 2, rng);
    StreamHeader h = header_for(4, 4, 6, 2);
    CodeTable t = CodeTable::paper_fixed(2);
    const auto base = encode_stream(z, t, h).payload_bits;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] == 0) continue;
      ITensor zz = z;
      zz[i] = 0;
      CHECK(encode_stream(zz, t, h).payload_bits <= base);
    }
  }
}

TEST_CASE("identical inputs give bitwise identical files") {
  Rng rng(5);
  ITensor z = random_masked_tensor(5, 7, 3, 2, rng);
  StreamHeader h = header_for(5, 7, 3, 2);
  h.shift_n = -0.75f;
  CodeTable t = CodeTable::from_histogram(stream_histogram(z, 2), 2);
  auto a = encode_stream(z, t, h).serialize();
  auto b = encode_stream(z, t, h).serialize();
  CHECK(a == b);
}

TEST_CASE("single payload bit flips never crash: symbols change or decode rejects") {
  Rng rng(1234);
  ITensor z = random_masked_tensor(4, 4, 4, 2, rng);
  StreamHeader h = header_for(4, 4, 4, 2);
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), h);
  const auto bytes = bs.serialize();
  const std::size_t payload_start = bytes.size() - bs.payload.size();
  int changed = 0, rejected = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t bit =
        payload_start * 8 + rng.next_below(bs.payload.size() * 8);
    auto mutated = bytes;
    mutated[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    try {
      auto dec = decode_stream(mutated);
      CHECK_FALSE(tensors_equal(dec.z, z));
      ++changed;
    } catch (const Error&) {
      ++rejected;
    }
  }
  CHECK(changed + rejected == 300);
  // Both outcomes occur on this input.
  CHECK(changed > 0);
  CHECK(rejected > 0);
}

TEST_CASE("decode diagnostics are distinct") {
  ITensor z({2, 2, 2});
  z.at3(1, 0, 0) = 3;
  z.at3(0, 1, 1) = 1;
  StreamHeader h = header_for(2, 2, 2, 2);
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), h);
  auto bytes = bs.serialize();

  SUBCASE("truncated payload") {
    bytes.pop_back();
    CHECK_THROWS_WITH_AS(decode_stream(bytes), doctest::Contains("truncated"),
                         Error);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_stream(bytes), doctest::Contains("magic"),
                         Error);
  }
  SUBCASE("bad version") {
    bytes[4] = 9;
    CHECK_THROWS_WITH_AS(decode_stream(bytes), doctest::Contains("version"),
                         Error);
  }
  SUBCASE("symbol overflow past channel capacity") {
    // 1x1 spatial channel holding one symbol + EOC; a payload with two
    // symbols before EOC overflows.
    StreamHeader h1 = header_for(1, 1, 1, 2);
    ITensor one({1, 1, 1});
    one.at3(0, 0, 0) = 1;
    Bitstream ok = encode_stream(one, CodeTable::paper_fixed(2), h1);
    auto file = ok.serialize();
    // Hand-build payload "01 01 01 00001" = symbol 1 three times.
    const std::size_t payload_start = file.size() - ok.payload.size();
    file.resize(payload_start);
    file.push_back(0b01010100);  // 01 01 01 00
    file.push_back(0b00100000);  // 001 then pad
    CHECK_THROWS_WITH_AS(decode_stream(file), doctest::Contains("overflow"),
                         Error);
  }
}

TEST_CASE("bpp accounting") {
  CHECK(bpp_from_bytes(100, 64, 64) == doctest::Approx(800.0 / 4096.0));
  // Larger image, same payload: strictly smaller.
  CHECK(bpp_from_bytes(100, 128, 64) < bpp_from_bytes(100, 64, 64));
  // Header floor: an all-zero-channel stream still costs bytes.
  ITensor z({1, 1, 1});
  Bitstream bs = encode_stream(z, CodeTable::paper_fixed(2), header_for(1, 1, 1, 2));
  CHECK(bpp(bs, 8, 8) > 0.0);
  CHECK_THROWS_AS(bpp_from_bytes(10, 0, 5), Error);
}

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

#ifndef GTIC_BITSTREAM_HPP_
#define GTIC_BITSTREAM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gtic/tensor.hpp"

namespace gtic {

using ITensor = TensorT<std::int32_t>;

// Symbol alphabet for quantization depth L: {0 .. 2^L-1} plus one
// end-of-channel marker at index 2^L.
inline int alphabet_size(int L) { return (1 << L) + 1; }
inline int eoc_symbol(int L) { return 1 << L; }

enum class TableMode : std::uint8_t { kPaperFixed = 0, kAdaptive = 1 };

// Prefix code over the alphabet. The fixed table is the unary-style code
// 0->"1", 1->"01", 2->"001", 3->"0001" with EOC one zero longer; the
// adaptive table is a canonical Huffman code rebuilt from bit lengths.
class CodeTable {
 public:
  static CodeTable paper_fixed(int L);
  // Canonical Huffman from symbol counts (alphabet_size(L) entries).
  // Merge ties break on (count, symbol index); zero-count symbols get no
  // codeword.
  static CodeTable from_histogram(const std::vector<std::uint64_t>& counts,
                                  int L);
  // Rebuilds the canonical code from serialized bit lengths (0 = absent).
  static CodeTable from_lengths(const std::vector<std::uint8_t>& lengths,
                                int L);

  TableMode mode() const { return mode_; }
  int L() const { return L_; }
  int size() const { return static_cast<int>(lengths_.size()); }
  bool has_code(int symbol) const { return lengths_[symbol] != 0; }
  int length(int symbol) const { return lengths_[symbol]; }
  std::uint64_t bits(int symbol) const { return bits_[symbol]; }
  const std::vector<std::uint8_t>& lengths() const { return lengths_; }

  double kraft_sum() const;
  bool is_prefix_free() const;

 private:
  CodeTable() = default;
  void assign_canonical();

  TableMode mode_ = TableMode::kPaperFixed;
  int L_ = 0;
  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint64_t> bits_;
};

struct StreamHeader {
  std::uint32_t orig_h = 0, orig_w = 0;
  std::uint32_t pad_h = 0, pad_w = 0;
  std::uint16_t channels = 0;  // K
  std::uint8_t depth = 0;      // L
  bool adaptive_table = false;
  bool raw_payload = false;  // fixed-width packing, no entropy coding
  float shift_n = 0.0f;
};

struct Bitstream {
  StreamHeader header;
  std::vector<std::uint8_t> table_lengths;  // adaptive mode only
  std::vector<std::uint8_t> payload;        // zero-padded to a byte
  std::uint64_t payload_bits = 0;           // before padding

  std::vector<std::uint8_t> serialize() const;
  std::size_t byte_size() const;
};

// Channel-wise encode: rows scan bottom-to-top, left-to-right within a row.
// Each channel emits every symbol up to and including its last nonzero in
// scan order, then EOC; an all-zero channel emits just EOC.
Bitstream encode_stream(const ITensor& z, const CodeTable& table,
                        const StreamHeader& header);

// Fixed-width packing used by the no-entropy-coding ablation.
Bitstream encode_stream_raw(const ITensor& z, const StreamHeader& header);

struct DecodedStream {
  StreamHeader header;
  ITensor z;
};

DecodedStream decode_stream(const std::vector<std::uint8_t>& file_bytes);

// Histogram of exactly the symbols encode_stream would emit.
std::vector<std::uint64_t> stream_histogram(const ITensor& z, int L);

// Bits-on-disk per original pixel; the header counts.
double bpp(const Bitstream& bs, int orig_h, int orig_w);
double bpp_from_bytes(std::size_t file_bytes, int orig_h, int orig_w);

}  // namespace gtic

#endif  // GTIC_BITSTREAM_HPP_

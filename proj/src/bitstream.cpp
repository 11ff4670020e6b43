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

#include "gtic/bitstream.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace gtic {

namespace {

constexpr char kMagic[4] = {'G', 'T', 'I', 'C'};
constexpr std::uint8_t kVersion = 1;
constexpr int kMaxCodeLen = 57;

class BitWriter {
 public:
  void put(std::uint64_t bits, int len) {
    for (int i = len - 1; i >= 0; --i) put_bit((bits >> i) & 1u);
  }
  void put_bit(std::uint64_t b) {
    if (pos_ == 0) bytes_.push_back(0);
    if (b) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> pos_);
    pos_ = (pos_ + 1) & 7;
    ++count_;
  }
  std::uint64_t bit_count() const { return count_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  int pos_ = 0;  // bit position within the trailing byte, MSB first
  std::uint64_t count_ = 0;
};

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t size)
      : data_(data), size_(size) {}
  bool exhausted() const { return bit_ >= size_ * 8; }
  int next_bit() {
    GTIC_REQUIRE(!exhausted(), "truncated payload: bitstream ended early");
    const std::uint8_t byte = data_[bit_ >> 3];
    const int b = (byte >> (7 - (bit_ & 7))) & 1;
    ++bit_;
    return b;
  }
  // All remaining bits must be byte-boundary padding, i.e. zero.
  void require_zero_padding() const {
    GTIC_REQUIRE(size_ * 8 - bit_ < 8,
                 "corrupt stream: trailing bytes after final channel");
    for (std::uint64_t i = bit_; i < size_ * 8; ++i) {
      const int b = (data_[i >> 3] >> (7 - (i & 7))) & 1;
      GTIC_REQUIRE(b == 0, "corrupt stream: nonzero padding bit");
    }
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::uint64_t bit_ = 0;
};

struct LeWriter {
  std::vector<std::uint8_t> out;
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
  }
  void f32(float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u32(u);
  }
};

struct LeReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;
  void need(std::size_t n, const char* what) {
    GTIC_REQUIRE(pos + n <= size, "truncated header: missing ", what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data[pos++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = data[pos] | (data[pos + 1] << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    std::uint32_t u = u32(what);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
  }
};

// Scan order within one channel: bottom row first, each row left to right.
inline std::pair<int, int> scan_coords(int p, int rows, int cols) {
  return {rows - 1 - p / cols, p % cols};
}

void validate_z(const ITensor& z) {
  GTIC_REQUIRE(z.rank() == 3, "code tensor must be [H,W,K], got rank ",
               z.rank());
}

void validate_header(const StreamHeader& h) {
  GTIC_REQUIRE(h.channels >= 1, "header: K must be >= 1");
  GTIC_REQUIRE(h.depth >= 1 && h.depth <= 8, "header: L must lie in 1..8");
  GTIC_REQUIRE(h.pad_h >= h.orig_h && h.pad_w >= h.orig_w,
               "header: padded dims ", h.pad_h, "x", h.pad_w,
               " smaller than original ", h.orig_h, "x", h.orig_w);
  GTIC_REQUIRE(h.pad_h % 8 == 0 && h.pad_w % 8 == 0,
               "header: padded dims must be multiples of 8, got ", h.pad_h,
               "x", h.pad_w);
}

}  // namespace

CodeTable CodeTable::paper_fixed(int L) {
  GTIC_REQUIRE(L >= 1 && L <= 5,
               "paper-fixed code supports L in 1..5 (unary codewords), got ",
               L);
  CodeTable t;
  t.mode_ = TableMode::kPaperFixed;
  t.L_ = L;
  const int n = alphabet_size(L);
  t.lengths_.resize(n);
  t.bits_.assign(n, 1);  // s zeros then a single one
  for (int s = 0; s < n; ++s)
    t.lengths_[s] = static_cast<std::uint8_t>(s + 1);
  return t;
}

CodeTable CodeTable::from_histogram(const std::vector<std::uint64_t>& counts,
                                    int L) {
  const int n = alphabet_size(L);
  GTIC_REQUIRE(static_cast<int>(counts.size()) == n, "histogram must cover ",
               n, " symbols, got ", counts.size());
  int nonzero = 0;
  for (auto c : counts) nonzero += c > 0;
  GTIC_REQUIRE(nonzero >= 1, "empty histogram");

  CodeTable t;
  t.mode_ = TableMode::kAdaptive;
  t.L_ = L;
  t.lengths_.assign(n, 0);

  if (nonzero == 1) {
    for (int s = 0; s < n; ++s)
      if (counts[s] > 0) t.lengths_[s] = 1;
    t.assign_canonical();
    return t;
  }

  // Plain Huffman with (count, node index) ordering; leaf index = symbol,
  // internal nodes take fresh indices in creation order. Alphabets are tiny
  // so linear scans are fine.
  struct Node {
    std::uint64_t count;
    int index;
    int left = -1, right = -1;
    int symbol = -1;
    bool live = true;
  };
  std::vector<Node> nodes;
  for (int s = 0; s < n; ++s)
    if (counts[s] > 0)
      nodes.push_back({counts[s], s, -1, -1, s, true});
  int next_index = n;
  auto pick_min = [&]() {
    int best = -1;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      if (!nodes[i].live) continue;
      if (best < 0 || nodes[i].count < nodes[best].count ||
          (nodes[i].count == nodes[best].count &&
           nodes[i].index < nodes[best].index))
        best = i;
    }
    return best;
  };
  int live = static_cast<int>(nodes.size());
  while (live > 1) {
    const int a = pick_min();
    nodes[a].live = false;
    const int b = pick_min();
    nodes[b].live = false;
    nodes.push_back({nodes[a].count + nodes[b].count, next_index++, a, b, -1,
                     true});
    --live;
  }
  // Depth-first depth assignment from the surviving root.
  const int root = pick_min();
  std::vector<std::pair<int, int>> stack{{root, 0}};
  while (!stack.empty()) {
    auto [i, depth] = stack.back();
    stack.pop_back();
    if (nodes[i].symbol >= 0) {
      GTIC_REQUIRE(depth <= kMaxCodeLen, "huffman code deeper than ",
                   kMaxCodeLen, " bits");
      t.lengths_[nodes[i].symbol] = static_cast<std::uint8_t>(depth);
    } else {
      stack.push_back({nodes[i].left, depth + 1});
      stack.push_back({nodes[i].right, depth + 1});
    }
  }
  t.assign_canonical();
  return t;
}

CodeTable CodeTable::from_lengths(const std::vector<std::uint8_t>& lengths,
                                  int L) {
  const int n = alphabet_size(L);
  GTIC_REQUIRE(static_cast<int>(lengths.size()) == n,
               "code table must cover ", n, " symbols, got ", lengths.size());
  CodeTable t;
  t.mode_ = TableMode::kAdaptive;
  t.L_ = L;
  t.lengths_ = lengths;
  for (auto len : lengths)
    GTIC_REQUIRE(len <= kMaxCodeLen, "serialized code length ", int(len),
                 " exceeds ", kMaxCodeLen);
  t.assign_canonical();
  GTIC_REQUIRE(t.kraft_sum() <= 1.0 + 1e-12,
               "serialized code table violates the Kraft inequality");
  return t;
}

void CodeTable::assign_canonical() {
  const int n = static_cast<int>(lengths_.size());
  bits_.assign(n, 0);
  std::vector<int> order;
  for (int s = 0; s < n; ++s)
    if (lengths_[s] > 0) order.push_back(s);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (lengths_[a] != lengths_[b]) return lengths_[a] < lengths_[b];
    return a < b;
  });
  std::uint64_t code = 0;
  int prev_len = 0;
  for (int s : order) {
    code <<= (lengths_[s] - prev_len);
    bits_[s] = code;
    ++code;
    prev_len = lengths_[s];
  }
}

double CodeTable::kraft_sum() const {
  double sum = 0.0;
  for (auto len : lengths_)
    if (len > 0) sum += std::ldexp(1.0, -int(len));
  return sum;
}

bool CodeTable::is_prefix_free() const {
  const int n = static_cast<int>(lengths_.size());
  for (int a = 0; a < n; ++a) {
    if (!lengths_[a]) continue;
    for (int b = 0; b < n; ++b) {
      if (a == b || !lengths_[b]) continue;
      if (lengths_[a] > lengths_[b]) continue;
      if ((bits_[b] >> (lengths_[b] - lengths_[a])) == bits_[a]) return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> Bitstream::serialize() const {
  validate_header(header);
  LeWriter w;
  w.out.insert(w.out.end(), kMagic, kMagic + 4);
  w.u8(kVersion);
  w.u32(header.orig_h);
  w.u32(header.orig_w);
  w.u32(header.pad_h);
  w.u32(header.pad_w);
  w.u16(header.channels);
  w.u8(header.depth);
  std::uint8_t flags = 0;
  if (header.adaptive_table) flags |= 1;
  if (header.raw_payload) flags |= 2;
  w.u8(flags);
  w.f32(header.shift_n);
  if (header.adaptive_table) {
    w.u8(static_cast<std::uint8_t>(table_lengths.size()));
    for (auto len : table_lengths) w.u8(len);
  }
  w.out.insert(w.out.end(), payload.begin(), payload.end());
  return w.out;
}

std::size_t Bitstream::byte_size() const { return serialize().size(); }

Bitstream encode_stream(const ITensor& z, const CodeTable& table,
                        const StreamHeader& header) {
  validate_z(z);
  validate_header(header);
  const int rows = z.dim(0), cols = z.dim(1), K = z.dim(2);
  GTIC_REQUIRE(K == header.channels, "header K ", header.channels,
               " mismatches tensor channels ", K);
  const int eoc = eoc_symbol(table.L());

  BitWriter bw;
  for (int k = 0; k < K; ++k) {
    int last_nonzero = -1;
    for (int p = 0; p < rows * cols; ++p) {
      auto [r, c] = scan_coords(p, rows, cols);
      if (z.at3(r, c, k) != 0) last_nonzero = p;
    }
    for (int p = 0; p <= last_nonzero; ++p) {
      auto [r, c] = scan_coords(p, rows, cols);
      const int s = z.at3(r, c, k);
      GTIC_REQUIRE(s >= 0 && s < eoc && table.has_code(s), "symbol ", s,
                   " outside the code table's alphabet");
      bw.put(table.bits(s), table.length(s));
    }
    GTIC_REQUIRE(table.has_code(eoc), "code table lacks a termination code");
    bw.put(table.bits(eoc), table.length(eoc));
  }

  Bitstream bs;
  bs.header = header;
  bs.header.adaptive_table = table.mode() == TableMode::kAdaptive;
  bs.header.raw_payload = false;
  if (bs.header.adaptive_table) bs.table_lengths = table.lengths();
  bs.payload_bits = bw.bit_count();
  bs.payload = bw.take();
  return bs;
}

Bitstream encode_stream_raw(const ITensor& z, const StreamHeader& header) {
  validate_z(z);
  validate_header(header);
  const int rows = z.dim(0), cols = z.dim(1), K = z.dim(2);
  GTIC_REQUIRE(K == header.channels, "header K ", header.channels,
               " mismatches tensor channels ", K);
  const int L = header.depth;
  BitWriter bw;
  for (int k = 0; k < K; ++k)
    for (int p = 0; p < rows * cols; ++p) {
      auto [r, c] = scan_coords(p, rows, cols);
      const int s = z.at3(r, c, k);
      GTIC_REQUIRE(s >= 0 && s < (1 << L), "symbol ", s,
                   " does not fit in ", L, " bits");
      bw.put(static_cast<std::uint64_t>(s), L);
    }
  Bitstream bs;
  bs.header = header;
  bs.header.adaptive_table = false;
  bs.header.raw_payload = true;
  bs.payload_bits = bw.bit_count();
  bs.payload = bw.take();
  return bs;
}

DecodedStream decode_stream(const std::vector<std::uint8_t>& file_bytes) {
  LeReader r{file_bytes.data(), file_bytes.size()};
  r.need(4, "magic");
  GTIC_REQUIRE(std::memcmp(file_bytes.data(), kMagic, 4) == 0,
               "bad magic: not a gtic stream");
  r.pos = 4;
  const std::uint8_t version = r.u8("version");
  GTIC_REQUIRE(version == kVersion, "unsupported stream version ",
               int(version), ", expected ", int(kVersion));
  StreamHeader h;
  h.orig_h = r.u32("original height");
  h.orig_w = r.u32("original width");
  h.pad_h = r.u32("padded height");
  h.pad_w = r.u32("padded width");
  h.channels = r.u16("channel count");
  h.depth = r.u8("quantization depth");
  const std::uint8_t flags = r.u8("flags");
  GTIC_REQUIRE((flags & ~0x03u) == 0, "unknown header flags 0x",
               int(flags));
  h.adaptive_table = flags & 1;
  h.raw_payload = flags & 2;
  h.shift_n = r.f32("shift n");
  validate_header(h);
  GTIC_REQUIRE(!(h.adaptive_table && h.raw_payload),
               "header: raw payload cannot carry a code table");

  std::vector<std::uint8_t> table_lengths;
  if (h.adaptive_table) {
    const int n = r.u8("table size");
    GTIC_REQUIRE(n == alphabet_size(h.depth), "table size ", n,
                 " mismatches alphabet for L=", int(h.depth));
    table_lengths.resize(n);
    for (int i = 0; i < n; ++i) table_lengths[i] = r.u8("code length");
  }

  const int rows = static_cast<int>(h.pad_h) / 8;
  const int cols = static_cast<int>(h.pad_w) / 8;
  const int K = h.channels;
  ITensor z({rows, cols, K});
  BitReader br(file_bytes.data() + r.pos, file_bytes.size() - r.pos);

  if (h.raw_payload) {
    const int L = h.depth;
    for (int k = 0; k < K; ++k)
      for (int p = 0; p < rows * cols; ++p) {
        std::int32_t s = 0;
        for (int i = 0; i < L; ++i) s = (s << 1) | br.next_bit();
        auto [rr, cc] = scan_coords(p, rows, cols);
        z.at3(rr, cc, k) = s;
      }
    br.require_zero_padding();
    return {h, std::move(z)};
  }

  const CodeTable table =
      h.adaptive_table ? CodeTable::from_lengths(table_lengths, h.depth)
                       : CodeTable::paper_fixed(h.depth);
  const int eoc = eoc_symbol(h.depth);
  int max_len = 0;
  for (int s = 0; s < table.size(); ++s)
    max_len = std::max(max_len, table.length(s));
  for (int k = 0; k < K; ++k) {
    int p = 0;
    for (;;) {
      std::uint64_t acc = 0;
      int len = 0;
      int symbol = -1;
      while (symbol < 0) {
        acc = (acc << 1) | static_cast<std::uint64_t>(br.next_bit());
        ++len;
        GTIC_REQUIRE(len <= max_len,
                     "invalid codeword: no table entry matches");
        for (int s = 0; s < table.size(); ++s)
          if (table.length(s) == len && table.bits(s) == acc) {
            symbol = s;
            break;
          }
      }
      if (symbol == eoc) break;
      GTIC_REQUIRE(p < rows * cols, "symbol overflow: channel ", k,
                   " exceeds ", rows * cols, " positions");
      auto [rr, cc] = scan_coords(p, rows, cols);
      z.at3(rr, cc, k) = symbol;
      ++p;
    }
  }
  br.require_zero_padding();
  return {h, std::move(z)};
}

std::vector<std::uint64_t> stream_histogram(const ITensor& z, int L) {
  validate_z(z);
  const int rows = z.dim(0), cols = z.dim(1), K = z.dim(2);
  std::vector<std::uint64_t> counts(alphabet_size(L), 0);
  for (int k = 0; k < K; ++k) {
    int last_nonzero = -1;
    for (int p = 0; p < rows * cols; ++p) {
      auto [r, c] = scan_coords(p, rows, cols);
      if (z.at3(r, c, k) != 0) last_nonzero = p;
    }
    for (int p = 0; p <= last_nonzero; ++p) {
      auto [r, c] = scan_coords(p, rows, cols);
      const int s = z.at3(r, c, k);
      GTIC_REQUIRE(s >= 0 && s < (1 << L), "symbol ", s,
                   " outside C_L for L=", L);
      ++counts[s];
    }
    ++counts[eoc_symbol(L)];
  }
  return counts;
}

double bpp(const Bitstream& bs, int orig_h, int orig_w) {
  return bpp_from_bytes(bs.byte_size(), orig_h, orig_w);
}

double bpp_from_bytes(std::size_t file_bytes, int orig_h, int orig_w) {
  GTIC_REQUIRE(orig_h > 0 && orig_w > 0, "bpp needs positive dims, got ",
               orig_h, "x", orig_w);
  return static_cast<double>(file_bytes) * 8.0 /
         (static_cast<double>(orig_h) * orig_w);
}

}  // namespace gtic

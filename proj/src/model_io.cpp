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

#include "gtic/model_io.hpp"

#include <cstring>
#include <fstream>

namespace gtic {

namespace {

constexpr char kMagic[] = "GTICMDL";  // 7 bytes
constexpr std::uint8_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 28;

void put_u16(std::ofstream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}
void put_u32(std::ofstream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

struct Reader {
  std::ifstream in;
  std::string path;
  void need(std::size_t n, const char* what) {
    GTIC_REQUIRE(in.good(), "'", path, "': truncated model file at ", what);
    (void)n;
  }
  std::uint8_t u8(const char* what) {
    char c;
    in.get(c);
    need(1, what);
    return static_cast<std::uint8_t>(c);
  }
  std::uint16_t u16(const char* what) {
    std::uint16_t v = u8(what);
    v |= static_cast<std::uint16_t>(u8(what)) << 8;
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(u8(what)) << (8 * i);
    return v;
  }
};

// Exact scalar <-> f32 helpers for checkpoint metadata; 64-bit quantities
// split into 16-bit halves so every value survives the float container.
std::vector<std::pair<std::string, Tensor>> meta_tensors(
    const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, Tensor>> out;
  auto scalar = [&](const std::string& name, float v) {
    out.emplace_back(name, Tensor::full({1}, v));
  };
  auto split64 = [&](const std::string& name, std::uint64_t v) {
    scalar(name + "_0", static_cast<float>(v & 0xffff));
    scalar(name + "_1", static_cast<float>((v >> 16) & 0xffff));
    scalar(name + "_2", static_cast<float>((v >> 32) & 0xffff));
    scalar(name + "_3", static_cast<float>((v >> 48) & 0xffff));
  };
  const TrainConfig& c = ckpt.cfg;
  scalar("meta.cfg.K", static_cast<float>(c.K));
  scalar("meta.cfg.L", static_cast<float>(c.L));
  scalar("meta.cfg.B", static_cast<float>(c.B));
  scalar("meta.cfg.alpha1", c.alpha1);
  scalar("meta.cfg.alpha2", c.alpha2);
  scalar("meta.cfg.alpha3", c.alpha3);
  scalar("meta.cfg.beta1", c.beta1);
  scalar("meta.cfg.beta2", c.beta2);
  scalar("meta.cfg.beta3", c.beta3);
  scalar("meta.cfg.eta", c.eta);
  scalar("meta.cfg.kappa", c.kappa);
  scalar("meta.cfg.epochs", static_cast<float>(c.epochs));
  scalar("meta.cfg.lr_initial", c.lr_initial);
  scalar("meta.cfg.lr_switch_epoch", static_cast<float>(c.lr_switch_epoch));
  scalar("meta.cfg.lr_final", c.lr_final);
  scalar("meta.cfg.n_mode", c.n_mode == NMode::kTunable ? 0.0f : 1.0f);
  scalar("meta.cfg.n_fixed", c.n_fixed);
  scalar("meta.cfg.gan", c.gan ? 1.0f : 0.0f);
  scalar("meta.cfg.masker", c.masker ? 1.0f : 0.0f);
  scalar("meta.cfg.entropy", c.entropy ? 1.0f : 0.0f);
  scalar("meta.cfg.g_loss",
         c.g_loss == GLossForm::kSaturating ? 0.0f : 1.0f);
  scalar("meta.cfg.checkpoint_interval",
         static_cast<float>(c.checkpoint_interval));
  split64("meta.cfg.seed", c.seed);
  split64("meta.epoch", static_cast<std::uint64_t>(ckpt.epoch));
  split64("meta.opt_g.step", static_cast<std::uint64_t>(ckpt.opt_g.step));
  split64("meta.opt_d.step", static_cast<std::uint64_t>(ckpt.opt_d.step));
  scalar("meta.opt_g.lr", ckpt.opt_g.learning_rate);
  scalar("meta.opt_d.lr", ckpt.opt_d.learning_rate);
  return out;
}

class MetaLookup {
 public:
  explicit MetaLookup(
      const std::vector<std::pair<std::string, Tensor>>& tensors) {
    for (const auto& [name, t] : tensors)
      if (name.rfind("meta.", 0) == 0 && t.size() == 1)
        values_.emplace_back(name, t[0]);
  }
  float scalar(const std::string& name) const {
    for (const auto& [n, v] : values_)
      if (n == name) return v;
    fail("model file missing metadata field '", name, "'");
  }
  std::uint64_t u64(const std::string& name) const {
    std::uint64_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<std::uint32_t>(scalar(name + "_" + std::to_string(i))))
           << (16 * i);
    return v;
  }

 private:
  std::vector<std::pair<std::string, float>> values_;
};

}  // namespace

void write_tensor_container(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  GTIC_REQUIRE(out.good(), "cannot write model file '", path, "'");
  out.write(kMagic, 7);
  out.put(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    GTIC_REQUIRE(name.size() <= 0xffff, "tensor name too long: '", name, "'");
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    out.put(static_cast<char>(t.rank()));
    for (int i = 0; i < t.rank(); ++i)
      put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits;
      float v = t[i];
      std::memcpy(&bits, &v, 4);
      put_u32(out, bits);
    }
  }
  GTIC_REQUIRE(out.good(), "short write to model file '", path, "'");
}

std::vector<std::pair<std::string, Tensor>> read_tensor_container(
    const std::string& path) {
  Reader r;
  r.path = path;
  r.in.open(path, std::ios::binary);
  GTIC_REQUIRE(r.in.good(), "cannot open model file '", path, "'");
  char magic[7];
  r.in.read(magic, 7);
  GTIC_REQUIRE(r.in.gcount() == 7 && std::memcmp(magic, kMagic, 7) == 0, "'",
               path, "': bad magic, not a gtic model file");
  const std::uint8_t version = r.u8("version");
  GTIC_REQUIRE(version == kVersion, "'", path, "': model version ",
               int(version), " unsupported, expected ", int(kVersion));
  const std::uint32_t count = r.u32("tensor count");
  std::vector<std::pair<std::string, Tensor>> tensors;
  tensors.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint16_t name_len = r.u16("name length");
    std::string name(name_len, '\0');
    r.in.read(name.data(), name_len);
    GTIC_REQUIRE(r.in.gcount() == name_len, "'", path,
                 "': truncated tensor name");
    const int rank = r.u8("rank");
    GTIC_REQUIRE(rank >= 1 && rank <= 4, "'", path, "': tensor '", name,
                 "' has invalid rank ", rank);
    std::vector<int> dims(rank);
    std::uint64_t total = 1;
    for (int i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32("dim");
      GTIC_REQUIRE(d >= 1 && d <= kMaxDim, "'", path, "': tensor '", name,
                   "' dim overflow: ", d);
      dims[i] = static_cast<int>(d);
      total *= d;
      GTIC_REQUIRE(total <= kMaxDim, "'", path, "': tensor '", name,
                   "' dim overflow: ", total, " elements");
    }
    Tensor tensor(dims);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const std::uint32_t bits = r.u32("tensor data");
      float v;
      std::memcpy(&v, &bits, 4);
      tensor[i] = v;
    }
    tensors.emplace_back(std::move(name), std::move(tensor));
  }
  return tensors;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::vector<std::pair<std::string, Tensor>> tensors = meta_tensors(ckpt);
  for (const auto& [name, t] : ckpt.codec.items())
    tensors.emplace_back(name, t);
  for (const auto& [name, t] : ckpt.disc.items()) tensors.emplace_back(name, t);
  for (const auto& [name, t] : ckpt.opt_g.m1)
    tensors.emplace_back("opt_g.m1." + name, t);
  for (const auto& [name, t] : ckpt.opt_g.m2)
    tensors.emplace_back("opt_g.m2." + name, t);
  for (const auto& [name, t] : ckpt.opt_d.m1)
    tensors.emplace_back("opt_d.m1." + name, t);
  for (const auto& [name, t] : ckpt.opt_d.m2)
    tensors.emplace_back("opt_d.m2." + name, t);
  write_tensor_container(path, tensors);
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto tensors = read_tensor_container(path);
  MetaLookup meta(tensors);

  Checkpoint ckpt;
  TrainConfig& c = ckpt.cfg;
  c.K = static_cast<int>(meta.scalar("meta.cfg.K"));
  c.L = static_cast<int>(meta.scalar("meta.cfg.L"));
  c.B = static_cast<int>(meta.scalar("meta.cfg.B"));
  c.alpha1 = meta.scalar("meta.cfg.alpha1");
  c.alpha2 = meta.scalar("meta.cfg.alpha2");
  c.alpha3 = meta.scalar("meta.cfg.alpha3");
  c.beta1 = meta.scalar("meta.cfg.beta1");
  c.beta2 = meta.scalar("meta.cfg.beta2");
  c.beta3 = meta.scalar("meta.cfg.beta3");
  c.eta = meta.scalar("meta.cfg.eta");
  c.kappa = meta.scalar("meta.cfg.kappa");
  c.epochs = static_cast<int>(meta.scalar("meta.cfg.epochs"));
  c.lr_initial = meta.scalar("meta.cfg.lr_initial");
  c.lr_switch_epoch = static_cast<int>(meta.scalar("meta.cfg.lr_switch_epoch"));
  c.lr_final = meta.scalar("meta.cfg.lr_final");
  c.n_mode = meta.scalar("meta.cfg.n_mode") == 0.0f ? NMode::kTunable
                                                    : NMode::kFixed;
  c.n_fixed = meta.scalar("meta.cfg.n_fixed");
  c.gan = meta.scalar("meta.cfg.gan") != 0.0f;
  c.masker = meta.scalar("meta.cfg.masker") != 0.0f;
  c.entropy = meta.scalar("meta.cfg.entropy") != 0.0f;
  c.g_loss = meta.scalar("meta.cfg.g_loss") == 0.0f
                 ? GLossForm::kSaturating
                 : GLossForm::kNonSaturating;
  c.checkpoint_interval =
      static_cast<int>(meta.scalar("meta.cfg.checkpoint_interval"));
  c.seed = meta.u64("meta.cfg.seed");
  ckpt.epoch = static_cast<std::int64_t>(meta.u64("meta.epoch"));
  ckpt.opt_g.step = static_cast<std::int64_t>(meta.u64("meta.opt_g.step"));
  ckpt.opt_d.step = static_cast<std::int64_t>(meta.u64("meta.opt_d.step"));
  ckpt.opt_g.learning_rate = meta.scalar("meta.opt_g.lr");
  ckpt.opt_d.learning_rate = meta.scalar("meta.opt_d.lr");

  for (const auto& [name, t] : tensors) {
    if (name.rfind("meta.", 0) == 0) continue;
    if (name.rfind("opt_g.m1.", 0) == 0)
      ckpt.opt_g.m1.emplace(name.substr(9), t);
    else if (name.rfind("opt_g.m2.", 0) == 0)
      ckpt.opt_g.m2.emplace(name.substr(9), t);
    else if (name.rfind("opt_d.m1.", 0) == 0)
      ckpt.opt_d.m1.emplace(name.substr(9), t);
    else if (name.rfind("opt_d.m2.", 0) == 0)
      ckpt.opt_d.m2.emplace(name.substr(9), t);
    else if (name.rfind("disc.", 0) == 0)
      ckpt.disc.create(name, t.dims()) = t;
    else if (name.rfind("enc.", 0) == 0 || name.rfind("masker.", 0) == 0 ||
             name.rfind("dec.", 0) == 0)
      ckpt.codec.create(name, t.dims()) = t;
    else
      fail("'", path, "': unknown tensor '", name, "' in model file");
  }
  GTIC_REQUIRE(ckpt.codec.count() > 0, "'", path,
               "': model file carries no codec tensors");
  validate_train_config(ckpt.cfg);
  return ckpt;
}

}  // namespace gtic

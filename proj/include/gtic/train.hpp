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

#ifndef GTIC_TRAIN_HPP_
#define GTIC_TRAIN_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gtic/adversary.hpp"
#include "gtic/bitstream.hpp"
#include "gtic/optimizer.hpp"
#include "gtic/pipeline.hpp"

namespace gtic {

enum class NMode { kTunable, kFixed };
enum class GLossForm { kSaturating, kNonSaturating };

// Flat key=value config; keys match the field names below exactly and
// unknown keys are errors. Defaults are the full-scale training profile.
struct TrainConfig {
  int K = 16;
  int L = 2;
  int B = 8;
  float alpha1 = 0.5f, alpha2 = 0.25f, alpha3 = 0.25f;
  float beta1 = 0.5f, beta2 = 0.25f, beta3 = 0.25f;
  float eta = 1.0f;
  float kappa = 16.0f;
  int epochs = 128;
  float lr_initial = 2e-3f;
  int lr_switch_epoch = 64;
  float lr_final = 2e-4f;
  NMode n_mode = NMode::kTunable;  // tunable: n resampled per batch
  float n_fixed = 0.0f;
  bool gan = true;      // off: eta forced 0, discriminator untrained
  bool masker = true;   // off: importance matrix forced all-ones
  bool entropy = true;  // off: fixed-width symbol packing in .gtc files
  GLossForm g_loss = GLossForm::kSaturating;
  std::uint64_t seed = 1;
  int checkpoint_interval = 0;  // epochs between snapshots; 0 = final only
};

void validate_train_config(const TrainConfig& cfg);
TrainConfig parse_train_config_text(const std::string& text,
                                    const std::string& origin);
TrainConfig parse_train_config(const std::string& path);

struct Checkpoint {
  TrainConfig cfg;
  ParamStore codec;  // enc.*, masker.*, dec.*
  ParamStore disc;   // disc.*
  OptimizerState opt_g, opt_d;
  std::int64_t epoch = 0;
};

// Fresh parameter stores and optimizer state for the given config.
Checkpoint init_checkpoint(const TrainConfig& cfg);

struct Dataset {
  std::vector<std::string> paths;
  std::vector<Tensor> images;  // padded to multiples of 8
};

// Loads every *.ppm under dir (sorted by name); unreadable files are
// skipped with a warning, an empty result is an error.
Dataset load_dataset(const std::string& dir, std::ostream* log = nullptr);

// Order of dataset indices for one epoch: deterministic shuffle keyed by
// (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed,
                                     int epoch);

struct TrainResult {
  Checkpoint ckpt;
  std::vector<double> epoch_mse;  // mean distortion loss per epoch
  std::vector<double> epoch_adv;  // mean adversarial loss per epoch (gan)
};

// Alternating optimization: per batch the discriminator ascends the
// adversarial loss, then encoder+masker+decoder descend
// eta*(generator term) + kappa*MSE. In tunable mode n is resampled
// uniformly on [-2,2] before every batch. `snapshot_path` non-empty adds
// periodic checkpoint writes at cfg.checkpoint_interval.
TrainResult train(const Dataset& data, const TrainConfig& cfg,
                  std::ostream* log = nullptr,
                  const std::string& snapshot_path = "");

// Pads by edge replication, runs the inference pipeline at shift n and
// entropy-codes the result. Respects the checkpoint's masker/entropy
// ablation switches.
std::vector<std::uint8_t> compress_image(const Tensor& img, Checkpoint& ckpt,
                                         float n, TableMode table_mode);

Tensor decompress_bytes(const std::vector<std::uint8_t>& bytes,
                        Checkpoint& ckpt);

// The decoded symbols alongside the image, for lossless round-trip checks.
struct DecompressDetail {
  StreamHeader header;
  ITensor z;
  Tensor image;
};
DecompressDetail decompress_bytes_detail(const std::vector<std::uint8_t>& bytes,
                                         Checkpoint& ckpt);

}  // namespace gtic

#endif  // GTIC_TRAIN_HPP_

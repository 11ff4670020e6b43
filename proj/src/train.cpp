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

#include "gtic/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "gtic/image_io.hpp"
#include "gtic/model_io.hpp"

namespace gtic {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

float parse_float(const std::string& v, const std::string& key,
                  const std::string& origin) {
  try {
    std::size_t used = 0;
    const float f = std::stof(v, &used);
    GTIC_REQUIRE(used == v.size(), origin, ": key '", key,
                 "': trailing characters in '", v, "'");
    return f;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(origin, ": key '", key, "': cannot parse number '", v, "'");
  }
}

int parse_int(const std::string& v, const std::string& key,
              const std::string& origin) {
  try {
    std::size_t used = 0;
    const int i = std::stoi(v, &used);
    GTIC_REQUIRE(used == v.size(), origin, ": key '", key,
                 "': trailing characters in '", v, "'");
    return i;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(origin, ": key '", key, "': cannot parse integer '", v, "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key,
                const std::string& origin) {
  if (v == "on" || v == "1" || v == "true") return true;
  if (v == "off" || v == "0" || v == "false") return false;
  fail(origin, ": key '", key, "': expected on/off, got '", v, "'");
}

PipelineConfig pipeline_config_for(const TrainConfig& cfg, float n) {
  PipelineConfig p;
  p.channels = cfg.K;
  p.depth = cfg.L;
  p.alpha1 = cfg.alpha1;
  p.alpha2 = cfg.alpha2;
  p.alpha3 = cfg.alpha3;
  p.shift_n = n;
  p.masker_enabled = cfg.masker;
  return p;
}

LossWeights loss_weights_for(const TrainConfig& cfg) {
  LossWeights w;
  w.beta1 = cfg.beta1;
  w.beta2 = cfg.beta2;
  w.beta3 = cfg.beta3;
  w.eta = cfg.gan ? cfg.eta : 0.0f;
  w.kappa = cfg.kappa;
  return w;
}

Tensor assemble_batch(const Dataset& data,
                      const std::vector<std::size_t>& indices) {
  const Tensor& first = data.images[indices[0]];
  Tensor batch({static_cast<int>(indices.size()), first.dim(0), first.dim(1),
                first.dim(2)});
  const std::size_t per = first.size();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Tensor& img = data.images[indices[b]];
    GTIC_REQUIRE(img.dims() == first.dims(),
                 "training needs uniform image dims; got ", dims_str(img),
                 " vs ", dims_str(first));
    std::copy(img.data(), img.data() + per, batch.data() + b * per);
  }
  return batch;
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  GTIC_REQUIRE(cfg.K >= 1, "K must be >= 1, got ", cfg.K);
  GTIC_REQUIRE(cfg.L >= 1 && cfg.L <= 8, "L must lie in 1..8, got ", cfg.L);
  GTIC_REQUIRE(cfg.B >= 1, "B must be >= 1, got ", cfg.B);
  GTIC_REQUIRE(cfg.epochs >= 1, "epochs must be >= 1, got ", cfg.epochs);
  GTIC_REQUIRE(cfg.lr_initial > 0 && cfg.lr_final > 0,
               "learning rates must be > 0");
  GTIC_REQUIRE(cfg.lr_switch_epoch >= 0, "lr_switch_epoch must be >= 0");
  GTIC_REQUIRE(cfg.checkpoint_interval >= 0,
               "checkpoint_interval must be >= 0");
  const float asum = cfg.alpha1 + cfg.alpha2 + cfg.alpha3;
  GTIC_REQUIRE(cfg.alpha1 > 0 && cfg.alpha2 > 0 && cfg.alpha3 > 0 &&
                   std::fabs(asum - 1.0f) < 1e-5f,
               "alpha weights must be positive and sum to 1");
  const float bsum = cfg.beta1 + cfg.beta2 + cfg.beta3;
  GTIC_REQUIRE(cfg.beta1 > 0 && cfg.beta2 > 0 && cfg.beta3 > 0 &&
                   std::fabs(bsum - 1.0f) < 1e-5f,
               "beta weights must be positive and sum to 1");
  GTIC_REQUIRE(cfg.eta >= 0 && cfg.kappa >= 0,
               "loss weights must be non-negative");
  if (cfg.n_mode == NMode::kFixed)
    GTIC_REQUIRE(cfg.n_fixed >= -2.0f && cfg.n_fixed <= 2.0f,
                 "fixed n must lie in [-2,2], got ", cfg.n_fixed);
}

TrainConfig parse_train_config_text(const std::string& text,
                                    const std::string& origin) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    GTIC_REQUIRE(eq != std::string::npos, origin, ":", line_no,
                 ": expected key=value, got '", stripped, "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    GTIC_REQUIRE(!value.empty(), origin, ":", line_no, ": empty value for '",
                 key, "'");
    if (key == "K") cfg.K = parse_int(value, key, origin);
    else if (key == "L") cfg.L = parse_int(value, key, origin);
    else if (key == "B") cfg.B = parse_int(value, key, origin);
    else if (key == "alpha1") cfg.alpha1 = parse_float(value, key, origin);
    else if (key == "alpha2") cfg.alpha2 = parse_float(value, key, origin);
    else if (key == "alpha3") cfg.alpha3 = parse_float(value, key, origin);
    else if (key == "beta1") cfg.beta1 = parse_float(value, key, origin);
    else if (key == "beta2") cfg.beta2 = parse_float(value, key, origin);
    else if (key == "beta3") cfg.beta3 = parse_float(value, key, origin);
    else if (key == "eta") cfg.eta = parse_float(value, key, origin);
    else if (key == "kappa") cfg.kappa = parse_float(value, key, origin);
    else if (key == "epochs") cfg.epochs = parse_int(value, key, origin);
    else if (key == "lr_initial") cfg.lr_initial = parse_float(value, key, origin);
    else if (key == "lr_switch_epoch") cfg.lr_switch_epoch = parse_int(value, key, origin);
    else if (key == "lr_final") cfg.lr_final = parse_float(value, key, origin);
    else if (key == "n_mode") {
      if (value == "tunable") cfg.n_mode = NMode::kTunable;
      else if (value == "fixed") cfg.n_mode = NMode::kFixed;
      else fail(origin, ": n_mode must be tunable or fixed, got '", value, "'");
    } else if (key == "n_fixed") cfg.n_fixed = parse_float(value, key, origin);
    else if (key == "gan") cfg.gan = parse_bool(value, key, origin);
    else if (key == "masker") cfg.masker = parse_bool(value, key, origin);
    else if (key == "entropy") cfg.entropy = parse_bool(value, key, origin);
    else if (key == "g_loss") {
      if (value == "saturating") cfg.g_loss = GLossForm::kSaturating;
      else if (value == "nonsaturating") cfg.g_loss = GLossForm::kNonSaturating;
      else fail(origin, ": g_loss must be saturating or nonsaturating, got '",
                value, "'");
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(
          std::stoull(value));
    } else if (key == "checkpoint_interval")
      cfg.checkpoint_interval = parse_int(value, key, origin);
    else
      fail(origin, ":", line_no, ": unknown key '", key, "'");
  }
  validate_train_config(cfg);
  return cfg;
}

TrainConfig parse_train_config(const std::string& path) {
  std::ifstream in(path);
  GTIC_REQUIRE(in.good(), "cannot open config '", path, "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_train_config_text(text.str(), path);
}

Checkpoint init_checkpoint(const TrainConfig& cfg) {
  validate_train_config(cfg);
  Checkpoint ckpt;
  ckpt.cfg = cfg;
  Rng rng(cfg.seed);
  CodecNets nets = build_codec_nets(cfg.K);
  init_codec_params(nets, ckpt.codec, rng, cfg.L);
  DiscNets dnets = build_disc_nets<float>();
  init_disc_params(dnets, ckpt.disc, rng);
  ckpt.opt_g.algo = OptAlgo::kAdam;
  ckpt.opt_d.algo = OptAlgo::kAdam;
  ckpt.opt_g.learning_rate = cfg.lr_initial;
  ckpt.opt_d.learning_rate = cfg.lr_initial;
  return ckpt;
}

Dataset load_dataset(const std::string& dir, std::ostream* log) {
  namespace fs = std::filesystem;
  GTIC_REQUIRE(fs::is_directory(dir), "'", dir, "' is not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".ppm") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  GTIC_REQUIRE(!paths.empty(), "no .ppm images under '", dir, "'");

  Dataset data;
  for (const auto& p : paths) {
    try {
      Tensor img = load_ppm(p);
      data.images.push_back(pad_to_multiple_of_8(img));
      data.paths.push_back(p);
    } catch (const Error& e) {
      if (log) *log << "warning: skipping '" << p << "': " << e.what() << "\n";
    }
  }
  GTIC_REQUIRE(!data.images.empty(), "every image under '", dir,
               "' failed to load");
  return data;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed,
                                     int epoch) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed * 0x9E3779B97F4A7C15ULL +
          static_cast<std::uint64_t>(epoch) * 0xD1B54A32D192ED03ULL + 1);
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg,
                  std::ostream* log, const std::string& snapshot_path) {
  validate_train_config(cfg);
  GTIC_REQUIRE(!data.images.empty(), "training needs a non-empty dataset");

  TrainResult result;
  result.ckpt = init_checkpoint(cfg);
  Checkpoint& ckpt = result.ckpt;
  ckpt.codec.set_mode(Mode::kTrain);
  ckpt.disc.set_mode(Mode::kTrain);

  CodecNets nets = build_codec_nets(cfg.K);
  DiscNets dnets = build_disc_nets<float>();
  const LossWeights lw = loss_weights_for(cfg);
  Rng n_rng(cfg.seed ^ 0xA5A5A5A5DEADBEEFULL);

  const double beta[3] = {cfg.beta1, cfg.beta2, cfg.beta3};
  long batch_counter = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = epoch < cfg.lr_switch_epoch ? cfg.lr_initial : cfg.lr_final;
    ckpt.opt_g.learning_rate = lr;
    ckpt.opt_d.learning_rate = lr;

    const auto order = epoch_order(data.images.size(), cfg.seed, epoch);
    double ep_mse = 0, ep_adv = 0;
    int batches = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.B)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.B));
      const std::vector<std::size_t> indices(order.begin() + start,
                                             order.begin() + end);
      const int B = static_cast<int>(indices.size());
      Tensor batch = assemble_batch(data, indices);

      const float n = cfg.n_mode == NMode::kTunable
                          ? static_cast<float>(n_rng.uniform(-2.0, 2.0))
                          : cfg.n_fixed;
      const PipelineConfig pcfg = pipeline_config_for(cfg, n);
      PipelineForward fwd = pipeline_forward(batch, ckpt.codec, nets, pcfg);

      const std::size_t per = fwd.xhat.size() / static_cast<std::size_t>(B);
      double batch_mse = 0;
      for (int b = 0; b < B; ++b) {
        double acc = 0;
        for (std::size_t i = 0; i < per; ++i) {
          const double d = static_cast<double>(fwd.xhat[b * per + i]) -
                           static_cast<double>(batch[b * per + i]);
          acc += d * d;
        }
        batch_mse += acc / static_cast<double>(per);
      }
      batch_mse /= B;

      double batch_adv = 0;
      Tensor dxhat(fwd.xhat.dims());
      if (cfg.gan) {
        // Discriminator step: ascend L_A on real and detached fake.
        auto real = discriminator_forward_batch(batch, ckpt.disc, dnets);
        auto fake = discriminator_forward_batch(fwd.xhat, ckpt.disc, dnets);
        std::vector<ScaleScores> dreal(B), dfake(B);
        for (int b = 0; b < B; ++b) {
          batch_adv += adversarial_loss(real.scores[b], fake.scores[b], lw);
          for (int i = 0; i < 3; ++i) {
            dreal[b].d[i] =
                -(beta[i] / B) * clamped_log_grad(real.scores[b].d[i]);
            dfake[b].d[i] =
                (beta[i] / B) * clamped_log_grad(1.0 - fake.scores[b].d[i]);
          }
        }
        batch_adv /= B;
        GradStore dgrads;
        discriminator_backward(real, dreal, ckpt.disc, dnets, dgrads);
        discriminator_backward(fake, dfake, ckpt.disc, dnets, dgrads);
        optimizer_step(ckpt.disc, dgrads, ckpt.opt_d);

        // Generator step against the refreshed critic; only terms that
        // depend on G contribute.
        auto fake2 = discriminator_forward_batch(fwd.xhat, ckpt.disc, dnets);
        std::vector<ScaleScores> dgen(B);
        for (int b = 0; b < B; ++b)
          for (int i = 0; i < 3; ++i) {
            if (cfg.g_loss == GLossForm::kSaturating)
              dgen[b].d[i] = -(cfg.eta * beta[i] / B) *
                             clamped_log_grad(1.0 - fake2.scores[b].d[i]);
            else
              dgen[b].d[i] = -(cfg.eta * beta[i] / B) *
                             clamped_log_grad(fake2.scores[b].d[i]);
          }
        GradStore scratch;
        dxhat = discriminator_backward(fake2, dgen, ckpt.disc, dnets, scratch);
      }

      const float mse_scale =
          2.0f * cfg.kappa / (static_cast<float>(B) * static_cast<float>(per));
      for (std::size_t i = 0; i < dxhat.size(); ++i)
        dxhat[i] += mse_scale * (fwd.xhat[i] - batch[i]);

      GTIC_REQUIRE(std::isfinite(batch_mse) && std::isfinite(batch_adv),
                   "non-finite loss at batch ", batch_counter, " (epoch ",
                   epoch, "); aborting");

      GradStore ggrads;
      pipeline_backward(fwd, dxhat, ckpt.codec, nets, pcfg, ggrads);
      optimizer_step(ckpt.codec, ggrads, ckpt.opt_g);

      ep_mse += batch_mse;
      ep_adv += batch_adv;
      ++batches;
      ++batch_counter;
    }

    result.epoch_mse.push_back(ep_mse / batches);
    result.epoch_adv.push_back(ep_adv / batches);
    ckpt.epoch = epoch + 1;
    if (log)
      *log << "epoch " << (epoch + 1) << "/" << cfg.epochs
           << " lr=" << lr << " mse=" << result.epoch_mse.back()
           << (cfg.gan ? " adv=" + std::to_string(result.epoch_adv.back())
                       : std::string())
           << "\n";
    if (!snapshot_path.empty() && cfg.checkpoint_interval > 0 &&
        (epoch + 1) % cfg.checkpoint_interval == 0 &&
        epoch + 1 < cfg.epochs)
      save_checkpoint(ckpt, snapshot_path);
  }
  return result;
}

std::vector<std::uint8_t> compress_image(const Tensor& img, Checkpoint& ckpt,
                                         float n, TableMode table_mode) {
  GTIC_REQUIRE(n >= -2.0f && n <= 2.0f, "shift n must lie in [-2,2], got ", n);
  GTIC_REQUIRE(img.rank() == 3 && img.dim(2) == 3,
               "compress expects an [H,W,3] image, got ", dims_str(img));
  const TrainConfig& cfg = ckpt.cfg;
  CodecNets nets = build_codec_nets(cfg.K);
  ckpt.codec.set_mode(Mode::kInference);

  const Tensor padded = pad_to_multiple_of_8(img);
  const PipelineConfig pcfg = pipeline_config_for(cfg, n);
  Tensor omega = encode_image(padded, ckpt.codec, nets, pcfg);

  ITensor mhat({omega.dim(0), omega.dim(1), cfg.K});
  if (cfg.masker) {
    Tensor y = masker_logits(omega, ckpt.codec, nets);
    Tensor m = importance_map(y.reshaped({y.dim(0), y.dim(1)}), n);
    mhat = expand_importance(m, cfg.K);
  } else {
    mhat.fill(1);
  }
  ITensor z = apply_mask(quantize(omega, cfg.L), mhat);

  StreamHeader header;
  header.orig_h = static_cast<std::uint32_t>(img.dim(0));
  header.orig_w = static_cast<std::uint32_t>(img.dim(1));
  header.pad_h = static_cast<std::uint32_t>(padded.dim(0));
  header.pad_w = static_cast<std::uint32_t>(padded.dim(1));
  header.channels = static_cast<std::uint16_t>(cfg.K);
  header.depth = static_cast<std::uint8_t>(cfg.L);
  header.shift_n = n;

  Bitstream bs;
  if (!cfg.entropy) {
    bs = encode_stream_raw(z, header);
  } else if (table_mode == TableMode::kPaperFixed) {
    bs = encode_stream(z, CodeTable::paper_fixed(cfg.L), header);
  } else {
    const CodeTable table =
        CodeTable::from_histogram(stream_histogram(z, cfg.L), cfg.L);
    bs = encode_stream(z, table, header);
  }
  return bs.serialize();
}

DecompressDetail decompress_bytes_detail(const std::vector<std::uint8_t>& bytes,
                                         Checkpoint& ckpt) {
  DecodedStream dec = decode_stream(bytes);
  const TrainConfig& cfg = ckpt.cfg;
  GTIC_REQUIRE(static_cast<int>(dec.header.channels) == cfg.K,
               "stream has K=", dec.header.channels, " but the model has K=",
               cfg.K);
  GTIC_REQUIRE(static_cast<int>(dec.header.depth) == cfg.L,
               "stream has L=", int(dec.header.depth),
               " but the model has L=", cfg.L);
  CodecNets nets = build_codec_nets(cfg.K);
  ckpt.codec.set_mode(Mode::kInference);
  Tensor padded = decode_code(dec.z, ckpt.codec, nets);
  Tensor img = crop_to(padded, static_cast<int>(dec.header.orig_h),
                       static_cast<int>(dec.header.orig_w));
  return {dec.header, std::move(dec.z), std::move(img)};
}

Tensor decompress_bytes(const std::vector<std::uint8_t>& bytes,
                        Checkpoint& ckpt) {
  return decompress_bytes_detail(bytes, ckpt).image;
}

}  // namespace gtic

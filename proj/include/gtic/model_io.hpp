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

#ifndef GTIC_MODEL_IO_HPP_
#define GTIC_MODEL_IO_HPP_

#include <string>
#include <utility>
#include <vector>

#include "gtic/train.hpp"

namespace gtic {

// Container: magic "GTICMDL", version u8, tensor count u32, then per tensor
// name length u16 + bytes, rank u8, dims u32[rank], float32 little-endian
// values. Tensor order is deterministic.
void write_tensor_container(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> read_tensor_container(
    const std::string& path);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gtic

#endif  // GTIC_MODEL_IO_HPP_

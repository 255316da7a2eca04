// Copyright 2026 The trajplan Authors
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


#pragma once

// Weight checkpoints. One file: a single JSON manifest line (format tag,
// version, config, intention points, tensor table) followed by the raw
// little-endian doubles of every tensor in manifest order. Layout in
// docs/formats.md.

#include <memory>
#include <stdexcept>
#include <string>

#include "trajplan/model.hpp"

namespace trajplan::harness
{

inline constexpr const char * kCheckpointFormat = "trajplan-checkpoint";
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const Model & model, const std::string & path);

// Rebuilds the model from the stored config. Throws CheckpointError for a
// wrong tag or version, a truncated payload, or a tensor table that does not
// match the architecture.
std::unique_ptr<Model> load_checkpoint(const std::string & path);

// Also rejects a checkpoint whose model section or step counts differ from
// `expected`.
std::unique_ptr<Model> load_checkpoint(const std::string & path, const Config & expected);

// Empty when compatible, otherwise the first mismatching key.
std::string incompatibility(const Config & stored, const Config & expected);

}  // namespace trajplan::harness

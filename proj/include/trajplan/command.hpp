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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace trajplan
{

enum class Command : std::uint8_t { LeftTurn, Straight, RightTurn, Stationary, Unknown, Vru };

inline constexpr std::size_t kNumCommands = 6;
inline constexpr std::array<Command, kNumCommands> kAllCommands = {
  Command::LeftTurn, Command::Straight, Command::RightTurn,
  Command::Stationary, Command::Unknown, Command::Vru};

std::string_view command_name(Command c);
// Accepts the names produced by command_name().
std::optional<Command> parse_command(std::string_view name);

inline constexpr std::size_t command_index(Command c) { return static_cast<std::size_t>(c); }

}  // namespace trajplan

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

#include <atomic>
#include <cstdlib>
#include <string>

#include "trajplan/simd/kernels.hpp"

namespace trajplan::simd
{
namespace
{

const KernelTable * initial_table()
{
  const char * env = std::getenv("TRAJPLAN_SIMD");
  const std::string choice = env ? env : "auto";
  if (choice == "scalar") return &scalar_kernels();
  if (cpu_supports_avx2() && avx2_compiled()) return &avx2_kernels();
  return &scalar_kernels();
}

std::atomic<const KernelTable *> & active_table()
{
  static std::atomic<const KernelTable *> table{initial_table()};
  return table;
}

}  // namespace

bool cpu_supports_avx2()
{
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable & kernels() { return *active_table().load(std::memory_order_relaxed); }

void select_backend(Backend backend)
{
  if (backend == Backend::Avx2 && cpu_supports_avx2() && avx2_compiled()) {
    active_table().store(&avx2_kernels());
  } else {
    active_table().store(&scalar_kernels());
  }
}

std::string_view backend_name(Backend backend)
{
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

}  // namespace trajplan::simd

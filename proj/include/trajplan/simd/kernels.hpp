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

// Dense double-precision inner loops used by the tensor engine.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA
// variant. The active table is chosen once at startup from CPUID and may be
// overridden with TRAJPLAN_SIMD=scalar|avx2 or select_backend(). Both tables
// are exposed so tests can compare them directly.
//
// All matrices are row-major and contiguous. The gemm kernels accumulate
// into C (C += op(A) * op(B)); callers zero C when they want assignment.

#include <cstddef>
#include <string_view>

namespace trajplan::simd
{

enum class Backend { Scalar, Avx2 };

struct KernelTable
{
  Backend backend;

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double * a, const double * b,
                  double * c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double * a, const double * b,
                  double * c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double * a, const double * b,
                  double * c);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double * x, double * y);
  double (*dot)(std::size_t n, const double * x, const double * y);
  // z = x * y (elementwise)
  void (*mul)(std::size_t n, const double * x, const double * y, double * z);
  // z = x + y
  void (*add)(std::size_t n, const double * x, const double * y, double * z);
};

const KernelTable & scalar_kernels();

// Falls back to the scalar table when the binary was built without AVX2
// support; check avx2_compiled() to tell the two apart.
const KernelTable & avx2_kernels();
bool avx2_compiled();
bool cpu_supports_avx2();

// Table used by the tensor engine.
const KernelTable & kernels();
void select_backend(Backend backend);
std::string_view backend_name(Backend backend);

}  // namespace trajplan::simd

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

#include "trajplan/simd/kernels.hpp"

namespace trajplan::simd
{
namespace
{

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double * a, const double * b,
             double * c)
{
  for (std::size_t i = 0; i < m; ++i) {
    double * crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aval = a[i * k + p];
      const double * brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aval * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double * a, const double * b,
             double * c)
{
  for (std::size_t i = 0; i < m; ++i) {
    const double * arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double * brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double * a, const double * b,
             double * c)
{
  for (std::size_t p = 0; p < k; ++p) {
    const double * arow = a + p * m;
    const double * brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aval = arow[i];
      double * crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aval * brow[j];
    }
  }
}

void axpy(std::size_t n, double alpha, const double * x, double * y)
{
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double * x, const double * y)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void mul(std::size_t n, const double * x, const double * y, double * z)
{
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void add(std::size_t n, const double * x, const double * y, double * z)
{
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

}  // namespace

const KernelTable & scalar_kernels()
{
  static const KernelTable table{Backend::Scalar, gemm_nn, gemm_nt, gemm_tn, axpy, dot, mul, add};
  return table;
}

}  // namespace trajplan::simd

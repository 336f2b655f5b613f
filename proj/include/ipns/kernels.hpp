// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace ipns::kernels {

// out[b][j] = bias[j] + sum_i W[j][i] in[b][i]; bias may be null.
// All buffers row-major and dense.
using DenseFn = void (*)(const double* W, const double* bias,
                         const double* in, double* out, int batch, int n_in,
                         int n_out);

void dense_forward_scalar(const double* W, const double* bias,
                          const double* in, double* out, int batch, int n_in,
                          int n_out);

// Best instruction set available at runtime (AVX2 where present,
// scalar otherwise). The SIMD path reassociates the dot-product sum,
// so results agree with the scalar kernel to rounding, not bitwise.
DenseFn dense_forward();

// Chunked parallel loop over [0, n); worker count from IPNS_THREADS
// (default 1). Chunks are disjoint, so writes to per-index slots need
// no synchronization.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ipns::kernels

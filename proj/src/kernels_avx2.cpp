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

// This translation unit is the only one compiled with -mavx2; keep it
// free of code that might be called on non-AVX2 hardware except the
// dispatch query itself.

#include "ipns/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace ipns::kernels {

#if defined(__AVX2__)

namespace {

void dense_forward_impl(const double* W, const double* bias, const double* in,
                        double* out, int batch, int n_in, int n_out)
{
    for (int b = 0; b < batch; ++b) {
        const double* x = in + static_cast<std::size_t>(b) * n_in;
        double* y = out + static_cast<std::size_t>(b) * n_out;
        for (int j = 0; j < n_out; ++j) {
            const double* w = W + static_cast<std::size_t>(j) * n_in;
            __m256d acc = _mm256_setzero_pd();
            int i = 0;
            for (; i + 4 <= n_in; i += 4) {
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i),
                                      _mm256_loadu_pd(x + i), acc);
            }
            // Ordered lane reduction, then the scalar tail.
            alignas(32) double lanes[4];
            _mm256_store_pd(lanes, acc);
            double sum = ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
            for (; i < n_in; ++i) {
                sum += w[i] * x[i];
            }
            y[j] = (bias != nullptr ? bias[j] : 0.0) + sum;
        }
    }
}

}  // namespace

DenseFn dense_forward_avx2()
{
    return __builtin_cpu_supports("avx2") ? &dense_forward_impl : nullptr;
}

#else

DenseFn dense_forward_avx2() { return nullptr; }

#endif

}  // namespace ipns::kernels

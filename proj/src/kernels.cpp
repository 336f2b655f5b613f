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

#include "ipns/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ipns::kernels {

// Defined in kernels_avx2.cpp; null when the build or the CPU lacks
// AVX2.
DenseFn dense_forward_avx2();

void dense_forward_scalar(const double* W, const double* bias,
                          const double* in, double* out, int batch, int n_in,
                          int n_out)
{
    for (int b = 0; b < batch; ++b) {
        const double* x = in + static_cast<std::size_t>(b) * n_in;
        double* y = out + static_cast<std::size_t>(b) * n_out;
        for (int j = 0; j < n_out; ++j) {
            const double* w = W + static_cast<std::size_t>(j) * n_in;
            double acc = bias != nullptr ? bias[j] : 0.0;
            for (int i = 0; i < n_in; ++i) {
                acc += w[i] * x[i];
            }
            y[j] = acc;
        }
    }
}

DenseFn dense_forward()
{
    static const DenseFn fn = [] {
        if (DenseFn avx2 = dense_forward_avx2(); avx2 != nullptr) {
            return avx2;
        }
        return &dense_forward_scalar;
    }();
    return fn;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body)
{
    static const int configured = [] {
        const char* env = std::getenv("IPNS_THREADS");
        if (env == nullptr) {
            return 1;
        }
        const int v = std::atoi(env);
        return v > 0 ? v : 1;
    }();
    const std::size_t workers =
        std::min<std::size_t>(configured, std::max<std::size_t>(n, 1));
    if (workers <= 1 || n == 0) {
        body(0, n);
        return;
    }
    std::vector<std::thread> threads;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) {
            break;
        }
        threads.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : threads) {
        t.join();
    }
}

}  // namespace ipns::kernels

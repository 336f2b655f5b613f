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

#include "ipns/dual.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipns::net {

enum class Activation { Tanh, SquaredRelu };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// Feedforward network description. `skip_connections` lists layer
// indices (0-based) whose input is added back onto their activated
// output; widths must match at those layers. The trailing
// `param_input_count` inputs are load parameters and carry no spatial
// tangents.
struct NetworkSpec {
    std::vector<std::pair<int, int>> layer_dims;
    std::vector<int> skip_connections;
    Activation activation = Activation::Tanh;
    int param_input_count = 0;

    int input_width() const { return layer_dims.front().first; }
    int output_width() const { return layer_dims.back().second; }
    int spatial_input_count() const { return input_width() - param_input_count; }
    std::size_t parameter_count() const;
    void validate() const;
};

// Glorot-uniform weights, zero biases, layer by layer. Layout is
// [W_1 row-major, b_1, W_2, b_2, ...].
std::vector<double> init_network(const NetworkSpec& spec, std::uint64_t seed);

// Forward pass generic over the scalar type. `inputs` has
// spec.input_width() entries; tangent seeding is the caller's choice.
template <class S>
void forward(const NetworkSpec& spec, std::span<const S> params,
             std::span<const ad::Dual<S>> inputs, std::span<ad::Dual<S>> outputs)
{
    const int n_layers = static_cast<int>(spec.layer_dims.size());
    const int n_tan = inputs.empty() ? 0 : inputs[0].n;

    std::vector<ad::Dual<S>> cur(inputs.begin(), inputs.end());
    std::vector<ad::Dual<S>> next;
    std::size_t off = 0;
    for (int l = 0; l < n_layers; ++l) {
        const auto [n_in, n_out] = spec.layer_dims[l];
        next.assign(n_out, ad::Dual<S>{});
        const S* W = params.data() + off;
        const S* b = params.data() + off + static_cast<std::size_t>(n_in) * n_out;
        for (int j = 0; j < n_out; ++j) {
            ad::Dual<S> acc(b[j], n_tan);
            for (int k = 0; k < n_tan; ++k) {
                acc.d[k] = 0.0 * b[j];
            }
            for (int i = 0; i < n_in; ++i) {
                const S& w = W[static_cast<std::size_t>(j) * n_in + i];
                acc.v = acc.v + w * cur[i].v;
                for (int k = 0; k < n_tan; ++k) {
                    acc.d[k] = acc.d[k] + w * cur[i].d[k];
                }
            }
            next[j] = acc;
        }
        const bool last = (l == n_layers - 1);
        if (!last) {
            for (int j = 0; j < n_out; ++j) {
                next[j] = spec.activation == Activation::Tanh ? tanh(next[j])
                                                              : sqrelu(next[j]);
            }
        }
        for (int s : spec.skip_connections) {
            if (s == l) {
                if (n_in != n_out) {
                    throw std::invalid_argument(
                        "skip connection at layer with mismatched widths");
                }
                for (int j = 0; j < n_out; ++j) {
                    next[j] = next[j] + cur[j];
                }
            }
        }
        cur.swap(next);
        off += static_cast<std::size_t>(n_in) * n_out + n_out;
    }
    for (std::size_t j = 0; j < outputs.size(); ++j) {
        outputs[j] = cur[j];
    }
}

// Batch of outputs plus their gradients w.r.t. the spatial inputs.
struct DualBatch {
    int batch_size = 0;
    int output_width = 0;
    int spatial_count = 0;
    std::vector<double> values;       // [batch][output]
    std::vector<double> input_grads;  // [batch][output][spatial]

    double value(int b, int j) const
    {
        return values[static_cast<std::size_t>(b) * output_width + j];
    }
    double grad(int b, int j, int k) const
    {
        return input_grads[(static_cast<std::size_t>(b) * output_width + j) *
                               spatial_count +
                           k];
    }
};

// `points` is row-major [batch][input_width]; spatial inputs come
// first, load parameters last.
DualBatch forward_with_input_grad(const NetworkSpec& spec,
                                  std::span<const double> params,
                                  std::span<const double> points,
                                  int batch_size);

}  // namespace ipns::net

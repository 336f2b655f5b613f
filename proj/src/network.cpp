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

#include "ipns/network.hpp"

#include "ipns/kernels.hpp"

#include <cmath>

namespace ipns::net {

Activation activation_from_string(const std::string& name)
{
    if (name == "tanh") {
        return Activation::Tanh;
    }
    if (name == "squared-relu" || name == "sqrelu") {
        return Activation::SquaredRelu;
    }
    throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation a)
{
    return a == Activation::Tanh ? "tanh" : "squared-relu";
}

std::size_t NetworkSpec::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& [in, out] : layer_dims) {
        n += static_cast<std::size_t>(in) * out + out;
    }
    return n;
}

void NetworkSpec::validate() const
{
    if (layer_dims.empty()) {
        throw std::invalid_argument("network has no layers");
    }
    for (std::size_t l = 1; l < layer_dims.size(); ++l) {
        if (layer_dims[l - 1].second != layer_dims[l].first) {
            throw std::invalid_argument("layer dimensions do not chain");
        }
    }
    for (int s : skip_connections) {
        if (s < 0 || s >= static_cast<int>(layer_dims.size())) {
            throw std::invalid_argument("skip connection index out of range");
        }
        if (layer_dims[s].first != layer_dims[s].second) {
            throw std::invalid_argument("skip connection widths mismatch");
        }
    }
    if (param_input_count < 0 || param_input_count > input_width()) {
        throw std::invalid_argument("invalid param_input_count");
    }
}

std::vector<double> init_network(const NetworkSpec& spec, std::uint64_t seed)
{
    spec.validate();
    std::mt19937_64 rng(seed);
    std::vector<double> params;
    params.reserve(spec.parameter_count());
    for (const auto& [n_in, n_out] : spec.layer_dims) {
        const double limit = std::sqrt(6.0 / (n_in + n_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (int i = 0; i < n_in * n_out; ++i) {
            params.push_back(dist(rng));
        }
        for (int i = 0; i < n_out; ++i) {
            params.push_back(0.0);
        }
    }
    return params;
}

// Plane-based batched forward: one value plane plus one tangent plane
// per spatial input, each [batch][width] and pushed through the dense
// kernel layer by layer.
DualBatch forward_with_input_grad(const NetworkSpec& spec,
                                  std::span<const double> params,
                                  std::span<const double> points, int batch_size)
{
    spec.validate();
    if (params.size() != spec.parameter_count()) {
        throw std::invalid_argument("parameter vector length mismatch");
    }
    const int n_in = spec.input_width();
    const int n_out = spec.output_width();
    const int n_spatial = spec.spatial_input_count();
    if (points.size() != static_cast<std::size_t>(batch_size) * n_in) {
        throw std::invalid_argument("input width mismatch");
    }
    if (n_spatial > ad::kMaxTangents) {
        throw std::invalid_argument("too many spatial inputs");
    }

    const auto dense = kernels::dense_forward();
    const int n_planes = 1 + n_spatial;
    std::vector<std::vector<double>> cur(n_planes);
    std::vector<std::vector<double>> next(n_planes);
    cur[0].assign(points.begin(), points.end());
    for (int k = 0; k < n_spatial; ++k) {
        cur[1 + k].assign(static_cast<std::size_t>(batch_size) * n_in, 0.0);
        for (int b = 0; b < batch_size; ++b) {
            cur[1 + k][static_cast<std::size_t>(b) * n_in + k] = 1.0;
        }
    }

    std::size_t off = 0;
    const int n_layers = static_cast<int>(spec.layer_dims.size());
    for (int l = 0; l < n_layers; ++l) {
        const auto [in_w, out_w] = spec.layer_dims[l];
        const double* W = params.data() + off;
        const double* bias = W + static_cast<std::size_t>(in_w) * out_w;
        const std::size_t n = static_cast<std::size_t>(batch_size) * out_w;
        for (int p = 0; p < n_planes; ++p) {
            next[p].resize(n);
            dense(W, p == 0 ? bias : nullptr, cur[p].data(), next[p].data(),
                  batch_size, in_w, out_w);
        }
        if (l != n_layers - 1) {
            for (std::size_t i = 0; i < n; ++i) {
                const double pre = next[0][i];
                double act = 0.0;
                double slope = 0.0;
                if (spec.activation == Activation::Tanh) {
                    act = std::tanh(pre);
                    slope = 1.0 - act * act;
                } else if (pre > 0.0) {
                    act = pre * pre;
                    slope = 2.0 * pre;
                }
                next[0][i] = act;
                for (int k = 0; k < n_spatial; ++k) {
                    next[1 + k][i] *= slope;
                }
            }
        }
        for (int s : spec.skip_connections) {
            if (s == l) {
                for (int p = 0; p < n_planes; ++p) {
                    for (std::size_t i = 0; i < n; ++i) {
                        next[p][i] += cur[p][i];
                    }
                }
            }
        }
        cur.swap(next);
        off += static_cast<std::size_t>(in_w) * out_w + out_w;
    }

    DualBatch out;
    out.batch_size = batch_size;
    out.output_width = n_out;
    out.spatial_count = n_spatial;
    out.values = std::move(cur[0]);
    out.input_grads.resize(static_cast<std::size_t>(batch_size) * n_out *
                           n_spatial);
    for (int b = 0; b < batch_size; ++b) {
        for (int j = 0; j < n_out; ++j) {
            for (int k = 0; k < n_spatial; ++k) {
                out.input_grads[(static_cast<std::size_t>(b) * n_out + j) *
                                    n_spatial +
                                k] =
                    cur[1 + k][static_cast<std::size_t>(b) * n_out + j];
            }
        }
    }
    return out;
}

}  // namespace ipns::net

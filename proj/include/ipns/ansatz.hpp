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

#include "ipns/network.hpp"
#include "ipns/topology.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ipns::ansatz {

// Product of (x_k - 1)^alpha_k (x_k + 1)^beta_k over the reference
// coordinates; exponents stay in {0, 1, 2}.
struct VanishingSpec {
    std::array<int, 3> alpha{};
    std::array<int, 3> beta{};

    bool trivial() const
    {
        for (int k = 0; k < 3; ++k) {
            if (alpha[k] != 0 || beta[k] != 0) {
                return false;
            }
        }
        return true;
    }
};

std::string to_string(const VanishingSpec& v, int dim,
                      const std::string& symbol = "x");

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool is_network = false;
};

enum class PayloadKind { Scalar, Network };

// Per-member data of an interface term. The canonical coordinates s
// map onto this patch's free axes through `orient`; `transverse`
// carries factors on the fixed axes only, scaled by `norm` so the
// transverse part equals one on the entity.
struct TermMember {
    int patch_id = 0;
    std::vector<int> free_axes;
    std::vector<int> fixed_axes;
    std::vector<double> fixed_signs;
    topology::OrientationMap orient;
    VanishingSpec transverse;
    double norm = 1.0;
};

struct InterfaceTerm {
    std::vector<int> multi_index;
    int q = 0;
    PayloadKind kind = PayloadKind::Scalar;
    net::NetworkSpec net;  // payload network when kind == Network
    int block = -1;
    // Shared tangential factors (s_j - 1)^a (s_j + 1)^b in canonical
    // interface coordinates.
    std::array<int, 3> tang_alpha{};
    std::array<int, 3> tang_beta{};
    std::vector<TermMember> members;

    const TermMember& member(int patch_id) const;
};

struct DirichletLift {
    int facet = 0;
    double value = 0.0;
};

struct PatchAnsatz {
    int patch_id = 0;
    net::NetworkSpec interior;
    int interior_block = -1;
    VanishingSpec vanish;
    std::vector<DirichletLift> lifts;
    std::vector<std::size_t> terms;  // indices into interface_terms
};

// Network templates for every payload role. Input widths must be the
// spatial count of the role plus `phi_count`.
struct NetPlan {
    int components = 1;
    int phi_count = 0;
    net::NetworkSpec interior;
    std::map<int, net::NetworkSpec> interface_nets;  // keyed by q >= 1
    net::NetworkSpec zero_dim;  // used for 0D payloads when phi_count > 0
};

struct GlobalAnsatz {
    int dim = 0;
    int components = 1;
    int phi_count = 0;
    std::vector<InterfaceTerm> interface_terms;
    std::vector<PatchAnsatz> patches;  // ordered by patch id
    std::vector<ParamBlock> registry;
    std::vector<double> init_params;

    std::size_t parameter_count() const { return init_params.size(); }
    const PatchAnsatz& patch(int id) const;
};

GlobalAnsatz build_ansatz(const model::MultiPatchModel& model,
                          const topology::PatchTopology& topo,
                          const NetPlan& plan, std::uint64_t seed);

template <class S>
struct FieldEval {
    std::array<S, 3> value{};
    std::array<std::array<S, 3>, 3> grad{};  // [component][reference axis]
};

namespace detail {

template <class S>
void mul_pow(ad::Dual<S>& acc, const ad::Dual<S>& factor, int e)
{
    for (int i = 0; i < e; ++i) {
        acc = acc * factor;
    }
}

}  // namespace detail

// Value and reference-domain gradient of the trial function on one
// patch. Generic over the parameter scalar: S = double evaluates, S =
// Var records the computation for reverse-mode training.
template <class S>
FieldEval<S> evaluate(const GlobalAnsatz& g, int patch_id,
                      std::span<const double> xhat,
                      std::span<const double> phi, std::span<const S> params)
{
    const PatchAnsatz& pa = g.patch(patch_id);
    const int d = g.dim;
    const int nc = g.components;
    if (static_cast<int>(xhat.size()) != d ||
        static_cast<int>(phi.size()) != g.phi_count) {
        throw std::invalid_argument("evaluate: input size mismatch");
    }
    for (int k = 0; k < d; ++k) {
        if (xhat[k] < -1.0 || xhat[k] > 1.0) {
            throw std::domain_error("evaluate: point outside [-1,1]^d");
        }
    }
    const S zero = params[0] * 0.0;
    auto sconst = [&](double c) { return zero + c; };
    auto dconst = [&](double c) {
        ad::Dual<S> r(sconst(c), d);
        for (int k = 0; k < d; ++k) {
            r.d[k] = zero;
        }
        return r;
    };

    std::array<ad::Dual<S>, 3> X;
    for (int k = 0; k < d; ++k) {
        X[k] = dconst(xhat[k]);
        X[k].d[k] = zero + 1.0;
    }
    std::vector<ad::Dual<S>> phi_in;
    for (int p = 0; p < g.phi_count; ++p) {
        phi_in.push_back(dconst(phi[p]));
    }

    std::array<ad::Dual<S>, 3> total;
    for (int c = 0; c < nc; ++c) {
        total[c] = dconst(0.0);
    }

    // Interior term times its vanishing polynomial.
    {
        std::vector<ad::Dual<S>> in;
        for (int k = 0; k < d; ++k) {
            in.push_back(X[k]);
        }
        in.insert(in.end(), phi_in.begin(), phi_in.end());
        std::vector<ad::Dual<S>> out(nc);
        const auto& blk = g.registry[pa.interior_block];
        net::forward<S>(pa.interior, params.subspan(blk.offset, blk.size), in,
                        out);
        ad::Dual<S> poly = dconst(1.0);
        for (int k = 0; k < d; ++k) {
            detail::mul_pow(poly, X[k] - 1.0, pa.vanish.alpha[k]);
            detail::mul_pow(poly, X[k] + 1.0, pa.vanish.beta[k]);
        }
        for (int c = 0; c < nc; ++c) {
            total[c] = total[c] + out[c] * poly;
        }
    }

    // Dirichlet lift, applied to every component.
    for (const auto& lift : pa.lifts) {
        if (lift.value == 0.0) {
            continue;
        }
        const int axis = spline::facet_axis(lift.facet);
        const double side = spline::facet_side(lift.facet);
        const ad::Dual<S> p = (X[axis] * side + 1.0) * 0.5;
        for (int c = 0; c < nc; ++c) {
            total[c] = total[c] + p * lift.value;
        }
    }

    // Interface terms: shared payload in canonical coordinates times
    // tangential and normalized transverse factors.
    for (const std::size_t ti : pa.terms) {
        const InterfaceTerm& term = g.interface_terms[ti];
        const TermMember& mem = term.member(patch_id);
        std::array<ad::Dual<S>, 3> s;
        for (int a = 0; a < term.q; ++a) {
            s[mem.orient.src[a]] = X[mem.free_axes[a]] * mem.orient.sign[a];
        }
        std::vector<ad::Dual<S>> out(nc);
        const auto& blk = g.registry[term.block];
        if (term.kind == PayloadKind::Scalar) {
            for (int c = 0; c < nc; ++c) {
                ad::Dual<S> v(params[blk.offset + c], d);
                for (int k = 0; k < d; ++k) {
                    v.d[k] = zero;
                }
                out[c] = v;
            }
        } else {
            std::vector<ad::Dual<S>> in;
            for (int j = 0; j < term.net.spatial_input_count(); ++j) {
                in.push_back(s[j]);
            }
            in.insert(in.end(), phi_in.begin(), phi_in.end());
            net::forward<S>(term.net, params.subspan(blk.offset, blk.size), in,
                            out);
        }
        ad::Dual<S> poly = dconst(mem.norm);
        for (int j = 0; j < term.q; ++j) {
            detail::mul_pow(poly, s[j] - 1.0, term.tang_alpha[j]);
            detail::mul_pow(poly, s[j] + 1.0, term.tang_beta[j]);
        }
        for (int k = 0; k < d; ++k) {
            detail::mul_pow(poly, X[k] - 1.0, mem.transverse.alpha[k]);
            detail::mul_pow(poly, X[k] + 1.0, mem.transverse.beta[k]);
        }
        for (int c = 0; c < nc; ++c) {
            total[c] = total[c] + out[c] * poly;
        }
    }

    FieldEval<S> r;
    for (int c = 0; c < nc; ++c) {
        r.value[c] = total[c].v;
        for (int k = 0; k < d; ++k) {
            r.grad[c][k] = total[c].d[k];
        }
    }
    return r;
}

// Physical-space samples of the trial function on one patch.
struct FieldSamples {
    int n = 0;
    int dim = 0;
    int components = 1;
    std::vector<double> points;     // [n][dim]
    std::vector<double> values;     // [n][components]
    std::vector<double> gradients;  // [n][components][dim], physical
    std::vector<std::uint8_t> singular;
};

FieldSamples pushforward_field(const GlobalAnsatz& g,
                               const model::MultiPatchModel& model,
                               int patch_id, std::span<const double> xhat,
                               int n_points, std::span<const double> phi,
                               std::span<const double> params);

}  // namespace ipns::ansatz

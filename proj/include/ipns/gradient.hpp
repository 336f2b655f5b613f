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

#include "ipns/tape.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace ipns::ad {

// Exact reverse-pass gradient of a recorded scalar loss with respect
// to every entry of `params`. The evaluator sees the parameters as
// tape leaves; anything it records, including forward-mode tangent
// arithmetic, is differentiated.
inline std::vector<double> loss_gradient(
    const std::function<Var(Tape&, std::span<const Var>)>& loss_evaluator,
    std::span<const double> params)
{
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (double p : params) {
        leaves.emplace_back(tape, tape.leaf(p));
    }
    const Var loss = loss_evaluator(tape, leaves);
    if (!std::isfinite(loss.v)) {
        throw std::runtime_error("non-finite loss in gradient evaluation");
    }
    std::vector<double> grad(params.size(), 0.0);
    tape.backward(loss.idx, 1.0, grad);
    return grad;
}

}  // namespace ipns::ad

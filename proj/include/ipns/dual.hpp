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

#include <array>

namespace ipns::ad {

inline constexpr int kMaxTangents = 3;

// Forward-mode value with up to three spatial tangents, generic over
// the underlying scalar. With S = double this evaluates values and
// spatial gradients directly; with S = Var the tangent arithmetic is
// recorded on the tape, so a reverse pass through a tangent-dependent
// loss yields exact parameter gradients.
template <class S>
struct Dual {
    S v{};
    std::array<S, kMaxTangents> d{};
    int n = 0;

    Dual() = default;
    explicit Dual(S value, int n_tangents = 0) : v(value), n(n_tangents) {}
};

template <class S>
Dual<S> make_constant(S value, int n_tangents, S zero)
{
    Dual<S> r(value, n_tangents);
    for (int k = 0; k < n_tangents; ++k) {
        r.d[k] = zero;
    }
    return r;
}

template <class S>
Dual<S> operator+(const Dual<S>& x, const Dual<S>& y)
{
    Dual<S> r(x.v + y.v, x.n);
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = x.d[k] + y.d[k];
    }
    return r;
}

template <class S>
Dual<S> operator-(const Dual<S>& x, const Dual<S>& y)
{
    Dual<S> r(x.v - y.v, x.n);
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = x.d[k] - y.d[k];
    }
    return r;
}

template <class S>
Dual<S> operator*(const Dual<S>& x, const Dual<S>& y)
{
    Dual<S> r(x.v * y.v, x.n);
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = x.d[k] * y.v + x.v * y.d[k];
    }
    return r;
}

template <class S>
Dual<S> operator/(const Dual<S>& x, const Dual<S>& y)
{
    Dual<S> r(x.v / y.v, x.n);
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = (x.d[k] - r.v * y.d[k]) / y.v;
    }
    return r;
}

template <class S>
Dual<S> operator-(const Dual<S>& x)
{
    Dual<S> r(-x.v, x.n);
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = -x.d[k];
    }
    return r;
}

template <class S>
Dual<S> operator*(const Dual<S>& x, double c)
{
    Dual<S> r(x.v * c, x.n);
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = x.d[k] * c;
    }
    return r;
}

template <class S>
Dual<S> operator*(double c, const Dual<S>& x)
{
    return x * c;
}

template <class S>
Dual<S> operator+(const Dual<S>& x, double c)
{
    Dual<S> r = x;
    r.v = x.v + c;
    return r;
}

template <class S>
Dual<S> operator-(const Dual<S>& x, double c)
{
    return x + (-c);
}

template <class S>
Dual<S> tanh(const Dual<S>& x)
{
    using ipns::ad::tanh;
    const S t = tanh(x.v);
    Dual<S> r(t, x.n);
    const S w = 1.0 - t * t;
    for (int k = 0; k < x.n; ++k) {
        r.d[k] = w * x.d[k];
    }
    return r;
}

template <class S>
Dual<S> sqrelu(const Dual<S>& x)
{
    using ipns::ad::sqrelu;
    Dual<S> r(sqrelu(x.v), x.n);
    if (value_of(x.v) > 0.0) {
        const S w = 2.0 * x.v;
        for (int k = 0; k < x.n; ++k) {
            r.d[k] = w * x.d[k];
        }
    } else {
        const S zero = 0.0 * x.v;
        for (int k = 0; k < x.n; ++k) {
            r.d[k] = zero;
        }
    }
    return r;
}

}  // namespace ipns::ad

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

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ipns::ad {

// Reverse-mode tape for scalar expressions. Nodes have at most two
// parents; leaves are registered first so that their adjoints can be
// read back as the gradient. The tape can be rewound to a checkpoint,
// keeping the leaves and discarding everything recorded after it.
class Tape {
public:
    struct Node {
        int32_t a;
        int32_t b;
        double wa;
        double wb;
    };

    int leaf(double v)
    {
        nodes_.push_back({-1, -1, 0.0, 0.0});
        val_.push_back(v);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int unary(int a, double wa, double v)
    {
        nodes_.push_back({a, -1, wa, 0.0});
        val_.push_back(v);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(int a, int b, double wa, double wb, double v)
    {
        nodes_.push_back({a, b, wa, wb});
        val_.push_back(v);
        return static_cast<int>(nodes_.size()) - 1;
    }

    double value(int i) const { return val_[i]; }
    std::size_t size() const { return nodes_.size(); }

    std::size_t checkpoint() const { return nodes_.size(); }

    void rewind(std::size_t mark)
    {
        nodes_.resize(mark);
        val_.resize(mark);
    }

    void clear() { rewind(0); }

    void reserve(std::size_t n)
    {
        nodes_.reserve(n);
        val_.reserve(n);
    }

    // Seeds `root` with `seed` and propagates adjoints down to the
    // leaves. Adjoints of nodes in [0, n_accum) are accumulated into
    // `accum` instead of being discarded, so repeated backward passes
    // over a rewound tape build up the total gradient of a sum.
    void backward(int root, double seed, std::span<double> accum)
    {
        adj_.assign(nodes_.size(), 0.0);
        adj_[root] = seed;
        const auto n_accum = static_cast<int>(accum.size());
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= n_accum; --i) {
            const double a = adj_[i];
            if (a == 0.0) {
                continue;
            }
            const Node& n = nodes_[i];
            if (n.a >= 0) {
                adj_[n.a] += n.wa * a;
            }
            if (n.b >= 0) {
                adj_[n.b] += n.wb * a;
            }
        }
        for (int i = 0; i < n_accum; ++i) {
            accum[i] += adj_[i];
        }
    }

private:
    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> adj_;
};

// Tape-backed scalar. Arithmetic records onto the owning tape; the
// numeric value is cached locally so expression code never has to look
// back into the tape.
struct Var {
    Tape* tape = nullptr;
    int idx = -1;
    double v = 0.0;

    Var() = default;
    Var(Tape& t, int i) : tape(&t), idx(i), v(t.value(i)) {}

    static Var constant(Tape& t, double c) { return Var(t, t.leaf(c)); }
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.v; }

inline Var operator+(const Var& x, const Var& y)
{
    return {*x.tape, x.tape->binary(x.idx, y.idx, 1.0, 1.0, x.v + y.v)};
}

inline Var operator-(const Var& x, const Var& y)
{
    return {*x.tape, x.tape->binary(x.idx, y.idx, 1.0, -1.0, x.v - y.v)};
}

inline Var operator*(const Var& x, const Var& y)
{
    return {*x.tape, x.tape->binary(x.idx, y.idx, y.v, x.v, x.v * y.v)};
}

inline Var operator/(const Var& x, const Var& y)
{
    const double q = x.v / y.v;
    return {*x.tape, x.tape->binary(x.idx, y.idx, 1.0 / y.v, -q / y.v, q)};
}

inline Var operator-(const Var& x)
{
    return {*x.tape, x.tape->unary(x.idx, -1.0, -x.v)};
}

inline Var operator+(const Var& x, double c)
{
    return {*x.tape, x.tape->unary(x.idx, 1.0, x.v + c)};
}
inline Var operator+(double c, const Var& x) { return x + c; }
inline Var operator-(const Var& x, double c) { return x + (-c); }
inline Var operator-(double c, const Var& x)
{
    return {*x.tape, x.tape->unary(x.idx, -1.0, c - x.v)};
}
inline Var operator*(const Var& x, double c)
{
    return {*x.tape, x.tape->unary(x.idx, c, x.v * c)};
}
inline Var operator*(double c, const Var& x) { return x * c; }
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, const Var& x)
{
    const double q = c / x.v;
    return {*x.tape, x.tape->unary(x.idx, -q / x.v, q)};
}

inline Var tanh(const Var& x)
{
    const double t = std::tanh(x.v);
    return {*x.tape, x.tape->unary(x.idx, 1.0 - t * t, t)};
}

// Squared ReLU: x^2 for x > 0, else 0.
inline Var sqrelu(const Var& x)
{
    if (x.v > 0.0) {
        return {*x.tape, x.tape->unary(x.idx, 2.0 * x.v, x.v * x.v)};
    }
    return {*x.tape, x.tape->unary(x.idx, 0.0, 0.0)};
}

inline Var sqrt(const Var& x)
{
    const double s = std::sqrt(x.v);
    return {*x.tape, x.tape->unary(x.idx, 0.5 / s, s)};
}

inline double tanh(double x) { return std::tanh(x); }
inline double sqrelu(double x) { return x > 0.0 ? x * x : 0.0; }

}  // namespace ipns::ad

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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipns::spline {

inline constexpr int kMaxDim = 3;

using Vec3 = std::array<double, kMaxDim>;
using Mat3 = std::array<double, kMaxDim * kMaxDim>;  // row-major d x d

// Open (clamped) knot vector on [-1, 1]. Knot vectors supplied on a
// different interval are rescaled affinely on construction.
class KnotVector {
public:
    KnotVector() = default;
    KnotVector(std::vector<double> values, int degree);

    int degree() const { return degree_; }
    int basis_count() const
    {
        return static_cast<int>(values_.size()) - degree_ - 1;
    }
    const std::vector<double>& values() const { return values_; }

    int find_span(double t) const;

private:
    std::vector<double> values_;
    int degree_ = 0;
};

// Nonzero B-spline basis values and first derivatives at t, plus the
// knot span. Entry j corresponds to basis function span - degree + j.
struct BasisEval {
    int span = 0;
    std::array<double, 8> values{};
    std::array<double, 8> derivs{};
};

BasisEval bspline_basis_all(const KnotVector& knots, double t);

struct JacobianData {
    Mat3 J{};     // d x d Jacobian of the parametrization
    double detJ = 0.0;
    Mat3 K{};     // J^{-T} J^{-1} |detJ|
    bool singular = false;
};

// Facet f of [-1,1]^d fixes coordinate f/2 to -1 (f even) or +1 (f odd).
inline int facet_axis(int facet) { return facet / 2; }
inline double facet_side(int facet) { return facet % 2 == 0 ? -1.0 : 1.0; }

struct FacetMeasure {
    double measure = 0.0;  // |det J| * ||J^{-T} n_hat||
    Vec3 normal{};         // unit outward normal in physical space
    bool singular = false;
};

class Patch {
public:
    Patch() = default;
    Patch(int patch_id, int dim, int geo_dim, std::vector<KnotVector> knots,
          std::vector<double> control_points, std::vector<double> weights);

    int id() const { return id_; }
    int dim() const { return dim_; }
    int geo_dim() const { return geo_dim_; }
    const KnotVector& knots(int axis) const { return knots_[axis]; }
    int basis_count(int axis) const { return knots_[axis].basis_count(); }
    std::span<const double> control_points() const { return control_points_; }
    std::span<const double> weights() const { return weights_; }
    double bbox_diameter() const { return bbox_diameter_; }

    Vec3 eval(std::span<const double> xhat) const;
    JacobianData jacobian(std::span<const double> xhat) const;
    FacetMeasure facet_measure(int facet, std::span<const double> xhat) const;

    // Stochastic injectivity check: the Jacobian determinant keeps one
    // sign at `n_samples` random points. Throws on failure.
    void check_injectivity(int n_samples, std::uint64_t seed) const;

private:
    struct RationalEval;
    RationalEval eval_rational(std::span<const double> xhat,
                               bool with_derivatives) const;

    int id_ = 0;
    int dim_ = 0;
    int geo_dim_ = 0;
    std::vector<KnotVector> knots_;
    std::vector<double> control_points_;  // [i_1...i_d][geo_dim], row-major
    std::vector<double> weights_;
    double bbox_diameter_ = 0.0;
};

double det(const Mat3& m, int d);
Mat3 inverse(const Mat3& m, int d, double det_m);

}  // namespace ipns::spline

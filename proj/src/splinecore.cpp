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

#include "ipns/splinecore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace ipns::spline {

namespace {

constexpr double kDomainTol = 1e-12;
constexpr double kSingularRelTol = 1e-12;

void check_in_domain(std::span<const double> xhat, int dim)
{
    if (static_cast<int>(xhat.size()) < dim) {
        throw std::invalid_argument("point has too few coordinates");
    }
    for (int k = 0; k < dim; ++k) {
        if (xhat[k] < -1.0 - kDomainTol || xhat[k] > 1.0 + kDomainTol) {
            throw std::domain_error("reference coordinate outside [-1,1]");
        }
    }
}

}  // namespace

KnotVector::KnotVector(std::vector<double> values, int degree)
    : values_(std::move(values)), degree_(degree)
{
    if (degree_ < 0) {
        throw std::invalid_argument("negative degree");
    }
    if (static_cast<int>(values_.size()) < 2 * (degree_ + 1)) {
        throw std::invalid_argument("knot vector too short for degree");
    }
    if (!std::is_sorted(values_.begin(), values_.end())) {
        throw std::invalid_argument("knot vector not nondecreasing");
    }
    const double lo = values_.front();
    const double hi = values_.back();
    if (!(hi > lo)) {
        throw std::invalid_argument("degenerate knot range");
    }
    for (int i = 0; i <= degree_; ++i) {
        if (values_[i] != lo ||
            values_[values_.size() - 1 - i] != hi) {
            throw std::invalid_argument("knot vector is not open/clamped");
        }
    }
    // Rescale affinely to [-1, 1].
    if (lo != -1.0 || hi != 1.0) {
        const double scale = 2.0 / (hi - lo);
        for (double& v : values_) {
            v = (v - lo) * scale - 1.0;
        }
        values_.front() = -1.0;
        values_.back() = 1.0;
    }
    if (basis_count() < degree_ + 1) {
        throw std::invalid_argument("too few basis functions");
    }
}

int KnotVector::find_span(double t) const
{
    const int n = basis_count();
    // Spans live in [degree, n-1]; the right end maps into the last span.
    if (t >= values_[n]) {
        return n - 1;
    }
    if (t <= values_[degree_]) {
        return degree_;
    }
    int lo = degree_;
    int hi = n;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (t < values_[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return lo;
}

BasisEval bspline_basis_all(const KnotVector& knots, double t)
{
    if (t < -1.0 - kDomainTol || t > 1.0 + kDomainTol) {
        throw std::domain_error("basis evaluation point outside [-1,1]");
    }
    t = std::clamp(t, -1.0, 1.0);
    const int p = knots.degree();
    if (p + 1 > 8) {
        throw std::invalid_argument("degree above supported maximum 7");
    }
    const auto& U = knots.values();
    const int span = knots.find_span(t);

    BasisEval out;
    out.span = span;
    // Cox-de Boor recursion with cached left/right differences, plus
    // first derivatives from the degree p-1 functions.
    std::array<double, 8> left{};
    std::array<double, 8> right{};
    std::array<double, 8> ndu_prev{};  // degree p-1 values, for derivatives
    out.values[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = t - U[span + 1 - j];
        right[j] = U[span + j] - t;
        if (j == p) {
            std::copy_n(out.values.begin(), p, ndu_prev.begin());
        }
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = out.values[r] / (right[r + 1] + left[j - r]);
            out.values[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out.values[j] = saved;
    }
    if (p > 0) {
        for (int r = 0; r <= p; ++r) {
            double d = 0.0;
            if (r > 0) {
                const int i = span - p + r;
                const double den = U[i + p] - U[i];
                if (den > 0.0) {
                    d += ndu_prev[r - 1] / den;
                }
            }
            if (r < p) {
                const int i = span - p + r + 1;
                const double den = U[i + p] - U[i];
                if (den > 0.0) {
                    d -= ndu_prev[r] / den;
                }
            }
            out.derivs[r] = p * d;
        }
    }
    return out;
}

Patch::Patch(int patch_id, int dim, int geo_dim, std::vector<KnotVector> knots,
             std::vector<double> control_points, std::vector<double> weights)
    : id_(patch_id),
      dim_(dim),
      geo_dim_(geo_dim),
      knots_(std::move(knots)),
      control_points_(std::move(control_points)),
      weights_(std::move(weights))
{
    if (dim_ < 1 || dim_ > kMaxDim || geo_dim_ < dim_ || geo_dim_ > kMaxDim) {
        throw std::invalid_argument("unsupported patch dimensions");
    }
    if (static_cast<int>(knots_.size()) != dim_) {
        throw std::invalid_argument("knot vector count does not match dim");
    }
    std::size_t n_cp = 1;
    for (int k = 0; k < dim_; ++k) {
        n_cp *= static_cast<std::size_t>(knots_[k].basis_count());
    }
    if (weights_.size() != n_cp) {
        throw std::invalid_argument("weight tensor shape mismatch");
    }
    if (control_points_.size() != n_cp * geo_dim_) {
        throw std::invalid_argument("control point tensor shape mismatch");
    }
    for (double w : weights_) {
        if (!(w > 0.0)) {
            throw std::invalid_argument("weights must be strictly positive");
        }
    }
    Vec3 lo{}, hi{};
    lo.fill(1e300);
    hi.fill(-1e300);
    for (std::size_t i = 0; i < n_cp; ++i) {
        for (int m = 0; m < geo_dim_; ++m) {
            lo[m] = std::min(lo[m], control_points_[i * geo_dim_ + m]);
            hi[m] = std::max(hi[m], control_points_[i * geo_dim_ + m]);
        }
    }
    double diag2 = 0.0;
    for (int m = 0; m < geo_dim_; ++m) {
        diag2 += (hi[m] - lo[m]) * (hi[m] - lo[m]);
    }
    bbox_diameter_ = std::sqrt(diag2);
}

struct Patch::RationalEval {
    Vec3 point{};
    Mat3 jac{};  // d/dxhat of the map, geo_dim rows x dim columns
};

Patch::RationalEval Patch::eval_rational(std::span<const double> xhat,
                                         bool with_derivatives) const
{
    check_in_domain(xhat, dim_);
    std::array<BasisEval, kMaxDim> basis;
    std::array<int, kMaxDim> count{};
    for (int k = 0; k < dim_; ++k) {
        basis[k] = bspline_basis_all(knots_[k], xhat[k]);
        count[k] = knots_[k].degree() + 1;
    }
    std::array<std::size_t, kMaxDim> stride{};
    std::size_t s = 1;
    for (int k = dim_ - 1; k >= 0; --k) {
        stride[k] = s;
        s *= static_cast<std::size_t>(knots_[k].basis_count());
    }

    // Weighted sums of the homogeneous coordinates and their partials.
    double W = 0.0;
    Vec3 A{};
    std::array<double, kMaxDim> dW{};
    std::array<Vec3, kMaxDim> dA{};

    std::array<int, kMaxDim> idx{};
    const int total = count[0] * (dim_ > 1 ? count[1] : 1) *
                      (dim_ > 2 ? count[2] : 1);
    for (int flat = 0; flat < total; ++flat) {
        int rem = flat;
        for (int k = dim_ - 1; k >= 0; --k) {
            idx[k] = rem % count[k];
            rem /= count[k];
        }
        double b = 1.0;
        std::size_t cp = 0;
        for (int k = 0; k < dim_; ++k) {
            b *= basis[k].values[idx[k]];
            const int i = basis[k].span - knots_[k].degree() + idx[k];
            cp += static_cast<std::size_t>(i) * stride[k];
        }
        const double w = weights_[cp];
        const double wb = w * b;
        W += wb;
        for (int m = 0; m < geo_dim_; ++m) {
            A[m] += wb * control_points_[cp * geo_dim_ + m];
        }
        if (with_derivatives) {
            for (int k = 0; k < dim_; ++k) {
                double db = 1.0;
                for (int kk = 0; kk < dim_; ++kk) {
                    db *= (kk == k) ? basis[kk].derivs[idx[kk]]
                                    : basis[kk].values[idx[kk]];
                }
                const double wdb = w * db;
                dW[k] += wdb;
                for (int m = 0; m < geo_dim_; ++m) {
                    dA[k][m] += wdb * control_points_[cp * geo_dim_ + m];
                }
            }
        }
    }

    RationalEval out;
    for (int m = 0; m < geo_dim_; ++m) {
        out.point[m] = A[m] / W;
    }
    if (with_derivatives) {
        for (int k = 0; k < dim_; ++k) {
            for (int m = 0; m < geo_dim_; ++m) {
                out.jac[m * kMaxDim + k] =
                    (dA[k][m] - out.point[m] * dW[k]) / W;
            }
        }
    }
    return out;
}

Vec3 Patch::eval(std::span<const double> xhat) const
{
    return eval_rational(xhat, false).point;
}

double det(const Mat3& m, int d)
{
    switch (d) {
    case 1:
        return m[0];
    case 2:
        return m[0] * m[4] - m[1] * m[3];
    default:
        return m[0] * (m[4] * m[8] - m[5] * m[7]) -
               m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
}

Mat3 inverse(const Mat3& m, int d, double det_m)
{
    Mat3 inv{};
    const double id = 1.0 / det_m;
    switch (d) {
    case 1:
        inv[0] = id;
        break;
    case 2:
        inv[0] = m[4] * id;
        inv[1] = -m[1] * id;
        inv[3] = -m[3] * id;
        inv[4] = m[0] * id;
        break;
    default:
        inv[0] = (m[4] * m[8] - m[5] * m[7]) * id;
        inv[1] = (m[2] * m[7] - m[1] * m[8]) * id;
        inv[2] = (m[1] * m[5] - m[2] * m[4]) * id;
        inv[3] = (m[5] * m[6] - m[3] * m[8]) * id;
        inv[4] = (m[0] * m[8] - m[2] * m[6]) * id;
        inv[5] = (m[2] * m[3] - m[0] * m[5]) * id;
        inv[6] = (m[3] * m[7] - m[4] * m[6]) * id;
        inv[7] = (m[1] * m[6] - m[0] * m[7]) * id;
        inv[8] = (m[0] * m[4] - m[1] * m[3]) * id;
        break;
    }
    return inv;
}

JacobianData Patch::jacobian(std::span<const double> xhat) const
{
    if (geo_dim_ != dim_) {
        throw std::invalid_argument("jacobian requires a volumetric patch");
    }
    const RationalEval r = eval_rational(xhat, true);
    JacobianData out;
    out.J = r.jac;
    out.detJ = det(out.J, dim_);
    const double scale = std::pow(bbox_diameter_, dim_);
    if (std::abs(out.detJ) < kSingularRelTol * std::max(scale, 1e-300)) {
        out.singular = true;
        return out;
    }
    const Mat3 inv = inverse(out.J, dim_, out.detJ);
    const double adet = std::abs(out.detJ);
    // K = J^{-T} J^{-1} |detJ|  =  inv^T inv |detJ|
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim_; ++k) {
                s += inv[k * kMaxDim + i] * inv[k * kMaxDim + j];
            }
            out.K[i * kMaxDim + j] = s * adet;
        }
    }
    return out;
}

FacetMeasure Patch::facet_measure(int facet,
                                  std::span<const double> xhat) const
{
    if (facet < 0 || facet >= 2 * dim_) {
        throw std::invalid_argument("facet id out of range");
    }
    const int axis = facet_axis(facet);
    const double side = facet_side(facet);
    if (std::abs(xhat[axis] - side) > 1e-9) {
        throw std::invalid_argument("point does not lie on the named facet");
    }
    const JacobianData jd = jacobian(xhat);
    FacetMeasure out;
    if (jd.singular) {
        out.singular = true;
        return out;
    }
    const Mat3 inv = inverse(jd.J, dim_, jd.detJ);
    // Nanson: measure = |detJ| * ||J^{-T} n_hat||, with n_hat = side * e_axis.
    Vec3 v{};
    double norm2 = 0.0;
    for (int m = 0; m < dim_; ++m) {
        v[m] = side * inv[axis * kMaxDim + m];  // (J^{-T})_{m,axis} * side
        norm2 += v[m] * v[m];
    }
    const double norm = std::sqrt(norm2);
    out.measure = std::abs(jd.detJ) * norm;
    const double orient = jd.detJ > 0.0 ? 1.0 : -1.0;
    for (int m = 0; m < dim_; ++m) {
        out.normal[m] = orient * v[m] / norm;
    }
    return out;
}

void Patch::check_injectivity(int n_samples, std::uint64_t seed) const
{
    if (geo_dim_ != dim_) {
        return;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double sign = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Vec3 x{};
        for (int k = 0; k < dim_; ++k) {
            x[k] = dist(rng);
        }
        const JacobianData jd = jacobian(std::span<const double>(x.data(), dim_));
        if (jd.singular) {
            continue;
        }
        const double cur = jd.detJ > 0.0 ? 1.0 : -1.0;
        if (sign == 0.0) {
            sign = cur;
        } else if (cur != sign) {
            throw std::runtime_error(
                "patch " + std::to_string(id_) +
                ": Jacobian determinant changes sign (map not injective)");
        }
    }
}

}  // namespace ipns::spline

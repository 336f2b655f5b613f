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

#include "ipns/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ipns::physics {

using ad::value_of;

struct MagnetostaticMaterial {
    std::map<int, double> nu;   // reluctivity per patch
    std::map<int, double> j_z;  // current density on source patches

    double nu_of(int patch_id) const
    {
        const auto it = nu.find(patch_id);
        if (it == nu.end()) {
            throw std::invalid_argument("no reluctivity for patch " +
                                        std::to_string(patch_id));
        }
        if (it->second <= 0.0) {
            throw std::invalid_argument("reluctivity must be positive");
        }
        return it->second;
    }
};

// Rigid half-space x_axis (<=|>=) c0 + sum_p coeff[p] * phi[p],
// active only while the extent coordinate stays within its bounds.
struct ContactPlane {
    int axis = 1;
    int side = -1;  // -1: obstacle fills x_axis <= c; +1: x_axis >= c
    double c0 = 0.0;
    std::vector<double> phi_coeff;
    int extent_axis = -1;
    double extent_min = -std::numeric_limits<double>::infinity();
    double extent_max = std::numeric_limits<double>::infinity();

    double offset(std::span<const double> phi) const
    {
        double c = c0;
        for (std::size_t p = 0; p < phi_coeff.size() && p < phi.size(); ++p) {
            c += phi_coeff[p] * phi[p];
        }
        return c;
    }
};

struct Traction {
    int patch_id = 0;
    int facet = 0;
    std::array<double, 3> value{};
};

struct ElasticMaterial {
    double lambda = 0.0;
    double mu = 0.0;
    std::map<int, std::array<double, 3>> body_force;
    std::vector<Traction> tractions;
    std::vector<ContactPlane> contact_planes;
    std::vector<std::pair<int, int>> contact_facets;  // (patch, facet)
    double eps_n = 1e3;
    bool quartic_penalty = true;

    void validate() const
    {
        if (mu <= 0.0 || lambda <= -2.0 * mu / 3.0) {
            throw std::invalid_argument("inadmissible Lame coefficients");
        }
        if (eps_n <= 0.0) {
            throw std::invalid_argument("penalty constant must be positive");
        }
    }
};

// One Monte Carlo sample; facet >= 0 marks a boundary sample. The
// weight carries the reference volume over the per-patch batch size.
struct EnergySample {
    int patch_id = 0;
    int facet = -1;
    std::array<double, 3> xhat{};
    double weight = 0.0;
};

enum class ProblemType { Magnetostatic2D, PoissonManufactured, SvkContact };

struct Problem {
    ProblemType type = ProblemType::Magnetostatic2D;
    MagnetostaticMaterial magnetostatic;
    ElasticMaterial elastic;
    std::string poisson_case;
};

// Manufactured Poisson verification cases (unit reluctivity).
struct ManufacturedCase {
    std::function<double(const spline::Vec3&)> u_star;
    std::function<double(const spline::Vec3&)> source;
    std::function<spline::Vec3(const spline::Vec3&)> grad_u_star;
};

const ManufacturedCase& manufactured_case(const std::string& id);

struct ContactStats {
    long inverted = 0;  // samples with det F <= 0, contribution clamped
};

namespace detail {

template <class S>
S szero(std::span<const S> params)
{
    return params[0] * 0.0;
}

}  // namespace detail

// Energy density of the scalar Poisson-type functional per unit
// reference volume: 0.5 nu grad^T K grad - f u |det J|.
template <class S>
S scalar_energy_density(const ansatz::FieldEval<S>& u,
                        const spline::JacobianData& jd, int d, double nu,
                        double f)
{
    S e = u.value[0] * 0.0;
    for (int k = 0; k < d; ++k) {
        for (int m = 0; m < d; ++m) {
            e = e + u.grad[0][k] * (0.5 * nu * jd.K[k * spline::kMaxDim + m]) *
                        u.grad[0][m];
        }
    }
    if (f != 0.0) {
        e = e - u.value[0] * (f * std::abs(jd.detJ));
    }
    return e;
}

template <class S>
using Mat = std::array<std::array<S, 3>, 3>;

// F = I + grad_ref(u) J^{-1}, all in reference coordinates.
template <class S>
Mat<S> deformation_gradient(const ansatz::FieldEval<S>& u,
                            const spline::Mat3& jinv, int d)
{
    Mat<S> F{};
    for (int a = 0; a < d; ++a) {
        for (int m = 0; m < d; ++m) {
            S acc = u.value[0] * 0.0;
            for (int k = 0; k < d; ++k) {
                acc = acc + u.grad[a][k] * jinv[k * spline::kMaxDim + m];
            }
            F[a][m] = (a == m) ? acc + 1.0 : acc;
        }
    }
    return F;
}

template <class S>
S det_mat(const Mat<S>& F, int d)
{
    if (d == 1) {
        return F[0][0];
    }
    if (d == 2) {
        return F[0][0] * F[1][1] - F[0][1] * F[1][0];
    }
    return F[0][0] * (F[1][1] * F[2][2] - F[1][2] * F[2][1]) -
           F[0][1] * (F[1][0] * F[2][2] - F[1][2] * F[2][0]) +
           F[0][2] * (F[1][0] * F[2][1] - F[1][1] * F[2][0]);
}

// Saint Venant-Kirchhoff strain energy density in reference volume:
// psi(E) |det J| - b . u |det J|, with E = (F F^T - I) / 2.
template <class S>
S svk_density(const ansatz::FieldEval<S>& u, const spline::JacobianData& jd,
              int d, const ElasticMaterial& mat,
              const std::array<double, 3>& body_force)
{
    const spline::Mat3 jinv = spline::inverse(jd.J, d, jd.detJ);
    const Mat<S> F = deformation_gradient(u, jinv, d);
    const S zero = u.value[0] * 0.0;
    Mat<S> E{};
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            S acc = zero;
            for (int m = 0; m < d; ++m) {
                acc = acc + F[a][m] * F[b][m];
            }
            E[a][b] = (a == b) ? (acc - 1.0) * 0.5 : acc * 0.5;
        }
    }
    S tr = zero;
    S dd = zero;
    for (int a = 0; a < d; ++a) {
        tr = tr + E[a][a];
        for (int b = 0; b < d; ++b) {
            dd = dd + E[a][b] * E[a][b];
        }
    }
    S psi = tr * tr * (0.5 * mat.lambda) + dd * mat.mu;
    S e = psi * std::abs(jd.detJ);
    for (int a = 0; a < d; ++a) {
        if (body_force[a] != 0.0) {
            e = e - u.value[a] * (body_force[a] * std::abs(jd.detJ));
        }
    }
    return e;
}

// Work density of a constant traction on a boundary sample:
// -T . u times the facet surface measure.
template <class S>
S traction_density(const ansatz::FieldEval<S>& u,
                   const std::array<double, 3>& T, int d, double measure)
{
    S e = u.value[0] * 0.0;
    for (int a = 0; a < d; ++a) {
        e = e - u.value[a] * (T[a] * measure);
    }
    return e;
}

// Penalty density for one rigid plane at one boundary sample of the
// deformed body: 0.5 eps_N g_pen ||F^{-T} N|| det F times the facet
// measure, with g the squared penetration depth.
template <class S>
S contact_density(const ansatz::FieldEval<S>& u,
                  const spline::JacobianData& jd,
                  const spline::FacetMeasure& fm, const spline::Vec3& x_phys,
                  int d, const ElasticMaterial& mat, const ContactPlane& plane,
                  std::span<const double> phi, ContactStats* stats)
{
    const S zero = u.value[0] * 0.0;
    // Deformed position of the sample.
    std::array<S, 3> y{};
    for (int a = 0; a < d; ++a) {
        y[a] = u.value[a] + x_phys[a];
    }
    const double c = plane.offset(phi);
    const S depth = plane.side < 0 ? (zero + c) - y[plane.axis]
                                   : y[plane.axis] - c;
    if (value_of(depth) <= 0.0) {
        return zero;
    }
    if (plane.extent_axis >= 0) {
        const double ext = value_of(y[plane.extent_axis]);
        if (ext < plane.extent_min || ext > plane.extent_max) {
            return zero;
        }
    }
    const S g = depth * depth;
    const S g_pen = mat.quartic_penalty ? g * g : g;

    const spline::Mat3 jinv = spline::inverse(jd.J, d, jd.detJ);
    const Mat<S> F = deformation_gradient(u, jinv, d);
    const S detF = det_mat(F, d);
    if (value_of(detF) <= 0.0) {
        if (stats != nullptr) {
            ++stats->inverted;
        }
        return zero + 1e10;
    }
    // F^{-T} N via the adjugate, N the unit outward reference normal.
    std::array<S, 3> ftn{};
    if (d == 2) {
        // F^{-1} = adj(F)/detF; F^{-T} column action on N.
        ftn[0] = (F[1][1] * fm.normal[0] - F[1][0] * fm.normal[1]) / detF;
        ftn[1] = (F[0][0] * fm.normal[1] - F[0][1] * fm.normal[0]) / detF;
    } else {
        Mat<S> inv{};
        inv[0][0] = F[1][1] * F[2][2] - F[1][2] * F[2][1];
        inv[0][1] = F[0][2] * F[2][1] - F[0][1] * F[2][2];
        inv[0][2] = F[0][1] * F[1][2] - F[0][2] * F[1][1];
        inv[1][0] = F[1][2] * F[2][0] - F[1][0] * F[2][2];
        inv[1][1] = F[0][0] * F[2][2] - F[0][2] * F[2][0];
        inv[1][2] = F[0][2] * F[1][0] - F[0][0] * F[1][2];
        inv[2][0] = F[1][0] * F[2][1] - F[1][1] * F[2][0];
        inv[2][1] = F[0][1] * F[2][0] - F[0][0] * F[2][1];
        inv[2][2] = F[0][0] * F[1][1] - F[0][1] * F[1][0];
        for (int a = 0; a < 3; ++a) {
            S acc = zero;
            for (int b = 0; b < 3; ++b) {
                acc = acc + inv[b][a] * fm.normal[b];
            }
            ftn[a] = acc / detF;
        }
    }
    S nrm2 = zero;
    for (int a = 0; a < d; ++a) {
        nrm2 = nrm2 + ftn[a] * ftn[a];
    }
    using std::sqrt;
    using ipns::ad::sqrt;
    const S surface = sqrt(nrm2) * detF;
    return g_pen * surface * (0.5 * mat.eps_n * fm.measure);
}

// Discretized energy functional over one batch of samples.
template <class S>
S total_loss(const model::MultiPatchModel& model, const ansatz::GlobalAnsatz& g,
             const Problem& problem, std::span<const EnergySample> samples,
             std::span<const double> phi, std::span<const S> params,
             ContactStats* stats = nullptr)
{
    const int d = model.dim();
    S loss = detail::szero(params);
    const ManufacturedCase* mc = nullptr;
    if (problem.type == ProblemType::PoissonManufactured) {
        mc = &manufactured_case(problem.poisson_case);
    }
    for (const EnergySample& s : samples) {
        const std::span<const double> x(s.xhat.data(), d);
        const auto& patch = model.patch(s.patch_id);
        const auto jd = patch.jacobian(x);
        if (jd.singular) {
            continue;
        }
        const auto u = ansatz::evaluate<S>(g, s.patch_id, x, phi, params);
        S term = detail::szero(params);
        if (s.facet < 0) {
            switch (problem.type) {
            case ProblemType::Magnetostatic2D: {
                const auto& mat = problem.magnetostatic;
                const auto it = mat.j_z.find(s.patch_id);
                term = scalar_energy_density(
                    u, jd, d, mat.nu_of(s.patch_id),
                    it == mat.j_z.end() ? 0.0 : it->second);
                break;
            }
            case ProblemType::PoissonManufactured: {
                const auto xp = patch.eval(x);
                term = scalar_energy_density(u, jd, d, 1.0, mc->source(xp));
                break;
            }
            case ProblemType::SvkContact: {
                const auto& mat = problem.elastic;
                std::array<double, 3> b{};
                const auto it = mat.body_force.find(s.patch_id);
                if (it != mat.body_force.end()) {
                    b = it->second;
                }
                term = svk_density(u, jd, d, mat, b);
                break;
            }
            }
        } else if (problem.type == ProblemType::SvkContact) {
            const auto fm = patch.facet_measure(s.facet, x);
            if (fm.singular) {
                continue;
            }
            const auto& mat = problem.elastic;
            for (const auto& t : mat.tractions) {
                if (t.patch_id == s.patch_id && t.facet == s.facet) {
                    term = term + traction_density(u, t.value, d, fm.measure);
                }
            }
            const bool candidate =
                std::find(mat.contact_facets.begin(), mat.contact_facets.end(),
                          std::pair<int, int>{s.patch_id, s.facet}) !=
                mat.contact_facets.end();
            if (candidate) {
                const auto xp = patch.eval(x);
                for (const auto& plane : mat.contact_planes) {
                    term = term + contact_density(u, jd, fm, xp, d, mat, plane,
                                                  phi, stats);
                }
            }
        }
        if (!std::isfinite(value_of(term))) {
            throw std::runtime_error(
                "non-finite energy contribution at patch " +
                std::to_string(s.patch_id) + ", facet " +
                std::to_string(s.facet));
        }
        loss = loss + term * s.weight;
    }
    return loss;
}

}  // namespace ipns::physics

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

#include "ipns/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace ipns::topology {

namespace {

using spline::Patch;
using spline::Vec3;

using QPoint = std::array<std::int64_t, 3>;

QPoint quantize(const Vec3& x, int dim, double quantum)
{
    QPoint q{};
    for (int m = 0; m < dim; ++m) {
        q[m] = static_cast<std::int64_t>(std::llround(x[m] / quantum));
    }
    return q;
}

std::vector<SubFacet> enumerate_subfacets(int dim)
{
    std::vector<SubFacet> out;
    for (int mask = 1; mask < (1 << dim); ++mask) {
        std::vector<int> fixed;
        std::vector<int> free_axes;
        for (int a = 0; a < dim; ++a) {
            if (mask & (1 << a)) {
                fixed.push_back(a);
            } else {
                free_axes.push_back(a);
            }
        }
        const int n_fixed = static_cast<int>(fixed.size());
        for (int sbits = 0; sbits < (1 << n_fixed); ++sbits) {
            SubFacet sf;
            sf.fixed_axes = fixed;
            sf.free_axes = free_axes;
            for (int k = 0; k < n_fixed; ++k) {
                sf.fixed_signs.push_back((sbits & (1 << k)) ? 1.0 : -1.0);
            }
            out.push_back(std::move(sf));
        }
    }
    return out;
}

std::vector<Vec3> subfacet_corners(const SubFacet& sf, int dim)
{
    const int q = sf.q(dim);
    std::vector<Vec3> corners;
    for (int bits = 0; bits < (1 << q); ++bits) {
        Vec3 x{};
        for (std::size_t k = 0; k < sf.fixed_axes.size(); ++k) {
            x[sf.fixed_axes[k]] = sf.fixed_signs[k];
        }
        for (int j = 0; j < q; ++j) {
            x[sf.free_axes[j]] = (bits & (1 << j)) ? 1.0 : -1.0;
        }
        corners.push_back(x);
    }
    return corners;
}

// Deterministic, asymmetric interior sample points used for
// orientation resolution.
std::vector<std::array<double, 3>> canonical_samples(int q)
{
    switch (q) {
    case 0:
        return {{0, 0, 0}};
    case 1:
        return {{-0.62, 0, 0}, {0.17, 0, 0}, {0.83, 0, 0}};
    default:
        return {{-0.62, 0.17, 0}, {0.17, -0.83, 0},  {0.83, 0.41, 0},
                {-0.29, -0.53, 0}, {0.55, -0.11, 0}};
    }
}

Vec3 embed_point(const SubFacet& sf, const OrientationMap& om,
                 std::span<const double> s, int dim)
{
    Vec3 x{};
    for (std::size_t k = 0; k < sf.fixed_axes.size(); ++k) {
        x[sf.fixed_axes[k]] = sf.fixed_signs[k];
    }
    const int q = sf.q(dim);
    for (int j = 0; j < q; ++j) {
        x[sf.free_axes[j]] = om.sign[j] * s[om.src[j]];
    }
    return x;
}

OrientationMap identity_orientation(int q)
{
    OrientationMap om;
    for (int j = 0; j < q; ++j) {
        om.src[j] = j;
        om.sign[j] = 1.0;
    }
    return om;
}

std::vector<OrientationMap> all_orientations(int q)
{
    std::vector<OrientationMap> out;
    std::array<int, 3> perm{};
    for (int j = 0; j < q; ++j) {
        perm[j] = j;
    }
    do {
        for (int sbits = 0; sbits < (1 << q); ++sbits) {
            OrientationMap om;
            for (int j = 0; j < q; ++j) {
                om.src[j] = perm[j];
                om.sign[j] = (sbits & (1 << j)) ? -1.0 : 1.0;
            }
            out.push_back(om);
        }
    } while (std::next_permutation(perm.begin(), perm.begin() + q));
    if (q == 0) {
        out.push_back(OrientationMap{});
    }
    return out;
}

std::string multi_index_string(const std::vector<int>& mi)
{
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < mi.size(); ++i) {
        os << (i ? "," : "") << mi[i];
    }
    os << ")";
    return os.str();
}

}  // namespace

const Localization& InterfaceEntity::localization(int patch_id) const
{
    for (const auto& loc : localizations) {
        if (loc.patch_id == patch_id) {
            return loc;
        }
    }
    throw std::invalid_argument("patch " + std::to_string(patch_id) +
                                " is not a member of entity " +
                                multi_index_string(multi_index));
}

std::array<double, 3> InterfaceEntity::embed(int patch_id,
                                             std::span<const double> s) const
{
    const auto& loc = localization(patch_id);
    const int dim =
        static_cast<int>(loc.subfacet.fixed_axes.size() +
                         loc.subfacet.free_axes.size());
    return embed_point(loc.subfacet, loc.orientation, s, dim);
}

std::vector<std::vector<int>> PatchTopology::multi_index_set(
    int patch_id) const
{
    std::set<std::vector<int>> out;
    for (const auto& e : entities_) {
        if (e.on_dirichlet || e.subordinate) {
            continue;
        }
        if (std::find(e.multi_index.begin(), e.multi_index.end(), patch_id) !=
            e.multi_index.end()) {
            out.insert(e.multi_index);
        }
    }
    return {out.begin(), out.end()};
}

std::optional<std::size_t> PatchTopology::entity_at(int patch_id,
                                                    const SubFacet& sf) const
{
    const auto it = by_subfacet_.find({patch_id, sf.fixed_axes});
    if (it == by_subfacet_.end()) {
        return std::nullopt;
    }
    const auto jt = it->second.find(sf.fixed_signs);
    if (jt == it->second.end()) {
        return std::nullopt;
    }
    return jt->second;
}

PatchTopology detect_interfaces(const model::MultiPatchModel& model,
                                double geo_tol)
{
    const int dim = model.dim();
    if (geo_tol <= 0.0) {
        geo_tol = 1e-9 * model.bbox_diameter();
    }
    PatchTopology topo;
    topo.geo_tol_ = geo_tol;

    const auto subfacets = enumerate_subfacets(dim);

    // Group sub-facets by the quantized set of their physical corners.
    std::map<std::vector<QPoint>, std::vector<std::pair<int, std::size_t>>>
        groups;
    for (const auto& patch : model.patches()) {
        for (std::size_t si = 0; si < subfacets.size(); ++si) {
            std::vector<QPoint> key;
            for (const auto& c : subfacet_corners(subfacets[si], dim)) {
                key.push_back(quantize(
                    patch.eval(std::span<const double>(c.data(), dim)), dim,
                    geo_tol));
            }
            std::sort(key.begin(), key.end());
            groups[std::move(key)].emplace_back(patch.id(), si);
        }
    }

    const double match_tol =
        std::max(1e-6 * model.bbox_diameter(), 100.0 * geo_tol);
    for (const auto& [key, members] : groups) {
        if (members.size() < 2) {
            continue;
        }
        InterfaceEntity ent;
        for (const auto& [pid, si] : members) {
            if (std::find(ent.multi_index.begin(), ent.multi_index.end(),
                          pid) != ent.multi_index.end()) {
                throw std::runtime_error(
                    "patch " + std::to_string(pid) +
                    " interfaces itself; periodic topologies are not "
                    "supported");
            }
            ent.multi_index.push_back(pid);
        }
        // Members ordered by patch id; the first is the canonical owner.
        std::vector<std::pair<int, std::size_t>> ordered(members.begin(),
                                                         members.end());
        std::sort(ordered.begin(), ordered.end());
        std::sort(ent.multi_index.begin(), ent.multi_index.end());
        ent.q = subfacets[ordered.front().second].q(dim);

        const auto samples = canonical_samples(ent.q);
        const auto& owner_sf = subfacets[ordered.front().second];
        const auto& owner_patch = model.patch(ordered.front().first);
        std::vector<Vec3> targets;
        for (const auto& s : samples) {
            const Vec3 x = embed_point(owner_sf, identity_orientation(ent.q),
                                       std::span<const double>(s.data(), ent.q),
                                       dim);
            targets.push_back(
                owner_patch.eval(std::span<const double>(x.data(), dim)));
        }

        for (const auto& [pid, si] : ordered) {
            Localization loc;
            loc.patch_id = pid;
            loc.subfacet = subfacets[si];
            bool found = false;
            for (const auto& om : all_orientations(ent.q)) {
                double max_err = 0.0;
                for (std::size_t k = 0; k < samples.size(); ++k) {
                    const Vec3 x = embed_point(
                        loc.subfacet, om,
                        std::span<const double>(samples[k].data(), ent.q),
                        dim);
                    const Vec3 f = model.patch(pid).eval(
                        std::span<const double>(x.data(), dim));
                    double err = 0.0;
                    for (int m = 0; m < dim; ++m) {
                        err += (f[m] - targets[k][m]) * (f[m] - targets[k][m]);
                    }
                    max_err = std::max(max_err, std::sqrt(err));
                }
                if (max_err < match_tol) {
                    loc.orientation = om;
                    found = true;
                    break;
                }
            }
            if (!found) {
                throw std::runtime_error(
                    "non-conforming interface " +
                    multi_index_string(ent.multi_index) +
                    ": no signed permutation matches the shared boundary of "
                    "patch " +
                    std::to_string(pid));
            }
            ent.localizations.push_back(std::move(loc));
        }

        // Contained in the Dirichlet boundary iff some member facet
        // holding the entity is a Dirichlet facet.
        for (const auto& loc : ent.localizations) {
            for (std::size_t k = 0; k < loc.subfacet.fixed_axes.size(); ++k) {
                const int facet = loc.subfacet.fixed_axes[k] * 2 +
                                  (loc.subfacet.fixed_signs[k] > 0 ? 1 : 0);
                if (model.is_dirichlet(loc.patch_id, facet)) {
                    ent.on_dirichlet = true;
                }
            }
        }

        const std::size_t idx = topo.entities_.size();
        for (const auto& loc : ent.localizations) {
            topo.by_subfacet_[{loc.patch_id, loc.subfacet.fixed_axes}]
                             [loc.subfacet.fixed_signs] = idx;
        }
        topo.entities_.push_back(std::move(ent));
    }

    // Subordinate entities: contained in a higher-dimensional entity
    // shared by exactly the same patches.
    for (auto& ent : topo.entities_) {
        for (const auto& loc : ent.localizations) {
            for (std::size_t k = 0; k < loc.subfacet.fixed_axes.size(); ++k) {
                SubFacet parent;
                for (std::size_t k2 = 0; k2 < loc.subfacet.fixed_axes.size();
                     ++k2) {
                    if (k2 == k) {
                        continue;
                    }
                    parent.fixed_axes.push_back(loc.subfacet.fixed_axes[k2]);
                    parent.fixed_signs.push_back(loc.subfacet.fixed_signs[k2]);
                }
                if (parent.fixed_axes.empty()) {
                    continue;
                }
                const auto pidx = topo.entity_at(loc.patch_id, parent);
                if (pidx &&
                    topo.entities_[*pidx].multi_index == ent.multi_index) {
                    ent.subordinate = true;
                }
            }
        }
    }

    // Partial sharing without a common entity means the decomposition
    // is not conforming.
    {
        std::map<QPoint, std::map<int, Vec3>> touch;
        const int n_grid = 4;
        for (const auto& patch : model.patches()) {
            for (int facet = 0; facet < 2 * dim; ++facet) {
                const int axis = spline::facet_axis(facet);
                std::array<int, 3> counts{};
                counts.fill(1);
                for (int a = 0; a < dim; ++a) {
                    if (a != axis) {
                        counts[a] = n_grid + 1;
                    }
                }
                for (int i0 = 0; i0 < counts[0]; ++i0) {
                    for (int i1 = 0; i1 < counts[1]; ++i1) {
                        for (int i2 = 0; i2 < counts[2]; ++i2) {
                            Vec3 x{};
                            const std::array<int, 3> ii{i0, i1, i2};
                            for (int a = 0; a < dim; ++a) {
                                x[a] = counts[a] == 1
                                           ? 0.0
                                           : -1.0 + 2.0 * ii[a] / n_grid;
                            }
                            x[axis] = spline::facet_side(facet);
                            const Vec3 f = patch.eval(
                                std::span<const double>(x.data(), dim));
                            touch[quantize(f, dim, geo_tol)].emplace(
                                patch.id(), x);
                        }
                    }
                }
            }
        }
        // A pair is conforming at a shared point only if the point lies
        // on an entity localized in both patches.
        auto on_subfacet = [](const SubFacet& sf, const Vec3& xhat) {
            for (std::size_t k = 0; k < sf.fixed_axes.size(); ++k) {
                if (std::abs(xhat[sf.fixed_axes[k]] - sf.fixed_signs[k]) >
                    1e-6) {
                    return false;
                }
            }
            return true;
        };
        for (const auto& [pt, pids] : touch) {
            if (pids.size() < 2) {
                continue;
            }
            for (const auto& [a, xa] : pids) {
                for (const auto& [b, xb] : pids) {
                    if (a >= b) {
                        continue;
                    }
                    bool covered = false;
                    for (const auto& ent : topo.entities_) {
                        const auto& mi = ent.multi_index;
                        if (std::find(mi.begin(), mi.end(), a) == mi.end() ||
                            std::find(mi.begin(), mi.end(), b) == mi.end()) {
                            continue;
                        }
                        if (on_subfacet(ent.localization(a).subfacet, xa) &&
                            on_subfacet(ent.localization(b).subfacet, xb)) {
                            covered = true;
                            break;
                        }
                    }
                    if (!covered) {
                        throw std::runtime_error(
                            "patches " + std::to_string(a) + " and " +
                            std::to_string(b) +
                            " share boundary points but no conforming "
                            "interface");
                    }
                }
            }
        }
    }

    // Interior overlap: invert interior samples of one patch through
    // the other (projected Newton) and flag convergence to an interior
    // pre-image.
    for (const auto& pa : model.patches()) {
        for (const auto& pb : model.patches()) {
            if (pa.id() == pb.id()) {
                continue;
            }
            const double grid[3] = {-0.5, 0.0, 0.5};
            std::array<int, 3> counts{};
            for (int a = 0; a < dim; ++a) {
                counts[a] = 3;
            }
            for (int a = dim; a < 3; ++a) {
                counts[a] = 1;
            }
            for (int i0 = 0; i0 < counts[0]; ++i0) {
                for (int i1 = 0; i1 < counts[1]; ++i1) {
                    for (int i2 = 0; i2 < counts[2]; ++i2) {
                        Vec3 xh{grid[i0], dim > 1 ? grid[i1] : 0.0,
                                dim > 2 ? grid[i2] : 0.0};
                        const Vec3 target = pa.eval(
                            std::span<const double>(xh.data(), dim));
                        Vec3 y{};
                        bool converged = false;
                        for (int it = 0; it < 40; ++it) {
                            const Vec3 f = pb.eval(
                                std::span<const double>(y.data(), dim));
                            Vec3 r{};
                            double rn = 0.0;
                            for (int m = 0; m < dim; ++m) {
                                r[m] = target[m] - f[m];
                                rn += r[m] * r[m];
                            }
                            if (std::sqrt(rn) < 10.0 * geo_tol) {
                                converged = true;
                                break;
                            }
                            const auto jd = pb.jacobian(
                                std::span<const double>(y.data(), dim));
                            if (jd.singular) {
                                break;
                            }
                            const auto inv =
                                spline::inverse(jd.J, dim, jd.detJ);
                            for (int m = 0; m < dim; ++m) {
                                double step = 0.0;
                                for (int k = 0; k < dim; ++k) {
                                    step += inv[m * spline::kMaxDim + k] *
                                            r[k];
                                }
                                y[m] = std::clamp(y[m] + step, -1.0, 1.0);
                            }
                        }
                        if (converged) {
                            bool interior = true;
                            for (int m = 0; m < dim; ++m) {
                                if (std::abs(y[m]) > 1.0 - 1e-6) {
                                    interior = false;
                                }
                            }
                            if (interior) {
                                throw std::runtime_error(
                                    "patch interiors of " +
                                    std::to_string(pa.id()) + " and " +
                                    std::to_string(pb.id()) + " overlap");
                            }
                        }
                    }
                }
            }
        }
    }

    // Conformity gate over every detected entity.
    for (const auto& ent : topo.entities_) {
        const auto rep = conformity_check(model, ent, 50, match_tol);
        if (!rep.pass) {
            throw std::runtime_error(
                "interface " + multi_index_string(ent.multi_index) +
                " fails conformity: point mismatch " +
                std::to_string(rep.max_point_mismatch) +
                ", tangent mismatch " +
                std::to_string(rep.max_tangent_mismatch));
        }
    }

    return topo;
}

ConformityReport conformity_check(const model::MultiPatchModel& model,
                                  const InterfaceEntity& entity,
                                  int n_samples, double tol)
{
    const int dim = model.dim();
    const int q = entity.q;
    ConformityReport rep;
    const int owner = entity.multi_index.front();
    // Low-discrepancy-ish deterministic sample sweep of [-1,1]^q.
    for (int k = 0; k < n_samples; ++k) {
        std::array<double, 3> s{};
        for (int j = 0; j < q; ++j) {
            const double u =
                std::fmod(0.07 + (k + 1) * (j == 0 ? 0.6180339887 : 0.7548776662),
                          1.0);
            s[j] = 2.0 * u - 1.0;
        }
        const auto x0 = entity.embed(owner, std::span<const double>(s.data(), q));
        const Vec3 f0 = model.patch(owner).eval(
            std::span<const double>(x0.data(), dim));
        for (const auto& loc : entity.localizations) {
            if (loc.patch_id == owner) {
                continue;
            }
            const auto xi =
                entity.embed(loc.patch_id, std::span<const double>(s.data(), q));
            const Vec3 fi = model.patch(loc.patch_id)
                                .eval(std::span<const double>(xi.data(), dim));
            double err = 0.0;
            for (int m = 0; m < dim; ++m) {
                err += (fi[m] - f0[m]) * (fi[m] - f0[m]);
            }
            rep.max_point_mismatch =
                std::max(rep.max_point_mismatch, std::sqrt(err));

            // Tangents along each canonical direction.
            const double h = 1e-6;
            for (int j = 0; j < q; ++j) {
                if (std::abs(s[j]) > 1.0 - 2.0 * h) {
                    continue;
                }
                auto sp = s;
                auto sm = s;
                sp[j] += h;
                sm[j] -= h;
                auto tangent = [&](int pid, const std::array<double, 3>& a,
                                   const std::array<double, 3>& b) {
                    const auto xa =
                        entity.embed(pid, std::span<const double>(a.data(), q));
                    const auto xb =
                        entity.embed(pid, std::span<const double>(b.data(), q));
                    const Vec3 fa = model.patch(pid).eval(
                        std::span<const double>(xa.data(), dim));
                    const Vec3 fb = model.patch(pid).eval(
                        std::span<const double>(xb.data(), dim));
                    Vec3 t{};
                    double n = 0.0;
                    for (int m = 0; m < dim; ++m) {
                        t[m] = fa[m] - fb[m];
                        n += t[m] * t[m];
                    }
                    n = std::sqrt(n);
                    for (int m = 0; m < dim; ++m) {
                        t[m] /= n;
                    }
                    return t;
                };
                const Vec3 t0 = tangent(owner, sp, sm);
                const Vec3 ti = tangent(loc.patch_id, sp, sm);
                double terr = 0.0;
                for (int m = 0; m < dim; ++m) {
                    terr += (ti[m] - t0[m]) * (ti[m] - t0[m]);
                }
                rep.max_tangent_mismatch =
                    std::max(rep.max_tangent_mismatch, std::sqrt(terr));
            }
        }
    }
    rep.pass = rep.max_point_mismatch < tol &&
               rep.max_tangent_mismatch < std::max(tol, 1e-5);
    return rep;
}

OrientationMap facet_correspondence(const InterfaceEntity& entity,
                                    int patch_id)
{
    return entity.localization(patch_id).orientation;
}

}  // namespace ipns::topology

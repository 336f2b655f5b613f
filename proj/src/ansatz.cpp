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

#include "ipns/ansatz.hpp"

#include "ipns/kernels.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ipns::ansatz {

namespace {

using topology::InterfaceEntity;
using topology::Localization;

// A factor (x_axis - sign); zero on the facet x_axis = sign.
using Factor = std::pair<int, int>;
// A required zero set, given by facet constraints x_axis = sign.
using Constraints = std::vector<Factor>;

Constraints fixed_of(const Localization& loc)
{
    Constraints c;
    for (std::size_t k = 0; k < loc.subfacet.fixed_axes.size(); ++k) {
        c.emplace_back(loc.subfacet.fixed_axes[k],
                       loc.subfacet.fixed_signs[k] > 0 ? 1 : -1);
    }
    return c;
}

bool contains_all(const Constraints& inner, const Constraints& outer)
{
    return std::all_of(inner.begin(), inner.end(), [&](const Factor& f) {
        return std::find(outer.begin(), outer.end(), f) != outer.end();
    });
}

std::string entity_name(const std::vector<int>& mi, int q)
{
    std::ostringstream os;
    os << "interface(";
    for (std::size_t i = 0; i < mi.size(); ++i) {
        os << (i ? "," : "") << mi[i];
    }
    os << ")[q=" << q << "]";
    return os.str();
}

// Smallest factor set with a zero on every requirement; candidates
// exclude factors vanishing on the entity itself.
std::set<Factor> greedy_cover(const std::vector<Constraints>& requirements,
                              const Constraints& own, int dim,
                              const std::string& who)
{
    std::vector<Factor> candidates;
    for (int k = 0; k < dim; ++k) {
        for (int s : {-1, 1}) {
            if (std::find(own.begin(), own.end(), Factor{k, s}) == own.end()) {
                candidates.emplace_back(k, s);
            }
        }
    }
    std::set<Factor> chosen;
    std::vector<bool> covered(requirements.size(), false);
    for (;;) {
        std::size_t n_open = 0;
        for (std::size_t i = 0; i < requirements.size(); ++i) {
            if (!covered[i]) {
                ++n_open;
            }
        }
        if (n_open == 0) {
            break;
        }
        Factor best{-1, 0};
        std::size_t best_gain = 0;
        for (const Factor& f : candidates) {
            if (chosen.contains(f)) {
                continue;
            }
            std::size_t gain = 0;
            for (std::size_t i = 0; i < requirements.size(); ++i) {
                if (!covered[i] &&
                    std::find(requirements[i].begin(), requirements[i].end(),
                              f) != requirements[i].end()) {
                    ++gain;
                }
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = f;
            }
        }
        if (best_gain == 0) {
            throw std::runtime_error(
                "no admissible vanishing polynomial for " + who +
                ": a required zero set cannot be covered");
        }
        chosen.insert(best);
        for (std::size_t i = 0; i < requirements.size(); ++i) {
            if (!covered[i] &&
                std::find(requirements[i].begin(), requirements[i].end(),
                          best) != requirements[i].end()) {
                covered[i] = true;
            }
        }
    }
    return chosen;
}

}  // namespace

std::string to_string(const VanishingSpec& v, int dim,
                      const std::string& symbol)
{
    std::ostringstream os;
    for (int k = 0; k < dim; ++k) {
        for (int e = 0; e < v.alpha[k]; ++e) {
            os << "(" << symbol << k + 1 << "-1)";
        }
        for (int e = 0; e < v.beta[k]; ++e) {
            os << "(" << symbol << k + 1 << "+1)";
        }
    }
    return os.str().empty() ? "1" : os.str();
}

const TermMember& InterfaceTerm::member(int patch_id) const
{
    for (const auto& m : members) {
        if (m.patch_id == patch_id) {
            return m;
        }
    }
    throw std::invalid_argument("patch " + std::to_string(patch_id) +
                                " does not carry this interface term");
}

const PatchAnsatz& GlobalAnsatz::patch(int id) const
{
    for (const auto& p : patches) {
        if (p.patch_id == id) {
            return p;
        }
    }
    throw std::invalid_argument("unknown patch id " + std::to_string(id));
}

GlobalAnsatz build_ansatz(const model::MultiPatchModel& model,
                          const topology::PatchTopology& topo,
                          const NetPlan& plan, std::uint64_t seed)
{
    const int d = model.dim();
    GlobalAnsatz g;
    g.dim = d;
    g.components = plan.components;
    g.phi_count = plan.phi_count;

    auto check_role = [&](const net::NetworkSpec& spec, int spatial,
                          const std::string& role) {
        spec.validate();
        if (spec.param_input_count != plan.phi_count ||
            spec.spatial_input_count() != spatial ||
            spec.output_width() != plan.components) {
            throw std::invalid_argument(
                "network template for " + role +
                " does not match the ansatz shape (spatial " +
                std::to_string(spatial) + ", phi " +
                std::to_string(plan.phi_count) + ", components " +
                std::to_string(plan.components) + ")");
        }
    };
    check_role(plan.interior, d, "interior");

    const auto& ents = topo.entities();
    std::vector<std::size_t> active;
    for (int q = 0; q < d; ++q) {
        for (std::size_t i = 0; i < ents.size(); ++i) {
            if (ents[i].q == q && !ents[i].subordinate &&
                !ents[i].on_dirichlet) {
                active.push_back(i);
            }
        }
    }

    // Dirichlet data must agree where Dirichlet facets of different
    // patches meet.
    for (const auto& e : ents) {
        if (!e.on_dirichlet) {
            continue;
        }
        std::set<double> values;
        for (const auto& loc : e.localizations) {
            for (std::size_t k = 0; k < loc.subfacet.fixed_axes.size(); ++k) {
                const int f = loc.subfacet.fixed_axes[k] * 2 +
                              (loc.subfacet.fixed_signs[k] > 0 ? 1 : 0);
                if (const auto v = model.dirichlet_value(loc.patch_id, f)) {
                    values.insert(*v);
                }
            }
        }
        if (values.size() > 1) {
            throw std::runtime_error(
                "incompatible Dirichlet data at a shared boundary closure of " +
                entity_name(e.multi_index, e.q));
        }
    }

    auto is_member = [](const InterfaceEntity& e, int pid) {
        return std::find(e.multi_index.begin(), e.multi_index.end(), pid) !=
               e.multi_index.end();
    };

    std::size_t next_block = 0;
    auto add_network_block = [&](const std::string& name,
                                 const net::NetworkSpec& spec) {
        ParamBlock b;
        b.name = name;
        b.offset = g.init_params.size();
        b.size = spec.parameter_count();
        b.is_network = true;
        const auto init =
            net::init_network(spec, seed + 0x9e3779b97f4a7c15ULL * ++next_block);
        g.init_params.insert(g.init_params.end(), init.begin(), init.end());
        g.registry.push_back(b);
        return static_cast<int>(g.registry.size()) - 1;
    };
    auto add_scalar_block = [&](const std::string& name, int n) {
        ParamBlock b;
        b.name = name;
        b.offset = g.init_params.size();
        b.size = static_cast<std::size_t>(n);
        b.is_network = false;
        g.init_params.insert(g.init_params.end(), n, 0.0);
        g.registry.push_back(b);
        ++next_block;
        return static_cast<int>(g.registry.size()) - 1;
    };

    std::set<std::string> used_names;
    for (const std::size_t idx : active) {
        const InterfaceEntity& e = ents[idx];
        InterfaceTerm term;
        term.multi_index = e.multi_index;
        term.q = e.q;

        // Per-member factor selection from the required zero sets: other
        // active entities of the patch with dimension <= q, plus every
        // Dirichlet facet.
        std::map<int, std::set<Factor>> factors;
        for (const auto& loc : e.localizations) {
            const int pid = loc.patch_id;
            std::vector<Constraints> requirements;
            for (const std::size_t idx2 : active) {
                if (idx2 == idx || ents[idx2].q > e.q ||
                    !is_member(ents[idx2], pid)) {
                    continue;
                }
                requirements.push_back(
                    fixed_of(ents[idx2].localization(pid)));
            }
            for (int f = 0; f < 2 * d; ++f) {
                if (model.is_dirichlet(pid, f)) {
                    requirements.push_back(
                        {{spline::facet_axis(f),
                          spline::facet_side(f) > 0 ? 1 : -1}});
                }
            }
            factors[pid] =
                greedy_cover(requirements, fixed_of(loc), d,
                             entity_name(e.multi_index, e.q));
        }

        // Symmetrize factor sets across members through every entity
        // containing this one, so restrictions to shared boundaries
        // agree exactly.
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t idx2 = 0; idx2 < ents.size(); ++idx2) {
                const InterfaceEntity& E = ents[idx2];
                if (E.q < e.q || E.subordinate || E.on_dirichlet) {
                    if (idx2 != idx) {
                        continue;
                    }
                }
                for (const auto& li : e.localizations) {
                    if (!is_member(E, li.patch_id)) {
                        continue;
                    }
                    const auto& Ei = E.localization(li.patch_id);
                    if (!contains_all(fixed_of(Ei), fixed_of(li))) {
                        continue;
                    }
                    for (const auto& lj : e.localizations) {
                        if (lj.patch_id == li.patch_id ||
                            !is_member(E, lj.patch_id)) {
                            continue;
                        }
                        const auto& Ej = E.localization(lj.patch_id);
                        if (!contains_all(fixed_of(Ej), fixed_of(lj))) {
                            continue;
                        }
                        for (const Factor& f : factors[li.patch_id]) {
                            const auto& fa = Ei.subfacet.free_axes;
                            const auto it =
                                std::find(fa.begin(), fa.end(), f.first);
                            if (it == fa.end()) {
                                continue;
                            }
                            const int a =
                                static_cast<int>(it - fa.begin());
                            const int c = Ei.orientation.src[a];
                            const double sc =
                                f.second * Ei.orientation.sign[a];
                            int b = -1;
                            for (int bb = 0; bb < E.q; ++bb) {
                                if (Ej.orientation.src[bb] == c) {
                                    b = bb;
                                }
                            }
                            const Factor mapped{
                                Ej.subfacet.free_axes[b],
                                Ej.orientation.sign[b] * sc > 0 ? 1 : -1};
                            if (factors[lj.patch_id].insert(mapped).second) {
                                changed = true;
                            }
                        }
                    }
                }
            }
        }

        // Split each member's factors into shared canonical tangential
        // exponents and normalized per-patch transverse exponents.
        for (const auto& loc : e.localizations) {
            TermMember mem;
            mem.patch_id = loc.patch_id;
            mem.free_axes = loc.subfacet.free_axes;
            mem.fixed_axes = loc.subfacet.fixed_axes;
            mem.fixed_signs = loc.subfacet.fixed_signs;
            mem.orient = loc.orientation;
            std::array<int, 3> ta{};
            std::array<int, 3> tb{};
            for (const Factor& f : factors[loc.patch_id]) {
                const auto& fx = loc.subfacet.fixed_axes;
                const auto it = std::find(fx.begin(), fx.end(), f.first);
                if (it != fx.end()) {
                    const double own_sign =
                        loc.subfacet.fixed_signs[it - fx.begin()];
                    (f.second > 0 ? mem.transverse.alpha
                                  : mem.transverse.beta)[f.first] = 1;
                    mem.norm *= 1.0 / (own_sign - f.second);
                } else {
                    const auto& fr = loc.subfacet.free_axes;
                    const int a = static_cast<int>(
                        std::find(fr.begin(), fr.end(), f.first) - fr.begin());
                    const int c = loc.orientation.src[a];
                    const double sc = f.second * loc.orientation.sign[a];
                    (sc > 0 ? ta : tb)[c] = 1;
                }
            }
            if (term.members.empty()) {
                term.tang_alpha = ta;
                term.tang_beta = tb;
            } else if (term.tang_alpha != ta || term.tang_beta != tb) {
                throw std::logic_error(
                    "inconsistent tangential factors after symmetrization "
                    "for " +
                    entity_name(e.multi_index, e.q));
            }
            term.members.push_back(std::move(mem));
        }

        std::string name = entity_name(e.multi_index, e.q);
        while (used_names.contains(name)) {
            name += "'";
        }
        used_names.insert(name);

        if (e.q == 0 && plan.phi_count == 0) {
            term.kind = PayloadKind::Scalar;
            term.block = add_scalar_block(name, plan.components);
        } else if (e.q == 0) {
            check_role(plan.zero_dim, 0, "0D payloads");
            term.kind = PayloadKind::Network;
            term.net = plan.zero_dim;
            term.block = add_network_block(name, term.net);
        } else {
            const auto it = plan.interface_nets.find(e.q);
            if (it == plan.interface_nets.end()) {
                throw std::invalid_argument(
                    "no network template for interface dimension " +
                    std::to_string(e.q));
            }
            check_role(it->second, e.q,
                       "interfaces of dimension " + std::to_string(e.q));
            term.kind = PayloadKind::Network;
            term.net = it->second;
            term.block = add_network_block(name, term.net);
        }
        g.interface_terms.push_back(std::move(term));
    }

    // Interior terms, patches ordered by id.
    std::vector<int> pids;
    for (const auto& p : model.patches()) {
        pids.push_back(p.id());
    }
    std::sort(pids.begin(), pids.end());
    for (const int pid : pids) {
        PatchAnsatz pa;
        pa.patch_id = pid;
        pa.interior = plan.interior;
        std::vector<Constraints> requirements;
        for (const std::size_t idx : active) {
            if (is_member(ents[idx], pid)) {
                requirements.push_back(fixed_of(ents[idx].localization(pid)));
            }
        }
        for (int f = 0; f < 2 * d; ++f) {
            if (model.is_dirichlet(pid, f)) {
                requirements.push_back({{spline::facet_axis(f),
                                         spline::facet_side(f) > 0 ? 1 : -1}});
            }
        }
        const auto chosen =
            greedy_cover(requirements, {}, d,
                         "the interior of patch " + std::to_string(pid));
        for (const Factor& f : chosen) {
            (f.second > 0 ? pa.vanish.alpha : pa.vanish.beta)[f.first] = 1;
        }

        for (int f = 0; f < 2 * d; ++f) {
            const auto v = model.dirichlet_value(pid, f);
            if (!v) {
                continue;
            }
            pa.lifts.push_back({f, *v});
            if (*v == 0.0) {
                continue;
            }
            // A nonzero constant lift is exact only when every other
            // constrained set lies on the opposing facet, where the
            // lift vanishes.
            const Factor opposite{spline::facet_axis(f),
                                  spline::facet_side(f) > 0 ? -1 : 1};
            for (int f2 = 0; f2 < 2 * d; ++f2) {
                if (f2 != f && model.is_dirichlet(pid, f2) &&
                    spline::facet_axis(f2) != spline::facet_axis(f)) {
                    throw std::runtime_error(
                        "nonzero Dirichlet data on adjacent facets of patch " +
                        std::to_string(pid) + " cannot be lifted exactly");
                }
            }
            for (const std::size_t idx : active) {
                if (!is_member(ents[idx], pid)) {
                    continue;
                }
                const auto fx = fixed_of(ents[idx].localization(pid));
                if (std::find(fx.begin(), fx.end(), opposite) == fx.end()) {
                    throw std::runtime_error(
                        "nonzero Dirichlet data on patch " +
                        std::to_string(pid) +
                        " meets an interface away from the opposing facet");
                }
            }
        }

        pa.interior_block =
            add_network_block("patch" + std::to_string(pid) + ":interior",
                              plan.interior);
        for (std::size_t t = 0; t < g.interface_terms.size(); ++t) {
            for (const auto& m : g.interface_terms[t].members) {
                if (m.patch_id == pid) {
                    pa.terms.push_back(t);
                }
            }
        }
        g.patches.push_back(std::move(pa));
    }

    return g;
}

FieldSamples pushforward_field(const GlobalAnsatz& g,
                               const model::MultiPatchModel& model,
                               int patch_id, std::span<const double> xhat,
                               int n_points, std::span<const double> phi,
                               std::span<const double> params)
{
    const int d = g.dim;
    const int nc = g.components;
    const auto& patch = model.patch(patch_id);
    FieldSamples out;
    out.n = n_points;
    out.dim = d;
    out.components = nc;
    out.points.resize(static_cast<std::size_t>(n_points) * d);
    out.values.resize(static_cast<std::size_t>(n_points) * nc);
    out.gradients.resize(static_cast<std::size_t>(n_points) * nc * d, 0.0);
    out.singular.assign(n_points, 0);
    // Points are independent and write disjoint slots.
    kernels::parallel_for(n_points, [&](std::size_t lo, std::size_t hi) {
    for (int i = static_cast<int>(lo); i < static_cast<int>(hi); ++i) {
        const auto x = xhat.subspan(static_cast<std::size_t>(i) * d, d);
        const auto f = patch.eval(x);
        for (int m = 0; m < d; ++m) {
            out.points[static_cast<std::size_t>(i) * d + m] = f[m];
        }
        const auto ev = evaluate<double>(g, patch_id, x, phi, params);
        const auto jd = patch.jacobian(x);
        spline::Mat3 inv{};
        if (jd.singular) {
            out.singular[i] = 1;
        } else {
            inv = spline::inverse(jd.J, d, jd.detJ);
        }
        for (int c = 0; c < nc; ++c) {
            out.values[static_cast<std::size_t>(i) * nc + c] = ev.value[c];
            if (jd.singular) {
                continue;
            }
            for (int m = 0; m < d; ++m) {
                double gphys = 0.0;
                for (int k = 0; k < d; ++k) {
                    gphys += inv[k * spline::kMaxDim + m] * ev.grad[c][k];
                }
                out.gradients[(static_cast<std::size_t>(i) * nc + c) * d + m] =
                    gphys;
            }
        }
    }
    });
    return out;
}

}  // namespace ipns::ansatz

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

#include "ipns/model.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace ipns::topology {

// Sub-facet of [-1,1]^d: the axes in `fixed_axes` are pinned to the
// matching sign, the remaining axes are free.
struct SubFacet {
    std::vector<int> fixed_axes;    // ascending
    std::vector<double> fixed_signs;
    std::vector<int> free_axes;     // ascending

    int q(int dim) const { return dim - static_cast<int>(fixed_axes.size()); }
};

// Signed permutation from an entity's canonical coordinates onto a
// member patch's free facet coordinates:
//   xhat[free_axes[j]] = sign[j] * s[src[j]].
struct OrientationMap {
    std::array<int, 3> src{};
    std::array<double, 3> sign{};
};

struct Localization {
    int patch_id = 0;
    SubFacet subfacet;
    OrientationMap orientation;
};

struct InterfaceEntity {
    std::vector<int> multi_index;  // sorted member patch ids
    int q = 0;
    std::vector<Localization> localizations;  // ordered as multi_index
    bool on_dirichlet = false;
    // True when a higher-dimensional entity with the same member set
    // contains this one; such entities carry no ansatz term of their
    // own (continuity is inherited from the parent's shared payload).
    bool subordinate = false;

    const Localization& localization(int patch_id) const;
    // Full reference-domain point of member `patch_id` for canonical
    // coordinates s (length q).
    std::array<double, 3> embed(int patch_id,
                                std::span<const double> s) const;
};

struct ConformityReport {
    double max_point_mismatch = 0.0;
    double max_tangent_mismatch = 0.0;
    bool pass = false;
};

class PatchTopology {
public:
    const std::vector<InterfaceEntity>& entities() const { return entities_; }
    // Multi-index set J(i): multi-indices of all entities touching
    // patch i that are not contained in the Dirichlet boundary.
    std::vector<std::vector<int>> multi_index_set(int patch_id) const;

    // Entity (index) whose localization in `patch_id` is exactly the
    // given sub-facet, if any.
    std::optional<std::size_t> entity_at(int patch_id,
                                         const SubFacet& sf) const;

    double geo_tol() const { return geo_tol_; }

private:
    friend PatchTopology detect_interfaces(const model::MultiPatchModel&,
                                           double);
    std::vector<InterfaceEntity> entities_;
    std::map<std::pair<int, std::vector<int>>,
             std::map<std::vector<double>, std::size_t>>
        by_subfacet_;  // (patch, fixed_axes) -> fixed_signs -> entity
    double geo_tol_ = 0.0;
};

// geo_tol <= 0 selects the default 1e-9 * bounding-box diameter.
PatchTopology detect_interfaces(const model::MultiPatchModel& model,
                                double geo_tol = 0.0);

ConformityReport conformity_check(const model::MultiPatchModel& model,
                                  const InterfaceEntity& entity,
                                  int n_samples, double tol);

// Orientation map of `patch_id` within `entity`; throws when the patch
// is not a member.
OrientationMap facet_correspondence(const InterfaceEntity& entity,
                                    int patch_id);

}  // namespace ipns::topology

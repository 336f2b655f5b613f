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

#include "ipns/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipns::model {

int parse_facet(const std::string& name, int dim)
{
    if (name.size() == 3 && name[0] == 'x' && name[1] >= '1' &&
        name[1] <= '0' + dim && (name[2] == '-' || name[2] == '+')) {
        const int axis = name[1] - '1';
        return axis * 2 + (name[2] == '+' ? 1 : 0);
    }
    throw std::invalid_argument("invalid facet name: " + name);
}

std::string facet_name(int facet)
{
    std::string s = "x";
    s += static_cast<char>('1' + spline::facet_axis(facet));
    s += spline::facet_side(facet) > 0 ? '+' : '-';
    return s;
}

MultiPatchModel::MultiPatchModel(std::vector<spline::Patch> patches,
                                 std::vector<BoundaryRecord> boundaries)
    : patches_(std::move(patches)), boundaries_(std::move(boundaries))
{
    if (patches_.empty()) {
        throw std::invalid_argument("model has no patches");
    }
    const int d = patches_.front().dim();
    for (std::size_t i = 0; i < patches_.size(); ++i) {
        if (patches_[i].dim() != d || patches_[i].geo_dim() != d) {
            throw std::invalid_argument(
                "all patches must share one volumetric dimension");
        }
        if (!by_id_.emplace(patches_[i].id(), i).second) {
            throw std::invalid_argument("duplicate patch id " +
                                        std::to_string(patches_[i].id()));
        }
    }
    for (const auto& b : boundaries_) {
        if (!by_id_.contains(b.patch_id)) {
            throw std::invalid_argument("boundary record for unknown patch " +
                                        std::to_string(b.patch_id));
        }
        if (b.facet < 0 || b.facet >= 2 * d) {
            throw std::invalid_argument("boundary record facet out of range");
        }
    }
}

const spline::Patch& MultiPatchModel::patch(int id) const
{
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        throw std::invalid_argument("unknown patch id " + std::to_string(id));
    }
    return patches_[it->second];
}

bool MultiPatchModel::is_dirichlet(int patch_id, int facet) const
{
    return dirichlet_value(patch_id, facet).has_value();
}

bool MultiPatchModel::is_neumann(int patch_id, int facet) const
{
    return std::any_of(boundaries_.begin(), boundaries_.end(),
                       [&](const BoundaryRecord& b) {
                           return b.patch_id == patch_id && b.facet == facet &&
                                  b.type == BoundaryType::Neumann;
                       });
}

std::optional<double> MultiPatchModel::dirichlet_value(int patch_id,
                                                       int facet) const
{
    for (const auto& b : boundaries_) {
        if (b.patch_id == patch_id && b.facet == facet &&
            b.type == BoundaryType::Dirichlet) {
            return b.value;
        }
    }
    return std::nullopt;
}

double MultiPatchModel::bbox_diameter() const
{
    spline::Vec3 lo{};
    spline::Vec3 hi{};
    lo.fill(1e300);
    hi.fill(-1e300);
    for (const auto& p : patches_) {
        for (std::size_t i = 0; i < p.weights().size(); ++i) {
            for (int m = 0; m < p.geo_dim(); ++m) {
                const double c = p.control_points()[i * p.geo_dim() + m];
                lo[m] = std::min(lo[m], c);
                hi[m] = std::max(hi[m], c);
            }
        }
    }
    double diag2 = 0.0;
    for (int m = 0; m < dim(); ++m) {
        diag2 += (hi[m] - lo[m]) * (hi[m] - lo[m]);
    }
    return std::sqrt(diag2);
}

}  // namespace ipns::model

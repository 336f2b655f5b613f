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

#include "ipns/splinecore.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ipns::model {

enum class BoundaryType { Dirichlet, Neumann };

struct BoundaryRecord {
    int patch_id = 0;
    int facet = 0;
    BoundaryType type = BoundaryType::Neumann;
    double value = 0.0;  // constant Dirichlet data; unused for Neumann
};

// Facet spelled as "x<k>-" / "x<k>+", 1-based axis.
int parse_facet(const std::string& name, int dim);
std::string facet_name(int facet);

class MultiPatchModel {
public:
    MultiPatchModel() = default;
    MultiPatchModel(std::vector<spline::Patch> patches,
                    std::vector<BoundaryRecord> boundaries);

    int dim() const { return patches_.empty() ? 0 : patches_.front().dim(); }
    const std::vector<spline::Patch>& patches() const { return patches_; }
    const spline::Patch& patch(int id) const;
    const std::vector<BoundaryRecord>& boundaries() const
    {
        return boundaries_;
    }

    bool is_dirichlet(int patch_id, int facet) const;
    bool is_neumann(int patch_id, int facet) const;
    std::optional<double> dirichlet_value(int patch_id, int facet) const;

    double bbox_diameter() const;

private:
    std::vector<spline::Patch> patches_;
    std::map<int, std::size_t> by_id_;
    std::vector<BoundaryRecord> boundaries_;
};

}  // namespace ipns::model

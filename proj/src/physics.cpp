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

#include "ipns/physics.hpp"

#include <numbers>

namespace ipns::physics {

const ManufacturedCase& manufactured_case(const std::string& id)
{
    static const std::map<std::string, ManufacturedCase> cases = [] {
        std::map<std::string, ManufacturedCase> m;
        ManufacturedCase lshape;
        lshape.u_star = [](const spline::Vec3& x) {
            return std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]);
        };
        lshape.source = [](const spline::Vec3& x) {
            return 2.0 * std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]);
        };
        lshape.grad_u_star = [](const spline::Vec3& x) {
            return spline::Vec3{std::numbers::pi * std::cos(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]),
                                std::numbers::pi * std::sin(std::numbers::pi * x[0]) * std::cos(std::numbers::pi * x[1]),
                                0.0};
        };
        m.emplace("lshape-sine", std::move(lshape));
        return m;
    }();
    const auto it = cases.find(id);
    if (it == cases.end()) {
        throw std::invalid_argument("unknown manufactured case: " + id);
    }
    return it->second;
}

}  // namespace ipns::physics

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

#include "ipns/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ipns::io {

// Geometry file: JSON with "patches" and "boundaries"; unknown fields
// are rejected. See data/ for the documented schema in use.
model::MultiPatchModel load_geometry(const std::string& path);

// One full run description. Paths inside the file are resolved
// relative to the file's own directory.
struct RunConfig {
    std::string geometry_path;
    physics::Problem problem;
    ansatz::NetPlan plan;
    std::uint64_t ansatz_seed = 1;
    trainer::TrainConfig training;
    // Evaluation reference: a manufactured case id, a reference CSV,
    // or neither.
    std::string manufactured;
    std::string reference_path;
    int eval_grid_points = 75000;
};

RunConfig load_config(const std::string& path);

struct ReferenceField {
    int dim = 0;
    int components = 0;
    std::vector<spline::Vec3> points;  // physical coordinates
    std::vector<spline::Vec3> values;
    std::vector<std::string> warnings;
};

// CSV with header x1,x2[,x3],v1[,v2,v3]; extra columns are ignored.
// With a model supplied, points outside its bounding box produce a
// warning entry.
ReferenceField load_reference(const std::string& path,
                              const model::MultiPatchModel* model = nullptr);

struct PointLocation {
    bool found = false;
    int patch_id = 0;
    spline::Vec3 xhat{};
};

// Inverts the patch maps by damped Newton iteration with multistart.
PointLocation locate_point(const model::MultiPatchModel& model,
                           const spline::Vec3& x);

// Relative L2 error against a reference point set, both norms as
// equal-weight sums over the points. region_patch < 0 means the whole
// domain; otherwise only points located in that patch count.
double relative_l2(const ansatz::GlobalAnsatz& g,
                   const model::MultiPatchModel& model,
                   const ReferenceField& ref, std::span<const double> phi,
                   std::span<const double> theta, int region_patch = -1);

// Same metric against an analytic solution on a uniform reference-grid
// with about n_points points across the whole domain.
double relative_l2(const ansatz::GlobalAnsatz& g,
                   const model::MultiPatchModel& model,
                   const physics::ManufacturedCase& exact, int n_points,
                   std::span<const double> phi, std::span<const double> theta,
                   int region_patch = -1);

struct FieldExport {
    std::vector<std::string> files;  // one CSV per patch
    std::string manifest;
};

// Uniform reference grid per patch, resolution points per axis.
// Columns: physical coords, values, reference coords, physical
// gradients; plus a JSON manifest tying the files together.
FieldExport export_field(const ansatz::GlobalAnsatz& g,
                         const model::MultiPatchModel& model, int resolution,
                         std::span<const double> phi,
                         std::span<const double> theta,
                         const std::string& directory);

}  // namespace ipns::io

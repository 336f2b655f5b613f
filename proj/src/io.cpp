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

#include "ipns/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ipns::io {

namespace {

using nlohmann::json;

json parse_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " +
                                 e.what());
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context)
{
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end()) {
            throw std::runtime_error("unknown field \"" + key + "\" in " +
                                     context);
        }
    }
}

// Patch-id keyed object {"<id>": value}.
template <class T>
std::map<int, T> parse_by_patch(const json& j, const std::string& context)
{
    std::map<int, T> out;
    for (const auto& [key, value] : j.items()) {
        std::size_t pos = 0;
        int id = 0;
        try {
            id = std::stoi(key, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != key.size()) {
            throw std::runtime_error("non-numeric patch id \"" + key +
                                     "\" in " + context);
        }
        out[id] = value.template get<T>();
    }
    return out;
}

int parse_axis(const json& j, int dim, const std::string& context)
{
    // Accepts "x2" or a 1-based number.
    int axis = 0;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s.size() != 2 || s[0] != 'x' || s[1] < '1' || s[1] > '3') {
            throw std::runtime_error("bad axis \"" + s + "\" in " + context);
        }
        axis = s[1] - '1';
    } else {
        axis = j.get<int>() - 1;
    }
    if (axis < 0 || axis >= dim) {
        throw std::runtime_error("axis out of range in " + context);
    }
    return axis;
}

std::array<double, 3> parse_vec(const json& j, int dim,
                                const std::string& context)
{
    if (!j.is_array() || j.size() != static_cast<std::size_t>(dim)) {
        throw std::runtime_error("expected " + std::to_string(dim) +
                                 " components in " + context);
    }
    std::array<double, 3> v{};
    for (int k = 0; k < dim; ++k) {
        v[k] = j[k].get<double>();
    }
    return v;
}

net::NetworkSpec make_spec(const json& j, int spatial_in, int components,
                           int phi_count, net::Activation activation,
                           const std::string& context)
{
    check_keys(j, {"hidden", "skips", "activation"}, context);
    net::NetworkSpec spec;
    spec.activation = j.contains("activation")
                          ? net::activation_from_string(
                                j.at("activation").get<std::string>())
                          : activation;
    spec.param_input_count = phi_count;
    std::vector<int> widths{spatial_in + phi_count};
    for (const auto& w : j.at("hidden")) {
        widths.push_back(w.get<int>());
    }
    widths.push_back(components);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        spec.layer_dims.emplace_back(widths[i], widths[i + 1]);
    }
    if (j.contains("skips")) {
        spec.skip_connections = j.at("skips").get<std::vector<int>>();
    }
    spec.validate();
    return spec;
}

physics::Problem parse_problem(const json& j, int dim)
{
    physics::Problem prob;
    const std::string type = j.at("type").get<std::string>();
    if (type == "magnetostatic2d") {
        check_keys(j, {"type", "nu", "j_z"}, "problem");
        prob.type = physics::ProblemType::Magnetostatic2D;
        prob.magnetostatic.nu =
            parse_by_patch<double>(j.at("nu"), "problem.nu");
        if (j.contains("j_z")) {
            prob.magnetostatic.j_z =
                parse_by_patch<double>(j.at("j_z"), "problem.j_z");
        }
    } else if (type == "poisson_manufactured") {
        check_keys(j, {"type", "case"}, "problem");
        prob.type = physics::ProblemType::PoissonManufactured;
        prob.poisson_case = j.at("case").get<std::string>();
        (void)physics::manufactured_case(prob.poisson_case);
    } else if (type == "svk_contact") {
        check_keys(j,
                   {"type", "lambda", "mu", "youngs_modulus", "poisson_ratio",
                    "body_force", "tractions", "contact"},
                   "problem");
        prob.type = physics::ProblemType::SvkContact;
        auto& mat = prob.elastic;
        if (j.contains("youngs_modulus") || j.contains("poisson_ratio")) {
            const double E = j.at("youngs_modulus").get<double>();
            const double nu = j.at("poisson_ratio").get<double>();
            mat.lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
            mat.mu = E / (2.0 * (1.0 + nu));
        } else {
            mat.lambda = j.at("lambda").get<double>();
            mat.mu = j.at("mu").get<double>();
        }
        if (j.contains("body_force")) {
            for (const auto& [pid, v] :
                 parse_by_patch<json>(j.at("body_force"),
                                      "problem.body_force")) {
                mat.body_force[pid] =
                    parse_vec(v, dim, "problem.body_force");
            }
        }
        if (j.contains("tractions")) {
            for (const auto& t : j.at("tractions")) {
                check_keys(t, {"patch", "facet", "value"}, "traction");
                physics::Traction tr;
                tr.patch_id = t.at("patch").get<int>();
                tr.facet = model::parse_facet(
                    t.at("facet").get<std::string>(), dim);
                tr.value = parse_vec(t.at("value"), dim, "traction.value");
                mat.tractions.push_back(tr);
            }
        }
        if (j.contains("contact")) {
            const json& c = j.at("contact");
            check_keys(c, {"eps_n", "quartic", "planes", "facets"},
                       "contact");
            if (c.contains("eps_n")) {
                mat.eps_n = c.at("eps_n").get<double>();
            }
            if (c.contains("quartic")) {
                mat.quartic_penalty = c.at("quartic").get<bool>();
            }
            for (const auto& p : c.at("planes")) {
                check_keys(p,
                           {"axis", "side", "offset", "phi_coeff",
                            "extent_axis", "extent_min", "extent_max"},
                           "contact plane");
                physics::ContactPlane plane;
                plane.axis = parse_axis(p.at("axis"), dim, "contact plane");
                plane.side = p.at("side").get<int>();
                if (plane.side != -1 && plane.side != 1) {
                    throw std::runtime_error("contact plane side must be +-1");
                }
                plane.c0 = p.at("offset").get<double>();
                if (p.contains("phi_coeff")) {
                    plane.phi_coeff =
                        p.at("phi_coeff").get<std::vector<double>>();
                }
                if (p.contains("extent_axis")) {
                    plane.extent_axis =
                        parse_axis(p.at("extent_axis"), dim, "contact plane");
                    if (p.contains("extent_min")) {
                        plane.extent_min = p.at("extent_min").get<double>();
                    }
                    if (p.contains("extent_max")) {
                        plane.extent_max = p.at("extent_max").get<double>();
                    }
                }
                mat.contact_planes.push_back(plane);
            }
            for (const auto& f : c.at("facets")) {
                check_keys(f, {"patch", "facet"}, "contact facet");
                mat.contact_facets.emplace_back(
                    f.at("patch").get<int>(),
                    model::parse_facet(f.at("facet").get<std::string>(), dim));
            }
        }
        mat.validate();
    } else {
        throw std::runtime_error("unknown problem type \"" + type + "\"");
    }
    return prob;
}

std::string resolve(const std::string& base_dir, const std::string& p)
{
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) {
        return p;
    }
    return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace

model::MultiPatchModel load_geometry(const std::string& path)
{
    const json j = parse_file(path);
    check_keys(j, {"patches", "boundaries"}, "geometry file");
    std::vector<spline::Patch> patches;
    for (const auto& p : j.at("patches")) {
        check_keys(p,
                   {"id", "dim", "degrees", "knots", "control_points",
                    "weights"},
                   "patch");
        const int id = p.at("id").get<int>();
        const int dim = p.at("dim").get<int>();
        if (dim < 1 || dim > spline::kMaxDim) {
            throw std::runtime_error("patch " + std::to_string(id) +
                                     ": unsupported dim");
        }
        const auto degrees = p.at("degrees").get<std::vector<int>>();
        const json& knots = p.at("knots");
        if (static_cast<int>(degrees.size()) != dim ||
            static_cast<int>(knots.size()) != dim) {
            throw std::runtime_error("patch " + std::to_string(id) +
                                     ": degrees/knots must list one entry "
                                     "per parametric axis");
        }
        std::vector<spline::KnotVector> kv;
        std::size_t n_cps = 1;
        for (int k = 0; k < dim; ++k) {
            kv.emplace_back(knots[k].get<std::vector<double>>(), degrees[k]);
            n_cps *= kv.back().basis_count();
        }
        const json& cps = p.at("control_points");
        if (cps.size() != n_cps) {
            throw std::runtime_error(
                "patch " + std::to_string(id) + ": expected " +
                std::to_string(n_cps) + " control points, got " +
                std::to_string(cps.size()));
        }
        std::vector<double> flat;
        flat.reserve(n_cps * dim);
        for (const auto& cp : cps) {
            const auto v = parse_vec(cp, dim, "control point of patch " +
                                                  std::to_string(id));
            for (int k = 0; k < dim; ++k) {
                flat.push_back(v[k]);
            }
        }
        std::vector<double> weights(n_cps, 1.0);
        if (p.contains("weights")) {
            weights = p.at("weights").get<std::vector<double>>();
            if (weights.size() != n_cps) {
                throw std::runtime_error("patch " + std::to_string(id) +
                                         ": weight count mismatch");
            }
        }
        patches.emplace_back(id, dim, dim, std::move(kv), std::move(flat),
                             std::move(weights));
    }
    if (patches.empty()) {
        throw std::runtime_error("geometry has no patches");
    }
    const int dim = patches.front().dim();
    std::vector<model::BoundaryRecord> boundaries;
    if (j.contains("boundaries")) {
        for (const auto& b : j.at("boundaries")) {
            check_keys(b, {"patch", "facet", "type", "value"}, "boundary");
            model::BoundaryRecord rec;
            rec.patch_id = b.at("patch").get<int>();
            rec.facet =
                model::parse_facet(b.at("facet").get<std::string>(), dim);
            const std::string type = b.at("type").get<std::string>();
            if (type == "dirichlet") {
                rec.type = model::BoundaryType::Dirichlet;
            } else if (type == "neumann") {
                rec.type = model::BoundaryType::Neumann;
            } else {
                throw std::runtime_error("unknown boundary type \"" + type +
                                         "\"");
            }
            if (b.contains("value")) {
                rec.value = b.at("value").get<double>();
            }
            boundaries.push_back(rec);
        }
    }
    return model::MultiPatchModel(std::move(patches), std::move(boundaries));
}

RunConfig load_config(const std::string& path)
{
    const json j = parse_file(path);
    check_keys(j, {"geometry", "problem", "networks", "training", "evaluation"},
               "config file");
    const std::string base =
        std::filesystem::path(path).parent_path().string();
    RunConfig cfg;
    cfg.geometry_path = resolve(base, j.at("geometry").get<std::string>());
    // Dimension comes from the geometry; needed to size the nets.
    const auto model = load_geometry(cfg.geometry_path);
    const int dim = model.dim();
    cfg.problem = parse_problem(j.at("problem"), dim);

    const json& nets = j.at("networks");
    check_keys(nets,
               {"components", "phi_count", "activation", "seed", "interior",
                "interface", "zero_dim"},
               "networks");
    cfg.plan.components = nets.value("components", 1);
    cfg.plan.phi_count = nets.value("phi_count", 0);
    cfg.ansatz_seed = nets.value("seed", 1);
    const net::Activation act =
        nets.contains("activation")
            ? net::activation_from_string(
                  nets.at("activation").get<std::string>())
            : net::Activation::Tanh;
    cfg.plan.interior =
        make_spec(nets.at("interior"), dim, cfg.plan.components,
                  cfg.plan.phi_count, act, "networks.interior");
    if (nets.contains("interface")) {
        for (const auto& [key, spec] : nets.at("interface").items()) {
            const int q = std::stoi(key);
            if (q < 1 || q >= dim) {
                throw std::runtime_error("interface network dimension " + key +
                                         " out of range");
            }
            cfg.plan.interface_nets[q] =
                make_spec(spec, q, cfg.plan.components, cfg.plan.phi_count,
                          act, "networks.interface." + key);
        }
    }
    if (nets.contains("zero_dim")) {
        cfg.plan.zero_dim =
            make_spec(nets.at("zero_dim"), 0, cfg.plan.components,
                      cfg.plan.phi_count, act, "networks.zero_dim");
    }

    const json& tr = j.at("training");
    check_keys(tr,
               {"epochs", "samples_per_epoch", "batches_per_epoch",
                "boundary_samples_per_epoch", "seed", "learning_rate",
                "lr_decay", "beta1", "beta2", "epsilon", "phi"},
               "training");
    cfg.training.epochs = tr.value("epochs", 1);
    cfg.training.samples_per_epoch = tr.value("samples_per_epoch", 1024);
    cfg.training.batches_per_epoch = tr.value("batches_per_epoch", 1);
    cfg.training.boundary_samples_per_epoch =
        tr.value("boundary_samples_per_epoch", 0);
    cfg.training.seed = tr.value("seed", 0);
    cfg.training.adam.lr = tr.value("learning_rate", 1e-3);
    cfg.training.adam.lr_decay = tr.value("lr_decay", 1.0);
    cfg.training.adam.beta1 = tr.value("beta1", 0.9);
    cfg.training.adam.beta2 = tr.value("beta2", 0.999);
    cfg.training.adam.eps = tr.value("epsilon", 1e-8);
    if (tr.contains("phi")) {
        const json& ph = tr.at("phi");
        check_keys(ph, {"mode", "values"}, "training.phi");
        const std::string mode = ph.at("mode").get<std::string>();
        if (mode == "uniform") {
            cfg.training.phi.uniform = true;
        } else if (mode == "fixed") {
            cfg.training.phi.uniform = false;
            cfg.training.phi.fixed =
                ph.at("values").get<std::vector<double>>();
        } else {
            throw std::runtime_error("unknown phi mode \"" + mode + "\"");
        }
    }
    cfg.training.validate(cfg.plan.phi_count);

    if (j.contains("evaluation")) {
        const json& ev = j.at("evaluation");
        check_keys(ev, {"manufactured_case", "reference", "grid_points"},
                   "evaluation");
        cfg.manufactured = ev.value("manufactured_case", "");
        if (ev.contains("reference")) {
            cfg.reference_path =
                resolve(base, ev.at("reference").get<std::string>());
        }
        cfg.eval_grid_points = ev.value("grid_points", 75000);
        if (cfg.eval_grid_points <= 0) {
            throw std::runtime_error("grid_points must be positive");
        }
    }
    return cfg;
}

ReferenceField load_reference(const std::string& path,
                              const model::MultiPatchModel* model)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file, expected header "
                                        "x1,x2[,x3],v1[,v2,v3]");
    }
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            parts.push_back(item);
        }
        return parts;
    };
    const auto header = split(line);
    ReferenceField ref;
    std::size_t col = 0;
    while (col < header.size() &&
           header[col] == "x" + std::to_string(col + 1)) {
        ++col;
    }
    ref.dim = static_cast<int>(col);
    while (col < header.size() &&
           header[col] == "v" + std::to_string(col - ref.dim + 1)) {
        ++col;
    }
    ref.components = static_cast<int>(col) - ref.dim;
    if (ref.dim < 1 || ref.dim > 3 || ref.components < 1 ||
        ref.components > 3) {
        throw std::runtime_error(path + ": header must start with "
                                        "x1,x2[,x3],v1[,v2,v3]");
    }
    const std::size_t needed = col;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto parts = split(line);
        if (parts.size() < needed) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected at least " +
                                     std::to_string(needed) + " columns");
        }
        spline::Vec3 x{};
        spline::Vec3 v{};
        for (std::size_t i = 0; i < needed; ++i) {
            std::size_t pos = 0;
            double val = 0.0;
            try {
                val = std::stod(parts[i], &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != parts[i].size()) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": bad number \"" + parts[i] + "\"");
            }
            if (i < static_cast<std::size_t>(ref.dim)) {
                x[i] = val;
            } else {
                v[i - ref.dim] = val;
            }
        }
        ref.points.push_back(x);
        ref.values.push_back(v);
    }
    if (model != nullptr) {
        if (model->dim() != ref.dim) {
            throw std::runtime_error(path + ": reference dimension " +
                                     std::to_string(ref.dim) +
                                     " does not match the geometry");
        }
        spline::Vec3 lo{};
        spline::Vec3 hi{};
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(-std::numeric_limits<double>::infinity());
        for (const auto& p : model->patches()) {
            const auto cps = p.control_points();
            for (std::size_t i = 0; i < cps.size(); i += ref.dim) {
                for (int k = 0; k < ref.dim; ++k) {
                    lo[k] = std::min(lo[k], cps[i + k]);
                    hi[k] = std::max(hi[k], cps[i + k]);
                }
            }
        }
        const double tol = 1e-9 * model->bbox_diameter();
        int outside = 0;
        for (const auto& x : ref.points) {
            for (int k = 0; k < ref.dim; ++k) {
                if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) {
                    ++outside;
                    break;
                }
            }
        }
        if (outside > 0) {
            ref.warnings.push_back(
                std::to_string(outside) +
                " reference points lie outside the model bounding box");
        }
    }
    return ref;
}

PointLocation locate_point(const model::MultiPatchModel& model,
                           const spline::Vec3& x)
{
    const int d = model.dim();
    const double tol = 1e-9 * std::max(1.0, model.bbox_diameter());
    PointLocation loc;
    std::vector<std::array<double, 3>> starts;
    starts.push_back({0.0, 0.0, 0.0});
    for (int mask = 0; mask < (1 << d); ++mask) {
        std::array<double, 3> s{};
        for (int k = 0; k < d; ++k) {
            s[k] = (mask >> k & 1) != 0 ? 0.5 : -0.5;
        }
        starts.push_back(s);
    }
    for (const auto& patch : model.patches()) {
        for (const auto& start : starts) {
            std::array<double, 3> y = start;
            bool ok = false;
            for (int it = 0; it < 60; ++it) {
                const std::span<const double> ys(y.data(), d);
                const auto f = patch.eval(ys);
                double res = 0.0;
                spline::Vec3 r{};
                for (int k = 0; k < d; ++k) {
                    r[k] = x[k] - f[k];
                    res += r[k] * r[k];
                }
                if (std::sqrt(res) < tol) {
                    ok = true;
                    break;
                }
                const auto jd = patch.jacobian(ys);
                if (jd.singular) {
                    break;
                }
                const auto jinv = spline::inverse(jd.J, d, jd.detJ);
                for (int k = 0; k < d; ++k) {
                    double step = 0.0;
                    for (int m = 0; m < d; ++m) {
                        step += jinv[k * spline::kMaxDim + m] * r[m];
                    }
                    y[k] = std::clamp(y[k] + step, -1.0, 1.0);
                }
            }
            if (ok) {
                loc.found = true;
                loc.patch_id = patch.id();
                loc.xhat = {y[0], y[1], y[2]};
                return loc;
            }
        }
    }
    return loc;
}

double relative_l2(const ansatz::GlobalAnsatz& g,
                   const model::MultiPatchModel& model,
                   const ReferenceField& ref, std::span<const double> phi,
                   std::span<const double> theta, int region_patch)
{
    if (ref.components > g.components) {
        throw std::invalid_argument(
            "reference has more components than the ansatz");
    }
    double num = 0.0;
    double den = 0.0;
    int located = 0;
    for (std::size_t i = 0; i < ref.points.size(); ++i) {
        const auto loc = locate_point(model, ref.points[i]);
        if (!loc.found) {
            continue;
        }
        if (region_patch >= 0 && loc.patch_id != region_patch) {
            continue;
        }
        ++located;
        const auto u = ansatz::evaluate<double>(
            g, loc.patch_id, std::span<const double>(loc.xhat.data(), g.dim),
            phi, theta);
        for (int c = 0; c < ref.components; ++c) {
            const double diff = u.value[c] - ref.values[i][c];
            num += diff * diff;
            den += ref.values[i][c] * ref.values[i][c];
        }
    }
    if (located == 0) {
        throw std::runtime_error("no reference points inside the region");
    }
    if (den == 0.0) {
        throw std::runtime_error("reference field is zero in the region");
    }
    return std::sqrt(num / den);
}

double relative_l2(const ansatz::GlobalAnsatz& g,
                   const model::MultiPatchModel& model,
                   const physics::ManufacturedCase& exact, int n_points,
                   std::span<const double> phi, std::span<const double> theta,
                   int region_patch)
{
    const int d = model.dim();
    const int n_patches = static_cast<int>(model.patches().size());
    const int per_patch = std::max(1, n_points / std::max(1, n_patches));
    const int per_axis = std::max(
        2, static_cast<int>(std::lround(std::pow(per_patch, 1.0 / d))));
    double num = 0.0;
    double den = 0.0;
    for (const auto& patch : model.patches()) {
        if (region_patch >= 0 && patch.id() != region_patch) {
            continue;
        }
        std::array<int, 3> idx{};
        const long total = static_cast<long>(std::pow(per_axis, d));
        for (long flat = 0; flat < total; ++flat) {
            long rem = flat;
            std::array<double, 3> xh{};
            for (int k = d - 1; k >= 0; --k) {
                idx[k] = static_cast<int>(rem % per_axis);
                rem /= per_axis;
                xh[k] = -1.0 + 2.0 * idx[k] / (per_axis - 1);
            }
            const std::span<const double> xs(xh.data(), d);
            const auto u = ansatz::evaluate<double>(g, patch.id(), xs, phi,
                                                    theta);
            const double star = exact.u_star(patch.eval(xs));
            const double diff = u.value[0] - star;
            num += diff * diff;
            den += star * star;
        }
    }
    if (den == 0.0) {
        throw std::runtime_error("reference field is zero in the region");
    }
    return std::sqrt(num / den);
}

FieldExport export_field(const ansatz::GlobalAnsatz& g,
                         const model::MultiPatchModel& model, int resolution,
                         std::span<const double> phi,
                         std::span<const double> theta,
                         const std::string& directory)
{
    if (resolution < 2) {
        throw std::invalid_argument("resolution must be at least 2");
    }
    const int d = model.dim();
    const int nc = g.components;
    std::filesystem::create_directories(directory);
    FieldExport result;
    nlohmann::json manifest;
    manifest["dim"] = d;
    manifest["components"] = nc;
    manifest["resolution"] = resolution;
    manifest["phi"] = std::vector<double>(phi.begin(), phi.end());
    manifest["patches"] = nlohmann::json::array();

    for (const auto& patch : model.patches()) {
        const long total = static_cast<long>(std::pow(resolution, d));
        std::vector<double> grid;
        grid.reserve(total * d);
        for (long flat = 0; flat < total; ++flat) {
            long rem = flat;
            std::array<double, 3> xh{};
            for (int k = d - 1; k >= 0; --k) {
                const int i = static_cast<int>(rem % resolution);
                rem /= resolution;
                xh[k] = -1.0 + 2.0 * i / (resolution - 1);
            }
            for (int k = 0; k < d; ++k) {
                grid.push_back(xh[k]);
            }
        }
        const auto samples = ansatz::pushforward_field(
            g, model, patch.id(), grid, static_cast<int>(total), phi, theta);

        const std::string file =
            (std::filesystem::path(directory) /
             ("patch_" + std::to_string(patch.id()) + ".csv"))
                .string();
        std::ofstream out(file);
        if (!out) {
            throw std::runtime_error("cannot write " + file);
        }
        out.precision(17);
        for (int k = 0; k < d; ++k) {
            out << (k > 0 ? "," : "") << "x" << k + 1;
        }
        for (int c = 0; c < nc; ++c) {
            out << ",v" << c + 1;
        }
        for (int k = 0; k < d; ++k) {
            out << ",xh" << k + 1;
        }
        for (int c = 0; c < nc; ++c) {
            for (int k = 0; k < d; ++k) {
                out << ",g" << c + 1 << "_" << k + 1;
            }
        }
        out << "\n";
        for (long i = 0; i < total; ++i) {
            for (int k = 0; k < d; ++k) {
                out << (k > 0 ? "," : "") << samples.points[i * d + k];
            }
            for (int c = 0; c < nc; ++c) {
                out << "," << samples.values[i * nc + c];
            }
            for (int k = 0; k < d; ++k) {
                out << "," << grid[i * d + k];
            }
            for (int c = 0; c < nc; ++c) {
                for (int k = 0; k < d; ++k) {
                    out << ","
                        << samples.gradients[(i * nc + c) * d + k];
                }
            }
            out << "\n";
        }
        if (!out.good()) {
            throw std::runtime_error("write failed: " + file);
        }
        result.files.push_back(file);
        nlohmann::json pj;
        pj["id"] = patch.id();
        pj["file"] = std::filesystem::path(file).filename().string();
        pj["rows"] = total;
        manifest["patches"].push_back(pj);
    }
    result.manifest =
        (std::filesystem::path(directory) / "manifest.json").string();
    std::ofstream mout(result.manifest);
    if (!mout) {
        throw std::runtime_error("cannot write " + result.manifest);
    }
    mout << manifest.dump(2) << "\n";
    return result;
}

}  // namespace ipns::io

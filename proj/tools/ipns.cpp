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

#include "CLI11.hpp"

#include "ipns/io.hpp"

#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>

namespace {

using namespace ipns;

struct Session {
    io::RunConfig cfg;
    model::MultiPatchModel model;
    topology::PatchTopology topo;
    ansatz::GlobalAnsatz g;
};

Session open_session(const std::string& config_path,
                     std::optional<std::uint64_t> seed_override)
{
    Session s;
    s.cfg = io::load_config(config_path);
    if (seed_override) {
        s.cfg.training.seed = *seed_override;
        s.cfg.ansatz_seed = *seed_override;
    }
    s.model = io::load_geometry(s.cfg.geometry_path);
    s.topo = topology::detect_interfaces(s.model);
    s.g = ansatz::build_ansatz(s.model, s.topo, s.cfg.plan, s.cfg.ansatz_seed);
    return s;
}

std::vector<double> resolve_phi(const Session& s,
                                const std::vector<double>& phi_flag)
{
    if (!phi_flag.empty()) {
        if (static_cast<int>(phi_flag.size()) != s.g.phi_count) {
            throw std::runtime_error("expected " +
                                     std::to_string(s.g.phi_count) +
                                     " phi values");
        }
        return phi_flag;
    }
    if (!s.cfg.training.phi.uniform) {
        return s.cfg.training.phi.fixed;
    }
    return std::vector<double>(s.g.phi_count, 0.0);
}

std::vector<double> load_theta(const Session& s,
                               const std::string& checkpoint_dir)
{
    if (checkpoint_dir.empty()) {
        return s.g.init_params;
    }
    const auto path =
        (std::filesystem::path(checkpoint_dir) / "checkpoint.json").string();
    auto state = trainer::load_checkpoint(path);
    if (state.theta.size() != s.g.parameter_count()) {
        throw std::runtime_error(
            "checkpoint does not match the configured ansatz");
    }
    return std::move(state.theta);
}

int cmd_check_geometry(const std::string& config_path)
{
    const auto s = open_session(config_path, std::nullopt);
    std::printf("geometry: %s\n", s.cfg.geometry_path.c_str());
    std::printf("patches: %zu, dim %d\n", s.model.patches().size(),
                s.model.dim());
    std::printf("interface entities: %zu\n", s.topo.entities().size());
    for (const auto& e : s.topo.entities()) {
        std::string ids;
        for (int id : e.multi_index) {
            ids += (ids.empty() ? "" : ",") + std::to_string(id);
        }
        std::printf("  q=%d patches {%s}%s%s\n", e.q, ids.c_str(),
                    e.on_dirichlet ? " [dirichlet]" : "",
                    e.subordinate ? " [subordinate]" : "");
    }
    for (const auto& patch : s.model.patches()) {
        patch.check_injectivity(256, 17);
    }
    std::printf("conformity and injectivity checks passed\n");
    return 0;
}

int cmd_describe_ansatz(const std::string& config_path)
{
    const auto s = open_session(config_path, std::nullopt);
    std::printf("components: %d, phi inputs: %d\n", s.g.components,
                s.g.phi_count);
    std::printf("parameter blocks: %zu, total parameters: %zu\n",
                s.g.registry.size(), s.g.parameter_count());
    for (const auto& b : s.g.registry) {
        std::printf("  %-32s %6zu params%s\n", b.name.c_str(), b.size,
                    b.is_network ? "" : " (scalar)");
    }
    for (const auto& pa : s.g.patches) {
        std::printf("patch %d: interior vanishing %s, %zu interface terms\n",
                    pa.patch_id,
                    ansatz::to_string(pa.vanish, s.g.dim).c_str(),
                    pa.terms.size());
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& ckpt,
              std::optional<std::uint64_t> seed)
{
    auto s = open_session(config_path, seed);
    trainer::EvalHook hook;
    if (!s.cfg.manufactured.empty()) {
        const auto& mc = physics::manufactured_case(s.cfg.manufactured);
        const int grid = s.cfg.eval_grid_points;
        const auto phi = resolve_phi(s, {});
        // Manufactured errors are tracked every tenth epoch; the final
        // epoch is always measured.
        const int last = s.cfg.training.epochs;
        hook = [&s, &mc, grid, phi, last](std::span<const double> theta,
                                          int epoch) {
            if (epoch % 10 != 0 && epoch != last) {
                return std::numeric_limits<double>::quiet_NaN();
            }
            return io::relative_l2(s.g, s.model, mc, grid, phi, theta);
        };
    }
    std::optional<trainer::TrainState> resume;
    if (!ckpt.empty()) {
        const auto path =
            (std::filesystem::path(ckpt) / "checkpoint.json").string();
        if (std::filesystem::exists(path)) {
            resume = trainer::load_checkpoint(path);
            std::printf("resuming from epoch %d\n", resume->epoch);
        }
    }
    const auto state =
        trainer::train(s.model, s.g, s.cfg.problem, s.cfg.training, ckpt,
                       hook, resume ? &*resume : nullptr);
    for (const auto& h : state.history) {
        if (std::isfinite(h.rel_l2)) {
            std::printf("epoch %4d  loss % .6e  rel_l2 %.4e\n", h.epoch,
                        h.loss, h.rel_l2);
        } else {
            std::printf("epoch %4d  loss % .6e\n", h.epoch, h.loss);
        }
    }
    if (state.aborted) {
        std::fprintf(stderr, "training aborted: %s\n",
                     state.abort_reason.c_str());
        return 1;
    }
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& ckpt,
                 const std::vector<double>& phi_flag)
{
    const auto s = open_session(config_path, std::nullopt);
    const auto theta = load_theta(s, ckpt);
    const auto phi = resolve_phi(s, phi_flag);
    auto report = [&](const std::string& label, double err) {
        std::printf("rel_l2 %-12s %.6e\n", label.c_str(), err);
    };
    if (!s.cfg.reference_path.empty()) {
        const auto ref = io::load_reference(s.cfg.reference_path, &s.model);
        for (const auto& w : ref.warnings) {
            std::fprintf(stderr, "warning: %s\n", w.c_str());
        }
        report("domain", io::relative_l2(s.g, s.model, ref, phi, theta));
        for (const auto& patch : s.model.patches()) {
            report("patch " + std::to_string(patch.id()),
                   io::relative_l2(s.g, s.model, ref, phi, theta,
                                   patch.id()));
        }
    } else if (!s.cfg.manufactured.empty()) {
        const auto& mc = physics::manufactured_case(s.cfg.manufactured);
        report("domain", io::relative_l2(s.g, s.model, mc,
                                         s.cfg.eval_grid_points, phi, theta));
        for (const auto& patch : s.model.patches()) {
            report("patch " + std::to_string(patch.id()),
                   io::relative_l2(s.g, s.model, mc, s.cfg.eval_grid_points,
                                   phi, theta, patch.id()));
        }
    } else {
        throw std::runtime_error(
            "config has neither a reference nor a manufactured case");
    }
    return 0;
}

int cmd_export(const std::string& config_path, const std::string& ckpt,
               const std::vector<double>& phi_flag, int resolution,
               const std::string& output)
{
    const auto s = open_session(config_path, std::nullopt);
    const auto theta = load_theta(s, ckpt);
    const auto phi = resolve_phi(s, phi_flag);
    const auto result =
        io::export_field(s.g, s.model, resolution, phi, theta, output);
    for (const auto& f : result.files) {
        std::printf("wrote %s\n", f.c_str());
    }
    std::printf("wrote %s\n", result.manifest.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-patch isogeometric neural PDE solver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string checkpoint_dir;
    std::vector<double> phi_flag;
    std::uint64_t seed_value = 0;
    bool seed_set = false;
    int resolution = 33;
    std::string output = "export";

    auto add_common = [&](CLI::App* cmd, bool with_ckpt) {
        cmd->add_option("--config", config_path, "run configuration file")
            ->required();
        if (with_ckpt) {
            cmd->add_option("--checkpoint", checkpoint_dir,
                           "checkpoint directory");
        }
    };

    auto* check = app.add_subcommand("check-geometry",
                                     "validate geometry and interfaces");
    add_common(check, false);

    auto* describe = app.add_subcommand("describe-ansatz",
                                        "print the constructed ansatz");
    add_common(describe, false);

    auto* train = app.add_subcommand("train", "run the optimization loop");
    add_common(train, true);
    train->add_option("--seed", seed_value, "override training seed")
        ->each([&](const std::string&) { seed_set = true; });

    auto* evaluate = app.add_subcommand("evaluate",
                                        "report relative L2 errors");
    add_common(evaluate, true);
    evaluate->add_option("--phi", phi_flag, "load parameters v1,v2,...")
        ->delimiter(',');

    auto* exportc = app.add_subcommand("export-field",
                                       "sample the field to CSV");
    add_common(exportc, true);
    exportc->add_option("--phi", phi_flag, "load parameters v1,v2,...")
        ->delimiter(',');
    exportc->add_option("--resolution", resolution, "grid points per axis");
    exportc->add_option("--output", output, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) {
            return cmd_check_geometry(config_path);
        }
        if (describe->parsed()) {
            return cmd_describe_ansatz(config_path);
        }
        if (train->parsed()) {
            return cmd_train(config_path, checkpoint_dir,
                             seed_set ? std::optional<std::uint64_t>(seed_value)
                                      : std::nullopt);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(config_path, checkpoint_dir, phi_flag);
        }
        if (exportc->parsed()) {
            return cmd_export(config_path, checkpoint_dir, phi_flag,
                              resolution, output);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

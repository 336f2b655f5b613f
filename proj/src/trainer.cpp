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

#include "ipns/trainer.hpp"

#include "ipns/gradient.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace ipns::trainer {

namespace {

// Epoch RNGs are derived, not streamed, so a resumed run draws the
// same samples as an uninterrupted one.
std::mt19937_64 epoch_rng(std::uint64_t seed, int epoch)
{
    return std::mt19937_64(seed +
                           0x9e3779b97f4a7c15ULL *
                               (static_cast<std::uint64_t>(epoch) + 1));
}

}  // namespace

void TrainConfig::validate(int phi_count) const
{
    if (epochs < 1) {
        throw std::invalid_argument("epochs must be at least 1");
    }
    if (samples_per_epoch <= 0 || batches_per_epoch <= 0) {
        throw std::invalid_argument("sample and batch counts must be positive");
    }
    if (samples_per_epoch % batches_per_epoch != 0) {
        throw std::invalid_argument(
            "samples_per_epoch must be divisible by batches_per_epoch");
    }
    if (boundary_samples_per_epoch < 0) {
        throw std::invalid_argument("boundary sample count must not be negative");
    }
    if (adam.lr < 0.0 || adam.eps <= 0.0 || adam.beta1 < 0.0 ||
        adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0 ||
        adam.lr_decay < 0.0 || adam.lr_decay > 1.0) {
        throw std::invalid_argument("inadmissible optimizer settings");
    }
    if (!phi.uniform &&
        static_cast<int>(phi.fixed.size()) != phi_count) {
        throw std::invalid_argument("fixed phi length does not match phi count");
    }
}

int TrainConfig::facet_batch_size() const
{
    const int per_epoch = boundary_samples_per_epoch > 0
                              ? boundary_samples_per_epoch
                              : std::max(batches_per_epoch,
                                         samples_per_epoch / 4);
    return std::max(1, per_epoch / batches_per_epoch);
}

void adam_step(TrainState& state, std::span<const double> grad,
               const AdamConfig& cfg)
{
    if (grad.size() != state.theta.size()) {
        throw std::invalid_argument("gradient length mismatch");
    }
    state.m.resize(state.theta.size(), 0.0);
    state.v.resize(state.theta.size(), 0.0);
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
    for (std::size_t i = 0; i < state.theta.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] =
            cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        state.theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

std::vector<std::pair<int, int>> sampled_facets(const physics::Problem& problem)
{
    std::vector<std::pair<int, int>> out;
    if (problem.type != physics::ProblemType::SvkContact) {
        return out;
    }
    for (const auto& t : problem.elastic.tractions) {
        out.emplace_back(t.patch_id, t.facet);
    }
    for (const auto& cf : problem.elastic.contact_facets) {
        out.push_back(cf);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Batch> sample_epoch(std::mt19937_64& rng,
                                const model::MultiPatchModel& model,
                                const physics::Problem& problem,
                                const TrainConfig& cfg, int phi_count)
{
    cfg.validate(phi_count);
    const int d = model.dim();
    const int mb = cfg.samples_per_epoch / cfg.batches_per_epoch;
    const int fb = cfg.facet_batch_size();
    const auto facets = sampled_facets(problem);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    std::vector<Batch> batches(cfg.batches_per_epoch);
    for (Batch& batch : batches) {
        batch.phi.resize(phi_count);
        for (int p = 0; p < phi_count; ++p) {
            batch.phi[p] = cfg.phi.uniform ? dist(rng) : cfg.phi.fixed[p];
        }
        for (const auto& patch : model.patches()) {
            for (int i = 0; i < mb; ++i) {
                physics::EnergySample s;
                s.patch_id = patch.id();
                for (int k = 0; k < d; ++k) {
                    s.xhat[k] = dist(rng);
                }
                s.weight = std::pow(2.0, d) / mb;
                batch.samples.push_back(s);
            }
        }
        for (const auto& [pid, facet] : facets) {
            for (int i = 0; i < fb; ++i) {
                physics::EnergySample s;
                s.patch_id = pid;
                s.facet = facet;
                for (int k = 0; k < d; ++k) {
                    s.xhat[k] = dist(rng);
                }
                s.xhat[spline::facet_axis(facet)] = spline::facet_side(facet);
                s.weight = std::pow(2.0, d - 1) / fb;
                batch.samples.push_back(s);
            }
        }
    }
    return batches;
}

TrainState train(const model::MultiPatchModel& model,
                 const ansatz::GlobalAnsatz& g,
                 const physics::Problem& problem, const TrainConfig& cfg,
                 const std::string& checkpoint_dir, const EvalHook& eval,
                 const TrainState* resume)
{
    cfg.validate(g.phi_count);
    TrainState state;
    if (resume != nullptr) {
        state = *resume;
        if (state.theta.size() != g.init_params.size()) {
            throw std::invalid_argument(
                "checkpoint does not match the configured ansatz");
        }
    } else {
        state.theta = g.init_params;
    }
    std::string ckpt_path;
    if (!checkpoint_dir.empty()) {
        std::filesystem::create_directories(checkpoint_dir);
        ckpt_path =
            (std::filesystem::path(checkpoint_dir) / "checkpoint.json")
                .string();
    }

    for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
        auto rng = epoch_rng(cfg.seed, epoch);
        const auto batches =
            sample_epoch(rng, model, problem, cfg, g.phi_count);
        AdamConfig adam = cfg.adam;
        adam.lr = cfg.adam.lr * std::pow(cfg.adam.lr_decay, epoch);
        double epoch_loss = 0.0;
        try {
            for (const Batch& batch : batches) {
                // Record the parameters once, then process the batch
                // in chunks, rewinding the tape after each backward
                // pass so memory stays bounded.
                ad::Tape tape;
                std::vector<ad::Var> leaves;
                leaves.reserve(state.theta.size());
                for (double t : state.theta) {
                    leaves.emplace_back(tape, tape.leaf(t));
                }
                const std::size_t mark = tape.checkpoint();
                std::vector<double> grad(state.theta.size(), 0.0);
                double batch_loss = 0.0;
                const std::size_t chunk = 32;
                for (std::size_t lo = 0; lo < batch.samples.size();
                     lo += chunk) {
                    const std::size_t n =
                        std::min(chunk, batch.samples.size() - lo);
                    const ad::Var loss = physics::total_loss<ad::Var>(
                        model, g, problem,
                        std::span(batch.samples).subspan(lo, n), batch.phi,
                        leaves);
                    if (!std::isfinite(loss.v)) {
                        throw std::runtime_error("non-finite batch loss");
                    }
                    batch_loss += loss.v;
                    tape.backward(loss.idx, 1.0, grad);
                    tape.rewind(mark);
                }
                adam_step(state, grad, adam);
                epoch_loss += batch_loss / cfg.batches_per_epoch;
            }
        } catch (const std::runtime_error& e) {
            // Keep the last completed epoch's checkpoint on disk.
            state.aborted = true;
            state.abort_reason = e.what();
            return state;
        }
        state.epoch = epoch + 1;
        HistoryEntry h;
        h.epoch = state.epoch;
        h.loss = epoch_loss;
        if (eval) {
            h.rel_l2 = eval(state.theta, state.epoch);
        }
        state.history.push_back(h);
        if (!ckpt_path.empty()) {
            save_checkpoint(state, ckpt_path);
        }
    }
    return state;
}

void save_checkpoint(const TrainState& state, const std::string& path)
{
    nlohmann::json j;
    j["theta"] = state.theta;
    j["m"] = state.m;
    j["v"] = state.v;
    j["step"] = state.step;
    j["epoch"] = state.epoch;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : state.history) {
        nlohmann::json e;
        e["epoch"] = h.epoch;
        e["loss"] = h.loss;
        if (std::isfinite(h.rel_l2)) {
            e["rel_l2"] = h.rel_l2;
        }
        hist.push_back(e);
    }
    j["history"] = hist;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write checkpoint: " + path);
    }
    out << j.dump(2) << "\n";
    if (!out.good()) {
        throw std::runtime_error("checkpoint write failed: " + path);
    }
}

TrainState load_checkpoint(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read checkpoint: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed checkpoint " + path + ": " +
                                 e.what());
    }
    TrainState state;
    state.theta = j.at("theta").get<std::vector<double>>();
    state.m = j.at("m").get<std::vector<double>>();
    state.v = j.at("v").get<std::vector<double>>();
    state.step = j.at("step").get<long>();
    state.epoch = j.at("epoch").get<int>();
    for (const auto& e : j.at("history")) {
        HistoryEntry h;
        h.epoch = e.at("epoch").get<int>();
        h.loss = e.at("loss").get<double>();
        if (e.contains("rel_l2")) {
            h.rel_l2 = e.at("rel_l2").get<double>();
        }
        state.history.push_back(h);
    }
    return state;
}

}  // namespace ipns::trainer

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

#include "ipns/physics.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ipns::trainer {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Per-epoch multiplicative decay of the learning rate; epoch k
    // runs at lr * decay^k.
    double lr_decay = 1.0;
};

// Load-parameter draws: one phi vector per batch, either a fixed value
// or uniform over [-1,1]^p.
struct PhiSampling {
    bool uniform = true;
    std::vector<double> fixed;
};

struct TrainConfig {
    int epochs = 1;
    int samples_per_epoch = 1024;  // volume samples per patch per epoch
    int batches_per_epoch = 1;
    // Boundary samples per sampled facet per epoch; 0 derives a default
    // from samples_per_epoch.
    int boundary_samples_per_epoch = 0;
    AdamConfig adam;
    std::uint64_t seed = 0;
    PhiSampling phi;

    void validate(int phi_count) const;
    int facet_batch_size() const;
};

struct HistoryEntry {
    int epoch = 0;
    double loss = 0.0;
    // NaN when no evaluation ran this epoch.
    double rel_l2 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainState {
    std::vector<double> theta;
    std::vector<double> m;  // first moments
    std::vector<double> v;  // second moments
    long step = 0;
    int epoch = 0;  // completed epochs
    std::vector<HistoryEntry> history;
    bool aborted = false;
    std::string abort_reason;
};

struct Batch {
    std::vector<physics::EnergySample> samples;
    std::vector<double> phi;
};

// Standard bias-corrected Adam update in place.
void adam_step(TrainState& state, std::span<const double> grad,
               const AdamConfig& cfg);

// Facets that need boundary samples for this problem (tractions and
// contact candidates), as (patch, facet) pairs without duplicates.
std::vector<std::pair<int, int>> sampled_facets(const physics::Problem& problem);

// Fresh uniform draws for one epoch, split into batches; each batch
// carries its own phi draw shared by all its samples.
std::vector<Batch> sample_epoch(std::mt19937_64& rng,
                                const model::MultiPatchModel& model,
                                const physics::Problem& problem,
                                const TrainConfig& cfg, int phi_count);

// Optional per-epoch evaluation; the returned value lands in the
// history as rel_l2.
using EvalHook = std::function<double(std::span<const double> theta, int epoch)>;

// Full optimization loop. Starts from the ansatz init unless `resume`
// carries a loaded checkpoint. When `checkpoint_dir` is nonempty the
// state is saved after every epoch; a non-finite loss aborts the run
// and leaves the last good checkpoint in place.
TrainState train(const model::MultiPatchModel& model,
                 const ansatz::GlobalAnsatz& g,
                 const physics::Problem& problem, const TrainConfig& cfg,
                 const std::string& checkpoint_dir = "",
                 const EvalHook& eval = nullptr,
                 const TrainState* resume = nullptr);

void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace ipns::trainer

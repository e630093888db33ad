#pragma once

#include "s2s/dataset.hpp"
#include "s2s/loss.hpp"
#include "s2s/net.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace s2s {

struct TrainingConfig {
    int epochs = 100;
    double lr = 3e-5;
    int batch = 1;
    int crop = 64;
    std::uint64_t seed = 1;
    int checkpoint_every = 10; ///< epochs between periodic checkpoints; 0 disables them
    int validate_every = 0;    ///< epochs between validation MSE passes; 0 disables them
    bool flip = true;

    void validate() const;
    bool operator==(const TrainingConfig&) const = default;
};

struct TrainOptions {
    net::NetworkSpec network;
    LossConfig loss;
    TrainingConfig training;
    bool resume = false; ///< continue from out_dir/train_state.json when present
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mse = -1.0; ///< negative when not measured
};

struct TrainResult {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_csv;
    std::vector<EpochRecord> epochs; ///< epochs run by this call
};

inline constexpr const char* kFinalCheckpoint = "checkpoint_final.s2sn";
inline constexpr const char* kLastCheckpoint = "checkpoint_last.s2sn";
inline constexpr const char* kLossCsv = "loss.csv";
inline constexpr const char* kTrainState = "train_state.json";

/// One gradient accumulation over `samples` followed by one Adam step. Returns the mean loss.
double train_step(net::NetworkParams<float>& params, const std::vector<TrainingSample>& samples,
                  const std::vector<WeightMaps>& weights, const LossConfig& loss, double lr);

/// Paired training on the train split. Throws DivergenceError on a non-finite loss; the
/// last written checkpoint is left intact.
TrainResult train_network(const DatasetManifest& manifest, const TrainOptions& opts,
                          const std::filesystem::path& out_dir,
                          const std::function<void(const EpochRecord&)>& on_epoch = {});

} // namespace s2s

#include "s2s/train.hpp"

#include "s2s/errors.hpp"
#include "s2s/eval.hpp"
#include "s2s/image_io.hpp"
#include "s2s/json_util.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace s2s {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainingConfig::validate() const {
    if (epochs < 0) {
        throw ConfigError("training.epochs must be >= 0");
    }
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw ConfigError("training.lr must be finite and >= 0");
    }
    if (batch < 1) {
        throw ConfigError("training.batch must be >= 1");
    }
    if (crop < 1) {
        throw ConfigError("training.crop must be >= 1");
    }
    if (checkpoint_every < 0 || validate_every < 0) {
        throw ConfigError("training.checkpoint_every and training.validate_every must be >= 0");
    }
}

double train_step(net::NetworkParams<float>& params, const std::vector<TrainingSample>& samples,
                  const std::vector<WeightMaps>& weights, const LossConfig& loss, double lr) {
    if (samples.empty() || samples.size() != weights.size()) {
        throw ShapeError("train_step: need one weight map per sample");
    }
    net::Gradients<float> total = net::zero_gradients(params);
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& sample = samples[s];
        net::ForwardCache<float> cache;
        const auto out = net::forward(params, net::to_tensor<float>(sample.input), &cache);
        const ImageGrid out_img = net::to_image(out, sample.input.dx_mm(), sample.input.dz_mm());
        const LossValue lv = loss_and_gradient(out_img, sample.target, weights[s], loss);
        if (!std::isfinite(lv.loss)) {
            throw DivergenceError("non-finite training loss");
        }
        loss_sum += lv.loss;
        const auto grads = net::backward(params, cache, net::to_tensor<float>(lv.gradient));
        for (std::size_t l = 0; l < grads.size(); ++l) {
            for (std::size_t k = 0; k < grads[l].weight.size(); ++k) {
                total[l].weight[k] += grads[l].weight[k];
            }
            for (std::size_t k = 0; k < grads[l].bias.size(); ++k) {
                total[l].bias[k] += grads[l].bias[k];
            }
        }
    }
    const float inv = 1.0f / static_cast<float>(samples.size());
    for (auto& layer : total) {
        for (auto& v : layer.weight) {
            v *= inv;
        }
        for (auto& v : layer.bias) {
            v *= inv;
        }
    }
    net::adam_step(params, total, lr);
    return loss_sum / static_cast<double>(samples.size());
}

namespace {

struct PreloadedEntry {
    std::vector<ImageGrid> instances;
    WeightMaps weights;
};

std::vector<PreloadedEntry> preload(const DatasetManifest& m, const LossConfig& loss) {
    std::vector<PreloadedEntry> out;
    for (const auto& e : m.split(Split::train).entries) {
        PreloadedEntry p;
        try {
            for (const auto& path : e.instance_paths) {
                p.instances.push_back(read_s2sf(m.resolve(path)));
            }
            p.weights = interface_weight(InterfaceMap{read_s2sf(m.resolve(e.interface_path))}, loss);
        } catch (const IoError& err) {
            throw DatasetError(err.what());
        }
        if (p.instances.size() < 2) {
            throw DatasetError("train entry " + std::to_string(e.phantom_id) + " has fewer than two instances");
        }
        for (const auto& img : p.instances) {
            if (!img.same_shape(p.weights.interface_weight)) {
                throw DatasetError("train entry " + std::to_string(e.phantom_id) + " has inconsistent image sizes");
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

constexpr std::uint64_t kInitSalt = 0x494E4954ull;

void write_state(const fs::path& out_dir, int epoch, const TrainOptions& opts) {
    const json state{{"epoch", epoch},
                     {"checkpoint", kLastCheckpoint},
                     {"seed", opts.training.seed},
                     {"network",
                      {{"depth", opts.network.depth},
                       {"base_channels", opts.network.base_channels},
                       {"kernel_size", opts.network.kernel_size}}}};
    write_file_atomic(out_dir / kTrainState, state.dump(2) + "\n");
}

int read_state_epoch(const fs::path& out_dir) {
    const auto bytes = read_file(out_dir / kTrainState);
    try {
        const json j = json::parse(bytes.begin(), bytes.end());
        return json_util::as<int>(j.at("epoch"), "train_state.epoch");
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed train state: ") + e.what());
    }
}

double validation_mse(const DatasetManifest& m, const net::NetworkParams<float>& params) {
    const auto& entries = m.split(Split::val).entries;
    if (entries.empty()) {
        return -1.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const EvalSample s = load_eval_sample(m, Split::val, i);
        sum += mse(net::infer(params, s.input), s.average);
    }
    return sum / static_cast<double>(entries.size());
}

std::string csv_row(const EpochRecord& r) {
    std::ostringstream os;
    os << std::setprecision(10) << r.epoch << ',' << r.train_loss << ',';
    if (r.val_mse >= 0.0) {
        os << r.val_mse;
    }
    os << '\n';
    return os.str();
}

} // namespace

TrainResult train_network(const DatasetManifest& manifest, const TrainOptions& opts, const fs::path& out_dir,
                          const std::function<void(const EpochRecord&)>& on_epoch) {
    opts.network.validate();
    opts.loss.validate();
    opts.training.validate();
    const auto& tc = opts.training;
    if (tc.crop % opts.network.size_multiple() != 0) {
        throw ConfigError("training.crop must be divisible by 2^depth");
    }
    const auto data = preload(manifest, opts.loss);
    if (data.empty()) {
        throw DatasetError("manifest has no training entries");
    }
    const int width = data.front().instances.front().width();
    const int height = data.front().instances.front().height();
    if (tc.crop > width || tc.crop > height) {
        throw ConfigError("training.crop exceeds the training image size");
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    }

    TrainResult result;
    result.loss_csv = out_dir / kLossCsv;
    net::NetworkParams<float> params;
    int start_epoch = 1;
    std::ofstream csv;
    if (opts.resume && fs::exists(out_dir / kTrainState)) {
        params = net::load_checkpoint(out_dir / kLastCheckpoint);
        if (!(params.spec == opts.network)) {
            throw ConfigError("resume: checkpoint network does not match the configured network");
        }
        start_epoch = read_state_epoch(out_dir) + 1;
        csv.open(result.loss_csv, std::ios::app);
        spdlog::info("resuming at epoch {}", start_epoch);
    } else {
        params = net::cast_params<float>(net::init_params<double>(opts.network, derive_seed({tc.seed, kInitSalt})));
        csv.open(result.loss_csv, std::ios::trunc);
        csv << "epoch,train_loss,val_mse\n";
        net::save_checkpoint(out_dir / kLastCheckpoint, params);
        write_state(out_dir, 0, opts);
    }
    if (!csv) {
        throw IoError("cannot write '" + result.loss_csv.string() + "'");
    }
    csv.flush();

    std::vector<std::size_t> order(data.size());
    for (int epoch = start_epoch; epoch <= tc.epochs; ++epoch) {
        Rng rng(derive_seed({tc.seed, static_cast<std::uint64_t>(epoch)}));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(tc.batch)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(tc.batch));
            std::vector<TrainingSample> samples;
            std::vector<WeightMaps> weights;
            for (std::size_t i = b0; i < b1; ++i) {
                const auto& entry = data[order[i]];
                const int k = static_cast<int>(entry.instances.size());
                const int a = std::uniform_int_distribution<int>(0, k - 1)(rng);
                int t = std::uniform_int_distribution<int>(0, k - 2)(rng);
                if (t >= a) {
                    ++t;
                }
                const CropWindow c = random_crop_window(width, height, tc.crop, rng);
                const bool flip = tc.flip && std::bernoulli_distribution(0.5)(rng);
                auto take = [&](const ImageGrid& g) {
                    ImageGrid out = crop(g, c.x0, c.z0, c.size, c.size);
                    return flip ? flip_horizontal(out) : out;
                };
                samples.push_back({take(entry.instances[static_cast<std::size_t>(a)]),
                                   take(entry.instances[static_cast<std::size_t>(t)]), InterfaceMap{}});
                weights.push_back({take(entry.weights.interface_weight), take(entry.weights.inverse_weight)});
            }
            loss_sum += train_step(params, samples, weights, opts.loss, tc.lr) * static_cast<double>(samples.size());
            steps += samples.size();
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(steps);
        if (!std::isfinite(rec.train_loss)) {
            throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
        }
        if (tc.validate_every > 0 && epoch % tc.validate_every == 0) {
            rec.val_mse = validation_mse(manifest, params);
        }
        csv << csv_row(rec);
        csv.flush();
        result.epochs.push_back(rec);
        if (rec.val_mse >= 0.0) {
            spdlog::info("epoch {}: loss {:.6g}, val mse {:.6g}", epoch, rec.train_loss, rec.val_mse);
        } else {
            spdlog::info("epoch {}: loss {:.6g}", epoch, rec.train_loss);
        }
        if (tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0) {
            net::save_checkpoint(out_dir / kLastCheckpoint, params);
            write_state(out_dir, epoch, opts);
        }
        if (on_epoch) {
            on_epoch(rec);
        }
    }
    net::save_checkpoint(out_dir / kLastCheckpoint, params);
    write_state(out_dir, std::max(tc.epochs, start_epoch - 1), opts);
    result.checkpoint = out_dir / kFinalCheckpoint;
    net::save_checkpoint(result.checkpoint, params);
    return result;
}

} // namespace s2s

#include <antic/nefield.hpp>
#include <antic/rng.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <numbers>

namespace antic::nf {

std::string_view to_string(TrainMode mode) noexcept {
    switch (mode) {
        case TrainMode::Scratch: return "scratch";
        case TrainMode::FullFT: return "fullft";
        case TrainMode::Lora: return "lora";
    }
    return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto m : {TrainMode::Scratch, TrainMode::FullFT, TrainMode::Lora})
        if (lower == to_string(m)) return m;
    throw ConfigError("unknown training mode '" + std::string(name) + "' (expected scratch, fullft, lora)");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr_final > 0.0) || !(lr_initial >= lr_final))
        throw ConfigError("learning rates must satisfy lr_initial >= lr_final > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (mode == TrainMode::Lora && lora_rank < 1) throw ConfigError("LoRA rank must be >= 1");
    if (target_mse && !(*target_mse >= 0.0)) throw ConfigError("target_mse must be >= 0");
}

TrainConfig TrainConfig::defaults(TrainMode mode) {
    TrainConfig c;
    c.mode = mode;
    if (mode == TrainMode::Lora) {
        c.lr_initial = 1e-2;
        c.lr_final = 1e-4;
    }
    return c;
}

double cosine_lr(const TrainConfig& cfg, std::size_t epoch) {
    if (cfg.epochs <= 1) return cfg.lr_initial;
    const double frac = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
    return cfg.lr_final + 0.5 * (cfg.lr_initial - cfg.lr_final) * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

constexpr double kDivergenceLoss = 1e6;

class AdamW {
public:
    AdamW(std::vector<std::span<float>> tensors, std::vector<bool> decay)
        : tensors_(std::move(tensors)), decay_(std::move(decay)) {
        for (auto t : tensors_) {
            m_.emplace_back(t.size(), 0.0f);
            v_.emplace_back(t.size(), 0.0f);
        }
    }

    void step(const std::vector<std::vector<float>>& grads, double lr, double weight_decay) {
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < tensors_.size(); ++i) {
            auto p = tensors_[i];
            const auto& g = grads[i];
            auto& m = m_[i];
            auto& v = v_[i];
            const float wd = decay_[i] ? static_cast<float>(lr * weight_decay) : 0.0f;
            const float b1 = kBeta1, b2 = kBeta2;
            const float step = static_cast<float>(lr / c1);
            const float inv_c2 = static_cast<float>(1.0 / c2);
            for (std::size_t j = 0; j < p.size(); ++j) {
                m[j] = b1 * m[j] + (1.0f - b1) * g[j];
                v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
                p[j] -= wd * p[j];
                p[j] -= step * m[j] / (std::sqrt(v[j] * inv_c2) + kEps);
            }
        }
    }

private:
    static constexpr float kBeta1 = 0.9f;
    static constexpr float kBeta2 = 0.999f;
    static constexpr float kEps = 1e-8f;
    std::vector<std::span<float>> tensors_;
    std::vector<bool> decay_;
    std::vector<std::vector<float>> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace

TrainResult train(const NeuralFieldParams<float>* params_in, const Snapshot& target,
                  const CoordinateLattice& lattice, const NfArchitecture& arch,
                  const TrainConfig& cfg) {
    cfg.validate();
    arch.validate();
    if (lattice.source_shape() != target.shape())
        throw ShapeMismatchError("lattice does not match target shape");

    TrainResult res;
    if (cfg.mode == TrainMode::Scratch) {
        res.params = init_params<float>(arch, cfg.seed);
    } else {
        if (!params_in) throw ConfigError("fine-tuning needs input parameters");
        if (!(params_in->arch == arch)) throw ShapeMismatchError("input parameters use another architecture");
        res.params = *params_in;
    }

    std::vector<std::span<float>> tensors;
    std::vector<bool> decay;
    if (cfg.mode == TrainMode::Lora) {
        // Distinct stream from the base init so A is not correlated with W.
        res.adapter = init_adapter<float>(arch, cfg.lora_rank, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        tensors = res.adapter->tensors();
        decay.assign(tensors.size(), true);
    } else {
        tensors = res.params.trainable();
        const std::size_t head_w = 4 * arch.n_layers;
        for (std::size_t i = 0; i < tensors.size(); ++i) decay.push_back(i < head_w ? i % 4 == 2 : i == head_w);
    }
    AdamW opt(tensors, decay);

    const std::size_t n = lattice.size();
    const std::size_t bs = std::min(cfg.batch_size, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed + 1);
    const auto values = target.values();
    const LoraAdapter<float>* ad = res.adapter ? &*res.adapter : nullptr;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (bs < n) rng.shuffle(std::span(order));
        const double lr = cosine_lr(cfg, epoch);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t len = std::min(bs, n - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            LossAndGrads<float> lg;
            try {
                lg = loss_and_grads<float>(res.params, ad, values, lattice, batch);
            } catch (const NumericInstabilityError& e) {
                throw TrainingDivergedError(std::string("training diverged: ") + e.what(), res.history);
            }
            if (!std::isfinite(lg.mse) || lg.mse > kDivergenceLoss) {
                res.history.push_back(lg.mse);
                throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch),
                                            res.history);
            }
            sum += lg.mse * static_cast<double>(len);
            count += len;
            opt.step(ad ? lg.adapter : lg.params, lr, cfg.weight_decay);
        }
        const double epoch_loss = sum / static_cast<double>(count);
        res.history.push_back(epoch_loss);
        res.epochs_run = epoch + 1;
        if (cfg.target_mse && epoch_loss <= *cfg.target_mse) {
            res.epochs_to_target = epoch;
            break;
        }
    }
    return res;
}

}  // namespace antic::nf

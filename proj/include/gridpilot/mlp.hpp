#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace gridpilot {

// Fully connected network: ReLU on every hidden layer, identity on the output.
// All parameters live in one flat buffer; layer l stores its weights
// (out × in, row-major) followed by its biases.
class Mlp {
public:
    explicit Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
        if (sizes_.size() < 2) throw Error("invalid-architecture", "an MLP needs at least input and output sizes");
        for (auto n : sizes_)
            if (n == 0) throw Error("invalid-architecture", "layer sizes must be positive");
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            offsets_.push_back(offset);
            offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
        }
        params_.assign(offset, 0.0);
    }

    // He-uniform weights, zero biases.
    template <typename Rng>
    static Mlp he_uniform(std::vector<std::size_t> layer_sizes, Rng& rng) {
        Mlp net(std::move(layer_sizes));
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            const double limit = std::sqrt(6.0 / static_cast<double>(net.sizes_[l]));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (double& w : net.weights(l)) w = dist(rng);
        }
        return net;
    }

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t layer_count() const noexcept { return sizes_.size() - 1; }
    std::size_t input_size() const noexcept { return sizes_.front(); }
    std::size_t output_size() const noexcept { return sizes_.back(); }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    std::span<double> weights(std::size_t l) { return {params_.data() + offsets_.at(l), sizes_[l + 1] * sizes_[l]}; }
    std::span<const double> weights(std::size_t l) const {
        return {params_.data() + offsets_.at(l), sizes_[l + 1] * sizes_[l]};
    }
    std::span<double> biases(std::size_t l) {
        return {params_.data() + offsets_.at(l) + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
    }
    std::span<const double> biases(std::size_t l) const {
        return {params_.data() + offsets_.at(l) + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
    }

    bool same_architecture(const Mlp& other) const noexcept { return sizes_ == other.sizes_; }

    std::vector<double> forward(std::span<const double> x) const {
        std::vector<std::vector<double>> pre;
        return forward_cached(x, pre);
    }

    // Adds upstream · ∂output[k]/∂θ into grad (same layout as parameters()).
    void backward(std::span<const double> x, std::size_t k, double upstream, std::span<double> grad) const {
        if (grad.size() != params_.size()) throw Error("dimension-mismatch", "gradient buffer size");
        if (k >= output_size()) throw Error("dimension-mismatch", "output index");
        std::vector<std::vector<double>> pre;
        forward_cached(x, pre);

        // delta holds ∂loss/∂(pre-activation) of the current layer.
        std::vector<double> delta(output_size(), 0.0);
        delta[k] = upstream;
        for (std::size_t l = layer_count(); l-- > 0;) {
            const std::size_t in = sizes_[l];
            const std::size_t out = sizes_[l + 1];
            const auto w = weights(l);
            double* gw = grad.data() + offsets_[l];
            double* gb = gw + out * in;

            // activation feeding layer l
            std::vector<double> act(in);
            if (l == 0) std::copy(x.begin(), x.end(), act.begin());
            else
                for (std::size_t i = 0; i < in; ++i) act[i] = std::max(0.0, pre[l - 1][i]);

            std::vector<double> prev_delta(in, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                gb[o] += d;
                for (std::size_t i = 0; i < in; ++i) {
                    gw[o * in + i] += d * act[i];
                    prev_delta[i] += d * w[o * in + i];
                }
            }
            if (l > 0)
                for (std::size_t i = 0; i < in; ++i)
                    if (pre[l - 1][i] <= 0.0) prev_delta[i] = 0.0;
            delta = std::move(prev_delta);
        }
    }

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<double> forward_cached(std::span<const double> x, std::vector<std::vector<double>>& pre) const {
        if (x.size() != input_size())
            throw Error("dimension-mismatch",
                        "input has " + std::to_string(x.size()) + " values, network expects " +
                            std::to_string(input_size()));
        pre.clear();
        std::vector<double> act(x.begin(), x.end());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const std::size_t in = sizes_[l];
            const std::size_t out = sizes_[l + 1];
            const auto w = weights(l);
            const auto b = biases(l);
            std::vector<double> z(b.begin(), b.end());
            for (std::size_t i = 0; i < in; ++i) {
                const double a = act[i];
                if (a == 0.0) continue;
                for (std::size_t o = 0; o < out; ++o) z[o] += w[o * in + i] * a;
            }
            if (l + 1 == layer_count()) return z;
            pre.push_back(z);
            for (double& v : z) v = std::max(0.0, v);
            act = std::move(z);
        }
        return act;
    }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

// One scalar regression target on a single output unit.
struct RegressionSample {
    std::vector<double> input;
    std::size_t output = 0;
    double target = 0.0;
};

// Mean squared error over the selected outputs.
inline double regression_loss(const Mlp& net, std::span<const RegressionSample> batch) {
    if (batch.empty()) throw Error("empty-batch", "regression loss over an empty batch");
    double sum = 0.0;
    for (const auto& s : batch) {
        const double err = net.forward(s.input).at(s.output) - s.target;
        sum += err * err;
    }
    return sum / static_cast<double>(batch.size());
}

inline std::pair<double, std::vector<double>> regression_gradient(const Mlp& net,
                                                                  std::span<const RegressionSample> batch) {
    if (batch.empty()) throw Error("empty-batch", "regression gradient over an empty batch");
    const double n = static_cast<double>(batch.size());
    std::vector<double> grad(net.parameters().size(), 0.0);
    double sum = 0.0;
    for (const auto& s : batch) {
        const double err = net.forward(s.input).at(s.output) - s.target;
        sum += err * err;
        net.backward(s.input, s.output, 2.0 * err / n, grad);
    }
    return {sum / n, std::move(grad)};
}

// Checkpoint layout (little-endian): 8-byte magic, u32 version, u32 layer
// size count, u64 sizes, then the raw f64 parameter buffer.
inline constexpr char kCheckpointMagic[8] = {'G', 'P', 'I', 'L', 'O', 'T', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("bad-checkpoint", "truncated checkpoint");
    return v;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const Mlp& net) {
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    detail::write_raw(os, kCheckpointVersion);
    detail::write_raw(os, static_cast<std::uint32_t>(net.layer_sizes().size()));
    for (auto n : net.layer_sizes()) detail::write_raw(os, static_cast<std::uint64_t>(n));
    for (double p : net.parameters()) detail::write_raw(os, p);
    if (!os) throw Error("io", "failed writing checkpoint");
}

inline Mlp load_checkpoint(std::istream& is) {
    char magic[sizeof kCheckpointMagic];
    if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kCheckpointMagic))
        throw Error("bad-checkpoint", "missing checkpoint magic");
    const auto version = detail::read_raw<std::uint32_t>(is);
    if (version != kCheckpointVersion) throw Error("bad-checkpoint", "unsupported version " + std::to_string(version));
    const auto count = detail::read_raw<std::uint32_t>(is);
    if (count < 2 || count > 64) throw Error("bad-checkpoint", "implausible layer count");
    std::vector<std::size_t> sizes;
    for (std::uint32_t i = 0; i < count; ++i) sizes.push_back(detail::read_raw<std::uint64_t>(is));
    Mlp net(std::move(sizes));
    for (double& p : net.parameters()) p = detail::read_raw<double>(is);
    return net;
}

}  // namespace gridpilot

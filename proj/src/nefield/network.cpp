#include <antic/kernels/kernels.hpp>
#include <antic/nefield.hpp>
#include <antic/rng.hpp>

#include <cmath>
#include <numbers>
#include <type_traits>
#include <string>

namespace antic::nf {

void NfArchitecture::validate() const {
    if (hidden_dim < 1 || n_layers < 1 || ffm_dim < 1)
        throw ConfigError("hidden_dim, n_layers and ffm_dim must be >= 1");
    if (ffm_dim % 2) throw ConfigError("ffm_dim must be even");
    if (!(ffm_frequency > 0.0) || !std::isfinite(ffm_frequency))
        throw ConfigError("ffm_frequency must be > 0");
    if (in_dim != 2) throw ConfigError("in_dim must be 2");
    if (out_dim < 1) throw ConfigError("out_dim must be >= 1");
}

std::size_t param_count(const NfArchitecture& arch) {
    return trainable_count(arch) + arch.ffm_dim / 2 * arch.in_dim;
}

std::size_t trainable_count(const NfArchitecture& arch) {
    arch.validate();
    std::size_t n = 0;
    for (std::size_t l = 0; l < arch.n_layers; ++l) {
        const std::size_t in = arch.layer_in(l);
        n += 2 * in + in * arch.hidden_dim + arch.hidden_dim;
    }
    return n + arch.out_dim * arch.hidden_dim + arch.out_dim;
}

std::size_t adapter_count(const NfArchitecture& arch, std::size_t rank) {
    validate_rank(arch, rank);
    std::size_t n = 0;
    for (std::size_t l = 0; l < arch.n_layers; ++l) n += rank * (arch.hidden_dim + arch.layer_in(l));
    return n + head_rank(rank) * (arch.out_dim + arch.hidden_dim);
}

void validate_rank(const NfArchitecture& arch, std::size_t rank) {
    arch.validate();
    if (rank < 1) throw ConfigError("LoRA rank must be >= 1");
    for (std::size_t l = 0; l < arch.n_layers; ++l) {
        const std::size_t lim = std::min(arch.hidden_dim, arch.layer_in(l)) / 2;
        if (rank > lim)
            throw ConfigError("LoRA rank " + std::to_string(rank) + " exceeds min(n, k)/2 = " +
                              std::to_string(lim) + " at layer " + std::to_string(l));
    }
}

// ---------------------------------------------------------------------------
// Tensor views

template <class T>
std::vector<std::span<T>> NeuralFieldParams<T>::tensors() {
    std::vector<std::span<T>> out{std::span<T>(ffm)};
    for (auto& t : trainable()) out.push_back(t);
    return out;
}

template <class T>
std::vector<std::span<const T>> NeuralFieldParams<T>::tensors() const {
    auto views = const_cast<NeuralFieldParams<T>*>(this)->tensors();
    return {views.begin(), views.end()};
}

template <class T>
std::vector<std::span<T>> NeuralFieldParams<T>::trainable() {
    std::vector<std::span<T>> out;
    for (auto& l : layers) {
        out.emplace_back(l.ln_scale);
        out.emplace_back(l.ln_shift);
        out.emplace_back(l.dense.weight);
        out.emplace_back(l.dense.bias);
    }
    out.emplace_back(head.weight);
    out.emplace_back(head.bias);
    return out;
}

template <class T>
template <class U>
NeuralFieldParams<U> NeuralFieldParams<T>::cast() const {
    auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    auto dense = [&](const Dense<T>& d) { return Dense<U>{d.in, d.out, conv(d.weight), conv(d.bias)}; };
    NeuralFieldParams<U> p;
    p.arch = arch;
    p.ffm = conv(ffm);
    for (const auto& l : layers) p.layers.push_back({conv(l.ln_scale), conv(l.ln_shift), dense(l.dense)});
    p.head = dense(head);
    return p;
}

template <class T>
std::vector<std::span<T>> LoraAdapter<T>::tensors() {
    std::vector<std::span<T>> out;
    for (auto& f : factors) {
        out.emplace_back(f.a);
        out.emplace_back(f.b);
    }
    return out;
}

template <class T>
std::vector<std::span<const T>> LoraAdapter<T>::tensors() const {
    auto views = const_cast<LoraAdapter<T>*>(this)->tensors();
    return {views.begin(), views.end()};
}

template <class T>
std::size_t LoraAdapter<T>::count() const noexcept {
    std::size_t n = 0;
    for (const auto& f : factors) n += f.a.size() + f.b.size();
    return n;
}

template <class T>
template <class U>
LoraAdapter<U> LoraAdapter<T>::cast() const {
    LoraAdapter<U> out;
    out.rank = rank;
    for (const auto& f : factors)
        out.factors.push_back({f.n, f.k, f.rank, std::vector<U>(f.a.begin(), f.a.end()),
                               std::vector<U>(f.b.begin(), f.b.end())});
    return out;
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

template <class T>
Dense<T> init_dense(Rng& rng, std::size_t in, std::size_t out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Dense<T> d{in, out, std::vector<T>(in * out), std::vector<T>(out)};
    for (T& w : d.weight) w = static_cast<T>(rng.uniform(-bound, bound));
    for (T& b : d.bias) b = static_cast<T>(rng.uniform(-bound, bound));
    return d;
}

}  // namespace

template <class T>
NeuralFieldParams<T> init_params(const NfArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    NeuralFieldParams<T> p;
    p.arch = arch;
    p.ffm.resize(arch.ffm_dim / 2 * arch.in_dim);
    for (T& v : p.ffm) v = static_cast<T>(rng.normal(0.0, arch.ffm_frequency));
    for (std::size_t l = 0; l < arch.n_layers; ++l) {
        const std::size_t in = arch.layer_in(l);
        p.layers.push_back({std::vector<T>(in, T(1)), std::vector<T>(in, T(0)),
                            init_dense<T>(rng, in, arch.hidden_dim)});
    }
    p.head = init_dense<T>(rng, arch.hidden_dim, arch.out_dim);
    return p;
}

template <class T>
LoraAdapter<T> init_adapter(const NfArchitecture& arch, std::size_t rank, std::uint64_t seed) {
    validate_rank(arch, rank);
    Rng rng(seed);
    LoraAdapter<T> ad;
    ad.rank = rank;
    auto make = [&](std::size_t n, std::size_t k, std::size_t r) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(k));
        LoraFactor<T> f{n, k, r, std::vector<T>(r * k), std::vector<T>(n * r, T(0))};
        for (T& v : f.a) v = static_cast<T>(rng.uniform(-bound, bound));
        return f;
    };
    for (std::size_t l = 0; l < arch.n_layers; ++l)
        ad.factors.push_back(make(arch.hidden_dim, arch.layer_in(l), rank));
    ad.factors.push_back(make(arch.out_dim, arch.hidden_dim, head_rank(rank)));
    return ad;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

template <class T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

template <class T>
T sigmoid(T a) {
    return T(1) / (T(1) + std::exp(-a));
}

template <class T>
void check_factor(const Dense<T>& d, const LoraFactor<T>& f) {
    if (f.n != d.out || f.k != d.in || f.a.size() != f.rank * f.k || f.b.size() != f.n * f.rank)
        throw ShapeMismatchError("adapter factor does not match layer " + std::to_string(d.out) +
                                 "x" + std::to_string(d.in));
}

/// W + B A, computed the same way by forward and merge so both agree bitwise.
template <class T>
std::vector<T> effective_weight(const Dense<T>& d, const LoraFactor<T>* f) {
    std::vector<T> w = d.weight;
    if (f) {
        check_factor(d, *f);
        kernels::gemm<T>(f->n, f->k, f->rank, f->b.data(), f->rank, f->a.data(), f->k, w.data(), f->k,
                         true);
    }
    return w;
}

template <class T>
struct Trace {
    std::size_t batch = 0;
    std::vector<std::vector<T>> weff;  // per dense layer incl. head
    std::vector<std::vector<T>> input;  // h_{l-1}, batch x in
    std::vector<std::vector<T>> xhat;
    std::vector<std::vector<T>> rstd;
    std::vector<std::vector<T>> y;    // LN output
    std::vector<std::vector<T>> pre;  // pre-activation
    std::vector<std::vector<T>> sig;  // sigmoid(pre)
    std::vector<T> last;              // h_L
    std::vector<T> out;
};

template <class T>
void affine(const std::vector<T>& x, std::size_t batch, const Dense<T>& d, const std::vector<T>& w,
            std::vector<T>& out) {
    std::vector<T> wt(d.in * d.out);
    transpose(w.data(), d.out, d.in, wt.data());
    out.resize(batch * d.out);
    for (std::size_t b = 0; b < batch; ++b) std::copy(d.bias.begin(), d.bias.end(), out.begin() + b * d.out);
    kernels::gemm<T>(batch, d.out, d.in, x.data(), d.in, wt.data(), d.out, out.data(), d.out, true);
}

template <class T>
void check_finite(const std::vector<T>& v, std::size_t layer) {
    for (T x : v)
        if (!std::isfinite(x))
            throw NumericInstabilityError("non-finite activation in layer " + std::to_string(layer),
                                          layer);
}

template <class T>
void run_forward(const NeuralFieldParams<T>& p, const LoraAdapter<T>* adapter, const T* coords,
                 std::size_t batch, Trace<T>& tr) {
    const NfArchitecture& arch = p.arch;
    const std::size_t L = arch.n_layers;
    if (adapter && adapter->factors.size() != L + 1)
        throw ShapeMismatchError("adapter has " + std::to_string(adapter->factors.size()) +
                                 " factors, network has " + std::to_string(L + 1) + " layers");
    tr.batch = batch;
    tr.weff.resize(L + 1);
    tr.input.resize(L);
    tr.xhat.resize(L);
    tr.rstd.resize(L);
    tr.y.resize(L);
    tr.pre.resize(L);
    tr.sig.resize(L);

    const std::size_t half = arch.ffm_dim / 2;
    std::vector<T> h(batch * arch.ffm_dim);
    const T two_pi = static_cast<T>(2.0 * std::numbers::pi);
    for (std::size_t b = 0; b < batch; ++b) {
        const T x = coords[2 * b], yv = coords[2 * b + 1];
        for (std::size_t j = 0; j < half; ++j) {
            const T arg = two_pi * (p.ffm[2 * j] * x + p.ffm[2 * j + 1] * yv);
            h[b * arch.ffm_dim + j] = std::sin(arg);
            h[b * arch.ffm_dim + half + j] = std::cos(arg);
        }
    }

    for (std::size_t l = 0; l < L; ++l) {
        const HiddenLayer<T>& layer = p.layers[l];
        const std::size_t in = layer.dense.in;
        tr.input[l] = std::move(h);
        auto& x = tr.input[l];
        auto& xh = tr.xhat[l];
        auto& rs = tr.rstd[l];
        auto& y = tr.y[l];
        xh.resize(batch * in);
        rs.resize(batch);
        y.resize(batch * in);
        for (std::size_t b = 0; b < batch; ++b) {
            const T* row = x.data() + b * in;
            T mean = 0;
            for (std::size_t i = 0; i < in; ++i) mean += row[i];
            mean /= static_cast<T>(in);
            T var = 0;
            for (std::size_t i = 0; i < in; ++i) var += (row[i] - mean) * (row[i] - mean);
            var /= static_cast<T>(in);
            const T r = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
            rs[b] = r;
            for (std::size_t i = 0; i < in; ++i) {
                const T v = (row[i] - mean) * r;
                xh[b * in + i] = v;
                y[b * in + i] = v * layer.ln_scale[i] + layer.ln_shift[i];
            }
        }
        tr.weff[l] = effective_weight(layer.dense, adapter ? &adapter->factors[l] : nullptr);
        affine(y, batch, layer.dense, tr.weff[l], tr.pre[l]);
        const auto& pre = tr.pre[l];
        auto& sg = tr.sig[l];
        h.resize(pre.size());
        sg.resize(pre.size());
        if constexpr (std::is_same_v<T, float>) {
            kernels::silu(pre.data(), h.data(), sg.data(), pre.size());
        } else {
            for (std::size_t i = 0; i < h.size(); ++i) {
                sg[i] = sigmoid(pre[i]);
                h[i] = pre[i] * sg[i];
            }
        }
        check_finite(h, l);
    }
    tr.last = std::move(h);
    tr.weff[L] = effective_weight(p.head, adapter ? &adapter->factors[L] : nullptr);
    affine(tr.last, batch, p.head, tr.weff[L], tr.out);
    check_finite(tr.out, L);
}

template <class T>
void validate_params(const NeuralFieldParams<T>& p) {
    if (p.layers.size() != p.arch.n_layers) throw ShapeMismatchError("layer count does not match arch");
}

}  // namespace

template <class T>
std::vector<T> forward(const NeuralFieldParams<T>& params, const LoraAdapter<T>* adapter,
                       std::span<const T> coords) {
    validate_params(params);
    if (coords.size() % 2) throw ShapeMismatchError("coordinates must be (x, y) pairs");
    Trace<T> tr;
    run_forward(params, adapter, coords.data(), coords.size() / 2, tr);
    return std::move(tr.out);
}

template <class T>
LossAndGrads<T> loss_and_grads(const NeuralFieldParams<T>& params, const LoraAdapter<T>* adapter,
                               std::span<const float> target, const CoordinateLattice& lattice,
                               std::span<const std::size_t> batch_idx) {
    validate_params(params);
    const NfArchitecture& arch = params.arch;
    if (target.size() != lattice.size() * arch.out_dim)
        throw ShapeMismatchError("target size does not match lattice");
    const std::size_t batch = batch_idx.size();
    if (batch == 0) throw ShapeMismatchError("empty batch");
    std::vector<T> coords(2 * batch);
    const auto pts = lattice.points();
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t k = batch_idx[b];
        if (k >= lattice.size()) throw IndexError("batch index outside lattice");
        coords[2 * b] = static_cast<T>(pts[2 * k]);
        coords[2 * b + 1] = static_cast<T>(pts[2 * k + 1]);
    }

    Trace<T> tr;
    run_forward(params, adapter, coords.data(), batch, tr);

    const std::size_t L = arch.n_layers, d_out = arch.out_dim;
    const double denom = static_cast<double>(batch * d_out);
    std::vector<T> dout(batch * d_out);
    double sse = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < d_out; ++o) {
            const double r = static_cast<double>(tr.out[b * d_out + o]) -
                             static_cast<double>(target[batch_idx[b] * d_out + o]);
            sse += r * r;
            dout[b * d_out + o] = static_cast<T>(2.0 * r / denom);
        }

    LossAndGrads<T> res;
    res.mse = sse / denom;
    const bool lora = adapter != nullptr;

    // dW_eff = dY^T X, plus parameter gradients for the dense layer, and the
    // upstream gradient dX = dY W_eff.
    struct DenseGrads {
        std::vector<T> dw, db;
    };
    auto dense_backward = [&](const std::vector<T>& dy, const std::vector<T>& x, std::size_t in,
                              std::size_t out, const std::vector<T>& w, std::vector<T>* dx) {
        DenseGrads g{std::vector<T>(out * in), std::vector<T>(out, T(0))};
        std::vector<T> dyt(out * batch);
        transpose(dy.data(), batch, out, dyt.data());
        kernels::gemm<T>(out, in, batch, dyt.data(), batch, x.data(), in, g.dw.data(), in, false);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t o = 0; o < out; ++o) g.db[o] += dy[b * out + o];
        if (dx) {
            dx->resize(batch * in);
            kernels::gemm<T>(batch, in, out, dy.data(), out, w.data(), in, dx->data(), in, false);
        }
        return g;
    };
    auto lora_grads = [&](const LoraFactor<T>& f, const std::vector<T>& dw) {
        std::vector<T> da(f.rank * f.k), db(f.n * f.rank);
        std::vector<T> at(f.k * f.rank), bt(f.rank * f.n);
        transpose(f.a.data(), f.rank, f.k, at.data());
        transpose(f.b.data(), f.n, f.rank, bt.data());
        kernels::gemm<T>(f.n, f.rank, f.k, dw.data(), f.k, at.data(), f.rank, db.data(), f.rank, false);
        kernels::gemm<T>(f.rank, f.k, f.n, bt.data(), f.n, dw.data(), f.k, da.data(), f.k, false);
        return std::pair{std::move(da), std::move(db)};
    };

    // Gradients are produced back to front and reversed into storage order.
    std::vector<std::vector<T>> rev;

    std::vector<T> dh;
    {
        auto g = dense_backward(dout, tr.last, arch.hidden_dim, d_out, tr.weff[L], &dh);
        if (lora) {
            auto [da, db] = lora_grads(adapter->factors[L], g.dw);
            rev.push_back(std::move(db));
            rev.push_back(std::move(da));
        } else {
            rev.push_back(std::move(g.db));
            rev.push_back(std::move(g.dw));
        }
    }
    for (std::size_t li = L; li-- > 0;) {
        const HiddenLayer<T>& layer = params.layers[li];
        const std::size_t in = layer.dense.in, out = layer.dense.out;
        std::vector<T> da(batch * out);
        for (std::size_t i = 0; i < da.size(); ++i) {
            const T a = tr.pre[li][i];
            const T s = tr.sig[li][i];
            da[i] = dh[i] * s * (T(1) + a * (T(1) - s));
        }
        std::vector<T> dy;
        auto g = dense_backward(da, tr.y[li], in, out, tr.weff[li], &dy);

        std::vector<T> dscale(in, T(0)), dshift(in, T(0));
        const bool need_dx = li > 0;
        std::vector<T> dx;
        if (need_dx) dx.resize(batch * in);
        const auto& xh = tr.xhat[li];
        for (std::size_t b = 0; b < batch; ++b) {
            const T* dyr = dy.data() + b * in;
            const T* xr = xh.data() + b * in;
            T m1 = 0, m2 = 0;
            for (std::size_t i = 0; i < in; ++i) {
                dscale[i] += dyr[i] * xr[i];
                dshift[i] += dyr[i];
                const T dxh = dyr[i] * layer.ln_scale[i];
                m1 += dxh;
                m2 += dxh * xr[i];
            }
            if (!need_dx) continue;
            m1 /= static_cast<T>(in);
            m2 /= static_cast<T>(in);
            const T r = tr.rstd[li][b];
            for (std::size_t i = 0; i < in; ++i)
                dx[b * in + i] = r * (dyr[i] * layer.ln_scale[i] - m1 - xr[i] * m2);
        }
        if (lora) {
            auto [dA, dB] = lora_grads(adapter->factors[li], g.dw);
            rev.push_back(std::move(dB));
            rev.push_back(std::move(dA));
        } else {
            rev.push_back(std::move(g.db));
            rev.push_back(std::move(g.dw));
            rev.push_back(std::move(dshift));
            rev.push_back(std::move(dscale));
        }
        dh = std::move(dx);
    }
    auto& dst = lora ? res.adapter : res.params;
    dst.assign(std::make_move_iterator(rev.rbegin()), std::make_move_iterator(rev.rend()));
    return res;
}

template <class T>
NeuralFieldParams<T> merge_adapter(const NeuralFieldParams<T>& params, const LoraAdapter<T>& adapter) {
    validate_params(params);
    if (adapter.factors.size() != params.layers.size() + 1)
        throw ShapeMismatchError("adapter layer count does not match network");
    NeuralFieldParams<T> out = params;
    for (std::size_t l = 0; l < out.layers.size(); ++l)
        out.layers[l].dense.weight = effective_weight(params.layers[l].dense, &adapter.factors[l]);
    out.head.weight = effective_weight(params.head, &adapter.factors.back());
    return out;
}

Snapshot reconstruct(const NeuralFieldParams<float>& params, const CoordinateLattice& lattice,
                     GridShape shape, Domain domain, std::uint64_t timestep, double time) {
    if (lattice.source_shape() != shape) throw ShapeMismatchError("lattice does not match shape");
    if (params.arch.out_dim != 1) throw ShapeMismatchError("reconstruct needs a scalar field");
    std::vector<float> values;
    values.reserve(lattice.size());
    const auto pts = lattice.points();
    constexpr std::size_t chunk = 4096;
    for (std::size_t start = 0; start < lattice.size(); start += chunk) {
        const std::size_t n = std::min(chunk, lattice.size() - start);
        auto out = forward<float>(params, nullptr, pts.subspan(2 * start, 2 * n));
        values.insert(values.end(), out.begin(), out.end());
    }
    return Snapshot(shape, std::move(values), domain, timestep, time);
}

#define ANTIC_NF_INSTANTIATE(T)                                                                  \
    template struct NeuralFieldParams<T>;                                                        \
    template struct LoraAdapter<T>;                                                              \
    template NeuralFieldParams<T> init_params<T>(const NfArchitecture&, std::uint64_t);          \
    template LoraAdapter<T> init_adapter<T>(const NfArchitecture&, std::size_t, std::uint64_t); \
    template std::vector<T> forward<T>(const NeuralFieldParams<T>&, const LoraAdapter<T>*,      \
                                       std::span<const T>);                                      \
    template LossAndGrads<T> loss_and_grads<T>(const NeuralFieldParams<T>&,                     \
                                               const LoraAdapter<T>*, std::span<const float>,   \
                                               const CoordinateLattice&,                         \
                                               std::span<const std::size_t>);                    \
    template NeuralFieldParams<T> merge_adapter<T>(const NeuralFieldParams<T>&,                 \
                                                   const LoraAdapter<T>&);

ANTIC_NF_INSTANTIATE(float)
ANTIC_NF_INSTANTIATE(double)

template NeuralFieldParams<double> NeuralFieldParams<float>::cast<double>() const;
template NeuralFieldParams<float> NeuralFieldParams<double>::cast<float>() const;
template NeuralFieldParams<float> NeuralFieldParams<float>::cast<float>() const;
template LoraAdapter<double> LoraAdapter<float>::cast<double>() const;
template LoraAdapter<float> LoraAdapter<double>::cast<float>() const;

}  // namespace antic::nf

#include <antic/codec.hpp>
#include <antic/detail/bytes.hpp>

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace antic {

namespace {

constexpr char kMagic[4] = {'A', 'N', 'T', 'W'};

using Params = nf::NeuralFieldParams<float>;

/// Empty tensors shaped like `arch` so payloads can be read into them.
Params shaped(const nf::NfArchitecture& arch) {
    Params p;
    p.arch = arch;
    p.ffm.assign(arch.ffm_dim / 2 * arch.in_dim, 0.0f);
    for (std::size_t l = 0; l < arch.n_layers; ++l) {
        const std::size_t in = arch.layer_in(l);
        p.layers.push_back({std::vector<float>(in), std::vector<float>(in),
                            {in, arch.hidden_dim, std::vector<float>(in * arch.hidden_dim),
                             std::vector<float>(arch.hidden_dim)}});
    }
    p.head = {arch.hidden_dim, arch.out_dim, std::vector<float>(arch.hidden_dim * arch.out_dim),
              std::vector<float>(arch.out_dim)};
    return p;
}

nf::LoraAdapter<float> shaped_adapter(const nf::NfArchitecture& arch, std::size_t rank) {
    nf::LoraAdapter<float> a;
    a.rank = rank;
    auto make = [](std::size_t n, std::size_t k, std::size_t r) {
        return nf::LoraFactor<float>{n, k, r, std::vector<float>(r * k), std::vector<float>(n * r)};
    };
    for (std::size_t l = 0; l < arch.n_layers; ++l)
        a.factors.push_back(make(arch.hidden_dim, arch.layer_in(l), rank));
    a.factors.push_back(make(arch.out_dim, arch.hidden_dim, nf::head_rank(rank)));
    return a;
}

void check_same_shape(const Params& a, const Params& b) {
    if (!(a.arch == b.arch)) throw ShapeMismatchError("parameter sets use different architectures");
    const auto ta = a.tensors(), tb = b.tensors();
    if (ta.size() != tb.size()) throw ShapeMismatchError("parameter sets differ in tensor count");
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (ta[i].size() != tb[i].size()) throw ShapeMismatchError("parameter tensors differ in size");
}

}  // namespace

std::string_view to_string(UpdateKind kind) noexcept {
    switch (kind) {
        case UpdateKind::BaseFull: return "base_full";
        case UpdateKind::FullDelta: return "full_delta";
        case UpdateKind::LoraPair: return "lora_pair";
    }
    return "unknown";
}

std::size_t UpdateRecord::param_count() const {
    return kind == UpdateKind::LoraPair ? adapter.count() : nf::param_count(weights.arch);
}

UpdateRecord make_base(const Params& weights, std::uint64_t timestep) {
    return {UpdateKind::BaseFull, timestep, weights, {}};
}

UpdateRecord make_delta(const Params& prev, const Params& cur, std::uint64_t timestep) {
    check_same_shape(prev, cur);
    UpdateRecord rec{UpdateKind::FullDelta, timestep, cur, {}};
    auto out = rec.weights.tensors();
    const auto p = prev.tensors(), c = cur.tensors();
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] = c[i][j] - p[i][j];
    std::fill(rec.weights.ffm.begin(), rec.weights.ffm.end(), 0.0f);
    return rec;
}

UpdateRecord make_lora(const nf::NfArchitecture& arch, const nf::LoraAdapter<float>& adapter,
                       std::uint64_t timestep) {
    UpdateRecord rec{UpdateKind::LoraPair, timestep, shaped(arch), adapter};
    return rec;
}

Params apply_delta(const Params& prev, const Params& delta) {
    check_same_shape(prev, delta);
    Params out = prev;
    auto o = out.trainable();
    auto d = const_cast<Params&>(delta).trainable();
    for (std::size_t i = 0; i < o.size(); ++i)
        for (std::size_t j = 0; j < o[i].size(); ++j) o[i][j] += d[i][j];
    return out;
}

Params apply_update(const Params* current, const UpdateRecord& rec) {
    if (rec.kind == UpdateKind::BaseFull) return rec.weights;
    if (!current) throw ChainGapError("update without a base record", rec.timestep);
    if (rec.kind == UpdateKind::FullDelta) return apply_delta(*current, rec.weights);
    return nf::merge_adapter(*current, rec.adapter);
}

CompressedUpdate serialize_update(const UpdateRecord& rec) {
    const nf::NfArchitecture& arch = rec.weights.arch;
    arch.validate();
    detail::ByteWriter w;
    w.raw(kMagic, 4);
    w.u16(kUpdateFormatVersion);
    w.u8(static_cast<std::uint8_t>(rec.kind));
    w.u64(rec.timestep);
    for (std::size_t v : {arch.hidden_dim, arch.n_layers, arch.ffm_dim, arch.in_dim, arch.out_dim})
        w.u32(static_cast<std::uint32_t>(v));
    w.f64(arch.ffm_frequency);
    const bool lora = rec.kind == UpdateKind::LoraPair;
    w.u32(lora ? static_cast<std::uint32_t>(rec.adapter.rank) : 0u);

    const auto tensors = lora ? rec.adapter.tensors() : rec.weights.tensors();
    if (lora) {
        const auto expect = shaped_adapter(arch, rec.adapter.rank);
        const auto et = expect.tensors();
        if (et.size() != tensors.size()) throw ShapeMismatchError("adapter does not match architecture");
        for (std::size_t i = 0; i < et.size(); ++i)
            if (et[i].size() != tensors[i].size())
                throw ShapeMismatchError("adapter tensor does not match architecture");
    } else {
        check_same_shape(shaped(arch), rec.weights);
    }
    for (auto t : tensors) {
        for (float v : t)
            if (!std::isfinite(v)) throw FormatError("refusing to serialize a non-finite weight");
        w.f32s(t);
    }
    CompressedUpdate u{rec.kind, rec.timestep, w.take(), rec.param_count()};
    return u;
}

UpdateRecord deserialize_update(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad update magic");
    const auto version = r.u16();
    if (version != kUpdateFormatVersion) throw FormatError("unsupported update version " + std::to_string(version));
    const auto kind = r.u8();
    if (kind > 2) throw FormatError("unknown update kind " + std::to_string(kind));
    UpdateRecord rec;
    rec.kind = static_cast<UpdateKind>(kind);
    rec.timestep = r.u64();
    nf::NfArchitecture arch;
    arch.hidden_dim = r.u32();
    arch.n_layers = r.u32();
    arch.ffm_dim = r.u32();
    arch.in_dim = r.u32();
    arch.out_dim = r.u32();
    arch.ffm_frequency = r.f64();
    const std::uint32_t rank = r.u32();
    try {
        arch.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("bad architecture in update: ") + e.what());
    }
    // Refuse absurd shapes before allocating; every dimension of a valid
    // record is bounded by its float count.
    for (std::size_t v : {arch.hidden_dim, arch.n_layers, arch.ffm_dim, arch.in_dim, arch.out_dim})
        if (v > bytes.size() / 4) throw FormatError("truncated record");
    const bool lora = rec.kind == UpdateKind::LoraPair;
    if (lora) {
        if (rank == 0) throw FormatError("LoRA record with rank 0");
        try {
            nf::validate_rank(arch, rank);
        } catch (const ConfigError& e) {
            throw FormatError(std::string("bad rank in update: ") + e.what());
        }
    }
    const std::size_t floats = lora ? nf::adapter_count(arch, rank) : nf::param_count(arch);
    if (floats > bytes.size() / 4) throw FormatError("truncated record");

    rec.weights = shaped(arch);
    if (lora) {
        rec.adapter = shaped_adapter(arch, rank);
        for (auto t : rec.adapter.tensors()) r.f32s(t);
    } else {
        if (rank != 0) throw FormatError("non-LoRA record with nonzero rank");
        for (auto t : rec.weights.tensors()) r.f32s(t);
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after update payload");
    return rec;
}

void save_update(const std::filesystem::path& path, const CompressedUpdate& u) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(u.payload.data()), static_cast<std::streamsize>(u.payload.size()));
    if (!out) throw FormatError("failed writing " + path.string());
}

UpdateRecord load_update(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_update(bytes);
}

std::string update_filename(std::uint64_t timestep) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "update_%06llu.antw", static_cast<unsigned long long>(timestep));
    return buf;
}

// ---------------------------------------------------------------------------

CompressionReport compression_report(std::uint64_t raw_snapshot_bytes,
                                     std::span<const std::uint64_t> stored_bytes,
                                     std::span<const UpdateKind> kinds, std::size_t total_snapshots,
                                     std::size_t retained) {
    if (stored_bytes.size() != kinds.size()) throw ShapeMismatchError("sizes and kinds differ in length");
    if (retained > total_snapshots) throw ConfigError("retained exceeds total snapshots");
    if (total_snapshots == 0 || retained == 0) throw ConfigError("empty trajectory in report");
    CompressionReport r;
    r.raw_bytes_per_snapshot = raw_snapshot_bytes;
    r.total_snapshots = total_snapshots;
    r.retained = retained;
    for (std::size_t i = 0; i < stored_bytes.size(); ++i) {
        r.stored_total += stored_bytes[i];
        if (kinds[i] != UpdateKind::BaseFull) r.delta_total += stored_bytes[i];
    }
    if (r.stored_total == 0) throw ConfigError("no stored bytes");
    const double raw_total = static_cast<double>(raw_snapshot_bytes * total_snapshots);
    r.stored_per_snapshot = static_cast<double>(r.stored_total) / static_cast<double>(stored_bytes.size());
    r.sc = static_cast<double>(raw_snapshot_bytes) / r.stored_per_snapshot;
    r.tr = static_cast<double>(retained) / static_cast<double>(total_snapshots);
    r.tc = raw_total / static_cast<double>(r.stored_total);
    r.tc_amortized = r.delta_total > 0 ? raw_total / static_cast<double>(r.delta_total) : r.tc;
    return r;
}

CompressionReport compression_report(std::uint64_t raw_snapshot_bytes,
                                     std::span<const CompressedUpdate> updates,
                                     std::size_t total_snapshots, std::size_t retained) {
    std::vector<std::uint64_t> sizes;
    std::vector<UpdateKind> kinds;
    for (const auto& u : updates) {
        sizes.push_back(u.stored_bytes());
        kinds.push_back(u.kind);
    }
    return compression_report(raw_snapshot_bytes, sizes, kinds, total_snapshots, retained);
}

std::uint64_t raw_snapshot_bytes(const Snapshot& s) noexcept { return 4ull * s.size(); }

// ---------------------------------------------------------------------------

QuantizedField baseline_quantize_deflate(const Snapshot& s, int mantissa_bits) {
    if (mantissa_bits < 1 || mantissa_bits > 23) throw ConfigError("mantissa_bits must lie in 1..23");
    const auto values = s.values();
    const std::size_t n = values.size();
    const std::uint32_t mask = ~((1u << (23 - mantissa_bits)) - 1u);
    std::vector<float> quant(n);
    std::vector<std::uint8_t> shuffled(4 * n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]) & mask;
        quant[i] = std::bit_cast<float>(bits);
        for (std::size_t b = 0; b < 4; ++b) shuffled[b * n + i] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    uLongf cap = compressBound(static_cast<uLong>(shuffled.size()));
    QuantizedField out;
    out.bytes.resize(cap);
    if (compress2(out.bytes.data(), &cap, shuffled.data(), static_cast<uLong>(shuffled.size()), 9) != Z_OK)
        throw Error("deflate failed");
    out.bytes.resize(cap);
    out.raw_bytes = 4 * n;
    out.rel_l2 = rel_l2(quant, values);
    return out;
}

std::vector<float> baseline_inflate(std::span<const std::uint8_t> bytes, std::size_t count) {
    std::vector<std::uint8_t> shuffled(4 * count);
    uLongf len = static_cast<uLongf>(shuffled.size());
    if (uncompress(shuffled.data(), &len, bytes.data(), static_cast<uLong>(bytes.size())) != Z_OK ||
        len != shuffled.size())
        throw FormatError("bad deflate stream");
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (std::size_t b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(shuffled[b * count + i]) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

}  // namespace antic

#include <antic/pipeline.hpp>
#include <antic/kernels/kernels.hpp>

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace antic {

using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";

json arch_json(const nf::NfArchitecture& a) {
    return {{"hidden_dim", a.hidden_dim}, {"n_layers", a.n_layers}, {"ffm_dim", a.ffm_dim},
            {"ffm_frequency", a.ffm_frequency}, {"in_dim", a.in_dim}, {"out_dim", a.out_dim}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace

void PipelineConfig::validate() const {
    selector.validate();
    arch.validate();
    base_train.validate();
    train.validate();
    if (base_train.mode != nf::TrainMode::Scratch) throw ConfigError("the base snapshot trains from scratch");
    if (train.mode == nf::TrainMode::Lora) nf::validate_rank(arch, train.lora_rank);
}

void ChainReplayer::apply(const UpdateRecord& rec) {
    if (rec.kind != UpdateKind::BaseFull && !current_)
        throw ChainGapError("chain does not start with a base record", rec.timestep);
    current_ = apply_update(current_ ? &*current_ : nullptr, rec);
}

const nf::NeuralFieldParams<float>& ChainReplayer::weights() const {
    if (!current_) throw ChainGapError("no base record applied", 0);
    return *current_;
}

PipelineReport run(SnapshotSource& trajectory, const PipelineConfig& cfg) {
    cfg.validate();
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

    PipelineReport report;
    report.mode = cfg.train.mode;
    report.rank = cfg.train.mode == nf::TrainMode::Lora ? cfg.train.lora_rank : 0;

    CheckedTrajectory checked(trajectory);
    std::optional<CoordinateLattice> lattice;
    std::optional<nf::NeuralFieldParams<float>> current;
    std::optional<Snapshot> first;
    json chain = json::array();
    json failed = json::array();
    std::uint64_t raw_bytes = 0;

    auto on_select = [&](std::size_t index, const Snapshot* snap) {
        if (!snap) throw Error("selector did not supply the snapshot");
        if (!lattice) {
            lattice = make_lattice(snap->shape());
            raw_bytes = raw_snapshot_bytes(*snap);
            first = *snap;
        }
        ++report.snapshots_trained;
        SnapshotRow row;
        row.index = index;
        row.timestep = snap->timestep();
        row.time = snap->time();
        const auto t0 = std::chrono::steady_clock::now();

        const bool base = index == 0 || cfg.train.mode == nf::TrainMode::Scratch;
        nf::TrainConfig tc = base ? cfg.base_train : cfg.train;
        if (base) tc.mode = nf::TrainMode::Scratch;
        tc.seed = cfg.base_train.seed + index;
        try {
            auto result = nf::train(current ? &*current : nullptr, *snap, *lattice, cfg.arch, tc);
            UpdateRecord rec;
            if (base) {
                rec = make_base(result.params, index);
                current = std::move(result.params);
            } else if (tc.mode == nf::TrainMode::FullFT) {
                rec = make_delta(*current, result.params, index);
                current = apply_delta(*current, rec.weights);
            } else {
                rec = make_lora(cfg.arch, *result.adapter, index);
                current = nf::merge_adapter(*current, *result.adapter);
            }
            CompressedUpdate u = serialize_update(rec);
            row.kind = rec.kind;
            row.stored_bytes = u.stored_bytes();
            row.param_count = u.param_count;
            row.epochs = result.epochs_run;
            row.epochs_to_target = result.epochs_to_target;
            row.final_mse = result.history.empty() ? 0.0 : result.history.back();
            if (cfg.evaluate) {
                const Snapshot recon = nf::reconstruct(*current, *lattice, snap->shape(), snap->domain());
                row.rel_l2 = rel_l2(recon.values(), snap->values());
                row.mae = mean_abs_error(recon.values(), snap->values());
            }
            if (!cfg.out_dir.empty()) {
                const std::string file = update_filename(index);
                save_update(cfg.out_dir / file, u);
                chain.push_back({{"index", index}, {"timestep", row.timestep}, {"time", row.time},
                                 {"kind", to_string(rec.kind)}, {"file", file},
                                 {"stored_bytes", row.stored_bytes}});
            }
            report.updates.push_back(std::move(u));
        } catch (const TrainingDivergedError& e) {
            if (index == 0) throw;
            row.failed = true;
            row.error = e.what();
            row.epochs = e.history().size();
            ++report.failures;
            failed.push_back({{"index", index}, {"error", row.error}});
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back(std::move(row));
    };

    report.selection = select(checked, cfg.selector, on_select);
    report.snapshots_pulled = checked.pulled();

    std::size_t ok = 0;
    for (const auto& r : report.rows)
        if (!r.failed) {
            report.mean_rel_l2 += r.rel_l2;
            report.mean_mae += r.mae;
            ++ok;
        }
    if (ok) {
        report.mean_rel_l2 /= static_cast<double>(ok);
        report.mean_mae /= static_cast<double>(ok);
    }
    report.compression = compression_report(raw_bytes, report.updates, report.selection.length,
                                            report.selection.indices.size());

    if (!cfg.out_dir.empty()) {
        const Domain d = first->domain();
        json manifest = {
            {"format", "antic-chain"},
            {"version", 1},
            {"grid", {{"rows", first->rows()}, {"cols", first->cols()}}},
            {"domain", {d.x_min, d.x_max, d.y_min, d.y_max}},
            {"total_snapshots", report.selection.length},
            {"architecture", arch_json(cfg.arch)},
            {"mode", to_string(report.mode)},
            {"rank", report.rank},
            {"kernels", kernels::isa_name(kernels::active().isa)},
            {"chain", chain},
            {"failed", failed},
        };
        write_text(cfg.out_dir / kManifestName, manifest.dump(2) + "\n");
        write_text(cfg.out_dir / "report.json", report.to_json(cfg.record_timing));
        write_text(cfg.out_dir / "report.csv", report.to_csv(cfg.record_timing));
    }
    return report;
}

std::string PipelineReport::to_json(bool with_timing) const {
    json rows_j = json::array();
    for (const auto& r : rows) {
        json j = {{"index", r.index},       {"timestep", r.timestep},     {"kind", to_string(r.kind)},
                  {"stored_bytes", r.stored_bytes}, {"param_count", r.param_count},
                  {"rel_l2", r.rel_l2},     {"mae", r.mae},               {"final_mse", r.final_mse},
                  {"epochs", r.epochs},     {"failed", r.failed}};
        if (r.epochs_to_target) j["epochs_to_target"] = *r.epochs_to_target;
        if (r.failed) j["error"] = r.error;
        if (with_timing) j["seconds"] = r.seconds;
        rows_j.push_back(std::move(j));
    }
    const auto& c = compression;
    json j = {
        {"mode", nf::to_string(mode)},
        {"rank", rank},
        {"selection",
         {{"indices", selection.indices}, {"strides", selection.strides},
          {"retention", selection.retention}, {"length", selection.length}}},
        {"compression",
         {{"raw_bytes_per_snapshot", c.raw_bytes_per_snapshot}, {"total_snapshots", c.total_snapshots},
          {"retained", c.retained}, {"stored_total", c.stored_total}, {"delta_total", c.delta_total},
          {"stored_per_snapshot", c.stored_per_snapshot}, {"SC", c.sc}, {"TR", c.tr}, {"TC", c.tc},
          {"TC_amortized", c.tc_amortized}}},
        {"mean_rel_l2", mean_rel_l2},
        {"mean_mae", mean_mae},
        {"failures", failures},
        {"snapshots_pulled", snapshots_pulled},
        {"snapshots_trained", snapshots_trained},
        {"snapshots", rows_j},
    };
    return j.dump(2) + "\n";
}

std::string PipelineReport::to_csv(bool with_timing) const {
    std::ostringstream out;
    out << std::setprecision(9);
    out << "index,timestep,kind,stored_bytes,param_count,rel_l2,mae,final_mse,epochs,failed";
    if (with_timing) out << ",seconds";
    out << "\n";
    for (const auto& r : rows) {
        out << r.index << ',' << r.timestep << ',' << to_string(r.kind) << ',' << r.stored_bytes << ','
            << r.param_count << ',' << r.rel_l2 << ',' << r.mae << ',' << r.final_mse << ',' << r.epochs
            << ',' << (r.failed ? 1 : 0);
        if (with_timing) out << ',' << r.seconds;
        out << "\n";
    }
    return out.str();
}

std::vector<Snapshot> reconstruct_trajectory(const std::filesystem::path& dir,
                                             std::span<const std::size_t> indices) {
    std::ifstream in(dir / kManifestName);
    if (!in) throw FormatError("no manifest in " + dir.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad manifest: ") + e.what());
    }
    const GridShape shape{manifest.at("grid").at("rows").get<std::size_t>(),
                          manifest.at("grid").at("cols").get<std::size_t>()};
    const auto dom = manifest.at("domain").get<std::vector<double>>();
    const Domain domain{dom.at(0), dom.at(1), dom.at(2), dom.at(3)};
    const auto& chain = manifest.at("chain");

    std::vector<std::size_t> wanted(indices.begin(), indices.end());
    if (wanted.empty())
        for (const auto& e : chain) wanted.push_back(e.at("index").get<std::size_t>());
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    const CoordinateLattice lattice = make_lattice(shape);
    std::vector<std::pair<std::size_t, Snapshot>> got;
    ChainReplayer replay;
    std::size_t w = 0;
    for (const auto& e : chain) {
        if (w == wanted.size()) break;
        const auto index = e.at("index").get<std::size_t>();
        const auto path = dir / e.at("file").get<std::string>();
        if (!std::filesystem::exists(path))
            throw ChainGapError("chain record for index " + std::to_string(index) + " is missing (" +
                                    path.filename().string() + ")",
                                index);
        const UpdateRecord rec = load_update(path);
        if (rec.timestep != index)
            throw FormatError("record " + path.filename().string() + " holds index " +
                              std::to_string(rec.timestep));
        replay.apply(rec);
        while (w < wanted.size() && wanted[w] < index)
            throw IndexError("index " + std::to_string(wanted[w]) + " is not in the chain");
        if (wanted[w] == index) {
            got.emplace_back(index, nf::reconstruct(replay.weights(), lattice, shape, domain,
                                                    e.at("timestep").get<std::uint64_t>(),
                                                    e.at("time").get<double>()));
            ++w;
        }
    }
    if (w < wanted.size()) throw IndexError("index " + std::to_string(wanted[w]) + " is not in the chain");

    // Return in the caller's order.
    std::vector<Snapshot> out;
    if (indices.empty()) {
        for (auto& [i, s] : got) out.push_back(std::move(s));
        return out;
    }
    for (std::size_t i : indices) {
        auto it = std::find_if(got.begin(), got.end(), [&](const auto& p) { return p.first == i; });
        out.push_back(it->second);
    }
    return out;
}

}  // namespace antic

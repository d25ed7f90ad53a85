#include <antic/cli.hpp>
#include <antic/datagen.hpp>
#include <antic/pipeline.hpp>
#include <antic/snapshot_io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace antic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit_error(std::ostream& err, std::string_view type, std::string_view message) {
    err << json{{"error", type}, {"message", message}}.dump() << "\n";
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
}

ActivitySeries read_activity_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    ActivitySeries s{{}, path.stem().string()};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            s.values.push_back(v);
        } catch (const std::exception&) {
            if (s.values.empty()) continue;  // header
            throw FormatError("bad activity value '" + cell + "'");
        }
    }
    if (s.values.empty()) throw FormatError("empty activity series in " + path.string());
    return s;
}

std::string series_csv(const ActivitySeries& s, std::string_view column, std::size_t first = 0) {
    std::ostringstream out;
    out << std::setprecision(17) << "t," << column << "\n";
    for (std::size_t t = first; t < s.size(); ++t) out << t << ',' << s[t] << "\n";
    return out.str();
}

std::string selection_json(const SelectionResult& r) {
    return json{{"indices", r.indices},
                {"strides", r.strides},
                {"retention", r.retention},
                {"length", r.length},
                {"degenerate_correlations", r.degenerate_correlations}}
               .dump(2) +
           "\n";
}

std::string selection_csv(const SelectionResult& r) {
    std::ostringstream out;
    out << "index,stride\n";
    for (std::size_t i = 0; i < r.indices.size(); ++i)
        out << r.indices[i] << ',' << (i == 0 ? 0 : r.strides[i - 1]) << "\n";
    return out.str();
}

struct SelectorFlags {
    std::string mode = "flows";
    std::string metric;
    SelectorConfig cfg;
    std::optional<double> threshold;

    void add(CLI::App& app) {
        app.add_option("--mode", mode, "flows | surge | binary | baseline")->capture_default_str();
        app.add_option("--window", cfg.window, "Window / queue size W")->capture_default_str();
        app.add_option("--corr-threshold", cfg.corr_threshold, "Structural correlation gate")
            ->capture_default_str();
        app.add_option("--eps", cfg.eps, "Stability epsilon")->capture_default_str();
        app.add_option("--gamma", cfg.surge_factor, "Surge threshold factor")->capture_default_str();
        app.add_option("--patience", cfg.patience, "Surge patience")->capture_default_str();
        app.add_option("--history", cfg.history_maxlen, "Surge history length")->capture_default_str();
        app.add_option("--warmup", cfg.warmup, "Surge warmup steps")->capture_default_str();
        app.add_option("--metric", metric,
                       "Baseline saliency (jsd, residual, spectral, mi, momentum, enstrophy, surge)");
        app.add_option("--threshold", threshold, "Binary regulator or baseline threshold");
    }

    SelectorConfig resolve() {
        SelectorConfig c = cfg;
        c.mode = parse_selector_mode(mode);
        if (!metric.empty()) c.baseline_kind = parse_saliency_kind(metric);
        c.baseline_threshold = threshold ? *threshold : default_baseline_threshold(c.baseline_kind);
        if (threshold) c.binary_threshold = *threshold;
        c.validate();
        return c;
    }
};

std::vector<std::size_t> parse_indices(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("bad index '" + item + "'");
        }
    }
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming compression of time-evolving grid fields", "antic"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Progress on stderr");

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic trajectory");
    FlowGenConfig flow;
    ChirpConfig chirp;
    std::string gen_kind = "flow";
    fs::path gen_out;
    gen->add_option("--kind", gen_kind, "flow | chirp")->check(CLI::IsMember({"flow", "chirp"}))->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--resolution,-N", flow.resolution, "Grid size N")->capture_default_str();
    gen->add_option("--steps,-T", flow.n_steps, "Number of snapshots (flow) or samples (chirp)")->capture_default_str();
    gen->add_option("--viscosity", flow.viscosity)->capture_default_str();
    gen->add_option("--modes", flow.n_modes)->capture_default_str();
    gen->add_option("--peak-k", flow.peak_wavenumber)->capture_default_str();
    gen->add_option("--dt", flow.dt)->capture_default_str();
    gen->add_option("--drift", flow.drift)->capture_default_str();
    gen->add_option("--seed", flow.seed)->capture_default_str();
    gen->add_option("--t-merger", chirp.t_merger)->capture_default_str();
    gen->add_option("--baseline", chirp.baseline)->capture_default_str();
    gen->add_option("--peak", chirp.peak_amplitude)->capture_default_str();
    gen->add_option("--width", chirp.envelope_width)->capture_default_str();
    gen->add_option("--noise", chirp.noise_std)->capture_default_str();

    // metrics
    auto* met = app.add_subcommand("metrics", "Per-timestep metric series as CSV");
    fs::path met_in, met_out;
    std::vector<std::string> met_kinds{"enstrophy"};
    met->add_option("--input", met_in, "Trajectory file or directory")->required();
    met->add_option("--metric", met_kinds, "Metric kinds")->capture_default_str();
    met->add_option("--out", met_out, "Output directory")->required();

    // select
    auto* sel = app.add_subcommand("select", "Run a temporal selector");
    fs::path sel_in, sel_activity, sel_out;
    SelectorFlags sel_flags;
    auto* sel_in_opt = sel->add_option("--input", sel_in, "Trajectory file or directory");
    sel->add_option("--activity", sel_activity, "Activity CSV (surge and binary modes)")->excludes(sel_in_opt);
    sel->add_option("--out", sel_out, "Output directory")->required();
    sel_flags.add(*sel);

    // compress
    auto* cmp = app.add_subcommand("compress", "Select and compress a trajectory");
    fs::path cmp_in, cmp_out;
    SelectorFlags cmp_sel;
    PipelineConfig pcfg;
    std::string train_mode = "fullft";
    std::size_t base_epochs = pcfg.base_train.epochs;
    std::optional<std::size_t> epochs;
    std::optional<double> lr_i, lr_f, target_mse;
    std::uint64_t seed = 0;
    cmp->set_config("--config", "", "TOML / INI file of flag values (flags win)");
    cmp->add_option("--input", cmp_in, "Trajectory file or directory")->required();
    cmp->add_option("--out", cmp_out, "Output directory")->required();
    cmp->add_option("--train-mode", train_mode, "scratch | fullft | lora")->capture_default_str();
    cmp->add_option("--rank", pcfg.train.lora_rank, "LoRA rank")->capture_default_str();
    cmp->add_option("--epochs", epochs, "Epochs per fine-tuned snapshot");
    cmp->add_option("--base-epochs", base_epochs, "Epochs for the base snapshot")->capture_default_str();
    cmp->add_option("--lr-initial", lr_i);
    cmp->add_option("--lr-final", lr_f);
    cmp->add_option("--weight-decay", pcfg.train.weight_decay)->capture_default_str();
    cmp->add_option("--batch-size", pcfg.train.batch_size)->capture_default_str();
    cmp->add_option("--target-mse", target_mse, "Stop a fit once its epoch loss reaches this");
    cmp->add_option("--hidden", pcfg.arch.hidden_dim)->capture_default_str();
    cmp->add_option("--layers", pcfg.arch.n_layers)->capture_default_str();
    cmp->add_option("--ffm-dim", pcfg.arch.ffm_dim)->capture_default_str();
    cmp->add_option("--ffm-frequency", pcfg.arch.ffm_frequency)->capture_default_str();
    cmp->add_option("--seed", seed)->capture_default_str();
    cmp->add_flag("--timing", pcfg.record_timing, "Include wall-clock columns in the reports");
    cmp_sel.add(*cmp);

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "Decode snapshots from an update chain");
    fs::path rec_chain, rec_out;
    std::string rec_indices;
    rec->add_option("--chain", rec_chain, "Directory written by compress")->required();
    rec->add_option("--indices", rec_indices, "Comma-separated stream indices (default: all)");
    rec->add_option("--out", rec_out, "Output directory")->required();

    // report
    auto* rep = app.add_subcommand("report", "Merge run reports into a Pareto table");
    std::vector<fs::path> rep_in;
    fs::path rep_out;
    rep->add_option("--inputs", rep_in, "Run directories or report.json files")->required();
    rep->add_option("--out", rep_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        emit_error(err, "usage", e.what());
        return kExitUsage;
    }

    auto log = [&](const std::string& msg) {
        if (verbose) err << json{{"info", msg}}.dump() << "\n";
    };

    try {
        if (*gen) {
            chirp.length = flow.n_steps;
            chirp.seed = flow.seed;
            if (gen_kind == "chirp") {
                chirp.validate();
                fs::create_directories(gen_out);
                write_file(gen_out / "activity.csv", series_csv(gen_chirp_activity(chirp), "activity"));
                return kExitOk;
            }
            auto source = gen_decaying_flow(flow);
            fs::create_directories(gen_out);
            while (auto s = source.next()) save_snapshot(gen_out / snapshot_filename(s->timestep()), *s);
            write_file(gen_out / "enstrophy.csv", series_csv(analytic_enstrophy(flow), "enstrophy"));
            log("wrote " + std::to_string(flow.n_steps) + " snapshots");
            return kExitOk;
        }
        if (*met) {
            std::vector<SaliencyKind> kinds;
            for (const auto& k : met_kinds) kinds.push_back(parse_saliency_kind(k));
            std::vector<ActivitySeries> series(kinds.size());
            std::vector<MomentumState> momentum(kinds.size());
            FileSource src(met_in);
            CheckedTrajectory traj(src);
            std::optional<Snapshot> prev;
            while (auto s = traj.next()) {
                for (std::size_t i = 0; i < kinds.size(); ++i) {
                    if (is_physics_metric(kinds[i]))
                        series[i].values.push_back(physics_metric(kinds[i], *s));
                    else if (kinds[i] == SaliencyKind::SpectralEntropy)
                        series[i].values.push_back(spectral_entropy(*s));
                    else
                        series[i].values.push_back(prev ? baseline_saliency(kinds[i], *prev, *s, &momentum[i]) : 0.0);
                }
                prev = std::move(s);
            }
            fs::create_directories(met_out);
            for (std::size_t i = 0; i < kinds.size(); ++i) {
                const bool pairwise = !is_physics_metric(kinds[i]) && kinds[i] != SaliencyKind::SpectralEntropy;
                write_file(met_out / ("metrics_" + std::string(to_string(kinds[i])) + ".csv"),
                           series_csv(series[i], "metric_value", pairwise ? 1 : 0));
            }
            return kExitOk;
        }
        if (*sel) {
            const SelectorConfig cfg = sel_flags.resolve();
            SelectionResult r;
            if (!sel_activity.empty()) {
                const ActivitySeries a = read_activity_csv(sel_activity);
                if (cfg.mode == SelectorMode::SurgeDetector)
                    r = select_surge(a, cfg);
                else if (cfg.mode == SelectorMode::BinaryRegulator)
                    r = select_binary(a, cfg);
                else
                    throw ConfigError("--activity supports only surge and binary modes");
            } else {
                if (sel_in.empty()) throw ConfigError("select needs --input or --activity");
                FileSource src(sel_in);
                r = select(src, cfg);
                if (r.degenerate_correlations) log(std::to_string(r.degenerate_correlations) + " constant-field correlations");
            }
            fs::create_directories(sel_out);
            write_file(sel_out / "selection.json", selection_json(r));
            write_file(sel_out / "selection.csv", selection_csv(r));
            out << selection_json(r);
            return kExitOk;
        }
        if (*cmp) {
            pcfg.selector = cmp_sel.resolve();
            const auto mode = nf::parse_train_mode(train_mode);
            const std::size_t rank = pcfg.train.lora_rank;
            const double wd = pcfg.train.weight_decay;
            const std::size_t bs = pcfg.train.batch_size;
            pcfg.train = nf::TrainConfig::defaults(mode);
            pcfg.train.lora_rank = rank;
            pcfg.train.weight_decay = wd;
            pcfg.train.batch_size = bs;
            if (epochs) pcfg.train.epochs = *epochs;
            if (lr_i) pcfg.train.lr_initial = *lr_i;
            if (lr_f) pcfg.train.lr_final = *lr_f;
            pcfg.train.target_mse = target_mse;
            pcfg.base_train.epochs = base_epochs;
            pcfg.base_train.weight_decay = wd;
            pcfg.base_train.batch_size = bs;
            pcfg.base_train.seed = seed;
            pcfg.base_train.target_mse = target_mse;
            pcfg.train.seed = seed;
            pcfg.out_dir = cmp_out;
            pcfg.validate();
            FileSource src(cmp_in);
            const PipelineReport report = run(src, pcfg);
            log("retained " + std::to_string(report.selection.indices.size()) + " of " +
                std::to_string(report.selection.length));
            out << json{{"retention", report.selection.retention},
                        {"mean_rel_l2", report.mean_rel_l2},
                        {"SC", report.compression.sc},
                        {"TC", report.compression.tc},
                        {"TC_amortized", report.compression.tc_amortized},
                        {"failures", report.failures}}
                       .dump()
                << "\n";
            return kExitOk;
        }
        if (*rec) {
            const auto idx = parse_indices(rec_indices);
            const auto snaps = reconstruct_trajectory(rec_chain, idx);
            fs::create_directories(rec_out);
            std::vector<std::size_t> order = idx;
            if (order.empty()) {
                std::ifstream m(rec_chain / "manifest.json");
                const json manifest = json::parse(m);
                for (const auto& e : manifest.at("chain")) order.push_back(e.at("index").get<std::size_t>());
            }
            for (std::size_t i = 0; i < snaps.size(); ++i) save_snapshot(rec_out / snapshot_filename(order[i]), snaps[i]);
            log("reconstructed " + std::to_string(snaps.size()) + " snapshots");
            return kExitOk;
        }
        if (*rep) {
            json merged = json::array();
            std::ostringstream csv;
            csv << std::setprecision(9)
                << "run,mode,rank,stored_kib_per_snapshot,mean_rel_l2,TR,SC,TC,TC_amortized\n";
            for (const auto& p : rep_in) {
                const fs::path file = fs::is_directory(p) ? p / "report.json" : p;
                std::ifstream in(file);
                if (!in) throw FormatError("cannot open " + file.string());
                json j = json::parse(in);
                const auto& c = j.at("compression");
                csv << p.string() << ',' << j.at("mode").get<std::string>() << ',' << j.at("rank").get<std::size_t>()
                    << ',' << c.at("stored_per_snapshot").get<double>() / 1024.0 << ','
                    << j.at("mean_rel_l2").get<double>() << ',' << c.at("TR").get<double>() << ','
                    << c.at("SC").get<double>() << ',' << c.at("TC").get<double>() << ','
                    << c.at("TC_amortized").get<double>() << "\n";
                j["run"] = p.string();
                merged.push_back(std::move(j));
            }
            fs::create_directories(rep_out);
            write_file(rep_out / "pareto.csv", csv.str());
            write_file(rep_out / "report.json", merged.dump(2) + "\n");
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        emit_error(err, "config", e.what());
        return kExitUsage;
    } catch (const json::exception& e) {
        emit_error(err, "format", e.what());
        return kExitRuntime;
    } catch (const ChainGapError& e) {
        emit_error(err, "chain_gap", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        emit_error(err, "runtime", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace antic

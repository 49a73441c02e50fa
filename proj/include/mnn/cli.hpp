#pragma once

// `mnn` command-line entry point: train-mlp, evolve, sweep, predict, report,
// and synth (synthetic blob data for desk-scale runs).
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error.
// Failures print one line to the log stream:
//   error code=<n> kind=<config|data|numeric|internal> message=<text>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mnn/bias_report.hpp"
#include "mnn/dataset.hpp"
#include "mnn/error.hpp"
#include "mnn/evolution.hpp"
#include "mnn/format.hpp"
#include "mnn/mesh.hpp"
#include "mnn/mlp.hpp"
#include "mnn/run_config.hpp"
#include "mnn/seeding.hpp"
#include "mnn/stats.hpp"
#include "mnn/synthetic.hpp"

namespace mnn::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumeric = 4 };

namespace detail {

namespace fs = std::filesystem;

class Session {
public:
    Session(RunConfig cfg, std::ostream& log) : cfg_(std::move(cfg)), log_(log), start_(clock::now()) {}

    const RunConfig& cfg() const { return cfg_; }

    std::string out(const std::string& name) const { return (fs::path(cfg_.out_dir) / name).string(); }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream f(out(name), std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write '" + out(name) + "'");
        f << content;
    }

    /// Progress line with elapsed wall time; never part of an artifact.
    void note(const std::string& msg) const {
        const std::chrono::duration<double> t = clock::now() - start_;
        log_ << "[" << format_fixed(t.count(), 1) << "s] " << msg << '\n';
    }

    Dataset load(const std::string& path, std::uint32_t dimension) const {
        if (path.empty()) throw ConfigError("field 'data.path': a dataset path is required");
        LoadOptions opt;
        opt.text_dimension = dimension;
        opt.stopwords = cfg_.stopwords;
        Dataset ds = load_dataset(path, opt);
        if (ds.empty()) throw DataError("dataset '" + path + "' has no samples");
        if (ds.dimension() != dimension)
            throw ConfigError("field 'dims.input': dataset '" + path + "' has dimension " +
                              std::to_string(ds.dimension()) + ", expected " + std::to_string(dimension));
        note("loaded " + std::to_string(ds.size()) + " samples from " + path);
        return ds;
    }

    SplitSets load_split() const {
        const Dataset ds = load(cfg_.data_path, cfg_.dims.input);
        SplitSets s = split(ds, cfg_.split, cfg_.seed);
        if (s.train.empty() || s.val.empty())
            throw DataError("dataset too small for the configured split");
        return s;
    }

private:
    using clock = std::chrono::steady_clock;
    RunConfig cfg_;
    std::ostream& log_;
    clock::time_point start_;
};

inline std::string metrics_csv(const std::vector<std::pair<std::string, double>>& rows) {
    std::string s = "split,accuracy\n";
    for (const auto& [name, acc] : rows) s += name + "," + format_real(acc) + "\n";
    return s;
}

inline Mlp train_baseline(const Session& s, const Dataset& train, std::vector<EpochStats>* log) {
    s.note("training MLP " + [&] {
        std::string t;
        for (auto n : s.cfg().mlp_layers()) t += (t.empty() ? "" : "-") + std::to_string(n);
        return t;
    }());
    return train_mlp(train, s.cfg().train, s.cfg().mlp_layers(), log);
}

inline int cmd_train_mlp(const Session& s) {
    const SplitSets data = s.load_split();
    std::vector<EpochStats> log;
    const Mlp mlp = train_baseline(s, data.train, &log);
    save_mlp(mlp, s.out("mlp.bin"));
    std::string loss = "epoch,loss,train_accuracy\n";
    for (const auto& e : log)
        loss += std::to_string(e.epoch) + "," + format_real(e.loss) + "," + format_real(e.accuracy) + "\n";
    s.write("loss.csv", loss);
    std::vector<std::pair<std::string, double>> rows{{"train", mlp_accuracy(mlp, data.train.inputs(), data.train.labels())},
                                                     {"val", mlp_accuracy(mlp, data.val.inputs(), data.val.labels())}};
    if (!data.test.empty()) rows.emplace_back("test", mlp_accuracy(mlp, data.test.inputs(), data.test.labels()));
    s.write("metrics.csv", metrics_csv(rows));
    s.note("MLP val accuracy " + format_real(rows[1].second));
    return kOk;
}

/// Seeds and fresh source for the configured kind, training or loading the
/// MLP when the kind embeds one.
inline RunPlan make_plan(const Session& s, const SplitSets& data) {
    const RunConfig& c = s.cfg();
    if (c.kind == NetworkKind::Dnn)
        throw ConfigError("field 'run.kind': dnn is the backprop baseline; use train-mlp");
    std::optional<Mlp> mlp;
    if (needs_mlp(c.kind)) {
        if (!c.mlp_path.empty()) {
            mlp = load_mlp(c.mlp_path);
            s.note("loaded MLP from " + c.mlp_path);
        } else {
            std::uint64_t hidden = 0;
            for (auto h : c.mlp_hidden) hidden += h;
            if (hidden != c.dims.mesh)
                throw ConfigError("field 'mlp.hidden': hidden sizes must sum to dims.mesh to embed the MLP");
            if (c.mlp_hidden.size() > c.dims.settle_steps)
                throw ConfigError("field 'dims.settle_steps': must be at least the MLP hidden-layer count");
            mlp = train_baseline(s, data.train, nullptr);
            save_mlp(*mlp, s.out("mlp.bin"));
        }
        if (mlp->input_size() != c.dims.input || mlp->output_size() != c.dims.classes)
            throw ConfigError("field 'mlp.path': MLP shape does not match dims");
    }
    return plan_run(c.kind, c.dims, c.celegans, mlp ? &*mlp : nullptr);
}

inline int cmd_evolve(const Session& s) {
    const SplitSets data = s.load_split();
    const RunPlan plan = make_plan(s, data);
    s.note("evolving " + to_string(s.cfg().kind) + " for " + std::to_string(s.cfg().evolution.generations) +
           " generations");
    const EvolutionResult r = evolve(plan.seeds, s.cfg().evolution, data.val, plan.fresh);
    save_mesh(r.best.network, s.out("best.mnn"));
    std::ostringstream trace;
    write_trace_csv(trace, r.trace);
    s.write("trace.csv", trace.str());
    std::vector<std::pair<std::string, double>> rows{{"val", *r.best.fitness}};
    if (!data.test.empty()) rows.emplace_back("test", AccuracyFitness(data.test)(r.best.network));
    s.write("metrics.csv", metrics_csv(rows));
    s.note("best val accuracy " + format_real(*r.best.fitness));
    return kOk;
}

inline int cmd_sweep(const Session& s) {
    const SplitSets data = s.load_split();
    const RunPlan plan = make_plan(s, data);
    const auto& grid = s.cfg().grid;
    if (grid.size() == 0) throw ConfigError("field 'sweep.mutation_count': sweep grid is empty");
    s.note("sweeping " + std::to_string(grid.size()) + " configurations");
    std::ofstream csv(s.out("sweep.csv"), std::ios::binary | std::ios::trunc);
    if (!csv) throw DataError("cannot write '" + s.out("sweep.csv") + "'");
    write_sweep_header(csv);
    std::size_t done = 0;
    sweep(grid, s.cfg().evolution, plan.seeds, data.val, plan.fresh, [&](const SweepRecord& r) {
        write_sweep_row(csv, r, s.cfg().sweep_record_time);
        csv.flush();
        if (++done % 50 == 0 || done == grid.size())
            s.note(std::to_string(done) + "/" + std::to_string(grid.size()) + " configurations");
    });
    return kOk;
}

inline int cmd_predict(const Session& s) {
    const RunConfig& c = s.cfg();
    if (c.predict_net.empty()) throw ConfigError("field 'predict.net': a network path is required");
    const MeshNetwork net = load_mesh(c.predict_net);
    if (net.dims().classes != 3) throw DataError("network must have 3 output classes");
    const std::string data_path = c.predict_data.empty() ? c.data_path : c.predict_data;
    if (data_path.empty()) throw ConfigError("field 'predict.data': a dataset path is required");
    const Dataset ds = s.load(data_path, net.dims().input);

    const Matrix scores = forward_batch(net, ds.inputs());
    std::string lines;
    std::vector<Label> predicted;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Vector col = scores.col(static_cast<Eigen::Index>(i));
        const Label p = label_from_scores(col);
        predicted.push_back(p);
        const Sample& smp = ds[i];
        nlohmann::ordered_json j;
        j["id"] = smp.id;
        j["label"] = smp.label;
        j["predicted"] = p;
        j["scores"] = std::vector<double>(col.data(), col.data() + col.size());
        if (smp.source) j["source"] = *smp.source;
        if (smp.date) j["date"] = *smp.date;
        if (smp.rank) j["rank"] = *smp.rank;
        lines += j.dump() + "\n";
    }
    s.write("predictions.jsonl", lines);
    const auto labels = ds.labels();
    s.write("metrics.csv", metrics_csv({{"all", stats::accuracy(predicted, labels)}}));
    s.note("accuracy " + format_real(stats::accuracy(predicted, labels)));
    return kOk;
}

inline bool looks_like_pages(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            return j.is_object() && j.contains("entries");
        } catch (const nlohmann::json::parse_error&) {
            return false;
        }
    }
    return false;
}

inline int cmd_report(const Session& s) {
    const RunConfig& c = s.cfg();
    if (c.report_input.empty()) throw ConfigError("field 'report.input': an input path is required");
    std::ifstream in(c.report_input);
    if (!in) throw DataError("cannot open '" + c.report_input + "'");
    const bool pages_format =
        c.report_format == "pages" || (c.report_format == "auto" && looks_like_pages(c.report_input));
    const std::vector<DayPage> pages = pages_format ? parse_day_pages(in) : pages_from_predictions(in);
    if (pages.empty()) throw DataError("no day pages in '" + c.report_input + "'");
    const auto reports = build_report(pages, c.report_decay);
    std::ostringstream csv;
    write_report_csv(csv, reports);
    s.write("report.csv", csv.str());
    for (const auto& r : reports)
        if (r.significant) s.note("significant bias: " + r.source + " " + format_real(r.normalized_bias));
    return kOk;
}

inline int cmd_synth(const Session& s) {
    BlobSpec spec;
    spec.samples = s.cfg().synth_samples;
    spec.dimension = s.cfg().dims.input;
    spec.center_scale = s.cfg().synth_center_scale;
    spec.noise = s.cfg().synth_noise;
    spec.rng_seed = s.cfg().seed;
    const Dataset ds = make_blobs(spec);
    std::string lines;
    for (const auto& smp : ds.samples()) {
        nlohmann::ordered_json j;
        j["id"] = smp.id;
        j["label"] = smp.label;
        j["embedding"] = std::vector<double>(smp.embedding.data(), smp.embedding.data() + smp.embedding.size());
        lines += j.dump() + "\n";
    }
    s.write("blobs.jsonl", lines);
    return kOk;
}

inline std::string one_line(std::string s) {
    for (auto& ch : s)
        if (ch == '\n' || ch == '\r') ch = ' ';
    return s;
}

} // namespace detail

/// Parses arguments, runs one subcommand, and returns its exit code.
inline int run(int argc, const char* const* argv, std::ostream& log = std::cerr) {
    CLI::App app{"Mesh Neural Network neuroevolution toolkit", "mnn"};
    app.require_subcommand(1);
    struct Common {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> out;
        std::optional<unsigned> threads;
        std::vector<std::string> sets;
    } common;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"train-mlp", "train the backprop MLP baseline"},
        {"evolve", "evolve a mesh network with the genetic algorithm"},
        {"sweep", "run the hyperparameter grid"},
        {"predict", "classify a dataset with a saved mesh network"},
        {"report", "aggregate per-source bias from predictions or day pages"},
        {"synth", "write a synthetic three-class blob dataset"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", common.config, "run-config file");
        sub->add_option("--seed", common.seed, "run seed (run.seed)");
        sub->add_option("--out", common.out, "output directory (run.out)");
        sub->add_option("--threads", common.threads, "fitness evaluation threads (run.threads)");
        sub->add_option("--set", common.sets, "override a config field: key=value")->take_all();
    }

    auto fail = [&](int code, const char* kind, const std::string& msg) {
        log << "error code=" << code << " kind=" << kind << " message=" << detail::one_line(msg) << std::endl;
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, log, log);
    } catch (const CLI::ParseError& e) {
        return fail(kConfig, "config", e.what());
    }

    try {
        ConfigValues values;
        if (!common.config.empty()) values.load_file(common.config);
        if (common.seed) values.set("run.seed", std::to_string(*common.seed), "--seed");
        if (common.out) values.set("run.out", *common.out, "--out");
        if (common.threads) values.set("run.threads", std::to_string(*common.threads), "--threads");
        for (const auto& kv : common.sets) values.apply_override(kv);
        RunConfig cfg = RunConfig::from(values);

        std::error_code ec;
        detail::fs::create_directories(cfg.out_dir, ec);
        if (ec) throw DataError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
        for (const auto& input : {cfg.data_path, cfg.predict_net, cfg.predict_data, cfg.report_input, cfg.mlp_path})
            if (!input.empty() && detail::fs::equivalent(input, cfg.out_dir, ec))
                throw ConfigError("an input path equals the output directory");

        detail::Session session(std::move(cfg), log);
        session.write("effective_config.cfg", values.to_text());
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "train-mlp") return detail::cmd_train_mlp(session);
        if (cmd == "evolve") return detail::cmd_evolve(session);
        if (cmd == "sweep") return detail::cmd_sweep(session);
        if (cmd == "predict") return detail::cmd_predict(session);
        if (cmd == "report") return detail::cmd_report(session);
        return detail::cmd_synth(session);
    } catch (const ConfigError& e) {
        return fail(kConfig, "config", e.what());
    } catch (const NumericError& e) {
        return fail(kNumeric, "numeric", e.what());
    } catch (const Error& e) {
        return fail(kData, "data", e.what());
    } catch (const std::exception& e) {
        return fail(kInternal, "internal", e.what());
    }
}

} // namespace mnn::cli

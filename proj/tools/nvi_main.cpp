// nvi: command-line surface over the scoring, signal, synthesis, training,
// evaluation, statistics and benchmark paths.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nvicore/alloc_hook.hpp"
#include "nvicore/biosense.hpp"
#include "nvicore/csv_io.hpp"
#include "nvicore/dataset_io.hpp"
#include "nvicore/errors.hpp"
#include "nvicore/hrv.hpp"
#include "nvicore/logistic.hpp"
#include "nvicore/model.hpp"
#include "nvicore/morphology.hpp"
#include "nvicore/nvi_score.hpp"
#include "nvicore/rng.hpp"
#include "nvicore/signal_ops.hpp"
#include "nvicore/stats.hpp"
#include "nvicore/synth.hpp"
#include "svg_plot.hpp"

using json = nlohmann::json;
using namespace nvi;

namespace {

#ifndef NVI_TOOL_VERSION
#define NVI_TOOL_VERSION "0.0.0"
#endif

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json results_document(const std::string& command, const json& config, const json& metrics,
                      std::uint64_t seed) {
    return json{{"schema_version", 1},
                {"command", command},
                {"config", config},
                {"metrics", metrics},
                {"provenance",
                 {{"tool_version", NVI_TOOL_VERSION},
                  {"timestamp", iso_timestamp()},
                  {"seed", seed}}}};
}

void emit_results(const json& doc, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw DataError("cannot open output file " + out_path);
    f << doc.dump(2) << "\n";
}

json feature_vector_to_json(const FeatureVector& fv) {
    json j = json::object();
    for (const auto& [name, value] : fv.items()) {
        if (std::isfinite(value)) j[name] = value;
        else j[name] = nullptr;
    }
    return j;
}

// ------------------------------------------------------------------ pipeline
struct PipelineOpts {
    std::string input, channel, out;
    double lo = 0.5, hi = 12.0;
    double min_distance_s = kPpgPeakMinDistance_s;
    double prominence_sd = kPpgPeakProminenceSdFraction;
};

int cmd_pipeline(const PipelineOpts& opt, std::uint64_t seed) {
    const TimeSeries raw = read_signal_csv(opt.input, opt.channel);
    const TimeSeries filtered = bandpass(raw, opt.lo, opt.hi);

    double mean = 0.0;
    for (double v : filtered.samples) mean += v;
    mean /= static_cast<double>(filtered.samples.size());
    double var = 0.0;
    for (double v : filtered.samples) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(filtered.samples.size()));

    const PeakList peaks = detect_peaks(filtered, opt.min_distance_s, opt.prominence_sd * sd);
    const IbiSeries ibi = peaks_to_ibi(peaks);

    json metrics;
    metrics["n_peaks"] = peaks.size();
    metrics["n_intervals"] = ibi.size();
    metrics["rejected_intervals"] = ibi.rejected_count;
    metrics["duration_s"] = raw.duration_s();

    if (ibi.size() >= 2) {
        const HrvMetrics hrv = metrics_from_ibi(ibi);
        metrics["rmssd_ms"] = hrv.rmssd_ms;
        metrics["sdnn_ms"] = hrv.sdnn_ms;
        metrics["valid"] = hrv.valid;
        if (!hrv.spectral_warning) {
            metrics["lf_power_ms2"] = hrv.lf_power_ms2;
            metrics["hf_power_ms2"] = hrv.hf_power_ms2;
            metrics["lf_hf"] = hrv.lf_hf;
        } else {
            metrics["spectral_warning"] = true;
        }
    } else {
        metrics["valid"] = false;
    }

    if (peaks.size() >= 2) {
        metrics["perfusion_index"] = perfusion_index(raw, peaks);
    }

    json features = json::object();
    if (peaks.size() >= 3) {
        features.update(feature_vector_to_json(morph_features(segment_beats(raw, peaks))));
    }
    if (raw.duration_s() >= 2.0) {
        features.update(feature_vector_to_json(freq_features(raw)));
    }
    if (raw.samples.size() >= 200) {
        features.update(feature_vector_to_json(nonlinear_features(raw)));
    }
    metrics["features"] = features;

    const json config{{"input", opt.input},       {"channel", opt.channel},
                      {"band_lo_hz", opt.lo},     {"band_hi_hz", opt.hi},
                      {"min_distance_s", opt.min_distance_s},
                      {"prominence_sd", opt.prominence_sd}};
    emit_results(results_document("pipeline", config, metrics, seed), opt.out);
    return 0;
}

// --------------------------------------------------------------------- score
struct ScoreOpts {
    std::string input, out, format = "json";
    bool no_degraded = false;
};

int cmd_score(const ScoreOpts& opt, std::uint64_t seed) {
    const auto rows = read_modality_csv(opt.input);

    json row_results = json::array();
    std::size_t n_normal = 0, n_alert1 = 0, n_alert2 = 0, n_errors = 0;
    std::vector<std::string> csv_lines;
    csv_lines.push_back(
        "line,score,tier,s_spo2,s_hrv,s_perf,s_phase,w_spo2,w_hrv,w_perf,w_phase,error");

    for (const auto& row : rows) {
        json jr{{"line", row.line}};
        std::string err = row.ok ? "" : row.error;
        if (err.empty() && opt.no_degraded) {
            const bool complete = row.inputs.spo2_pct && row.inputs.rmssd_ms && row.inputs.pi &&
                                  row.inputs.phase_left_deg && row.inputs.phase_right_deg;
            if (!complete) err = "degraded rows disallowed (--no-degraded)";
        }
        if (err.empty()) {
            try {
                const NviResult r = composite(row.inputs);
                jr["score"] = r.score;
                jr["tier"] = std::string(to_string(r.tier));
                json ms = json::array(), ws = json::array();
                for (std::size_t i = 0; i < 4; ++i) {
                    ms.push_back(r.modality_scores[i] ? json(*r.modality_scores[i])
                                                      : json(nullptr));
                    ws.push_back(r.effective_weights[i]);
                }
                jr["modality_scores"] = ms;
                jr["effective_weights"] = ws;
                switch (r.tier) {
                    case Tier::Normal: ++n_normal; break;
                    case Tier::Alert1: ++n_alert1; break;
                    case Tier::Alert2: ++n_alert2; break;
                }
                char line[256];
                auto cell = [](const std::optional<double>& v) {
                    return v ? std::to_string(*v) : std::string();
                };
                std::snprintf(line, sizeof(line), "%zu,%.6f,%s,%s,%s,%s,%s,%.6f,%.6f,%.6f,%.6f,",
                              row.line, r.score, std::string(to_string(r.tier)).c_str(),
                              cell(r.modality_scores[0]).c_str(),
                              cell(r.modality_scores[1]).c_str(),
                              cell(r.modality_scores[2]).c_str(),
                              cell(r.modality_scores[3]).c_str(), r.effective_weights[0],
                              r.effective_weights[1], r.effective_weights[2],
                              r.effective_weights[3]);
                csv_lines.push_back(line);
            } catch (const Error& e) {
                err = e.what();
            }
        }
        if (!err.empty()) {
            ++n_errors;
            jr["error"] = err;
            csv_lines.push_back(std::to_string(row.line) + ",,,,,,,,,,," + err);
        }
        row_results.push_back(std::move(jr));
    }

    const json metrics{{"rows", rows.size()},
                       {"normal", n_normal},
                       {"alert1", n_alert1},
                       {"alert2", n_alert2},
                       {"row_errors", n_errors},
                       {"results", row_results}};
    const json config{{"input", opt.input}, {"degraded_allowed", !opt.no_degraded}};

    if (opt.format == "csv") {
        if (opt.out.empty()) {
            for (const auto& l : csv_lines) std::cout << l << "\n";
        } else {
            std::ofstream f(opt.out, std::ios::trunc);
            if (!f) throw DataError("cannot open output file " + opt.out);
            for (const auto& l : csv_lines) f << l << "\n";
        }
    } else {
        emit_results(results_document("score", config, metrics, seed), opt.out);
    }
    return 0;
}

// --------------------------------------------------------------------- synth
struct SynthOpts {
    std::size_t n = 2000;
    double class_balance = 0.5;
    double noise_scale = 1.0;
    double intensity = 1.0;
    double duration_s = 60.0, fs = 100.0, onset_s = 30.0;
    std::string dataset_dir, trajectory_csv, traj_class = "nvi", svg, out;
    bool export_csv = false;
};

int cmd_synth(const SynthOpts& opt, std::uint64_t seed) {
    TrajectoryConfig cfg;
    cfg.duration_s = opt.duration_s;
    cfg.fs = opt.fs;
    cfg.perturb_onset_s = opt.onset_s;
    cfg.intensity = opt.intensity;
    cfg.seed = seed;

    if (!opt.trajectory_csv.empty()) {
        const TrajectoryClass cls = opt.traj_class == "stable" ? TrajectoryClass::stable
                                                               : TrajectoryClass::instability;
        const TrajectoryBundle bundle = gen_trajectory(cfg, cls);
        const auto scores = windowed_scores(bundle, 0.0, 10.0);

        std::ofstream f(opt.trajectory_csv, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.trajectory_csv);
        f << "t_s";
        for (std::size_t ch = 0; ch < kChannels; ++ch) f << "," << kChannelNames[ch];
        f << ",nvi_10s\n";
        f.precision(10);
        const std::size_t n = bundle.samples();
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / cfg.fs;
            f << t;
            for (std::size_t ch = 0; ch < kChannels; ++ch) {
                f << "," << bundle.channels[ch].samples[i];
            }
            const auto win = static_cast<std::size_t>(t / 10.0);
            if (win < scores.size()) f << "," << scores[win];
            else f << ",";
            f << "\n";
        }
        if (!opt.svg.empty()) {
            plot::Series s;
            s.name = opt.traj_class;
            for (std::size_t w = 0; w < scores.size(); ++w) {
                s.x.push_back(static_cast<double>(w) * 10.0 + 5.0);
                s.y.push_back(scores[w]);
            }
            plot::Series threshold{"alert threshold", {0.0, cfg.duration_s}, {80.0, 80.0},
                                   "#ff7f0e"};
            plot::write_line_chart(opt.svg, "Composite score over time", "t (s)", "score",
                                   {s, threshold});
        }
        const json metrics{{"trajectory_csv", opt.trajectory_csv},
                           {"windows_scored", scores.size()}};
        const json config{{"class", opt.traj_class},
                          {"intensity", opt.intensity},
                          {"duration_s", opt.duration_s},
                          {"fs", opt.fs}};
        emit_results(results_document("synth", config, metrics, seed), opt.out);
        return 0;
    }

    if (opt.dataset_dir.empty()) {
        throw ParamError("synth: either --dataset-dir or --trajectory is required");
    }
    const Dataset ds = gen_dataset(opt.n, opt.class_balance, cfg, seed, opt.noise_scale);
    save_dataset(opt.dataset_dir, ds);
    if (opt.export_csv) {
        for (std::size_t i = 0; i < ds.windows.size(); ++i) {
            char name[48];
            std::snprintf(name, sizeof(name), "win_%06zu.csv", i);
            export_window_csv((std::filesystem::path(opt.dataset_dir) / name).string(),
                              ds.windows[i], ds.fs);
        }
    }

    std::size_t n_pos = 0;
    for (const auto& w : ds.windows) n_pos += w.label != 0 ? 1 : 0;
    const json metrics{{"n", ds.windows.size()},
                       {"positive", n_pos},
                       {"train", ds.train_idx.size()},
                       {"val", ds.val_idx.size()},
                       {"test", ds.test_idx.size()},
                       {"dataset_dir", opt.dataset_dir}};
    const json config{{"n", opt.n},
                      {"class_balance", opt.class_balance},
                      {"noise_scale", opt.noise_scale},
                      {"intensity", opt.intensity},
                      {"duration_s", opt.duration_s},
                      {"fs", opt.fs},
                      {"perturb_onset_s", opt.onset_s}};
    emit_results(results_document("synth", config, metrics, seed), opt.out);
    return 0;
}

// --------------------------------------------------------------------- train
struct TrainOpts {
    std::string dataset_dir, checkpoint = "model.ckpt", history, out;
    std::size_t epochs = 100, batch = 32, patch = 100;
    std::size_t d_model = 128, heads = 4, layers = 2, ffn = 256, patience = 25, t_max = 100;
    double lr = 1e-3, weight_decay = 1e-2, eta_min = 1e-5, dropout = 0.15;
    double mse_weight = 0.7, bce_weight = 0.3;
};

int cmd_train(const TrainOpts& opt, std::uint64_t seed) {
    const Dataset ds = load_dataset(opt.dataset_dir);
    if (ds.windows.empty()) throw DataError("train: dataset is empty");
    const std::size_t t_samples = ds.windows.front().t;
    if (t_samples % opt.patch != 0) {
        throw ParamError("train: window length " + std::to_string(t_samples) +
                         " is not divisible by patch " + std::to_string(opt.patch));
    }

    ModelConfig mcfg;
    mcfg.d_model = opt.d_model;
    mcfg.heads = opt.heads;
    mcfg.layers = opt.layers;
    mcfg.ffn_dim = opt.ffn;
    mcfg.dropout = opt.dropout;
    mcfg.patch = opt.patch;
    mcfg.seq_len = t_samples / opt.patch;

    TrainConfig tcfg;
    tcfg.lr = opt.lr;
    tcfg.weight_decay = opt.weight_decay;
    tcfg.t_max = opt.t_max;
    tcfg.eta_min = opt.eta_min;
    tcfg.patience = opt.patience;
    tcfg.mse_weight = opt.mse_weight;
    tcfg.bce_weight = opt.bce_weight;
    tcfg.batch_size = opt.batch;
    tcfg.max_epochs = opt.epochs;
    tcfg.seed = seed;

    const TrainResult result = train(ds, mcfg, tcfg);
    save_checkpoint(opt.checkpoint, result.checkpoint);

    if (!opt.history.empty()) {
        std::ofstream f(opt.history, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.history);
        for (const auto& e : result.history) {
            f << json{{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_auc", e.val_auc},
                      {"lr", e.lr}}
                     .dump()
              << "\n";
        }
    }

    const json metrics{{"best_val_auc", result.best_val_auc},
                       {"best_epoch", result.best_epoch},
                       {"epochs_run", result.history.size()},
                       {"param_count", param_count(mcfg)},
                       {"checkpoint", opt.checkpoint}};
    const json config{{"dataset_dir", opt.dataset_dir},
                      {"patch", opt.patch},
                      {"seq_len", mcfg.seq_len},
                      {"d_model", opt.d_model},
                      {"heads", opt.heads},
                      {"layers", opt.layers},
                      {"ffn_dim", opt.ffn},
                      {"dropout", opt.dropout},
                      {"lr", opt.lr},
                      {"weight_decay", opt.weight_decay},
                      {"t_max", opt.t_max},
                      {"eta_min", opt.eta_min},
                      {"patience", opt.patience},
                      {"batch_size", opt.batch},
                      {"max_epochs", opt.epochs}};
    emit_results(results_document("train", config, metrics, seed), opt.out);
    return 0;
}

// ---------------------------------------------------------------------- eval
struct EvalOpts {
    std::string dataset_dir, checkpoint, split = "test", table, out;
    std::size_t bootstrap = 1000;
};

std::vector<std::vector<double>> modality_feature_rows(const Dataset& ds,
                                                       const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> rows;
    rows.reserve(idx.size());
    for (std::size_t i : idx) {
        const ModalityInputs in =
            window_modalities(ds.windows[i], ds.fs, ds.perturb_onset_s);
        rows.push_back({*in.spo2_pct, *in.rmssd_ms, *in.pi, *in.phase_left_deg});
    }
    return rows;
}

json eval_report_json(const EvalReport& rep) {
    return json{{"auc", rep.auc},
                {"auc_ci_low", rep.auc_ci_low},
                {"auc_ci_high", rep.auc_ci_high},
                {"sensitivity", rep.sens},
                {"specificity", rep.spec},
                {"ppv", rep.ppv},
                {"npv", rep.npv},
                {"youden_threshold", rep.youden_threshold},
                {"fold_aucs", rep.fold_aucs}};
}

int cmd_eval(const EvalOpts& opt, std::uint64_t seed) {
    const Dataset ds = load_dataset(opt.dataset_dir);
    const Checkpoint ck = load_checkpoint(opt.checkpoint);

    const std::vector<std::size_t>* split = &ds.test_idx;
    if (opt.split == "val") split = &ds.val_idx;
    else if (opt.split == "train") split = &ds.train_idx;
    else if (opt.split != "test") throw ParamError("eval: unknown split " + opt.split);
    if (split->empty()) throw DataError("eval: split '" + opt.split + "' is empty");

    TransformerLite model(ck.model_cfg, 0);
    model.params() = ck.params;
    const std::vector<double> logits = eval_logits(model, ds, *split);
    std::vector<int> labels;
    for (std::size_t i : *split) labels.push_back(ds.windows[i].label);
    const EvalReport model_rep = evaluate_classifier(logits, labels, opt.bootstrap, seed);

    // Logistic baseline on the post-onset window-mean modality features,
    // fit on the train split.
    std::vector<int> train_labels;
    for (std::size_t i : ds.train_idx) train_labels.push_back(ds.windows[i].label);
    const LogisticModel baseline =
        fit_logistic(modality_feature_rows(ds, ds.train_idx), train_labels);
    const std::vector<double> base_logits =
        predict_logits(baseline, modality_feature_rows(ds, *split));
    const EvalReport base_rep = evaluate_classifier(base_logits, labels, opt.bootstrap, seed);

    if (!opt.table.empty()) {
        std::ofstream f(opt.table, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.table);
        f << "model,auc,ci_low,ci_high,sens,spec,ppv,npv\n";
        char line[256];
        std::snprintf(line, sizeof(line), "transformer-lite,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                      model_rep.auc, model_rep.auc_ci_low, model_rep.auc_ci_high, model_rep.sens,
                      model_rep.spec, model_rep.ppv, model_rep.npv);
        f << line;
        std::snprintf(line, sizeof(line),
                      "logistic-baseline,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", base_rep.auc,
                      base_rep.auc_ci_low, base_rep.auc_ci_high, base_rep.sens, base_rep.spec,
                      base_rep.ppv, base_rep.npv);
        f << line;
    }

    const json metrics{{"model", eval_report_json(model_rep)},
                       {"logistic_baseline", eval_report_json(base_rep)},
                       {"split", opt.split},
                       {"n", split->size()}};
    const json config{{"dataset_dir", opt.dataset_dir},
                      {"checkpoint", opt.checkpoint},
                      {"bootstrap_iters", opt.bootstrap}};
    emit_results(results_document("eval", config, metrics, seed), opt.out);
    return 0;
}

// --------------------------------------------------------------------- stats
struct StatsOpts {
    std::string input, group_col, features, agree, table, out;
    double positive_label = 1.0;
    bool seconds_to_ms = false;
};

int cmd_stats(const StatsOpts& opt, std::uint64_t seed) {
    const CsvTable table = read_csv_table(opt.input);

    if (!opt.agree.empty()) {
        const auto colon = opt.agree.find(':');
        if (colon == std::string::npos) {
            throw ParamError("stats: --agree expects columns as X:Y");
        }
        const std::size_t cx = table.column_index(opt.agree.substr(0, colon));
        const std::size_t cy = table.column_index(opt.agree.substr(colon + 1));
        std::vector<double> x, y;
        for (const auto& row : table.rows) {
            double vx = row[cx], vy = row[cy];
            if (!std::isfinite(vx) || !std::isfinite(vy)) continue;
            if (opt.seconds_to_ms) {
                vx *= 1000.0;
                vy *= 1000.0;
            }
            x.push_back(vx);
            y.push_back(vy);
        }
        const AgreementReport rep = bland_altman(x, y);
        const PearsonResult pr = pearson(x, y);
        const json metrics{{"pearson_r", pr.r},   {"pearson_p", pr.p_value},
                           {"bias", rep.bias},    {"sd_diff", rep.sd_diff},
                           {"loa_low", rep.loa_low}, {"loa_high", rep.loa_high},
                           {"n", rep.n}};
        const json config{{"input", opt.input},
                          {"agree", opt.agree},
                          {"seconds_to_ms", opt.seconds_to_ms}};
        emit_results(results_document("stats", config, metrics, seed), opt.out);
        return 0;
    }

    if (opt.group_col.empty() || opt.features.empty()) {
        throw ParamError("stats: --group-col and --features are required (or use --agree)");
    }
    const std::size_t gcol = table.column_index(opt.group_col);

    std::vector<std::string> feature_names;
    {
        std::stringstream ss(opt.features);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (!name.empty()) feature_names.push_back(name);
        }
    }

    json comparisons = json::array();
    std::vector<std::string> csv_lines;
    csv_lines.push_back(
        "feature,group1_mean,group1_sd,n1,group2_mean,group2_sd,n2,u,p_value,significance,"
        "cohens_d");
    for (const auto& feature : feature_names) {
        const std::size_t fcol = table.column_index(feature);
        std::vector<double> g1, g2;
        for (const auto& row : table.rows) {
            double v = row[fcol];
            if (!std::isfinite(v) || !std::isfinite(row[gcol])) continue;
            if (opt.seconds_to_ms) v *= 1000.0;
            (row[gcol] == opt.positive_label ? g1 : g2).push_back(v);
        }
        if (g1.empty() || g2.empty()) {
            comparisons.push_back(json{{"feature", feature}, {"error", "a group is empty"}});
            csv_lines.push_back(feature + ",,,,,,,,,,");
            continue;
        }
        const GroupComparison cmp = mann_whitney(g1, g2);
        const std::string sig = cmp.p_value < 0.01 ? "**" : (cmp.p_value < 0.05 ? "*" : "ns");
        comparisons.push_back(json{{"feature", feature},
                                   {"group1_mean", cmp.mean1},
                                   {"group1_sd", cmp.sd1},
                                   {"n1", cmp.n1},
                                   {"group2_mean", cmp.mean2},
                                   {"group2_sd", cmp.sd2},
                                   {"n2", cmp.n2},
                                   {"u_statistic", cmp.u_statistic},
                                   {"p_value", cmp.p_value},
                                   {"significance", sig},
                                   {"cohens_d", cmp.cohens_d},
                                   {"method", cmp.method == GroupComparison::Method::exact
                                                  ? "exact"
                                                  : "normal-approx"}});
        char line[320];
        std::snprintf(line, sizeof(line), "%s,%.4f,%.4f,%zu,%.4f,%.4f,%zu,%.1f,%.4f,%s,%.3f",
                      feature.c_str(), cmp.mean1, cmp.sd1, cmp.n1, cmp.mean2, cmp.sd2, cmp.n2,
                      cmp.u_statistic, cmp.p_value, sig.c_str(), cmp.cohens_d);
        csv_lines.push_back(line);
    }

    if (!opt.table.empty()) {
        std::ofstream f(opt.table, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.table);
        for (const auto& l : csv_lines) f << l << "\n";
    }

    const json metrics{{"comparisons", comparisons}};
    const json config{{"input", opt.input},
                      {"group_col", opt.group_col},
                      {"positive_label", opt.positive_label},
                      {"seconds_to_ms", opt.seconds_to_ms}};
    emit_results(results_document("stats", config, metrics, seed), opt.out);
    return 0;
}

// ------------------------------------------------------------------------ mc
struct McOpts {
    std::string intensities = "0,0.25,0.5,0.75,1";
    std::size_t runs = 100;
    std::string csv, svg, recovery_csv, out;
    double recovery_floor = 50.0, recovery_base = 85.0, recovery_tau = 60.0,
           recovery_duration = 300.0;
};

int cmd_mc(const McOpts& opt, std::uint64_t seed) {
    std::vector<double> grid;
    {
        std::stringstream ss(opt.intensities);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty()) grid.push_back(std::stod(cell));
        }
    }
    TrajectoryConfig cfg;
    const auto points = mc_perturbation(grid, opt.runs, cfg, seed);

    if (!opt.csv.empty()) {
        std::ofstream f(opt.csv, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.csv);
        f << "intensity,mean_min_nvi,sd_min_nvi\n";
        f.precision(10);
        for (const auto& p : points) {
            f << p.intensity << "," << p.mean_min_nvi << "," << p.sd_min_nvi << "\n";
        }
    }
    if (!opt.svg.empty()) {
        plot::Series mean{"mean min score", {}, {}, "#1f77b4"};
        plot::Series lo{"-1 SD", {}, {}, "#aec7e8"};
        plot::Series hi{"+1 SD", {}, {}, "#aec7e8"};
        for (const auto& p : points) {
            mean.x.push_back(p.intensity);
            mean.y.push_back(p.mean_min_nvi);
            lo.x.push_back(p.intensity);
            lo.y.push_back(p.mean_min_nvi - p.sd_min_nvi);
            hi.x.push_back(p.intensity);
            hi.y.push_back(p.mean_min_nvi + p.sd_min_nvi);
        }
        plot::write_line_chart(opt.svg, "Score decline vs perturbation intensity", "intensity",
                               "min composite score", {mean, lo, hi});
    }
    if (!opt.recovery_csv.empty()) {
        const TimeSeries curve = recovery_curve(opt.recovery_floor, opt.recovery_base,
                                                opt.recovery_tau, opt.recovery_duration);
        std::ofstream f(opt.recovery_csv, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.recovery_csv);
        f << "t_s,nvi\n";
        f.precision(10);
        for (std::size_t i = 0; i < curve.samples.size(); ++i) {
            f << curve.time_at(i) << "," << curve.samples[i] << "\n";
        }
    }

    json jpoints = json::array();
    for (const auto& p : points) {
        jpoints.push_back(json{{"intensity", p.intensity},
                               {"mean_min_nvi", p.mean_min_nvi},
                               {"sd_min_nvi", p.sd_min_nvi}});
    }
    const json metrics{{"points", jpoints}, {"runs_per_intensity", opt.runs}};
    const json config{{"intensities", opt.intensities}, {"runs", opt.runs}};
    emit_results(results_document("mc", config, metrics, seed), opt.out);
    return 0;
}

// ------------------------------------------------------------------ biosense
struct BiosenseOpts {
    std::string shape = "log-linear";
    double g_max = 3.0;
    std::size_t points = 201;
    std::string csv, svg, out;
};

int cmd_biosense(const BiosenseOpts& opt, std::uint64_t seed) {
    ConductivityModel model;
    model.g_max = opt.g_max;
    if (opt.shape == "log-logistic") model.shape = CurveShape::log_logistic;
    else if (opt.shape != "log-linear") throw ParamError("biosense: unknown shape " + opt.shape);

    std::vector<double> rh(opt.points), sigma(opt.points), gain(opt.points);
    for (std::size_t i = 0; i < opt.points; ++i) {
        rh[i] = 100.0 * static_cast<double>(i) / static_cast<double>(opt.points - 1);
        sigma[i] = model.conductivity(rh[i]);
        gain[i] = model.gain(rh[i]);
    }
    if (!opt.csv.empty()) {
        std::ofstream f(opt.csv, std::ios::trunc);
        if (!f) throw DataError("cannot open " + opt.csv);
        f << "rh_pct,sigma_s_per_m,gain\n";
        f.precision(10);
        for (std::size_t i = 0; i < opt.points; ++i) {
            f << rh[i] << "," << sigma[i] << "," << gain[i] << "\n";
        }
    }
    if (!opt.svg.empty()) {
        plot::Series log_sigma{"log10 conductivity", rh, {}, "#1f77b4"};
        for (double s : sigma) log_sigma.y.push_back(std::log10(s));
        plot::write_line_chart(opt.svg, "Hydration-activated conductivity", "RH (%)",
                               "log10 sigma (S/m)", {log_sigma});
    }
    const json metrics{{"sigma_at_20", model.conductivity(20.0)},
                       {"sigma_at_80", model.conductivity(80.0)},
                       {"gain_at_80", model.gain(80.0)},
                       {"points", opt.points}};
    const json config{{"shape", opt.shape}, {"g_max", opt.g_max}};
    emit_results(results_document("biosense", config, metrics, seed), opt.out);
    return 0;
}

// --------------------------------------------------------------------- bench
struct BenchOpts {
    std::size_t iters = 1'000'000;
    std::size_t warmup = 10'000;
    int repeats = 3;
    std::string out;
};

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

int cmd_bench(const BenchOpts& opt, std::uint64_t seed) {
    if (opt.iters < 1000) throw ParamError("bench: iters must be >= 1000");
    constexpr std::size_t kInputs = 1024;
    std::vector<ModalityInputs> inputs(kInputs);
    Rng rng(seed ^ 0xb5297a4d);
    for (auto& in : inputs) {
        const std::uint64_t mask = 1 + rng.index(15);
        if (mask & 1) in.spo2_pct = rng.uniform(0.0, 100.0);
        if (mask & 2) in.rmssd_ms = rng.uniform(0.0, 250.0);
        if (mask & 4) in.pi = rng.uniform(0.0, 0.8);
        if (mask & 8) {
            in.phase_left_deg = rng.uniform(0.0, 360.0);
            in.phase_right_deg = rng.uniform(0.0, 360.0);
        }
    }

    std::vector<std::uint64_t> hashes(opt.iters), reference;
    std::vector<std::uint32_t> latencies_ns(opt.iters);

    std::uint64_t allocs_hot = 0;
    std::ptrdiff_t first_divergence = -1;
    for (int rep = 0; rep < opt.repeats; ++rep) {
        for (std::size_t i = 0; i < opt.warmup; ++i) {
            (void)composite(inputs[i % kInputs]);
        }
        const std::uint64_t before = allocation_count();
        for (std::size_t i = 0; i < opt.iters; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const NviResult r = composite(inputs[i % kInputs]);
            const auto t1 = std::chrono::steady_clock::now();
            std::uint64_t h = 0xcbf29ce484222325ULL;
            h = fnv1a(&r.score, sizeof(r.score), h);
            h = fnv1a(r.effective_weights.data(), sizeof(r.effective_weights), h);
            const auto tier_byte = static_cast<unsigned char>(r.tier);
            h = fnv1a(&tier_byte, 1, h);
            hashes[i] = h;
            if (rep == 0) {
                latencies_ns[i] = static_cast<std::uint32_t>(
                    std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
            }
        }
        if (rep == 0) {
            allocs_hot = allocation_count() - before;
            reference = hashes;
        } else {
            for (std::size_t i = 0; i < opt.iters; ++i) {
                if (hashes[i] != reference[i]) {
                    first_divergence = static_cast<std::ptrdiff_t>(i);
                    break;
                }
            }
        }
        if (first_divergence >= 0) break;
    }

    std::sort(latencies_ns.begin(), latencies_ns.end());
    const json metrics{
        {"iters", opt.iters},
        {"repeats", opt.repeats},
        {"hot_path_allocations", allocs_hot},
        {"byte_identical", first_divergence < 0},
        {"first_divergence", first_divergence},
        {"latency_ns", {{"p50", latencies_ns[opt.iters / 2]},
                        {"p99", latencies_ns[opt.iters * 99 / 100]},
                        {"max", latencies_ns.back()}}}};
    const json config{{"iters", opt.iters}, {"warmup", opt.warmup}, {"repeats", opt.repeats}};
    emit_results(results_document("bench", config, metrics, seed), opt.out);

    if (first_divergence >= 0) {
        std::cerr << "bench: outputs diverged at call " << first_divergence << "\n";
        return 3;
    }
    if (allocs_hot != 0) {
        std::cerr << "bench: " << allocs_hot << " allocations on the hot path\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Composite neurovascular-instability scoring toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --seed appear after the subcommand name

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Seed for every stochastic path")->capture_default_str();

    PipelineOpts pipeline_opts;
    auto* pipeline = app.add_subcommand("pipeline", "Waveform -> HRV/PRV + feature vector");
    pipeline->add_option("--input", pipeline_opts.input, "Signal CSV (t_s,<channel>)")
        ->required();
    pipeline->add_option("--channel", pipeline_opts.channel, "Channel column name");
    pipeline->add_option("--lo", pipeline_opts.lo, "Band-pass low edge, Hz")
        ->capture_default_str();
    pipeline->add_option("--hi", pipeline_opts.hi, "Band-pass high edge, Hz")
        ->capture_default_str();
    pipeline->add_option("--min-distance", pipeline_opts.min_distance_s,
                         "Peak refractory distance, s")
        ->capture_default_str();
    pipeline->add_option("--prominence-sd", pipeline_opts.prominence_sd,
                         "Peak prominence as a fraction of the filtered SD")
        ->capture_default_str();
    pipeline->add_option("--out", pipeline_opts.out, "Results JSON path (default stdout)");

    ScoreOpts score_opts;
    auto* score = app.add_subcommand("score", "Modality CSV -> composite scores");
    score->add_option("--input", score_opts.input, "Modality CSV")->required();
    score->add_flag("--no-degraded", score_opts.no_degraded,
                    "Treat rows with missing modalities as errors");
    score->add_option("--format", score_opts.format, "json or csv")->capture_default_str();
    score->add_option("--out", score_opts.out, "Output path (default stdout)");

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand("synth", "Synthetic trajectories and labeled datasets");
    synth->add_option("--n", synth_opts.n, "Number of windows")->capture_default_str();
    synth->add_option("--class-balance", synth_opts.class_balance, "Positive fraction")
        ->capture_default_str();
    synth->add_option("--noise-scale", synth_opts.noise_scale, "Noise multiplier")
        ->capture_default_str();
    synth->add_option("--intensity", synth_opts.intensity, "Perturbation intensity cap")
        ->capture_default_str();
    synth->add_option("--duration", synth_opts.duration_s, "Window duration, s")
        ->capture_default_str();
    synth->add_option("--fs", synth_opts.fs, "Sampling rate, Hz")->capture_default_str();
    synth->add_option("--onset", synth_opts.onset_s, "Perturbation onset, s")
        ->capture_default_str();
    synth->add_option("--dataset-dir", synth_opts.dataset_dir, "Output dataset directory");
    synth->add_flag("--export-csv", synth_opts.export_csv, "Also write per-window CSVs");
    synth->add_option("--trajectory", synth_opts.trajectory_csv,
                      "Write a single trajectory CSV instead of a dataset");
    synth->add_option("--class", synth_opts.traj_class, "stable or nvi")->capture_default_str();
    synth->add_option("--svg", synth_opts.svg, "SVG chart path (trajectory mode)");
    synth->add_option("--out", synth_opts.out, "Results JSON path (default stdout)");

    TrainOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train the classifier on a dataset");
    train_cmd->add_option("--dataset", train_opts.dataset_dir, "Dataset directory")->required();
    train_cmd->add_option("--checkpoint", train_opts.checkpoint, "Checkpoint output path")
        ->capture_default_str();
    train_cmd->add_option("--history", train_opts.history, "History JSON-lines path");
    train_cmd->add_option("--epochs", train_opts.epochs, "Max epochs")->capture_default_str();
    train_cmd->add_option("--batch", train_opts.batch, "Batch size")->capture_default_str();
    train_cmd->add_option("--patch", train_opts.patch, "Samples per token")
        ->capture_default_str();
    train_cmd->add_option("--d-model", train_opts.d_model, "Model width")->capture_default_str();
    train_cmd->add_option("--heads", train_opts.heads, "Attention heads")->capture_default_str();
    train_cmd->add_option("--layers", train_opts.layers, "Encoder layers")
        ->capture_default_str();
    train_cmd->add_option("--ffn", train_opts.ffn, "FFN width")->capture_default_str();
    train_cmd->add_option("--dropout", train_opts.dropout, "Dropout rate")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_opts.lr, "Peak learning rate")->capture_default_str();
    train_cmd->add_option("--weight-decay", train_opts.weight_decay, "AdamW weight decay")
        ->capture_default_str();
    train_cmd->add_option("--t-max", train_opts.t_max, "Cosine schedule period")
        ->capture_default_str();
    train_cmd->add_option("--eta-min", train_opts.eta_min, "Cosine schedule floor")
        ->capture_default_str();
    train_cmd->add_option("--patience", train_opts.patience, "Early-stopping patience")
        ->capture_default_str();
    train_cmd->add_option("--out", train_opts.out, "Results JSON path (default stdout)");

    EvalOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against a dataset");
    eval_cmd->add_option("--dataset", eval_opts.dataset_dir, "Dataset directory")->required();
    eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint path")->required();
    eval_cmd->add_option("--split", eval_opts.split, "train, val or test")
        ->capture_default_str();
    eval_cmd->add_option("--bootstrap", eval_opts.bootstrap, "Bootstrap iterations")
        ->capture_default_str();
    eval_cmd->add_option("--table", eval_opts.table, "Row-format CSV output path");
    eval_cmd->add_option("--out", eval_opts.out, "Results JSON path (default stdout)");

    StatsOpts stats_opts;
    auto* stats_cmd = app.add_subcommand("stats", "Group comparisons and agreement analysis");
    stats_cmd->add_option("--input", stats_opts.input, "CSV table")->required();
    stats_cmd->add_option("--group-col", stats_opts.group_col, "Binary group column");
    stats_cmd->add_option("--features", stats_opts.features, "Comma-separated feature columns");
    stats_cmd->add_option("--positive-label", stats_opts.positive_label,
                          "Group value treated as group 1")
        ->capture_default_str();
    stats_cmd->add_flag("--seconds-to-ms", stats_opts.seconds_to_ms,
                        "Multiply analyzed values by 1000");
    stats_cmd->add_option("--agree", stats_opts.agree, "Agreement mode: columns as X:Y");
    stats_cmd->add_option("--table", stats_opts.table, "Comparison-table CSV output path");
    stats_cmd->add_option("--out", stats_opts.out, "Results JSON path (default stdout)");

    McOpts mc_opts;
    auto* mc_cmd = app.add_subcommand("mc", "Monte-Carlo perturbation sweep and recovery curve");
    mc_cmd->add_option("--intensities", mc_opts.intensities, "Comma-separated grid")
        ->capture_default_str();
    mc_cmd->add_option("--runs", mc_opts.runs, "Runs per intensity")->capture_default_str();
    mc_cmd->add_option("--csv", mc_opts.csv, "Sweep CSV output path");
    mc_cmd->add_option("--svg", mc_opts.svg, "Sweep SVG chart path");
    mc_cmd->add_option("--recovery-csv", mc_opts.recovery_csv, "Recovery curve CSV path");
    mc_cmd->add_option("--recovery-floor", mc_opts.recovery_floor, "Recovery start score")
        ->capture_default_str();
    mc_cmd->add_option("--recovery-base", mc_opts.recovery_base, "Recovery asymptote")
        ->capture_default_str();
    mc_cmd->add_option("--recovery-tau", mc_opts.recovery_tau, "Recovery time constant, s")
        ->capture_default_str();
    mc_cmd->add_option("--recovery-duration", mc_opts.recovery_duration, "Curve length, s")
        ->capture_default_str();
    mc_cmd->add_option("--out", mc_opts.out, "Results JSON path (default stdout)");

    BiosenseOpts bio_opts;
    auto* bio_cmd = app.add_subcommand("biosense", "Conductivity curve and AC gain");
    bio_cmd->add_option("--shape", bio_opts.shape, "log-linear or log-logistic")
        ->capture_default_str();
    bio_cmd->add_option("--gmax", bio_opts.g_max, "Amplification ceiling")
        ->capture_default_str();
    bio_cmd->add_option("--points", bio_opts.points, "Grid points")->capture_default_str();
    bio_cmd->add_option("--csv", bio_opts.csv, "Curve CSV output path");
    bio_cmd->add_option("--svg", bio_opts.svg, "Curve SVG chart path");
    bio_cmd->add_option("--out", bio_opts.out, "Results JSON path (default stdout)");

    BenchOpts bench_opts;
    auto* bench_cmd = app.add_subcommand("bench", "Scoring determinism and latency benchmark");
    bench_cmd->add_option("--iters", bench_opts.iters, "Calls per repetition")
        ->capture_default_str();
    bench_cmd->add_option("--warmup", bench_opts.warmup, "Warmup calls")->capture_default_str();
    bench_cmd->add_option("--repeats", bench_opts.repeats, "Repetitions compared byte-wise")
        ->capture_default_str();
    bench_cmd->add_option("--out", bench_opts.out, "Results JSON path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (pipeline->parsed()) return cmd_pipeline(pipeline_opts, seed);
        if (score->parsed()) return cmd_score(score_opts, seed);
        if (synth->parsed()) return cmd_synth(synth_opts, seed);
        if (train_cmd->parsed()) return cmd_train(train_opts, seed);
        if (eval_cmd->parsed()) return cmd_eval(eval_opts, seed);
        if (stats_cmd->parsed()) return cmd_stats(stats_opts, seed);
        if (mc_cmd->parsed()) return cmd_mc(mc_opts, seed);
        if (bio_cmd->parsed()) return cmd_biosense(bio_opts, seed);
        if (bench_cmd->parsed()) return cmd_bench(bench_opts, seed);
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

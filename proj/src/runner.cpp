#include "tsadv/runner.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "tsadv/report_io.hpp"

namespace tsadv {

using nlohmann::json;

namespace {

RawSeries build_raw_series(const RunConfig& cfg, LoadReport* report) {
    if (cfg.dataset.source == "synthetic") {
        SynthSpec spec = cfg.dataset.synth;
        spec.seed = cfg.seed;
        if (report) {
            report->rows_kept = spec.length;
            report->rows_dropped = 0;
        }
        return synth_series(spec);
    }
    RawSeries series = load_csv(cfg.dataset.path, cfg.dataset.schema, report);
    if (cfg.dataset.resample_seconds > 0)
        series = resample_mean(series, cfg.dataset.resample_seconds);
    return series;
}

json normalization_to_json(const NormalizationMeta& meta) {
    return json{{"min", meta.min}, {"max", meta.max}};
}

} // namespace

void cmd_prepare(const RunConfig& cfg) {
    LoadReport report;
    RawSeries series = build_raw_series(cfg, &report);

    const std::size_t w = cfg.dataset.window_size;
    if (series.rows() <= w)
        throw DataError("series too short (" + std::to_string(series.rows()) +
                        " rows) for window size " + std::to_string(w));
    std::size_t n_windows = series.rows() - w;
    auto n_train = static_cast<std::size_t>(cfg.dataset.train_fraction *
                                            static_cast<double>(n_windows));

    // Normalization statistics come from the rows training samples can
    // see (windows and targets), never from the test region.
    NormalizationMeta meta = fit_normalization(series, n_train + w);
    RawSeries normalized = apply_normalization(series, meta);

    WindowedDataset all = make_windows(normalized, w);
    all.normalization = meta;
    auto [train_ds, test_ds] = chrono_split(all, cfg.dataset.train_fraction);

    save_dataset(cfg.dataset_path(), train_ds, test_ds);

    json summary{{"schema_version", 1},
                 {"source", cfg.dataset.source},
                 {"rows", series.rows()},
                 {"rows_dropped", report.rows_dropped},
                 {"num_features", series.num_features},
                 {"window_size", w},
                 {"train_samples", train_ds.size()},
                 {"test_samples", test_ds.size()},
                 {"train_fraction", cfg.dataset.train_fraction},
                 {"normalization", normalization_to_json(meta)},
                 {"seed", cfg.seed}};
    if (cfg.dataset.source == "csv") {
        summary["path"] = cfg.dataset.path.string();
        summary["resample_seconds"] = cfg.dataset.resample_seconds;
    } else {
        summary["synthetic_kind"] = to_string(cfg.dataset.synth.kind);
    }
    write_file_atomic(cfg.prepare_summary_path(), summary.dump(2) + "\n");

    std::cout << "prepared " << train_ds.size() << " train / " << test_ds.size()
              << " test windows (" << report.rows_dropped << " rows dropped) -> "
              << cfg.dataset_path().string() << "\n";
}

void cmd_train(const RunConfig& cfg) {
    auto [train_ds, test_ds] = load_dataset(cfg.dataset_path());
    if (train_ds.size() == 0) throw DataError("prepared dataset has no training samples");

    ModelConfig mc = cfg.model;
    mc.window = train_ds.window_size;
    mc.features = train_ds.num_features;
    ForecastModel model(mc);

    TrainLog log = train(model, train_ds, cfg.train_cfg);
    double test_rmse = rmse(model, test_ds);

    save_checkpoint(cfg.checkpoint_path(), model, train_ds.normalization);
    write_file_atomic(cfg.training_log_path(), training_log_to_csv(log));

    json summary{{"schema_version", 1},
                 {"final_test_rmse", test_rmse},
                 {"best_epoch", log.best_epoch},
                 {"best_val_rmse", log.best_val_rmse},
                 {"epochs_run", log.epochs.size()},
                 {"early_stopped", log.early_stopped},
                 {"model_kind", to_string(mc.kind)},
                 {"hidden_size", mc.hidden},
                 {"seed", cfg.seed}};
    write_file_atomic(cfg.train_summary_path(), summary.dump(2) + "\n");

    std::cout << "trained " << to_string(mc.kind) << ": best val RMSE "
              << fmt_double(log.best_val_rmse) << " (epoch " << log.best_epoch
              << "), test RMSE " << fmt_double(test_rmse) << "\n";
}

AttackRunSummary cmd_attack(const RunConfig& cfg, Exec exec) {
    auto [train_ds, test_ds] = load_dataset(cfg.dataset_path());
    auto [model, meta] = load_checkpoint(cfg.checkpoint_path());
    (void)meta;

    AttackRunSummary summary;
    for (const std::string& target_name : cfg.attack.targets) {
        AttackTargetSpec spec = cfg.target_spec(target_name);
        for (AttackMethod method : cfg.attack.methods) {
            for (double eps : cfg.attack.epsilons) {
                AttackConfig acfg = cfg.attack_config(method, eps);
                AttackResult result = attack_dataset(model, test_ds, spec, acfg, exec);

                auto base = cfg.attack_basename(target_name, method, eps);
                write_file_atomic(base.string() + ".json",
                                  attack_result_to_json(result, cfg.seed).dump(2) + "\n");
                write_file_atomic(base.string() + ".csv", attack_result_to_csv(result));
                summary.files_written += 2;
                summary.window_errors += result.errors.size();
            }
        }
    }
    std::cout << "wrote " << summary.files_written << " attack result files to "
              << cfg.attack_dir().string();
    if (summary.window_errors > 0)
        std::cout << " (" << summary.window_errors << " window errors)";
    std::cout << "\n";
    return summary;
}

namespace {

struct LoadedResults {
    // target name -> method -> result, all at the table epsilon.
    std::map<std::string, std::map<std::string, AttackResult>> by_target;
    std::vector<double> clean_preds;
    std::vector<double> truths;
};

std::vector<std::string> targeted_names(const RunConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& t : cfg.attack.targets)
        if (t != "untargeted") names.push_back(t);
    return names;
}

LoadedResults load_table_results(const RunConfig& cfg) {
    if (std::find(cfg.attack.targets.begin(), cfg.attack.targets.end(), "untargeted") ==
        cfg.attack.targets.end())
        throw ConfigError("evaluation needs an 'untargeted' entry in [attack] targets");

    LoadedResults loaded;
    std::vector<std::string> missing;
    for (const std::string& target : cfg.attack.targets) {
        for (AttackMethod method : cfg.attack.methods) {
            auto path = cfg.attack_basename(target, method, cfg.eval.table_epsilon);
            path += ".json";
            if (!std::filesystem::exists(path)) {
                missing.push_back(path.string());
                continue;
            }
            loaded.by_target[target][to_string(method)] = load_attack_result(path);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += "\n  " + m;
        throw DataError("missing attack result files:" + list);
    }

    const AttackResult& any = loaded.by_target.begin()->second.begin()->second;
    for (const auto& w : any.windows) {
        loaded.clean_preds.push_back(w.clean_pred);
        loaded.truths.push_back(w.truth);
    }
    return loaded;
}

std::vector<double> adv_preds(const AttackResult& r) {
    std::vector<double> out;
    out.reserve(r.windows.size());
    for (const auto& w : r.windows) out.push_back(w.adv_pred);
    return out;
}

} // namespace

void cmd_evaluate(const RunConfig& cfg) {
    LoadedResults loaded = load_table_results(cfg);
    const std::vector<double>& reference =
        cfg.eval.reference == "clean" ? loaded.clean_preds : loaded.truths;

    LossDistribution original =
        grouped_rmse(loaded.clean_preds, reference, cfg.eval.group_size, LossLabel::original);

    std::vector<std::string> rows = targeted_names(cfg);

    // Table-1-shaped CSV: one row per targeted attack, (O-T, O-U, T-U)
    // per method.
    std::ostringstream table_csv;
    table_csv << "target";
    for (AttackMethod m : cfg.attack.methods)
        table_csv << ',' << to_string(m) << "_ot," << to_string(m) << "_ou," << to_string(m)
                  << "_tu";
    table_csv << '\n';

    json table_json = json::array();

    for (const std::string& target : rows) {
        table_csv << target;
        json row{{"target", target}, {"epsilon", cfg.eval.table_epsilon}, {"methods", json::object()}};
        for (AttackMethod m : cfg.attack.methods) {
            const AttackResult& tr = loaded.by_target.at(target).at(to_string(m));
            const AttackResult& ur = loaded.by_target.at("untargeted").at(to_string(m));
            LossDistribution targeted =
                grouped_rmse(adv_preds(tr), reference, cfg.eval.group_size, LossLabel::targeted);
            LossDistribution untargeted = grouped_rmse(adv_preds(ur), reference,
                                                       cfg.eval.group_size, LossLabel::untargeted);
            KSReport ks = ks_table(original, targeted, untargeted);
            table_csv << ',' << fmt_double(ks.orig_targeted.d) << ','
                      << fmt_double(ks.orig_untargeted.d) << ','
                      << fmt_double(ks.targeted_untargeted.d);
            row["methods"][to_string(m)] = ks_report_to_json(ks);

            Histogram hist = shared_histogram({&original, &targeted, &untargeted}, cfg.eval.bins);
            write_file_atomic(cfg.eval_dir() / ("hist_" + target + "_" + to_string(m) + ".csv"),
                              histogram_to_csv(hist));
        }
        table_csv << '\n';
        table_json.push_back(std::move(row));
    }

    write_file_atomic(cfg.eval_dir() / "ks_table.csv", table_csv.str());
    write_file_atomic(cfg.eval_dir() / "ks_table.json", table_json.dump(2) + "\n");

    // Sweep curves per target, assembled from the attack result files.
    std::vector<double> sweep_eps =
        cfg.eval.sweep_epsilons.empty() ? cfg.attack.epsilons : cfg.eval.sweep_epsilons;
    std::vector<std::string> missing;
    for (const std::string& target : cfg.attack.targets) {
        std::vector<SweepCurve> curves;
        for (AttackMethod m : cfg.attack.methods) {
            SweepCurve curve;
            curve.method = m;
            for (double eps : sweep_eps) {
                auto path = cfg.attack_basename(target, m, eps);
                path += ".json";
                if (!std::filesystem::exists(path)) {
                    missing.push_back(path.string());
                    continue;
                }
                AttackResult r = load_attack_result(path);
                SweepPoint pt;
                pt.epsilon = eps;
                double se = 0.0, l2 = 0.0;
                for (const auto& w : r.windows) {
                    double d = w.adv_pred - w.clean_pred;
                    se += d * d;
                    l2 += w.l2;
                }
                pt.output_rmse = std::sqrt(se / static_cast<double>(r.windows.size()));
                pt.mean_input_l2 = l2 / static_cast<double>(r.windows.size());
                curve.points.push_back(pt);
            }
            curves.push_back(std::move(curve));
        }
        write_file_atomic(cfg.eval_dir() / ("sweep_" + target + ".csv"),
                          sweep_curves_to_csv(curves));
        write_file_atomic(cfg.eval_dir() / ("sweep_" + target + ".json"),
                          sweep_curves_to_json(curves).dump(2) + "\n");
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += "\n  " + m;
        throw DataError("missing attack result files for sweep:" + list);
    }

    std::cout << "evaluation written to " << cfg.eval_dir().string() << "\n";
}

void cmd_report(const RunConfig& cfg) {
    json prepare = json::parse(read_file(cfg.prepare_summary_path()));
    json train_summary = json::parse(read_file(cfg.train_summary_path()));
    json table = json::parse(read_file(cfg.eval_dir() / "ks_table.json"));
    LoadedResults loaded = load_table_results(cfg);

    std::ostringstream md;
    md << "# Attack evaluation report\n\n";
    md << "- seed: " << cfg.seed << "\n";
    md << "- dataset: " << prepare.at("source").get<std::string>() << ", "
       << prepare.at("train_samples").get<std::size_t>() << " train / "
       << prepare.at("test_samples").get<std::size_t>() << " test windows (window size "
       << prepare.at("window_size").get<std::size_t>() << ", "
       << prepare.at("rows_dropped").get<std::size_t>() << " rows dropped)\n";
    md << "- model: " << train_summary.at("model_kind").get<std::string>() << ", test RMSE "
       << fmt_double(train_summary.at("final_test_rmse").get<double>()) << " (best val "
       << fmt_double(train_summary.at("best_val_rmse").get<double>()) << " at epoch "
       << train_summary.at("best_epoch").get<std::size_t>() << ")\n";
    md << "- table epsilon: " << fmt_double(cfg.eval.table_epsilon) << ", loss reference: "
       << cfg.eval.reference << ", group size: " << cfg.eval.group_size << "\n\n";

    md << "## Configuration echo\n\n";
    md << "- methods:";
    for (AttackMethod m : cfg.attack.methods) md << ' ' << to_string(m);
    md << "\n- targets:";
    for (const auto& t : cfg.attack.targets) md << ' ' << t;
    md << "\n- epsilons:";
    for (double e : cfg.attack.epsilons) md << ' ' << fmt_double(e);
    md << "\n- n_iter: " << cfg.attack.n_iter << ", momentum_alpha "
       << fmt_double(cfg.attack.momentum_alpha) << ", rho " << fmt_double(cfg.attack.rho)
       << ", grad_mode " << to_string(cfg.attack.grad_mode) << "\n";
    md << "- tau: " << fmt_double(cfg.attack.tau) << ", temporal window [" << cfg.attack.tta_t1
       << "," << cfg.attack.tta_t2 << ")\n\n";

    md << "## Mean prediction shift (adv - clean) at the table epsilon\n\n";
    md << "| target | method | mean shift | mean linf | mean l2 | halvings |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& [target, by_method] : loaded.by_target) {
        for (const auto& [method, result] : by_method) {
            double shift = 0.0, linf = 0.0, l2 = 0.0;
            std::size_t halvings = 0;
            for (const auto& w : result.windows) {
                shift += w.adv_pred - w.clean_pred;
                linf += w.linf;
                l2 += w.l2;
                halvings += w.halvings;
            }
            auto n = static_cast<double>(result.windows.size());
            md << "| " << target << " | " << method << " | " << fmt_double(shift / n) << " | "
               << fmt_double(linf / n) << " | " << fmt_double(l2 / n) << " | " << halvings
               << " |\n";
        }
    }

    md << "\n## KS statistics (O-T, O-U, T-U per method)\n\n";
    md << "| target |";
    for (AttackMethod m : cfg.attack.methods)
        md << ' ' << to_string(m) << " O-T | " << to_string(m) << " O-U | " << to_string(m)
           << " T-U |";
    md << "\n|---|";
    for (std::size_t i = 0; i < cfg.attack.methods.size() * 3; ++i) md << "---|";
    md << "\n";
    for (const json& row : table) {
        md << "| " << row.at("target").get<std::string>() << " |";
        for (AttackMethod m : cfg.attack.methods) {
            const json& ks = row.at("methods").at(to_string(m));
            md << ' ' << fmt_double(ks.at("orig_targeted").at("d").get<double>()) << " | "
               << fmt_double(ks.at("orig_untargeted").at("d").get<double>()) << " | "
               << fmt_double(ks.at("targeted_untargeted").at("d").get<double>()) << " |";
        }
        md << "\n";
    }

    md << "\n## Detectability verdicts\n\n";
    md << "Targeted statistically closer to the original than untargeted (O-T < O-U):\n\n";
    for (const json& row : table) {
        for (AttackMethod m : cfg.attack.methods) {
            const json& ks = row.at("methods").at(to_string(m));
            bool closer = ks.at("orig_targeted").at("d").get<double>() <
                          ks.at("orig_untargeted").at("d").get<double>();
            md << "- " << row.at("target").get<std::string>() << " / " << to_string(m)
               << ": targeted statistically closer than untargeted: " << (closer ? "YES" : "NO")
               << "\n";
        }
    }

    std::size_t total_errors = 0;
    for (const auto& [target, by_method] : loaded.by_target)
        for (const auto& [method, result] : by_method) total_errors += result.errors.size();
    if (total_errors > 0) {
        md << "\n## Window errors\n\n";
        for (const auto& [target, by_method] : loaded.by_target)
            for (const auto& [method, result] : by_method)
                for (const auto& e : result.errors)
                    md << "- " << target << " / " << method << " window " << e.index << ": "
                       << e.message << "\n";
    }

    write_file_atomic(cfg.report_path(), md.str());
    std::cout << "report written to " << cfg.report_path().string() << "\n";
}

} // namespace tsadv

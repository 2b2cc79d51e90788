// weclust: batch command line for the document clustering pipeline.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "weclust/weclust.hpp"

namespace fs = std::filesystem;
using namespace weclust;

namespace {

/// Registers --<key> for every config key (underscores spelled as dashes).
class ConfigFlags {
public:
    void attach(CLI::App& app) {
        for (auto key : kConfigKeys) {
            std::string flag = "--" + std::string(key);
            for (auto& ch : flag)
                if (ch == '_') ch = '-';
            app.add_option(flag, values_[std::string(key)], "override config key " + std::string(key));
        }
    }

    void apply(PipelineConfig& cfg, CLI::App& app) const {
        for (const auto& [key, value] : values_) {
            std::string flag = "--" + key;
            for (auto& ch : flag)
                if (ch == '_') ch = '-';
            if (app.count(flag) > 0) apply_setting(cfg, key, value, fs::current_path());
        }
    }

private:
    std::map<std::string, std::string> values_;
};

void print_metrics(const EvalReport& r) {
    write_metrics_csv({r}, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    configure_threads_from_env();

    CLI::App app{"weclust: word-embedding concept clustering of document collections"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute the full pipeline");
    std::string config_path;
    run->add_option("--config", config_path, "key=value configuration file");
    ConfigFlags run_flags;
    run_flags.attach(*run);

    // elbow
    auto* elbow = app.add_subcommand("elbow", "re-run the K_voc elbow sweep of a prior run");
    std::string elbow_run, elbow_out;
    elbow->add_option("--run", elbow_run, "run directory")->required();
    elbow->add_option("--out", elbow_out, "output directory (default: the run directory)");
    ConfigFlags elbow_flags;
    elbow_flags.attach(*elbow);

    // cluster-docs
    auto* docs = app.add_subcommand("cluster-docs", "re-cluster the stored CD matrix of a prior run");
    std::string docs_run, docs_out;
    docs->add_option("--run", docs_run, "run directory")->required();
    docs->add_option("--out", docs_out, "output directory (default: the run directory)");
    ConfigFlags docs_flags;
    docs_flags.attach(*docs);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "metrics from label files");
    std::string pred_path, truth_path, points_path, eval_out, eval_run_dir, eval_name, eval_dataset;
    std::optional<std::uint64_t> eval_seed;
    eval->add_option("--pred", pred_path, "predicted labels CSV (id,label)");
    eval->add_option("--truth", truth_path, "ground-truth labels CSV (id,label)");
    eval->add_option("--points", points_path, "CD matrix CSV for the silhouette");
    eval->add_option("--run", eval_run_dir, "take pred/truth/points and names from a run directory");
    eval->add_option("--run-name", eval_name, "run column of the metrics row");
    eval->add_option("--dataset", eval_dataset, "dataset column of the metrics row");
    eval->add_option("--seed", eval_seed, "seed column of the metrics row");
    eval->add_option("--out", eval_out, "write the metrics CSV here instead of stdout");

    // report
    auto* rep = app.add_subcommand("report", "metric tables and percentage changes between runs");
    std::string baseline, proposed, rep_out = "report";
    std::vector<std::string> inputs;
    rep->add_option("--baseline", baseline, "baseline run: directory, metrics CSV, or run name in --input");
    rep->add_option("--proposed", proposed, "proposed run: directory, metrics CSV, or run name in --input");
    rep->add_option("--input", inputs, "additional metrics CSVs or run directories");
    rep->add_option("--out", rep_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code(ErrorKind::config);
    }

    try {
        if (*run) {
            PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : read_config(config_path);
            run_flags.apply(cfg, *run);
            auto result = run_pipeline(cfg);
            std::cerr << "run written to " << result.dir.string() << " (k_voc=" << result.k_voc << ")\n";
            print_metrics(result.metrics);
        } else if (*elbow) {
            PipelineConfig cfg = load_run_config(elbow_run);
            elbow_flags.apply(cfg, *elbow);
            auto curve = run_elbow_stage(cfg, elbow_run, elbow_out.empty() ? fs::path(elbow_run) : fs::path(elbow_out));
            write_elbow_csv(curve, std::cout);
            std::cerr << "chosen k_voc=" << curve.chosen_k << "\n";
        } else if (*docs) {
            PipelineConfig cfg = load_run_config(docs_run);
            docs_flags.apply(cfg, *docs);
            auto r = run_cluster_docs_stage(cfg, docs_run, docs_out.empty() ? fs::path(docs_run) : fs::path(docs_out));
            print_metrics(r);
        } else if (*eval) {
            std::optional<fs::path> truth, points;
            EvalReport defaults;
            if (!eval_run_dir.empty()) {
                fs::path dir = eval_run_dir;
                auto cfg = load_run_config(dir);
                if (pred_path.empty()) pred_path = (dir / run_files::labels).string();
                if (truth_path.empty() && fs::exists(dir / run_files::truth)) truth_path = (dir / run_files::truth).string();
                if (points_path.empty()) points_path = (dir / run_files::cd_matrix).string();
                defaults.run = cfg.resolved_run_name();
                defaults.dataset = cfg.resolved_dataset();
                defaults.seed = cfg.seed;
            }
            if (pred_path.empty()) throw ConfigError("evaluate: --pred or --run is required");
            if (!truth_path.empty()) truth = truth_path;
            if (!points_path.empty()) points = points_path;
            auto r = evaluate_files(pred_path, truth, points);
            r.run = eval_name.empty() ? (defaults.run.empty() ? "evaluate" : defaults.run) : eval_name;
            r.dataset = eval_dataset.empty() ? (defaults.dataset.empty() ? "n/a" : defaults.dataset) : eval_dataset;
            r.seed = eval_seed ? eval_seed : defaults.seed;
            if (eval_out.empty()) {
                print_metrics(r);
            } else {
                std::ostringstream ss;
                write_metrics_csv({r}, ss);
                csv::write_file(eval_out, ss.str());
            }
        } else if (*rep) {
            std::vector<EvalReport> runs;
            auto load = [&](const fs::path& p) {
                auto file = fs::is_directory(p) ? p / run_files::metrics : p;
                auto rows = read_metrics_csv(file);
                if (rows.empty()) throw DataError("report: no rows in " + file.string());
                std::string name = rows.front().run;
                runs.insert(runs.end(), rows.begin(), rows.end());
                return name;
            };
            for (const auto& in : inputs) load(in);
            std::optional<std::string> base_name, prop_name;
            if (!baseline.empty()) base_name = fs::exists(baseline) ? load(baseline) : baseline;
            if (!proposed.empty()) prop_name = fs::exists(proposed) ? load(proposed) : proposed;
            if (runs.empty()) throw ConfigError("report: no runs given");
            auto paths = write_report(runs, rep_out, base_name, prop_name);
            std::cout << csv::read_file(paths.table);
            if (paths.percentages) std::cerr << "percentage changes in " << paths.percentages->string() << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "weclust: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "weclust: " << e.what() << "\n";
        return exit_code(ErrorKind::data);
    }
    return 0;
}

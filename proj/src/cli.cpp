#include "tvmf/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvmf/checks.hpp"
#include "tvmf/config.hpp"
#include "tvmf/report.hpp"

namespace tvmf {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_kappa_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("invalid kappa value '" + item + "'");
        }
        if (used != item.size()) throw UsageError("invalid kappa value '" + item + "'");
        if (!(v >= 0.0)) throw UsageError("kappa values must be >= 0");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("kappa list is empty");
    return out;
}

ExperimentConfig resolve_config(const std::string& path, const std::string& out_dir,
                                const std::vector<std::uint64_t>& seeds) {
    ExperimentConfig cfg = load_config(path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!seeds.empty()) cfg.run.seeds = seeds;
    return cfg;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
    const TaskStream stream = load_stream(cfg.data);
    const ExperimentResult result = run_experiment(stream, cfg.run);
    write_run_outputs(cfg.output_dir, result, cfg);
    out << metrics_csv_header() << metrics_csv_row(result.metrics, cfg);
    return kExitOk;
}

std::string kappa_tag(double kappa) {
    std::string s = format_g17(kappa);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

int cmd_sweep(const ExperimentConfig& base, const std::vector<double>& kappas, std::ostream& out) {
    const TaskStream stream = load_stream(base.data);
    std::string table = "kappa," + metrics_csv_header();
    for (double kappa : kappas) {
        ExperimentConfig cfg = base;
        const bool vmf = base.run.loss.kind.tag() == SimilarityTag::VonMisesFisher;
        cfg.run.loss.kind = vmf ? SimilarityKind::vmf(kappa) : SimilarityKind::tvmf(kappa);
        cfg.output_dir = base.output_dir / ("kappa_" + kappa_tag(kappa));
        const ExperimentResult result = run_experiment(stream, cfg.run);
        write_run_outputs(cfg.output_dir, result, cfg);
        table += format_g17(kappa) + "," + metrics_csv_row(result.metrics, cfg);
    }
    std::filesystem::create_directories(base.output_dir);
    write_text_file(base.output_dir / "sweep.csv", table);
    out << table;
    return kExitOk;
}

int cmd_curve(const std::string& kind_name, double kappa, std::size_t grid_size,
              const std::string& out_path, std::ostream& out) {
    SimilarityKind kind = SimilarityKind::cosine();
    try {
        kind = SimilarityKind::from_name(kind_name, kind_name == "cosine" ? 0.0 : kappa);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (grid_size < 2) throw UsageError("grid size must be >= 2");
    const std::vector<double> grid = uniform_cos_grid(grid_size);
    const std::string csv = curve_csv(similarity_curve(kind, grid));
    if (out_path.empty()) {
        out << csv;
    } else {
        const std::filesystem::path p(out_path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        write_text_file(p, csv);
    }
    return kExitOk;
}

int cmd_check(std::ostream& out) {
    const auto results = run_check_battery();
    out << checks_json(results);
    for (const auto& r : results)
        if (!r.passed) return kExitFailure;
    return kExitOk;
}

int cmd_loss_check(const std::string& kind_name, double kappa, double temperature, std::uint64_t seed,
                   std::ostream& out) {
    SimilarityKind kind = SimilarityKind::cosine();
    try {
        kind = SimilarityKind::from_name(kind_name, kind_name == "cosine" ? 0.0 : kappa);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    const LossCheckReport r = loss_check(seed, kind, temperature, 6, 8);
    nlohmann::ordered_json doc{{"similarity", kind.name()},
                               {"kappa", kind.kappa()},
                               {"temperature", temperature},
                               {"views", r.views},
                               {"anchors", r.anchors},
                               {"value", r.value},
                               {"max_fd_rel_error", r.max_fd_rel_error}};
    out << doc.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"t-vMF continual representation-learning lab", "tvmf-cl"};
    app.require_subcommand(1);

    std::string config_path, out_dir, kappas_text, kind_name = "tvmf", curve_out;
    std::vector<std::uint64_t> seeds;
    double kappa = 16.0, temperature = 0.5;
    std::size_t grid_size = 201;
    std::uint64_t seed = 0;

    auto* train = app.add_subcommand("train", "Run a continual-learning experiment from a config file");
    train->add_option("--config", config_path, "Experiment config (TOML)")->required();
    train->add_option("--out", out_dir, "Output directory (overrides the config)");
    train->add_option("--seeds", seeds, "Comma-separated seed list")->delimiter(',');

    auto* sweep = app.add_subcommand("sweep", "Run one experiment per kappa value");
    sweep->add_option("--config", config_path, "Experiment config (TOML)")->required();
    sweep->add_option("--kappa", kappas_text, "Comma-separated kappa list, e.g. 4,16,32")->required();
    sweep->add_option("--out", out_dir, "Output directory (overrides the config)");
    sweep->add_option("--seeds", seeds, "Comma-separated seed list")->delimiter(',');

    auto* curve = app.add_subcommand("curve", "Export a similarity curve as CSV");
    curve->add_option("--kind", kind_name, "cosine, vmf or tvmf");
    curve->add_option("--kappa", kappa, "Concentration");
    curve->add_option("--grid", grid_size, "Number of cosine grid points");
    curve->add_option("--out", curve_out, "Output CSV path (default: stdout)");

    auto* check = app.add_subcommand("check", "Run the built-in verification battery");

    auto* loss = app.add_subcommand("loss-check", "Loss value and finite-difference error on a random batch");
    loss->add_option("--kind", kind_name, "cosine, vmf or tvmf");
    loss->add_option("--kappa", kappa, "Concentration");
    loss->add_option("--temperature", temperature, "Softmax temperature");
    loss->add_option("--seed", seed, "Batch seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(resolve_config(config_path, out_dir, seeds), out);
        if (*sweep) {
            const auto kappas = parse_kappa_list(kappas_text);
            return cmd_sweep(resolve_config(config_path, out_dir, seeds), kappas, out);
        }
        if (*curve) return cmd_curve(kind_name, kappa, grid_size, curve_out, out);
        if (*check) return cmd_check(out);
        if (*loss) return cmd_loss_check(kind_name, kappa, temperature, seed, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace tvmf

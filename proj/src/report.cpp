#include "tvmf/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tvmf/checkpoint.hpp"

namespace tvmf {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string metrics_json(const RunMetrics& metrics, const ExperimentConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["similarity"] = cfg.run.loss.kind.name();
    doc["kappa"] = cfg.run.loss.kind.kappa();
    doc["buffer"] = cfg.run.buffer_capacity;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& s : metrics.per_seed) {
        nlohmann::ordered_json run;
        run["seed"] = s.seed;
        run["class_il"] = s.report.class_il;
        run["task_il"] = s.report.task_il;
        auto per_task = nlohmann::ordered_json::array();
        for (std::size_t t = 0; t < s.report.per_task_class_il.size(); ++t) {
            per_task.push_back({{"task", t},
                                {"class_il", s.report.per_task_class_il[t]},
                                {"task_il", s.report.per_task_task_il[t]}});
        }
        run["per_task"] = std::move(per_task);
        runs.push_back(std::move(run));
    }
    doc["runs"] = std::move(runs);
    doc["aggregate"] = {{"class_il_mean", metrics.class_il.mean},
                        {"class_il_std", metrics.class_il.stddev},
                        {"task_il_mean", metrics.task_il.mean},
                        {"task_il_std", metrics.task_il.stddev}};
    return doc.dump(2) + "\n";
}

std::string metrics_csv_header() {
    return "similarity,kappa,buffer,seeds,class_il_mean,class_il_std,task_il_mean,task_il_std\n";
}

std::string metrics_csv_row(const RunMetrics& m, const ExperimentConfig& cfg) {
    return cfg.run.loss.kind.name() + "," + format_g17(cfg.run.loss.kind.kappa()) + "," +
           std::to_string(cfg.run.buffer_capacity) + "," + std::to_string(m.per_seed.size()) + "," +
           format_g17(m.class_il.mean) + "," + format_g17(m.class_il.stddev) + "," +
           format_g17(m.task_il.mean) + "," + format_g17(m.task_il.stddev) + "\n";
}

std::string loss_log_csv(const std::vector<EpochLoss>& history) {
    std::string out = "task,epoch,loss\n";
    for (const auto& h : history) {
        out += std::to_string(h.task) + "," + std::to_string(h.epoch) + "," + format_g17(h.loss) + "\n";
    }
    return out;
}

std::string curve_csv(const std::vector<CurvePoint>& rows) {
    std::string out = "cos,value\n";
    for (const auto& r : rows) out += format_g17(r.cos) + "," + format_g17(r.value) + "\n";
    return out;
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
}

void write_run_outputs(const std::filesystem::path& dir, const ExperimentResult& result,
                       const ExperimentConfig& cfg) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "metrics.json", metrics_json(result.metrics, cfg));
    write_text_file(dir / "metrics.csv", metrics_csv_header() + metrics_csv_row(result.metrics, cfg));
    write_text_file(dir / "config.toml", to_toml(cfg));
    for (const auto& run : result.runs) {
        const std::string tag = std::to_string(run.metrics.seed);
        write_text_file(dir / ("loss_seed" + tag + ".csv"), loss_log_csv(run.state.history));
        save_checkpoint(dir / ("checkpoint_seed" + tag + ".ckpt"),
                        Checkpoint{run.state.net, run.state.task_index, run.state.buffer});
    }
}

}  // namespace tvmf

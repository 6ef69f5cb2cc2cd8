#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tvmf/config.hpp"
#include "tvmf/continual.hpp"
#include "tvmf/eval.hpp"

namespace tvmf {

/// %.17g, the CSV number format.
std::string format_g17(double v);

/// {"runs": [{"seed", "class_il", "task_il", "per_task": [...]}, ...],
///  "aggregate": {...}}
std::string metrics_json(const RunMetrics& metrics, const ExperimentConfig& cfg);

std::string metrics_csv_header();
std::string metrics_csv_row(const RunMetrics& metrics, const ExperimentConfig& cfg);

/// `task,epoch,loss` rows.
std::string loss_log_csv(const std::vector<EpochLoss>& history);

/// `cos,value` rows.
std::string curve_csv(const std::vector<CurvePoint>& rows);

/// Writes metrics.json, metrics.csv, config.toml and per seed
/// loss_seed<k>.csv and checkpoint_seed<k>.ckpt into `dir`.
void write_run_outputs(const std::filesystem::path& dir, const ExperimentResult& result,
                       const ExperimentConfig& cfg);

void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace tvmf

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tvmf/continual.hpp"
#include "tvmf/data.hpp"

namespace tvmf {

enum class DatasetKind { Synthetic, Cifar10 };

struct DataSource {
    DatasetKind kind = DatasetKind::Synthetic;
    SyntheticConfig synthetic;
    /// CIFAR-10 directory; empty means $TVMF_CL_DATA_DIR.
    std::string cifar_path;
};

struct ExperimentConfig {
    DataSource data;
    RunConfig run;
    std::filesystem::path output_dir = "runs/default";
};

/// Parse failure with a 1-based source position (0 when not tied to a line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::size_t line, std::size_t column);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Parses a TOML-style config: `[section]` headers and `key = value` lines
/// with strings, booleans, numbers and flat numeric arrays. Unknown sections
/// or keys, duplicates and type errors raise ConfigError. Keys not present
/// keep their defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Writes every setting; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const ExperimentConfig& cfg);

/// Builds the task stream the config selects.
TaskStream load_stream(const DataSource& data);

}  // namespace tvmf

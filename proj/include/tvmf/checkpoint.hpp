#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "tvmf/buffer.hpp"
#include "tvmf/encoder.hpp"

namespace tvmf {

inline constexpr const char* kCheckpointMagic = "TVMF-CKPT-1";

/// Text checkpoint layout:
///
///   TVMF-CKPT-1
///   task_index <n>
///   tensor <name> <rows> <cols>        (one per weight/bias, backbone then head)
///   <rows*cols values, %.17g, space separated>
///   buffer <capacity> <seen> <count> <dim>   (optional)
///   sample <id> <label> <task> <dim values> (count lines)
///   end
///
/// Tensor names are backbone.<k>.weight, backbone.<k>.bias, head.<k>.weight,
/// head.<k>.bias. Weights are rows = out, cols = in; biases have cols = 1.
/// Values print with 17 significant digits, so doubles round-trip exactly.
struct Checkpoint {
    EncoderNet net;
    std::size_t task_index = 0;
    std::optional<ReplayBuffer> buffer;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace tvmf

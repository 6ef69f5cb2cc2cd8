#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace tvmf {

using Rng = std::mt19937_64;

struct Sample {
    std::vector<double> input;
    int label = 0;
    int task = 0;
    /// Unique within a stream; used to audit which samples a consumer touched.
    std::uint64_t id = 0;
};

struct Task {
    std::vector<int> classes;
    std::vector<Sample> train;
    std::vector<Sample> test;
};

/// Channel-major image layout of a flattened input.
struct ImageShape {
    std::size_t channels = 3;
    std::size_t height = 32;
    std::size_t width = 32;

    std::size_t size() const { return channels * height * width; }
};

struct TaskStream {
    std::vector<Task> tasks;
    std::size_t num_classes = 0;
    std::size_t input_dim = 0;
    /// Set for image data; selects the image augmentation path.
    std::optional<ImageShape> image;

    /// Task that owns a class, or -1.
    int task_of_class(int label) const;
};

struct SyntheticConfig {
    std::uint64_t seed = 0;
    std::size_t num_classes = 10;
    std::size_t dim = 32;
    std::size_t per_class = 250;
    double spread = 0.15;
    std::size_t classes_per_task = 2;
};

/// Gaussian class clusters: class c is mean_c + spread * N(0, I) where mean_c
/// is a random unit direction. Classes are grouped in order into tasks and
/// each class is split 80/20 into train/test.
TaskStream synthetic_stream(const SyntheticConfig& cfg);

/// Mean and std per image channel, applied after scaling pixels to [0, 1].
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixels = 3072;

struct CifarRecord {
    std::uint8_t label = 0;
    std::array<std::uint8_t, kCifarPixels> pixels{};
};

/// Parses a CIFAR-10 binary batch (records of 1 label byte + 3072 pixels).
/// Throws std::runtime_error naming the byte offset on truncation or an
/// invalid label.
std::vector<CifarRecord> parse_cifar10_batch(std::span<const std::uint8_t> bytes);
std::vector<CifarRecord> read_cifar10_batch(const std::filesystem::path& file);

ChannelStats channel_stats(std::span<const CifarRecord> records);
std::vector<double> normalize_record(const CifarRecord& r, const ChannelStats& stats);

/// Inverse of normalize_record, back to the 3073-byte wire form.
std::array<std::uint8_t, kCifarRecordBytes> encode_cifar10_record(int label,
                                                                  std::span<const double> input,
                                                                  const ChannelStats& stats);

/// Loads data_batch_1..5.bin and test_batch.bin from `dir`. Classes
/// {0,1},{2,3},...,{8,9} become tasks 0..4. Normalization uses statistics
/// of the training records.
TaskStream load_cifar10_binary(const std::filesystem::path& dir);

/// Two-view augmentation parameters.
struct AugmentConfig {
    double noise_sigma = 0.05;
    /// Synthetic mode: each coordinate is scaled by U[1 - j, 1 + j].
    double scale_jitter = 0.1;
    std::size_t crop_padding = 4;
    double flip_probability = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One augmented view. Image mode (shape given): zero-pad and random crop,
/// horizontal flip, then Gaussian noise. Otherwise: per-coordinate scale
/// jitter then Gaussian noise.
std::vector<double> augment(std::span<const double> input, const AugmentConfig& cfg,
                            const std::optional<ImageShape>& image, Rng& rng);

std::pair<std::vector<double>, std::vector<double>> two_views(const Sample& sample,
                                                              const AugmentConfig& cfg,
                                                              const std::optional<ImageShape>& image,
                                                              Rng& rng);

}  // namespace tvmf

#include "tvmf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace tvmf {

int TaskStream::task_of_class(int label) const {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& cs = tasks[t].classes;
        if (std::find(cs.begin(), cs.end(), label) != cs.end()) return static_cast<int>(t);
    }
    return -1;
}

TaskStream synthetic_stream(const SyntheticConfig& cfg) {
    if (cfg.num_classes == 0 || cfg.num_classes % 2 != 0) {
        throw std::invalid_argument("synthetic stream needs a positive, even class count");
    }
    if (cfg.classes_per_task == 0 || cfg.num_classes % cfg.classes_per_task != 0) {
        throw std::invalid_argument("class count must be a multiple of classes_per_task");
    }
    if (cfg.dim < 2) throw std::invalid_argument("synthetic dimension must be >= 2");
    if (cfg.per_class < 2) throw std::invalid_argument("need at least 2 samples per class");
    if (!(cfg.spread >= 0.0)) throw std::invalid_argument("spread must be nonnegative");

    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    TaskStream stream;
    stream.num_classes = cfg.num_classes;
    stream.input_dim = cfg.dim;
    stream.tasks.resize(cfg.num_classes / cfg.classes_per_task);

    const std::size_t n_train =
        std::clamp<std::size_t>((cfg.per_class * 4 + 2) / 5, 1, cfg.per_class - 1);
    std::uint64_t next_id = 0;
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
        std::vector<double> mean(cfg.dim);
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (double& m : mean) {
                m = normal(rng);
                n2 += m * m;
            }
        } while (n2 == 0.0);
        for (double& m : mean) m /= std::sqrt(n2);

        const int task = static_cast<int>(c / cfg.classes_per_task);
        Task& t = stream.tasks[task];
        t.classes.push_back(static_cast<int>(c));
        for (std::size_t k = 0; k < cfg.per_class; ++k) {
            Sample s;
            s.input.resize(cfg.dim);
            for (std::size_t d = 0; d < cfg.dim; ++d) s.input[d] = mean[d] + cfg.spread * normal(rng);
            s.label = static_cast<int>(c);
            s.task = task;
            s.id = next_id++;
            (k < n_train ? t.train : t.test).push_back(std::move(s));
        }
    }
    return stream;
}

std::vector<CifarRecord> parse_cifar10_batch(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % kCifarRecordBytes != 0) {
        const std::size_t offset = bytes.size() - bytes.size() % kCifarRecordBytes;
        throw std::runtime_error("truncated CIFAR-10 record at byte offset " + std::to_string(offset));
    }
    std::vector<CifarRecord> records(bytes.size() / kCifarRecordBytes);
    for (std::size_t r = 0; r < records.size(); ++r) {
        const std::size_t offset = r * kCifarRecordBytes;
        const std::uint8_t label = bytes[offset];
        if (label > 9) {
            throw std::runtime_error("invalid label " + std::to_string(label) + " at byte offset " +
                                     std::to_string(offset));
        }
        records[r].label = label;
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(offset + 1), kCifarPixels,
                    records[r].pixels.begin());
    }
    return records;
}

std::vector<CifarRecord> read_cifar10_batch(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open CIFAR-10 batch " + file.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_cifar10_batch(bytes);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(file.string() + ": " + e.what());
    }
}

ChannelStats channel_stats(std::span<const CifarRecord> records) {
    ChannelStats stats;
    if (records.empty()) throw std::invalid_argument("no records to compute channel statistics");
    constexpr std::size_t plane = kCifarPixels / 3;
    for (std::size_t ch = 0; ch < 3; ++ch) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& r : records) {
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = r.pixels[ch * plane + i] / 255.0;
                sum += v;
                sum2 += v * v;
            }
        }
        const double n = static_cast<double>(records.size() * plane);
        const double mean = sum / n;
        stats.mean[ch] = mean;
        stats.stddev[ch] = std::sqrt(std::max(sum2 / n - mean * mean, 1e-12));
    }
    return stats;
}

std::vector<double> normalize_record(const CifarRecord& r, const ChannelStats& stats) {
    constexpr std::size_t plane = kCifarPixels / 3;
    std::vector<double> out(kCifarPixels);
    for (std::size_t i = 0; i < kCifarPixels; ++i) {
        const std::size_t ch = i / plane;
        out[i] = (r.pixels[i] / 255.0 - stats.mean[ch]) / stats.stddev[ch];
    }
    return out;
}

std::array<std::uint8_t, kCifarRecordBytes> encode_cifar10_record(int label,
                                                                  std::span<const double> input,
                                                                  const ChannelStats& stats) {
    if (label < 0 || label > 9) throw std::invalid_argument("invalid label");
    if (input.size() != kCifarPixels) throw std::invalid_argument("CIFAR record needs 3072 values");
    constexpr std::size_t plane = kCifarPixels / 3;
    std::array<std::uint8_t, kCifarRecordBytes> bytes{};
    bytes[0] = static_cast<std::uint8_t>(label);
    for (std::size_t i = 0; i < kCifarPixels; ++i) {
        const std::size_t ch = i / plane;
        const double v = std::round((input[i] * stats.stddev[ch] + stats.mean[ch]) * 255.0);
        bytes[i + 1] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return bytes;
}

TaskStream load_cifar10_binary(const std::filesystem::path& dir) {
    std::vector<CifarRecord> train;
    for (int b = 1; b <= 5; ++b) {
        auto part = read_cifar10_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"));
        train.insert(train.end(), part.begin(), part.end());
    }
    const std::vector<CifarRecord> test = read_cifar10_batch(dir / "test_batch.bin");
    const ChannelStats stats = channel_stats(train);

    TaskStream stream;
    stream.num_classes = 10;
    stream.input_dim = kCifarPixels;
    stream.image = ImageShape{};
    stream.tasks.resize(5);
    for (int t = 0; t < 5; ++t) stream.tasks[t].classes = {2 * t, 2 * t + 1};

    std::uint64_t next_id = 0;
    auto add = [&](const std::vector<CifarRecord>& records, bool is_train) {
        for (const auto& r : records) {
            Sample s{normalize_record(r, stats), r.label, r.label / 2, next_id++};
            Task& t = stream.tasks[s.task];
            (is_train ? t.train : t.test).push_back(std::move(s));
        }
    };
    add(train, true);
    add(test, false);
    return stream;
}

void AugmentConfig::validate() const {
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
    if (!(scale_jitter >= 0.0 && scale_jitter < 1.0)) {
        throw std::invalid_argument("scale jitter must lie in [0, 1)");
    }
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
        throw std::invalid_argument("flip probability must lie in [0, 1]");
    }
}

namespace {

std::vector<double> crop_and_flip(std::span<const double> input, const ImageShape& shape,
                                  const AugmentConfig& cfg, Rng& rng) {
    if (input.size() != shape.size()) throw std::invalid_argument("input does not match image shape");
    const auto pad = static_cast<long>(cfg.crop_padding);
    long dy = 0, dx = 0;
    if (pad > 0) {
        std::uniform_int_distribution<long> offset(-pad, pad);
        dy = offset(rng);
        dx = offset(rng);
    }
    bool flip = false;
    if (cfg.flip_probability > 0.0) {
        flip = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.flip_probability;
    }
    const auto h = static_cast<long>(shape.height);
    const auto w = static_cast<long>(shape.width);
    std::vector<double> out(input.size(), 0.0);
    for (std::size_t ch = 0; ch < shape.channels; ++ch) {
        const std::size_t base = ch * shape.height * shape.width;
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                const long sy = y + dy;
                const long sx0 = flip ? (w - 1 - x) : x;
                const long sx = sx0 + dx;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                out[base + static_cast<std::size_t>(y * w + x)] =
                    input[base + static_cast<std::size_t>(sy * w + sx)];
            }
        }
    }
    return out;
}

}  // namespace

std::vector<double> augment(std::span<const double> input, const AugmentConfig& cfg,
                            const std::optional<ImageShape>& image, Rng& rng) {
    std::vector<double> out;
    if (image) {
        out = crop_and_flip(input, *image, cfg, rng);
    } else {
        out.assign(input.begin(), input.end());
        if (cfg.scale_jitter > 0.0) {
            std::uniform_real_distribution<double> scale(1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter);
            for (double& v : out) v *= scale(rng);
        }
    }
    if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (double& v : out) v += noise(rng);
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> two_views(const Sample& sample,
                                                              const AugmentConfig& cfg,
                                                              const std::optional<ImageShape>& image,
                                                              Rng& rng) {
    auto first = augment(sample.input, cfg, image, rng);
    auto second = augment(sample.input, cfg, image, rng);
    return {std::move(first), std::move(second)};
}

}  // namespace tvmf

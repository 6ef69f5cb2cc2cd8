#include "tvmf/buffer.hpp"

#include <algorithm>
#include <stdexcept>

namespace tvmf {

void ReplayBuffer::reservoir_insert(const Sample& sample, Rng& rng) {
    if (items_.size() < capacity_) {
        items_.push_back(sample);
    } else if (capacity_ > 0) {
        std::uniform_int_distribution<std::uint64_t> pick(0, seen_);
        const std::uint64_t j = pick(rng);
        if (j < capacity_) items_[static_cast<std::size_t>(j)] = sample;
    }
    ++seen_;
}

std::vector<Sample> ReplayBuffer::sample(std::size_t k, Rng& rng) const {
    std::vector<Sample> out;
    if (k == 0) return out;
    if (items_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(items_[pick(rng)]);
    return out;
}

ReplayBuffer ReplayBuffer::restore(std::size_t capacity, std::uint64_t seen_count,
                                   std::vector<Sample> items) {
    if (items.size() > capacity) throw std::invalid_argument("buffer contents exceed capacity");
    if (items.size() != std::min<std::uint64_t>(capacity, seen_count)) {
        throw std::invalid_argument("buffer size inconsistent with seen count");
    }
    ReplayBuffer buf(capacity);
    buf.seen_ = seen_count;
    buf.items_ = std::move(items);
    return buf;
}

}  // namespace tvmf

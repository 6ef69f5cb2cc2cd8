#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tvmf/data.hpp"

namespace tvmf {

enum class BufferPolicy { Reservoir };

/// Fixed-capacity memory of raw past samples.
///
/// Invariant: size() == min(capacity(), seen_count()).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, BufferPolicy policy = BufferPolicy::Reservoir)
        : capacity_(capacity), policy_(policy) {}

    /// Reservoir step: append while below capacity, otherwise draw
    /// j ~ U{0..seen_count} and overwrite slot j when j < capacity.
    void reservoir_insert(const Sample& sample, Rng& rng);

    /// `k` draws with replacement. Throws std::logic_error if k > 0 and the
    /// buffer is empty.
    std::vector<Sample> sample(std::size_t k, Rng& rng) const;

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::uint64_t seen_count() const { return seen_; }
    BufferPolicy policy() const { return policy_; }
    const std::vector<Sample>& items() const { return items_; }

    /// Rebuilds a buffer from checkpointed contents.
    static ReplayBuffer restore(std::size_t capacity, std::uint64_t seen_count, std::vector<Sample> items);

private:
    std::size_t capacity_;
    BufferPolicy policy_;
    std::uint64_t seen_ = 0;
    std::vector<Sample> items_;
};

}  // namespace tvmf

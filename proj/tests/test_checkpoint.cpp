#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "tvmf/checkpoint.hpp"

using namespace tvmf;

namespace {

EncoderNet small_net() {
    const std::vector<std::size_t> backbone{5, 7, 6}, head{6, 4, 3};
    return init_encoder(3, backbone, head);
}

}  // namespace

TEST_CASE("network and buffer round-trip exactly") {
    Checkpoint ckpt;
    ckpt.net = small_net();
    ckpt.task_index = 4;
    Rng rng(1);
    ReplayBuffer buf(3);
    for (std::uint64_t i = 0; i < 10; ++i) {
        Sample s;
        s.input = {0.1 * static_cast<double>(i), 1.0 / 3.0, -2.5};
        s.label = static_cast<int>(i % 4);
        s.task = static_cast<int>(i / 4);
        s.id = i;
        buf.reservoir_insert(s, rng);
    }
    ckpt.buffer = buf;

    std::stringstream ss;
    write_checkpoint(ss, ckpt);
    const Checkpoint back = read_checkpoint(ss);
    CHECK(back.task_index == 4);
    CHECK(flatten(back.net) == flatten(ckpt.net));
    CHECK(parameter_checksum(back.net) == parameter_checksum(ckpt.net));
    REQUIRE(back.buffer.has_value());
    CHECK(back.buffer->capacity() == 3);
    CHECK(back.buffer->seen_count() == 10);
    REQUIRE(back.buffer->size() == buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k) {
        CHECK(back.buffer->items()[k].id == buf.items()[k].id);
        CHECK(back.buffer->items()[k].label == buf.items()[k].label);
        CHECK(back.buffer->items()[k].task == buf.items()[k].task);
        CHECK(back.buffer->items()[k].input == buf.items()[k].input);
    }

    std::stringstream again;
    write_checkpoint(again, back);
    std::stringstream first;
    write_checkpoint(first, ckpt);
    CHECK(again.str() == first.str());
}

TEST_CASE("a checkpoint without a buffer") {
    Checkpoint ckpt;
    ckpt.net = small_net();
    std::stringstream ss;
    write_checkpoint(ss, ckpt);
    const auto back = read_checkpoint(ss);
    CHECK(!back.buffer.has_value());
    CHECK(flatten(back.net) == flatten(ckpt.net));
}

TEST_CASE("corrupt input is rejected") {
    Checkpoint ckpt;
    ckpt.net = small_net();
    std::stringstream ss;
    write_checkpoint(ss, ckpt);
    const std::string good = ss.str();

    std::stringstream bad_magic("TVMF-CKPT-0" + good.substr(good.find('\n')));
    CHECK_THROWS(read_checkpoint(bad_magic));

    std::stringstream truncated(good.substr(0, good.size() / 2));
    CHECK_THROWS(read_checkpoint(truncated));

    std::stringstream empty;
    CHECK_THROWS(read_checkpoint(empty));
}

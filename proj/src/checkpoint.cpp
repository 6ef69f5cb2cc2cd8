#include "tvmf/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tvmf {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_values(std::ostream& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << fmt17(values[i]);
    out << '\n';
}

void write_layers(std::ostream& out, const std::string& group, const std::vector<DenseLayer>& layers) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& l = layers[k];
        const std::string prefix = group + "." + std::to_string(k);
        out << "tensor " << prefix << ".weight " << l.out << ' ' << l.in << '\n';
        write_values(out, l.weight);
        out << "tensor " << prefix << ".bias " << l.out << " 1\n";
        write_values(out, l.bias);
    }
}

[[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("malformed checkpoint: " + what);
}

std::string expect_word(std::istream& in, const char* what) {
    std::string w;
    if (!(in >> w)) fail(std::string("expected ") + what);
    return w;
}

template <typename T>
T expect_number(std::istream& in, const char* what) {
    T v{};
    if (!(in >> v)) fail(std::string("expected numeric ") + what);
    return v;
}

std::vector<double> read_values(std::istream& in, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = expect_number<double>(in, "tensor value");
    return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out << kCheckpointMagic << '\n';
    out << "task_index " << ckpt.task_index << '\n';
    write_layers(out, "backbone", ckpt.net.backbone);
    write_layers(out, "head", ckpt.net.head);
    if (ckpt.buffer) {
        const auto& buf = *ckpt.buffer;
        const std::size_t dim = buf.empty() ? 0 : buf.items().front().input.size();
        out << "buffer " << buf.capacity() << ' ' << buf.seen_count() << ' ' << buf.size() << ' ' << dim
            << '\n';
        for (const auto& s : buf.items()) {
            out << "sample " << s.id << ' ' << s.label << ' ' << s.task;
            for (double v : s.input) out << ' ' << fmt17(v);
            out << '\n';
        }
    }
    out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
    if (expect_word(in, "magic") != kCheckpointMagic) fail("bad magic, expected TVMF-CKPT-1");
    Checkpoint ckpt;
    if (expect_word(in, "task_index") != "task_index") fail("expected task_index");
    ckpt.task_index = expect_number<std::size_t>(in, "task index");

    for (;;) {
        const std::string word = expect_word(in, "section");
        if (word == "end") break;
        if (word == "tensor") {
            const std::string name = expect_word(in, "tensor name");
            const auto rows = expect_number<std::size_t>(in, "rows");
            const auto cols = expect_number<std::size_t>(in, "cols");
            std::vector<double> values = read_values(in, rows * cols);

            const auto dot1 = name.find('.');
            const auto dot2 = name.rfind('.');
            if (dot1 == std::string::npos || dot1 == dot2) fail("bad tensor name " + name);
            const std::string group = name.substr(0, dot1);
            const std::size_t index = std::stoul(name.substr(dot1 + 1, dot2 - dot1 - 1));
            const std::string part = name.substr(dot2 + 1);
            auto& layers = group == "backbone" ? ckpt.net.backbone
                           : group == "head"   ? ckpt.net.head
                                               : (fail("unknown tensor group " + group), ckpt.net.head);
            if (index == layers.size()) layers.emplace_back();
            if (index + 1 != layers.size()) fail("tensor " + name + " out of order");
            DenseLayer& l = layers.back();
            if (part == "weight") {
                l.out = rows;
                l.in = cols;
                l.weight = std::move(values);
            } else if (part == "bias") {
                if (cols != 1 || rows != l.out) fail("bias shape of " + name);
                l.bias = std::move(values);
            } else {
                fail("unknown tensor part " + part);
            }
        } else if (word == "buffer") {
            const auto capacity = expect_number<std::size_t>(in, "capacity");
            const auto seen = expect_number<std::uint64_t>(in, "seen count");
            const auto count = expect_number<std::size_t>(in, "count");
            const auto dim = expect_number<std::size_t>(in, "dim");
            std::vector<Sample> items(count);
            for (auto& s : items) {
                if (expect_word(in, "sample") != "sample") fail("expected sample");
                s.id = expect_number<std::uint64_t>(in, "sample id");
                s.label = expect_number<int>(in, "label");
                s.task = expect_number<int>(in, "task");
                s.input = read_values(in, dim);
            }
            ckpt.buffer = ReplayBuffer::restore(capacity, seen, std::move(items));
        } else {
            fail("unexpected token " + word);
        }
    }
    if (ckpt.net.backbone.empty() || ckpt.net.head.size() != 2) fail("incomplete network");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write checkpoint " + file.string());
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open checkpoint " + file.string());
    return read_checkpoint(in);
}

}  // namespace tvmf

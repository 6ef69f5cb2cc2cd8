#include <doctest.h>

#include <filesystem>
#include <string>

#include "tvmf/config.hpp"

using namespace tvmf;

TEST_CASE("defaults survive an empty document") {
    const auto cfg = parse_config("");
    CHECK(cfg.data.kind == DatasetKind::Synthetic);
    CHECK(cfg.run.loss.kind.tag() == SimilarityTag::TVonMisesFisher);
    CHECK(to_toml(cfg) == to_toml(ExperimentConfig{}));
}

TEST_CASE("every setting round-trips through the writer") {
    const char* text = R"(# comment
[data]
kind = "synthetic"
seed = 9
num_classes = 6
dim = 12
per_class = 7
spread = 0.25
classes_per_task = 3

[model]
backbone_hidden = [24, 12]
projection_dim = 5

[loss]
similarity = "vmf"
kappa = 8.5
temperature = 0.3
normalize_by_anchors = true

[optim]
learning_rate = 0.01
momentum = 0.5
epochs_per_task = 3
batch_current = 16
batch_buffer = 4

[buffer]
capacity = 40

[augment]
noise_sigma = 0.02
scale_jitter = 0.1
crop_padding = 0
flip_probability = 0.0
seed = 4

[probe]
epochs = 30
learning_rate = 0.25
on_embedding = true

[run]
seeds = [5, 6]
output_dir = "out/x"
)";
    const auto cfg = parse_config(text);
    CHECK(cfg.data.synthetic.num_classes == 6);
    CHECK(cfg.data.synthetic.spread == 0.25);
    CHECK(cfg.run.backbone_hidden == std::vector<std::size_t>{24, 12});
    CHECK(cfg.run.loss.kind.tag() == SimilarityTag::VonMisesFisher);
    CHECK(cfg.run.loss.kind.kappa() == 8.5);
    CHECK(cfg.run.loss.normalize_by_anchors);
    CHECK(cfg.run.sgd.momentum == 0.5);
    CHECK(cfg.run.buffer_capacity == 40);
    CHECK(cfg.run.probe.on_embedding);
    CHECK(cfg.run.seeds == std::vector<std::uint64_t>{5, 6});
    CHECK(cfg.output_dir == std::filesystem::path("out/x"));

    const std::string written = to_toml(cfg);
    CHECK(to_toml(parse_config(written)) == written);
}

TEST_CASE("unknown keys report their position") {
    try {
        parse_config("[loss]\ntemperature = 0.5\nkapa = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 1);
        CHECK(std::string(e.what()).find("kapa") != std::string::npos);
    }
}

TEST_CASE("malformed documents are rejected") {
    CHECK_THROWS_AS(parse_config("[loss]\nkappa = 1\nkappa = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[loss]\n[loss]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("kappa = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[loss]\nkappa = \"big\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[optim]\nepochs_per_task = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[loss]\nsimilarity = \"cosh\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[loss]\nsimilarity = \"vmf\"\nkappa = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[data]\nkind = \"mnist\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nseeds = []\n"), ConfigError);
}

TEST_CASE("a missing file is a config error without a position") {
    try {
        load_config("/nonexistent/dir/cfg.toml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 0);
    }
}

TEST_CASE("bundled configs parse") {
    for (const char* name : {"smoke.toml", "desk.toml"}) {
        CAPTURE(name);
        CHECK_NOTHROW(load_config(std::filesystem::path(TVMF_SOURCE_DIR) / "configs" / name));
    }
}

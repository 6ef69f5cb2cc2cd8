#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvmf/checks.hpp"
#include "tvmf/cli.hpp"
#include "tvmf/config.hpp"
#include "tvmf/similarity.hpp"

using namespace tvmf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tvmf-cl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tvmf_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Smoke settings with the similarity replaced, written under `dir`.
fs::path write_config(const fs::path& dir, const std::string& similarity, double kappa) {
    ExperimentConfig cfg = load_config(fs::path(TVMF_SOURCE_DIR) / "configs" / "smoke.toml");
    cfg.run.loss.kind = SimilarityKind::from_name(similarity, kappa);
    cfg.output_dir = dir / "out";
    const fs::path file = dir / (similarity + ".toml");
    std::ofstream(file) << to_toml(cfg);
    return file;
}

std::vector<double> loss_column(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) out.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"train"}).code == kExitUsage);
    CHECK(cli({"train", "--config", "/nonexistent/x.toml"}).code == kExitUsage);
    CHECK(cli({"curve", "--kind", "tvmf", "--kappa", "16", "--grid", "1"}).code == kExitUsage);
    CHECK(cli({"curve", "--kind", "vmf", "--kappa", "0"}).code == kExitUsage);
    CHECK(cli({"curve", "--kind", "tvmf", "--kappa", "-1"}).code == kExitUsage);
    const auto dir = scratch("usage");
    const auto cfg = write_config(dir, "tvmf", 16.0);
    CHECK(cli({"sweep", "--config", cfg.string(), "--kappa", ","}).code == kExitUsage);
    CHECK(cli({"sweep", "--config", cfg.string(), "--kappa", "4,x"}).code == kExitUsage);
}

TEST_CASE("curve prints one row per grid point") {
    const auto r = cli({"curve", "--kind", "tvmf", "--kappa", "16", "--grid", "3"});
    REQUIRE(r.code == kExitOk);
    std::stringstream ss(r.out);
    std::vector<std::string> lines;
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "cos,value");
    CHECK(lines[1] == "-1,-1");
    CHECK(lines[3] == "1,1");
    const double mid = std::stod(lines[2].substr(lines[2].find(',') + 1));
    CHECK(mid == doctest::Approx(-16.0 / 17.0).epsilon(1e-15));
}

TEST_CASE("check exits 0 and reports JSON") {
    const auto r = cli({"check"});
    CHECK(r.code == kExitOk);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["passed"] == true);
    CHECK(doc["checks"].size() >= 5);
}

TEST_CASE("the battery catches an off-by-one kappa") {
    TvmfUnderTest broken{[](double c, double k) { return tvmf_similarity(c, Kappa(k + 1.0)); },
                         [](double c, double k) { return tvmf_similarity_dcos(c, Kappa(k + 1.0)); }};
    const auto results = run_check_battery(broken);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    CHECK(failed > 0);
}

TEST_CASE("train writes everything under the output directory") {
    const auto dir = scratch("train");
    const auto cfg = write_config(dir, "tvmf", 16.0);
    const auto r = cli({"train", "--config", cfg.string()});
    REQUIRE(r.code == kExitOk);
    for (const char* f : {"metrics.json", "metrics.csv", "config.toml", "loss_seed0.csv", "checkpoint_seed0.ckpt"})
        CHECK(fs::exists(dir / "out" / f));
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        CHECK(entry.path().string().rfind(dir.string(), 0) == 0);
    const auto doc = nlohmann::json::parse(slurp(dir / "out" / "metrics.json"));
    CHECK(doc.contains("runs"));
    CHECK(doc.contains("aggregate"));
}

TEST_CASE("identical configs give byte-identical metrics") {
    const auto dir = scratch("repeat");
    const auto cfg = write_config(dir, "tvmf", 16.0);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "a").string()}).code == kExitOk);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "b").string()}).code == kExitOk);
    CHECK(slurp(dir / "a" / "metrics.json") == slurp(dir / "b" / "metrics.json"));
    CHECK(slurp(dir / "a" / "loss_seed0.csv") == slurp(dir / "b" / "loss_seed0.csv"));
}

TEST_CASE("t-vMF with kappa 0 trains exactly like cosine") {
    const auto dir = scratch("kappa0");
    const auto t = write_config(dir, "tvmf", 0.0);
    const auto c = write_config(dir, "cosine", 0.0);
    REQUIRE(cli({"train", "--config", t.string(), "--out", (dir / "t").string()}).code == kExitOk);
    REQUIRE(cli({"train", "--config", c.string(), "--out", (dir / "c").string()}).code == kExitOk);
    const auto a = loss_column(slurp(dir / "t" / "loss_seed0.csv"));
    const auto b = loss_column(slurp(dir / "c" / "loss_seed0.csv"));
    REQUIRE(a.size() == b.size());
    REQUIRE(!a.empty());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-10);
}

TEST_CASE("sweep writes one row per kappa") {
    const auto dir = scratch("sweep");
    const auto cfg = write_config(dir, "tvmf", 16.0);
    const auto r = cli({"sweep", "--config", cfg.string(), "--kappa", "4,16,32"});
    REQUIRE(r.code == kExitOk);
    std::stringstream ss(slurp(dir / "out" / "sweep.csv"));
    std::vector<std::string> lines;
    for (std::string l; std::getline(ss, l);) lines.push_back(l);
    REQUIRE(lines.size() == 4);
    CHECK(lines[1].rfind("4,", 0) == 0);
    CHECK(lines[2].rfind("16,", 0) == 0);
    CHECK(lines[3].rfind("32,", 0) == 0);
    for (const char* sub : {"kappa_4", "kappa_16", "kappa_32"}) CHECK(fs::exists(dir / "out" / sub / "metrics.json"));
}

TEST_CASE("the bundled smoke config runs") {
    const auto dir = scratch("smoke");
    const auto r = cli({"train", "--config", (fs::path(TVMF_SOURCE_DIR) / "configs" / "smoke.toml").string(), "--out",
                        (dir / "out").string()});
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(dir / "out" / "metrics.json"));
}

TEST_CASE("loss-check reports a small gradient error") {
    const auto r = cli({"loss-check", "--kind", "tvmf", "--kappa", "16"});
    REQUIRE(r.code == kExitOk);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["max_fd_rel_error"].get<double>() < 1e-4);
}

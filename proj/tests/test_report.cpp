#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "maskscope/report.hpp"
#include "maskscope/synthetic.hpp"
#include "maskscope/tensor_io.hpp"
#include "support/oracles.hpp"

using namespace maskscope;
using namespace maskscope::report;
namespace fs = std::filesystem;

namespace {

synthetic::Spec small_spec() {
    synthetic::Spec spec;
    spec.images_per_class = 10;
    spec.image_size = 32;
    return spec;
}

RunConfig small_config(const fs::path& manifest, const fs::path& out) {
    RunConfig cfg;
    cfg.manifest = manifest;
    cfg.out_dir = out;
    cfg.tsne.perplexity = 5.0;
    cfg.tsne.iterations = 250;
    cfg.min_avg_pixels = 10.0;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

// Replaces one entry's activation and gradient with values whose product
// overflows f32.
void plant_overflow(const fs::path& manifest_path) {
    const auto m = io::load_manifest(manifest_path);
    const auto& e = m.entries.front();
    const auto model = m.models.front();
    const auto& g = m.geometry.at(model);
    Grid<float> big(g.rows, g.cols, 3e38f);
    std::vector<float> values;
    for (std::uint32_t k = 0; k < g.channels; ++k) values.insert(values.end(), big.values().begin(), big.values().end());
    const io::TensorRecord rec({g.channels, g.rows, g.cols}, std::move(values));
    io::save_tensor(rec, m.tensor_path(e, model, io::TensorKind::activation));
    io::save_tensor(rec, m.tensor_path(e, model, io::TensorKind::gradient));
}

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + MASKSCOPE_CLI + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Stages, PrerequisitesResolved) {
    EXPECT_EQ(resolve_stages({Stage::embedding}), (std::vector<Stage>{Stage::masks, Stage::embedding}));
    EXPECT_EQ(resolve_stages({Stage::figures}).size(), 6u);
    EXPECT_EQ(resolve_stages({Stage::ar, Stage::masks}), (std::vector<Stage>{Stage::masks, Stage::ar}));
}

TEST(RunConfig, Validation) {
    RunConfig cfg = small_config("m.json", "out");
    EXPECT_NO_THROW(cfg.validate());
    cfg.threshold = 1.5f;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.threshold = 0.5f;
    cfg.pca_components = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Run, EmptyManifestGivesZeroRowOutputs) {
    const auto dir = oracle::scratch_dir("report_empty");
    nlohmann::json doc = {{"classes", {"a", "b"}}, {"models", {"m"}}, {"entries", nlohmann::json::array()}};
    std::ofstream(dir / "manifest.json") << doc.dump();
    const auto report = run(small_config(dir / "manifest.json", dir / "out"));
    EXPECT_EQ(report.stages.size(), 6u);
    EXPECT_EQ(line_count(dir / "out/embedding/m/embedding.csv"), 1u);
    EXPECT_EQ(line_count(dir / "out/objstats/histogram.csv"), 1u);
    EXPECT_TRUE(fs::exists(dir / "out/figures/scatter_m.svg"));
    EXPECT_EQ(cli("all --manifest " + (dir / "manifest.json").string() + " --out " + (dir / "cli").string()), 0);
}

TEST(Run, AllArtifactFamiliesAndCachedRerun) {
    const auto dir = oracle::scratch_dir("report_full");
    const auto manifest = synthetic::write_dataset(dir / "data", small_spec());
    const auto cfg = small_config(manifest, dir / "out");
    const auto first = run(cfg);
    for (const auto& s : first.stages) EXPECT_FALSE(s.cached) << stage_name(s.stage);

    const fs::path out = dir / "out";
    EXPECT_TRUE(fs::exists(out / "masks/model_a/index.csv"));
    EXPECT_TRUE(fs::exists(out / "explanations/model_b"));
    EXPECT_TRUE(fs::exists(out / "embedding/model_a/embedding.csv"));
    EXPECT_TRUE(fs::exists(out / "objstats/histogram.csv"));
    EXPECT_TRUE(fs::exists(out / "ar/ar_matrix.csv"));
    EXPECT_TRUE(fs::exists(out / "figures/gallery.svg"));
    EXPECT_TRUE(fs::exists(out / "figures/thumbnails_model_b.svg"));
    EXPECT_EQ(line_count(out / "embedding/model_a/embedding.csv"), 21u);
    for (const auto& s : first.stages) EXPECT_FALSE(fs::exists(out / stage_name(s.stage) / ".partial"));

    const auto snapshot = dir / "snapshot";
    fs::copy(out, snapshot, fs::copy_options::recursive);
    const auto second = run(cfg);
    for (const auto& s : second.stages) EXPECT_TRUE(s.cached) << stage_name(s.stage);
    std::string diff;
    EXPECT_TRUE(oracle::trees_identical(out, snapshot, diff)) << diff;

    auto fresh = cfg;
    fresh.out_dir = dir / "fresh";
    run(fresh);
    EXPECT_TRUE(oracle::trees_identical(out, dir / "fresh", diff)) << diff;
}

TEST(Run, ThresholdChangeRerunsOnlyDependentStages) {
    const auto dir = oracle::scratch_dir("report_threshold");
    const auto manifest = synthetic::write_dataset(dir / "data", small_spec());
    auto cfg = small_config(manifest, dir / "out");
    run(cfg);
    const auto embedding_before = slurp(dir / "out/embedding/model_a/embedding.csv");
    cfg.threshold = 0.3f;
    for (const auto& s : run(cfg).stages) {
        const bool expect_rerun = s.stage == Stage::explanations || s.stage == Stage::objstats || s.stage == Stage::figures;
        EXPECT_EQ(s.cached, !expect_rerun) << stage_name(s.stage);
    }
    EXPECT_EQ(slurp(dir / "out/embedding/model_a/embedding.csv"), embedding_before);
}

TEST(Run, InputChangeInvalidatesCache) {
    const auto dir = oracle::scratch_dir("report_input");
    const auto manifest = synthetic::write_dataset(dir / "data", small_spec());
    const auto cfg = small_config(manifest, dir / "out");
    run(cfg);
    const auto m = io::load_manifest(manifest);
    auto seg = io::load_tensor(m.resolve(m.entries[3].segmentation));
    auto labels = io::to_label_grid(seg);
    labels(0, 0) = static_cast<std::uint16_t>((labels(0, 0) + 1) % 150);
    io::save_tensor(io::TensorRecord({static_cast<std::uint32_t>(labels.rows()), static_cast<std::uint32_t>(labels.cols())}, std::vector<std::uint16_t>(
                                                                        labels.values().begin(), labels.values().end())),
                    m.resolve(m.entries[3].segmentation));
    for (const auto& s : run(cfg).stages) EXPECT_FALSE(s.cached) << stage_name(s.stage);
}

TEST(Run, ReportWithoutOutputsIsConfigError) {
    const auto dir = oracle::scratch_dir("report_nocompute");
    auto cfg = small_config(synthetic::write_dataset(dir / "data", small_spec()), dir / "out");
    cfg.compute = false;
    EXPECT_THROW(run(cfg), ConfigError);
    cfg.compute = true;
    run(cfg);
    cfg.compute = false;
    EXPECT_NO_THROW(run(cfg));
}

TEST(Run, FailureLeavesPartialMarkerAndNamesStageAndEntry) {
    const auto dir = oracle::scratch_dir("report_partial");
    const auto manifest = synthetic::write_dataset(dir / "data", small_spec());
    plant_overflow(manifest);
    try {
        run(small_config(manifest, dir / "out"));
        FAIL();
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("masks"), std::string::npos) << msg;
        EXPECT_NE(msg.find(io::load_manifest(manifest).entries.front().id), std::string::npos) << msg;
    }
    EXPECT_TRUE(fs::exists(dir / "out/masks/.partial"));
    EXPECT_FALSE(fs::exists(dir / "out/masks/.stage-key"));
}

TEST(Run, UnknownModelRejected) {
    const auto dir = oracle::scratch_dir("report_model");
    auto cfg = small_config(synthetic::write_dataset(dir / "data", small_spec()), dir / "out");
    cfg.models = {"nope"};
    EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Cli, ExitCodes) {
    const auto dir = oracle::scratch_dir("report_cli");
    const auto manifest = synthetic::write_dataset(dir / "data", small_spec()).string();
    const std::string fast = " --perplexity 5 --iterations 250";
    EXPECT_EQ(cli("all --manifest " + manifest + " --out " + (dir / "ok").string() + fast), 0);
    EXPECT_EQ(cli("report --manifest " + manifest + " --out " + (dir / "ok").string() + fast), 0);
    EXPECT_EQ(cli("all --manifest " + manifest + " --out " + (dir / "x").string() + " --threshold 2"), 2);
    EXPECT_EQ(cli("all --manifest " + manifest + " --out " + (dir / "x").string() + " --perplexity 30"), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("report --manifest " + manifest + " --out " + (dir / "empty").string()), 2);
    EXPECT_EQ(cli("all --manifest " + (dir / "missing.json").string() + " --out " + (dir / "x").string()), 3);
    plant_overflow(manifest);
    EXPECT_EQ(cli("masks --manifest " + manifest + " --out " + (dir / "bad").string()), 4);
}

TEST(Cli, SubcommandsRunTheirStages) {
    const auto dir = oracle::scratch_dir("report_sub");
    const auto manifest = synthetic::write_dataset(dir / "data", small_spec()).string();
    const auto out = (dir / "out").string();
    EXPECT_EQ(cli("ar --manifest " + manifest + " --out " + out), 0);
    EXPECT_TRUE(fs::exists(dir / "out/ar/ar_matrix.csv"));
    EXPECT_FALSE(fs::exists(dir / "out/embedding"));
    EXPECT_EQ(cli("embed --manifest " + manifest + " --out " + out + " --perplexity 5 --iterations 250"), 0);
    EXPECT_TRUE(fs::exists(dir / "out/embedding/model_b/kl_trace.csv"));
}

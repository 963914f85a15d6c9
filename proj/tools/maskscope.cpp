// maskscope: Grad-CAM mask analysis pipeline.
//
//   maskscope all --manifest data/manifest.json --out results/
//
// Exit codes: 0 success, 2 configuration error, 3 data validation error,
// 4 numeric failure.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "maskscope/error.hpp"
#include "maskscope/report.hpp"

namespace {

using maskscope::report::RunConfig;
using maskscope::report::Stage;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void add_common(CLI::App& cmd, RunConfig& cfg, std::string& manifest, std::string& out, std::string& names) {
    cmd.add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
    cmd.add_option("--out", out, "Output directory")->required();
    cmd.add_option("--threshold", cfg.threshold, "Mask threshold in [0,1]")->capture_default_str();
    cmd.add_option("--seed", cfg.tsne.seed, "Seed for t-SNE and thumbnail sampling")->capture_default_str();
    cmd.add_option("--perplexity", cfg.tsne.perplexity, "t-SNE perplexity")->capture_default_str();
    cmd.add_option("--iterations", cfg.tsne.iterations, "t-SNE iterations")->capture_default_str();
    cmd.add_option("--min-avg-pixels", cfg.min_avg_pixels, "Object selection threshold (average pixels per image)")
        ->capture_default_str();
    cmd.add_option("--models", cfg.models, "Comma-separated model subset (default: all)")->delimiter(',');
    cmd.add_option("--model", cfg.models, "Model id (repeatable)");
    cmd.add_option("--thumbnail-cap", cfg.thumbnail_cap, "Maximum thumbnails in the explanation scatter")
        ->capture_default_str();
    cmd.add_option("--pca-components", cfg.pca_components, "PCA components before t-SNE")->capture_default_str();
    cmd.add_option("--names", names, "Object names file (default: names.txt beside the manifest)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grad-CAM weighted-mask analysis: masks, explanations, t-SNE, object ratios, model residuals"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string manifest;
    std::string out;
    std::string names;

    struct Command {
        const char* name;
        const char* help;
        std::vector<Stage> stages;
        bool compute;
    };
    const std::vector<Command> commands = {
        {"masks", "Weighted masks and visual explanations", {Stage::masks, Stage::explanations}, true},
        {"embed", "PCA + t-SNE embedding of the weighted masks", {Stage::embedding}, true},
        {"objstats", "Per-object pixel ratios and histogram data", {Stage::objstats}, true},
        {"ar", "Average-residual matrix between models", {Stage::ar}, true},
        {"report", "Render figures from existing stage outputs", {Stage::figures}, false},
        {"all", "Run every stage and render all figures", {Stage::figures}, true},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(*sub, cfg, manifest, out, names);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    for (std::size_t i = 0; i < commands.size(); ++i) {
        if (subs[i]->parsed()) {
            cfg.stages = commands[i].stages;
            cfg.compute = commands[i].compute;
        }
    }
    cfg.manifest = manifest;
    cfg.out_dir = out;
    if (!names.empty()) cfg.names_file = names;

    try {
        const auto report = maskscope::report::run(cfg);
        for (const auto& s : report.stages) {
            std::cout << fmt::format("{:<13} {:<8} {:>8.2f}s  {} files\n", maskscope::report::stage_name(s.stage),
                                     s.cached ? "cached" : "ran", s.seconds, s.outputs.size());
        }
        for (const auto& note : report.notes) std::cout << "note: " << note << '\n';
        return EXIT_SUCCESS;
    } catch (const maskscope::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const maskscope::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const maskscope::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "maskscope/modelcmp.hpp"
#include "maskscope/synthetic.hpp"
#include "support/oracles.hpp"

using namespace maskscope;
using namespace maskscope::modelcmp;

namespace {

gradcam::NormalizedMask mask(std::size_t rows, std::size_t cols, std::vector<float> v) {
    return {Grid<float>(rows, cols, std::move(v)), false};
}

gradcam::NormalizedMask random_mask(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Grid<float> g(rows, cols);
    for (auto& v : g.values()) v = u(rng);
    return {g, false};
}

io::DatasetManifest in_memory(std::size_t images, std::uint32_t h, std::uint32_t w) {
    io::DatasetManifest m;
    m.classes = {"a"};
    for (std::size_t i = 0; i < images; ++i) {
        io::ImageEntry e;
        e.id = "img" + std::to_string(i);
        e.height = h;
        e.width = w;
        m.entries.push_back(e);
    }
    return m;
}

}  // namespace

TEST(AverageResidual, Examples) {
    const auto a = mask(2, 2, {0.2f, 0.4f, 0.6f, 0.8f});
    const auto b = mask(2, 2, {0.4f, 0.4f, 0.6f, 0.6f});
    EXPECT_EQ(average_residual(a, a), 0.0);
    EXPECT_NEAR(average_residual(a, b), 0.1, 1e-7);
    EXPECT_EQ(average_residual(mask(1, 3, {1, 0, 1}), mask(1, 3, {0, 1, 0})), 1.0);
}

TEST(AverageResidual, ShapeMismatch) {
    EXPECT_THROW(average_residual(mask(1, 2, {0, 0}), mask(2, 1, {0, 0})), DataError);
}

TEST(AverageResidual, MetricProperties) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 50; ++t) {
        const auto a = random_mask(rng, 6, 5), b = random_mask(rng, 6, 5), c = random_mask(rng, 6, 5);
        const double ab = average_residual(a, b), bc = average_residual(b, c), ac = average_residual(a, c);
        EXPECT_EQ(ab, average_residual(b, a));
        EXPECT_LE(ac, ab + bc + 1e-9);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
    }
}

TEST(ArMatrix, SingleModelIsZero) {
    const auto m = in_memory(2, 2, 2);
    const auto r = ar_matrix(m, {"x"}, {{mask(2, 2, {0, 1, 0, 1}), mask(2, 2, {1, 1, 0, 0})}});
    EXPECT_EQ(r.values, Grid<double>(1, 1, 0.0));
}

TEST(ArMatrix, MeanOverImages) {
    // Constant masks keep their values under resampling.
    const auto m = in_memory(2, 4, 4);
    const std::vector<std::vector<gradcam::NormalizedMask>> masks{
        {mask(2, 2, {0.5f, 0.5f, 0.5f, 0.5f}), mask(2, 2, {0.5f, 0.5f, 0.5f, 0.5f})},
        {mask(3, 3, std::vector<float>(9, 0.4f)), mask(3, 3, std::vector<float>(9, 0.2f))},
    };
    const auto r = ar_matrix(m, {"x", "y"}, masks);
    EXPECT_NEAR(r.values(0, 1), 0.2, 1e-7);
    EXPECT_EQ(r.values(0, 1), r.values(1, 0));
    EXPECT_EQ(r.values(0, 0), 0.0);
    EXPECT_EQ(r.image_counts(0, 1), 2u);
}

TEST(ArMatrix, ResamplesToImageResolution) {
    const auto m = in_memory(1, 5, 5);
    const auto a = mask(2, 2, {0, 1, 0, 1});
    const auto b = mask(3, 3, {0, 0.5f, 1, 0, 0.5f, 1, 0, 0.5f, 1});
    const auto r = ar_matrix(m, {"x", "y"}, {{a}, {b}});
    // Both describe the same horizontal ramp once stretched to 5x5.
    EXPECT_NEAR(r.values(0, 1), 0.0, 1e-7);
}

TEST(ArMatrix, PermutationInvariantAndTriangle) {
    std::mt19937_64 rng(32);
    const auto m = in_memory(12, 9, 9);
    std::vector<std::vector<gradcam::NormalizedMask>> masks(3);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t k = 0; k < 3; ++k) masks[k].push_back(random_mask(rng, 3 + k, 3 + k));
    const auto r = ar_matrix(m, {"a", "b", "c"}, masks);

    std::vector<std::size_t> order(12);
    for (std::size_t i = 0; i < 12; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    auto permuted = masks;
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 12; ++i) permuted[k][i] = masks[k][order[i]];
    const auto p = ar_matrix(m, {"a", "b", "c"}, permuted);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(r.values.values()[i], p.values.values()[i], 1e-12);
    EXPECT_LE(r.values(0, 2), r.values(0, 1) + r.values(1, 2) + 1e-9);
}

TEST(ArMatrix, MissingModelNamesImageAndModel) {
    const auto dir = oracle::scratch_dir("ar_missing");
    synthetic::Spec spec;
    spec.images_per_class = 2;
    spec.image_size = 16;
    spec.with_images = false;
    const auto manifest = io::load_manifest(synthetic::write_dataset(dir, spec));
    try {
        ar_matrix(manifest, {"model_a", "ghost"});
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("ghost"), std::string::npos) << msg;
        EXPECT_NE(msg.find(manifest.entries.front().id), std::string::npos) << msg;
    }
}

TEST(ArMatrix, DistinctModelsDifferSelfIsZero) {
    const auto dir = oracle::scratch_dir("ar_models");
    synthetic::Spec spec;
    spec.images_per_class = 6;
    spec.image_size = 32;
    spec.with_images = false;
    const auto manifest = io::load_manifest(synthetic::write_dataset(dir, spec));
    const auto r = ar_matrix(manifest, {"model_a", "model_b", "model_a"});
    EXPECT_GT(r.values(0, 1), 0.0);
    EXPECT_EQ(r.values(0, 2), 0.0);
}

TEST(ArOutput, CsvAndMarkdown) {
    ARMatrix m{{"a", "b"}, Grid<double>(2, 2, std::vector<double>{0, 0.25, 0.25, 0}), Grid<std::size_t>(2, 2, 3)};
    std::ostringstream csv, md;
    write_ar_csv(csv, m);
    write_ar_markdown(md, m);
    EXPECT_EQ(csv.str(), "model,a,b\na,0,0.25\nb,0.25,0\n");
    EXPECT_NE(md.str().find("| a |"), std::string::npos) << md.str();
}

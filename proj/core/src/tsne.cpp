#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "maskscope/embedding.hpp"
#include "maskscope/error.hpp"
#include "maskscope/parallel.hpp"

namespace maskscope::embedding {

namespace {

constexpr double kEntropyTolerance = 1e-7;
constexpr int kMaxBisections = 50;
constexpr int kMaxBracketSteps = 200;
constexpr double kProbabilityFloor = 1e-12;

// Entropy in bits of the row distribution at precision beta; fills row.
double row_entropy(std::span<const double> shifted, std::size_t self, double beta, std::span<double> row) {
    double z = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < shifted.size(); ++j) {
        if (j == self) {
            row[j] = 0.0;
            continue;
        }
        const double p = std::exp(-beta * shifted[j]);
        row[j] = p;
        z += p;
        weighted += p * shifted[j];
    }
    for (double& p : row) p /= z;
    return (std::log(z) + beta * weighted / z) / std::numbers::ln2;
}

void calibrate_row(std::span<const double> distances, std::size_t self, double target, std::span<double> row) {
    if (distances.size() < 2) return;
    std::vector<double> shifted(distances.begin(), distances.end());
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < shifted.size(); ++j)
        if (j != self) dmin = std::min(dmin, shifted[j]);
    for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] = j == self ? 0.0 : shifted[j] - dmin;

    double beta = 1.0;
    double h = row_entropy(shifted, self, beta, row);
    if (std::abs(h - target) < kEntropyTolerance) return;

    // Entropy decreases in beta: grow beta while too flat, shrink while too peaked.
    double lo = 0.0;
    double hi = 0.0;
    if (h > target) {
        lo = beta;
        for (int s = 0; s < kMaxBracketSteps; ++s) {
            beta *= 2.0;
            h = row_entropy(shifted, self, beta, row);
            if (h <= target) break;
            lo = beta;
        }
        if (h > target) return;  // unattainable (ties); keep the sharpest row
        hi = beta;
    } else {
        hi = beta;
        for (int s = 0; s < kMaxBracketSteps; ++s) {
            beta *= 0.5;
            h = row_entropy(shifted, self, beta, row);
            if (h >= target) break;
            hi = beta;
        }
        if (h < target) return;  // already at the flattest attainable row
        lo = beta;
    }
    if (std::abs(h - target) < kEntropyTolerance) return;

    for (int s = 0; s < kMaxBisections; ++s) {
        beta = 0.5 * (lo + hi);
        h = row_entropy(shifted, self, beta, row);
        if (std::abs(h - target) < kEntropyTolerance) return;
        (h > target ? lo : hi) = beta;
    }
}

// Standard normal deviates via Box-Muller over mt19937_64, which is fully
// specified by the standard (std::normal_distribution is not).
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : engine_(seed) {}
    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;          // [0,1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

double kl_divergence(const Grid<double>& p, const Grid<double>& y) {
    const std::size_t n = y.rows();
    std::vector<double> row_num(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = y(i, 0) - y(j, 0);
            const double dy = y(i, 1) - y(j, 1);
            s += 1.0 / (1.0 + dx * dx + dy * dy);
        }
        row_num[i] = s;
    });
    double sum_q = 0.0;
    for (double s : row_num) sum_q += s;

    std::vector<double> row_kl(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || p(i, j) <= 0.0) continue;
            const double dx = y(i, 0) - y(j, 0);
            const double dy = y(i, 1) - y(j, 1);
            const double q = std::max(1.0 / (1.0 + dx * dx + dy * dy) / sum_q, kProbabilityFloor);
            s += p(i, j) * std::log(p(i, j) / q);
        }
        row_kl[i] = s;
    });
    double kl = 0.0;
    for (double s : row_kl) kl += s;
    return std::max(0.0, kl);
}

}  // namespace

Grid<double> squared_distances(const Grid<double>& points) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    Grid<double> out(n, n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = points(i, k) - points(j, k);
                s += diff * diff;
            }
            out(i, j) = s;
        }
    });
    return out;
}

Grid<double> perplexity_calibrate(const Grid<double>& sq_distances, double perplexity) {
    const std::size_t n = sq_distances.rows();
    if (sq_distances.cols() != n) throw DataError("distance matrix must be square");
    if (!(perplexity > 0.0)) throw ConfigError("perplexity must be positive");
    if (static_cast<double>(n) <= 3.0 * perplexity) {
        throw ConfigError("perplexity " + std::to_string(perplexity) + " too large for " + std::to_string(n) +
                          " points (need N > 3 * perplexity)");
    }
    const double target = std::log2(perplexity);
    Grid<double> p(n, n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        calibrate_row(sq_distances.values().subspan(i * n, n), i, target, p.values().subspan(i * n, n));
    });
    return p;
}

Grid<double> joint_probabilities(const Grid<double>& conditional) {
    const std::size_t n = conditional.rows();
    Grid<double> p(n, n, 0.0);
    if (n == 0) return p;
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            p(i, j) = std::max((conditional(i, j) + conditional(j, i)) * scale, kProbabilityFloor);
            total += p(i, j);
        }
    }
    for (double& v : p.values()) v /= total;
    return p;
}

void TsneParams::validate(std::size_t n) const {
    if (!(perplexity > 0.0) || iterations <= 0 || !(learning_rate > 0.0) || !(early_exaggeration > 0.0) ||
        exaggeration_iterations < 0 || !(initial_momentum > 0.0) || !(final_momentum > 0.0) || momentum_switch < 0) {
        throw ConfigError("t-SNE parameters must be positive");
    }
    if (static_cast<double>(n) <= 3.0 * perplexity) {
        throw ConfigError("perplexity " + std::to_string(perplexity) + " too large for " + std::to_string(n) +
                          " points (need N > 3 * perplexity)");
    }
}

EmbeddingResult tsne_embed(const Grid<double>& points, const TsneParams& params) {
    const std::size_t n = points.rows();
    if (n < 2) throw DataError("tsne_embed needs at least 2 points, got " + std::to_string(n));
    params.validate(n);

    const Grid<double> p = joint_probabilities(perplexity_calibrate(squared_distances(points), params.perplexity));

    EmbeddingResult result;
    result.params = params;
    Grid<double> y(n, 2);
    Gaussian gauss(params.seed);
    for (double& v : y.values()) v = gauss() * 1e-4;

    Grid<double> update(n, 2, 0.0);
    Grid<double> gains(n, 2, 1.0);
    Grid<double> grad(n, 2, 0.0);
    std::vector<double> row_num(n);

    auto record_kl = [&](int iteration) {
        const double kl = kl_divergence(p, y);
        if (!std::isfinite(kl)) {
            throw NumericError("t-SNE KL divergence became non-finite at iteration " + std::to_string(iteration));
        }
        result.kl_trace.push_back({iteration, kl});
    };

    for (int it = 0; it < params.iterations; ++it) {
        if (it % 10 == 0) record_kl(it);
        const double exaggeration = it < params.exaggeration_iterations ? params.early_exaggeration : 1.0;
        const double momentum = it < params.momentum_switch ? params.initial_momentum : params.final_momentum;

        parallel_for(n, [&](std::size_t i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = y(i, 0) - y(j, 0);
                const double dy = y(i, 1) - y(j, 1);
                s += 1.0 / (1.0 + dx * dx + dy * dy);
            }
            row_num[i] = s;
        });
        double sum_q = 0.0;
        for (double s : row_num) sum_q += s;

        parallel_for(n, [&](std::size_t i) {
            double gx = 0.0;
            double gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = y(i, 0) - y(j, 0);
                const double dy = y(i, 1) - y(j, 1);
                const double num = 1.0 / (1.0 + dx * dx + dy * dy);
                const double mult = (exaggeration * p(i, j) - num / sum_q) * num;
                gx += mult * dx;
                gy += mult * dy;
            }
            grad(i, 0) = 4.0 * gx;
            grad(i, 1) = 4.0 * gy;
        });

        auto g = grad.values();
        auto u = update.values();
        auto gain = gains.values();
        auto pos = y.values();
        for (std::size_t k = 0; k < pos.size(); ++k) {
            gain[k] = (g[k] > 0.0) != (u[k] > 0.0) ? gain[k] + 0.2 : gain[k] * 0.8;
            gain[k] = std::max(gain[k], 0.01);
            u[k] = momentum * u[k] - params.learning_rate * gain[k] * g[k];
            pos[k] += u[k];
        }
        for (std::size_t c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += y(i, c);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) y(i, c) -= mean;
        }
    }
    record_kl(params.iterations);
    for (double v : y.values()) {
        if (!std::isfinite(v)) throw NumericError("t-SNE produced non-finite coordinates");
    }
    result.coords = std::move(y);
    return result;
}

Grid<float> descriptor_matrix(const std::vector<gradcam::NormalizedMask>& masks) {
    if (masks.empty()) return {};
    const std::size_t d = masks.front().values.size();
    Grid<float> out(masks.size(), d);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i].values.size() != d) {
            throw DataError("descriptor " + std::to_string(i) + " has " + std::to_string(masks[i].values.size()) +
                            " values, expected " + std::to_string(d));
        }
        std::copy_n(masks[i].values.values().begin(), d, out.values().begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return out;
}

MaskEmbedding embed_descriptors(const Grid<float>& descriptors, const TsneParams& params, std::size_t n_components) {
    MaskEmbedding out;
    out.embedding.params = params;
    const std::size_t n = descriptors.rows();
    if (n == 0) return out;
    if (n == 1) {
        out.embedding.coords = Grid<double>(1, 2, 0.0);
        return out;
    }
    params.validate(n);
    out.pca = pca_reduce(descriptors, n_components);
    out.embedding = tsne_embed(out.pca.scores, params);
    return out;
}

MaskEmbedding embed_masks(const io::DatasetManifest& manifest, const std::string& model, const TsneParams& params,
                          std::size_t n_components) {
    std::vector<gradcam::NormalizedMask> masks(manifest.entries.size());
    parallel_for(masks.size(), [&](std::size_t i) { masks[i] = gradcam::conv_mask(manifest, manifest.entries[i], model); });
    auto out = embed_descriptors(descriptor_matrix(masks), params, n_components);
    for (const auto& e : manifest.entries) {
        out.ids.push_back(e.id);
        out.classes.push_back(e.class_index);
    }
    return out;
}

}  // namespace maskscope::embedding

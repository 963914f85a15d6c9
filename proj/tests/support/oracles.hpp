#pragma once

// Reference computations used to check the library. Nothing here calls into
// the code under test.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace maskscope::oracle {

// Dense row-major matrix in double precision.
struct Dense {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;
    Dense() = default;
    Dense(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

// Mean of each gradient channel by explicit summation; grads laid out [K,H,W].
std::vector<double> brute_channel_weights(const std::vector<float>& grads, std::size_t k, std::size_t h, std::size_t w);

// ReLU of the weighted channel sum, element by element.
Dense brute_heatmap(const std::vector<float>& acts, const std::vector<double>& weights, std::size_t k, std::size_t h,
                    std::size_t w);

// (x - min) / (max - min), or zeros when constant.
Dense brute_minmax(const Dense& x);

struct EigenPairs {
    std::vector<double> values;  // descending
    Dense vectors;               // columns, matching values
};

// Cyclic Jacobi rotations on a symmetric matrix.
EigenPairs jacobi_eigen(Dense a, double tol = 1e-15, int max_sweeps = 100);

// Sample covariance of the columns of x (rows are observations).
Dense covariance(const Dense& x);

// Frobenius norm of (I - A A^T) B for column-orthonormal A and B: an upper
// bound on the sine of the largest principal angle between their spans.
double subspace_sine(const Dense& a, const Dense& b);

// Shannon entropy in bits of a probability row, skipping zeros.
double entropy_bits(const double* p, std::size_t n);

// Mean silhouette of 2-D points under Euclidean distance.
double silhouette(const std::vector<double>& xy, const std::vector<std::size_t>& labels);

// Byte-for-byte comparison of two directory trees; fills `difference`
// with the first mismatch.
bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b, std::string& difference);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace maskscope::oracle

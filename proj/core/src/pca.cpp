#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "maskscope/embedding.hpp"
#include "maskscope/error.hpp"

namespace maskscope::embedding {

PcaResult pca_reduce(const Grid<double>& x, std::size_t n_components) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n < 2) throw DataError("pca_reduce needs at least 2 rows, got " + std::to_string(n));
    if (d == 0) throw DataError("pca_reduce: zero-width descriptors");

    PcaResult result;
    result.requested = n_components;
    const std::size_t limit = std::min(n - 1, d);
    const std::size_t c = std::min(n_components, limit);
    result.clamped = n_components > limit;

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> data(x.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("covariance eigendecomposition did not converge");
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vectors = solver.eigenvectors();
    const double total = cov.trace();

    result.components = Grid<double>(c, d);
    result.explained_ratio.resize(c);
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c));
    for (std::size_t k = 0; k < c; ++k) {
        const auto src = static_cast<Eigen::Index>(d - 1 - k);
        Eigen::VectorXd v = vectors.col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        basis.col(static_cast<Eigen::Index>(k)) = v;
        for (std::size_t j = 0; j < d; ++j) result.components(k, j) = v(static_cast<Eigen::Index>(j));
        result.explained_ratio[k] = total > 0.0 ? std::max(0.0, values(src)) / total : 0.0;
    }

    const Eigen::MatrixXd scores = centered * basis;
    result.scores = Grid<double>(n, c);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k)
            result.scores(i, k) = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    return result;
}

PcaResult pca_reduce(const Grid<float>& x, std::size_t n_components) {
    auto v = x.values();
    return pca_reduce(Grid<double>(x.rows(), x.cols(), std::vector<double>(v.begin(), v.end())), n_components);
}

}  // namespace maskscope::embedding

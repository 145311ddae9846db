#pragma once

#include "msrom/error.hpp"
#include "msrom/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

namespace msrom {

/// Orthonormal POD modes of a snapshot matrix (uncentered).
struct PodBasis {
    Matrix modes;            // n x m
    Vector singular_values;  // all of them, descending

    int size() const { return static_cast<int>(modes.cols()); }
};

struct PodTruncation {
    double energy = 1.0 - 1e-8;  // keep the smallest m reaching this energy fraction
    int fixed_m = 0;             // > 0 overrides the energy criterion
};

inline PodBasis pod(const Matrix& snapshots, PodTruncation trunc = {}) {
    if (snapshots.cols() == 0 || snapshots.rows() == 0) throw ConfigError("deim", "no snapshots given");
    if (!(trunc.energy > 0.0 && trunc.energy <= 1.0)) throw ConfigError("deim", "energy cutoff must lie in (0, 1]");
    Eigen::BDCSVD<Matrix> svd(snapshots, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) throw ConfigError("deim", "snapshot matrix is identically zero");

    const double tol = s[0] * static_cast<double>(std::max(snapshots.rows(), snapshots.cols())) *
                       std::numeric_limits<double>::epsilon();
    int numerical_rank = 0;
    while (numerical_rank < s.size() && s[numerical_rank] > tol) ++numerical_rank;

    int m = 0;
    if (trunc.fixed_m > 0) {
        m = std::min(trunc.fixed_m, numerical_rank);
    } else {
        const double total = s.squaredNorm();
        double acc = 0.0;
        while (m < numerical_rank) {
            acc += s[m] * s[m];
            ++m;
            if (acc >= trunc.energy * total) break;
        }
    }
    return {svd.matrixU().leftCols(m), s};
}

inline PodBasis pod(const std::vector<Vector>& snapshots, PodTruncation trunc = {}) {
    if (snapshots.empty()) throw ConfigError("deim", "no snapshots given");
    Matrix s(snapshots.front().size(), static_cast<Index>(snapshots.size()));
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        if (snapshots[k].size() != s.rows()) throw ConfigError("deim", "snapshots have different lengths");
        s.col(static_cast<Index>(k)) = snapshots[k];
    }
    return pod(s, trunc);
}

namespace detail {

// First index of the largest absolute value.
inline int first_argmax_abs(const Vector& v) {
    int best = 0;
    double bv = -1.0;
    for (Index k = 0; k < v.size(); ++k) {
        if (std::abs(v[k]) > bv) {
            bv = std::abs(v[k]);
            best = static_cast<int>(k);
        }
    }
    return best;
}

} // namespace detail

/// Interpolatory approximation f ~ Phi (P^T Phi)^{-1} P^T f.
class DeimModel {
public:
    DeimModel() = default;

    DeimModel(PodBasis pod, std::vector<int> indices, std::string provenance = "")
        : pod_(std::move(pod)), indices_(std::move(indices)), provenance_(std::move(provenance)) {
        const Index m = pod_.modes.cols();
        if (static_cast<Index>(indices_.size()) != m) throw ConfigError("deim", "index count differs from POD size");
        std::vector<int> sorted(indices_);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("deim", "interpolation indices are not distinct");
        }
        Matrix ptp(m, m);
        for (Index k = 0; k < m; ++k) ptp.row(k) = pod_.modes.row(indices_[k]);
        Eigen::JacobiSVD<Matrix> sv(ptp);
        const Vector s = sv.singularValues();
        if (m > 0 && !(s[m - 1] > 0.0)) throw NumericalError("deim", "P^T Phi is singular");
        condition_ = m > 0 ? s[0] / s[m - 1] : 1.0;
        lu_.compute(ptp);
        inverse_ = lu_.inverse();
    }

    const PodBasis& pod() const { return pod_; }
    const Matrix& modes() const { return pod_.modes; }
    const std::vector<int>& indices() const { return indices_; }
    const std::string& provenance() const { return provenance_; }
    int size() const { return static_cast<int>(indices_.size()); }
    Index dimension() const { return pod_.modes.rows(); }
    double condition() const { return condition_; }
    const Matrix& interpolation_inverse() const { return inverse_; }

    /// Gathers the selected entries of a full vector.
    Vector sample(const Vector& f) const {
        Vector out(size());
        for (int k = 0; k < size(); ++k) out[k] = f[indices_[k]];
        return out;
    }

    /// Full-length approximation from the m sampled values.
    Vector apply(const Vector& sampled) const {
        check(sampled);
        return pod_.modes * lu_.solve(sampled);
    }

    /// Precomposes V^T M Phi (P^T Phi)^{-1} and the sampled rows of V.
    void register_test_basis(const SparseMatrix& v, const SparseMatrix& mass) {
        if (v.rows() != dimension()) throw ConfigError("deim", "test basis has wrong row count");
        const Matrix mphi = mass * pod_.modes;
        projector_ = (v.transpose() * mphi) * inverse_;
        const Eigen::SparseMatrix<double, Eigen::RowMajor> vr(v);
        basis_rows_ = Matrix::Zero(size(), v.cols());
        for (int k = 0; k < size(); ++k)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(vr, indices_[k]); it; ++it)
                basis_rows_(k, it.col()) = it.value();
    }

    bool has_test_basis() const { return projector_.size() > 0 || basis_rows_.size() > 0; }
    const Matrix& projector() const { return projector_; }
    const Matrix& basis_rows() const { return basis_rows_; }

    /// r-vector V^T M f~ from the m sampled values; cost O(r m).
    Vector apply_projected(const Vector& sampled) const {
        check(sampled);
        if (!has_test_basis()) throw ConfigError("deim", "no test basis registered");
        return projector_ * sampled;
    }

private:
    void check(const Vector& sampled) const {
        if (sampled.size() != size()) {
            throw ConfigError("deim", "expected " + std::to_string(size()) + " sampled values, got " +
                                          std::to_string(sampled.size()));
        }
    }

    PodBasis pod_;
    std::vector<int> indices_;
    std::string provenance_;
    Eigen::PartialPivLU<Matrix> lu_;
    Matrix inverse_;
    double condition_ = 1.0;
    Matrix projector_;
    Matrix basis_rows_;
};

/// Greedy interpolation-index selection. Ties go to the lowest index.
inline DeimModel deim_indices(PodBasis basis, std::string provenance = "") {
    const Matrix& phi = basis.modes;
    const Index m = phi.cols();
    if (m == 0) throw ConfigError("deim", "empty POD basis");
    std::vector<int> idx;
    idx.push_back(detail::first_argmax_abs(phi.col(0)));
    for (Index i = 1; i < m; ++i) {
        Matrix ptp(i, i);
        Vector rhs(i);
        for (Index k = 0; k < i; ++k) {
            ptp.row(k) = phi.row(idx[k]).head(i);
            rhs[k] = phi(idx[k], i);
        }
        const Vector w = ptp.partialPivLu().solve(rhs);
        const Vector r = phi.col(i) - phi.leftCols(i) * w;
        const int next = detail::first_argmax_abs(r);
        if (!(std::abs(r[next]) > 1e-13 * std::max(1.0, phi.col(i).cwiseAbs().maxCoeff()))) {
            throw NumericalError("deim", "zero interpolation residual at step " + std::to_string(i + 1) +
                                             ": mode lies in the span of the previous ones at the selected rows");
        }
        idx.push_back(next);
    }
    return DeimModel(std::move(basis), std::move(idx), std::move(provenance));
}

inline void save_deim(const DeimModel& d, std::ostream& os) {
    os << "msrom-deim 1\n";
    os << "provenance " << (d.provenance().empty() ? "-" : d.provenance()) << '\n';
    os << d.dimension() << ' ' << d.size() << '\n';
    os << std::setprecision(17);
    const Vector& s = d.pod().singular_values;
    os << s.size();
    for (Index k = 0; k < s.size(); ++k) os << ' ' << s[k];
    os << '\n';
    for (int k = 0; k < d.size(); ++k) os << (k ? " " : "") << d.indices()[k];
    os << '\n';
    for (Index j = 0; j < d.modes().cols(); ++j) {
        for (Index i = 0; i < d.modes().rows(); ++i) os << (i ? " " : "") << d.modes()(i, j);
        os << '\n';
    }
}

inline DeimModel load_deim(std::istream& is) {
    auto fail = [](const std::string& what) { return ConfigError("deim", "model file: " + what); };
    std::string magic, key, prov;
    int version = 0;
    if (!(is >> magic >> version) || magic != "msrom-deim" || version != 1) throw fail("bad magic header");
    if (!(is >> key) || key != "provenance" || !std::getline(is, prov)) throw fail("missing provenance");
    prov.erase(0, prov.find_first_not_of(' '));
    if (prov == "-") prov.clear();
    Index n = 0, m = 0, ns = 0;
    if (!(is >> n >> m) || n < 1 || m < 1 || m > n) throw fail("bad dimensions");
    if (!(is >> ns) || ns < 0) throw fail("bad singular value count");
    PodBasis p;
    p.singular_values.resize(ns);
    for (Index k = 0; k < ns; ++k)
        if (!(is >> p.singular_values[k])) throw fail("bad singular value");
    std::vector<int> idx(static_cast<std::size_t>(m));
    for (auto& i : idx)
        if (!(is >> i) || i < 0 || i >= n) throw fail("bad index");
    p.modes.resize(n, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i)
            if (!(is >> p.modes(i, j))) throw fail("truncated mode data");
    return DeimModel(std::move(p), std::move(idx), std::move(prov));
}

inline void save_deim(const DeimModel& d, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("deim", "cannot open " + path);
    save_deim(d, os);
}

inline DeimModel load_deim(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("deim", "cannot open " + path);
    return load_deim(is);
}

} // namespace msrom

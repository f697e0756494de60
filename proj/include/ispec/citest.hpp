#ifndef ISPEC_CITEST_HPP
#define ISPEC_CITEST_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "ispec/data_table.hpp"
#include "ispec/vertex_set.hpp"

namespace ispec {

struct CITestResult {
    double p_value = 1;
    double statistic = 0;
    int dof = 1;
};

enum class TestKind { FisherZ, DegenerateGaussian };

inline TestKind parse_test_kind(const std::string& s) {
    if (s == "fisher-z" || s == "fisherz") return TestKind::FisherZ;
    if (s == "dg" || s == "degenerate-gaussian") return TestKind::DegenerateGaussian;
    throw InputError("unknown test: " + s);
}

// Answers "is a independent of b given s" over column indices.
using CiOracle = std::function<bool(int a, int b, VertexSet s)>;

// Precomputes the (embedded) covariance of a table once so that repeated
// queries only factor small submatrices. Column indices refer to the table.
class GaussianCiTester {
public:
    GaussianCiTester(const DataTable& data, TestKind kind) : kind_(kind), n_(data.num_rows()) {
        if (n_ < 2) throw DegenerateDataError("need at least two rows");
        const int nc = data.num_columns();
        for (int c = 0; c < nc; ++c) {
            const Column& col = data.column(c);
            const int first = static_cast<int>(embedded_.size());
            if (kind == TestKind::DegenerateGaussian && col.kind == ColumnKind::Discrete) {
                // One indicator per level, dropping the last.
                for (int l = 0; l + 1 < col.levels; ++l) {
                    std::vector<double> ind(n_);
                    for (std::size_t r = 0; r < n_; ++r) ind[r] = col.values[r] == l ? 1.0 : 0.0;
                    embedded_.push_back(std::move(ind));
                }
            } else {
                embedded_.push_back(col.values);
            }
            blocks_.push_back({first, static_cast<int>(embedded_.size()) - first});
        }
        const int m = static_cast<int>(embedded_.size());
        Eigen::MatrixXd x(n_, m);
        for (int j = 0; j < m; ++j)
            for (std::size_t r = 0; r < n_; ++r) x(static_cast<Eigen::Index>(r), j) = embedded_[j][r];
        const Eigen::RowVectorXd mean = x.colwise().mean();
        x.rowwise() -= mean;
        cov_ = (x.transpose() * x) / static_cast<double>(n_);
        embedded_.clear();
    }

    std::size_t num_rows() const { return n_; }

    CITestResult test(int a, int b, VertexSet s) const {
        if (a == b) throw InputError("CI test: a and b must differ");
        if (s.contains(a) || s.contains(b)) throw InputError("CI test: a and b must not be in the conditioning set");
        return kind_ == TestKind::FisherZ ? fisher_z(a, b, s) : degenerate_gaussian(a, b, s);
    }

    CiOracle oracle(double alpha) const {
        return [this, alpha](int a, int b, VertexSet s) { return test(a, b, s).p_value > alpha; };
    }

private:
    std::vector<int> dims(std::initializer_list<int> single, VertexSet s) const {
        std::vector<int> out;
        auto add = [&](int c) {
            if (c < 0 || c >= static_cast<int>(blocks_.size())) throw InputError("CI test: column out of range");
            for (int k = 0; k < blocks_[c].second; ++k) out.push_back(blocks_[c].first + k);
        };
        for (int c : single) add(c);
        for (int c : s) add(c);
        return out;
    }

    Eigen::MatrixXd sub(const std::vector<int>& idx) const {
        const auto m = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd out(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) out(i, j) = cov_(idx[i], idx[j]);
        return out;
    }

    static double log_det(const Eigen::MatrixXd& m) {
        if (m.rows() == 0) return 0;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
        const Eigen::VectorXd d = ldlt.vectorD();
        const double scale = m.diagonal().cwiseAbs().maxCoeff();
        double acc = 0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (!(d(i) > 1e-12 * std::max(scale, 1e-300))) throw DegenerateDataError("singular covariance submatrix");
            acc += std::log(d(i));
        }
        return acc;
    }

    CITestResult fisher_z(int a, int b, VertexSet s) const {
        const auto k = static_cast<double>(s.size());
        if (static_cast<double>(n_) <= k + 3) throw DegenerateDataError("too few rows for Fisher-Z");
        const Eigen::MatrixXd c = sub(dims({a, b}, s));
        Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
        const double scale = c.diagonal().cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            if (!(ldlt.vectorD()(i) > 1e-12 * std::max(scale, 1e-300))) throw DegenerateDataError("singular covariance submatrix");
        const Eigen::MatrixXd prec = ldlt.solve(Eigen::MatrixXd::Identity(c.rows(), c.cols()));
        double r = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
        r = std::clamp(r, -1 + 1e-15, 1 - 1e-15);
        const double z = std::sqrt(static_cast<double>(n_) - k - 3) * std::atanh(r);
        const boost::math::normal_distribution<double> nd;
        const double p = 2 * boost::math::cdf(boost::math::complement(nd, std::abs(z)));
        return {std::clamp(p, 0.0, 1.0), z, 1};
    }

    // Likelihood ratio of the Gaussian model for the embedded columns with
    // and without the a-b block, given s.
    CITestResult degenerate_gaussian(int a, int b, VertexSet s) const {
        const double ld_as = log_det(sub(dims({a}, s)));
        const double ld_bs = log_det(sub(dims({b}, s)));
        const double ld_abs = log_det(sub(dims({a, b}, s)));
        const double ld_s = log_det(sub(dims({}, s)));
        const double stat = std::max(0.0, static_cast<double>(n_) * (ld_as + ld_bs - ld_abs - ld_s));
        const int dof = blocks_[a].second * blocks_[b].second;
        const boost::math::chi_squared_distribution<double> chi(dof);
        const double p = boost::math::cdf(boost::math::complement(chi, stat));
        return {std::clamp(p, 0.0, 1.0), stat, dof};
    }

    TestKind kind_;
    std::size_t n_;
    std::vector<std::vector<double>> embedded_;
    std::vector<std::pair<int, int>> blocks_;  // per column: first embedded index, width
    Eigen::MatrixXd cov_;
};

inline VertexSet column_set(const DataTable& d, const std::vector<std::string>& names) {
    VertexSet s;
    for (const auto& n : names) s.insert(d.index_of(n));
    return s;
}

inline CITestResult fisher_z_test(const DataTable& d, const std::string& a, const std::string& b,
                                  const std::vector<std::string>& s) {
    std::vector<std::string> used{a, b};
    used.insert(used.end(), s.begin(), s.end());
    for (const auto& n : used)
        if (d.column(n).kind != ColumnKind::Continuous) throw InputError("Fisher-Z requires continuous columns: " + n);
    const DataTable sel = d.select(used);
    VertexSet ss;
    for (std::size_t i = 0; i < s.size(); ++i) ss.insert(static_cast<int>(i) + 2);
    return GaussianCiTester(sel, TestKind::FisherZ).test(0, 1, ss);
}

inline CITestResult degenerate_gaussian_test(const DataTable& d, const std::string& a, const std::string& b,
                                             const std::vector<std::string>& s) {
    std::vector<std::string> used{a, b};
    used.insert(used.end(), s.begin(), s.end());
    const DataTable sel = d.select(used);
    VertexSet ss;
    for (std::size_t i = 0; i < s.size(); ++i) ss.insert(static_cast<int>(i) + 2);
    return GaussianCiTester(sel, TestKind::DegenerateGaussian).test(0, 1, ss);
}

}  // namespace ispec

#endif  // ISPEC_CITEST_HPP

#ifndef ISPEC_ESTIMATE_HPP
#define ISPEC_ESTIMATE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ispec/data_table.hpp"
#include "ispec/errors.hpp"
#include "ispec/expression.hpp"

namespace ispec {

enum class Backend { DiscreteExact, LinearGaussian };
enum class LossKind { Auto, SquaredError, LogLoss };

inline Backend parse_backend(const std::string& s) {
    if (s == "discrete" || s == "discrete-exact") return Backend::DiscreteExact;
    if (s == "linear" || s == "linear-gaussian") return Backend::LinearGaussian;
    throw InputError("unknown backend: " + s);
}

inline std::string backend_name(Backend b) { return b == Backend::DiscreteExact ? "discrete-exact" : "linear-gaussian"; }

inline LossKind parse_loss(const std::string& s) {
    if (s == "auto") return LossKind::Auto;
    if (s == "mse") return LossKind::SquaredError;
    if (s == "nll" || s == "log-loss") return LossKind::LogLoss;
    throw InputError("unknown loss: " + s);
}

// Replaces `child` by child - Σ coef_i * removed_i before it enters a regression.
struct AuxiliaryFeature {
    std::string child;
    std::vector<std::string> removed;
    std::vector<double> coef;
};

struct FittedModel {
    Backend backend = Backend::LinearGaussian;
    std::string target;

    // LinearGaussian: y ≈ coef[0] + Σ coef[i+1] * feature_i, where features
    // named by an auxiliary entry are residualized first.
    std::vector<std::string> features;
    std::vector<double> coef;
    std::vector<AuxiliaryFeature> auxiliary;
    double residual_sd = 0;

    // DiscreteExact: unnormalized table over `table_vars` (first fastest).
    std::vector<std::string> table_vars;
    std::vector<int> table_levels;
    std::vector<double> table;

    int target_levels() const {
        for (std::size_t i = 0; i < table_vars.size(); ++i)
            if (table_vars[i] == target) return table_levels[i];
        throw InternalError("target missing from model table");
    }

    // Row-wise predictive distribution over the target's levels.
    std::vector<std::vector<double>> predict_distribution(const DataTable& d) const {
        if (backend != Backend::DiscreteExact) throw UnsupportedModelError("predictive distribution needs a discrete model");
        std::vector<const Column*> cols;
        int ti = -1;
        for (std::size_t i = 0; i < table_vars.size(); ++i) {
            if (table_vars[i] == target) {
                ti = static_cast<int>(i);
                cols.push_back(nullptr);
                continue;
            }
            if (!d.has_column(table_vars[i])) throw InputError("missing column " + table_vars[i]);
            cols.push_back(&d.column(table_vars[i]));
        }
        std::vector<std::size_t> stride(table_vars.size(), 1);
        for (std::size_t i = 1; i < table_vars.size(); ++i) stride[i] = stride[i - 1] * table_levels[i - 1];
        const int k = table_levels[ti];
        std::vector<std::vector<double>> out(d.num_rows(), std::vector<double>(k));
        for (std::size_t r = 0; r < d.num_rows(); ++r) {
            std::size_t base = 0;
            for (std::size_t i = 0; i < cols.size(); ++i) {
                if (!cols[i]) continue;
                const double v = cols[i]->values[r];
                if (v < 0 || v >= table_levels[i]) throw InputError("value outside the fitted support in " + table_vars[i]);
                base += stride[i] * static_cast<std::size_t>(v);
            }
            double total = 0;
            for (int y = 0; y < k; ++y) total += out[r][y] = table[base + stride[ti] * y];
            if (!(total > 0)) throw UndefinedConditionalError("zero predictive mass");
            for (double& p : out[r]) p /= total;
        }
        return out;
    }

    // Point predictions: the conditional mean (the expected level for
    // discrete targets).
    std::vector<double> predict(const DataTable& d) const {
        if (backend == Backend::DiscreteExact) {
            std::vector<double> out;
            for (const auto& dist : predict_distribution(d)) {
                double m = 0;
                for (std::size_t y = 0; y < dist.size(); ++y) m += static_cast<double>(y) * dist[y];
                out.push_back(m);
            }
            return out;
        }
        std::vector<double> out(d.num_rows(), coef.at(0));
        for (std::size_t j = 0; j < features.size(); ++j) {
            const std::vector<double> x = feature_values(d, features[j]);
            for (std::size_t r = 0; r < out.size(); ++r) out[r] += coef[j + 1] * x[r];
        }
        return out;
    }

    std::vector<double> feature_values(const DataTable& d, const std::string& name) const {
        if (!d.has_column(name)) throw InputError("missing column " + name);
        std::vector<double> x = d.column(name).values;
        for (const auto& aux : auxiliary) {
            if (aux.child != name) continue;
            for (std::size_t i = 0; i < aux.removed.size(); ++i) {
                if (!d.has_column(aux.removed[i])) throw InputError("missing column " + aux.removed[i]);
                const auto& b = d.column(aux.removed[i]).values;
                for (std::size_t r = 0; r < x.size(); ++r) x[r] -= aux.coef[i] * b[r];
            }
        }
        return x;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"backend", backend_name(backend)}, {"target", target}};
        if (backend == Backend::LinearGaussian) {
            j["features"] = features;
            j["coefficients"] = coef;
            j["residual_sd"] = residual_sd;
            nlohmann::json aux = nlohmann::json::array();
            for (const auto& a : auxiliary) aux.push_back({{"child", a.child}, {"removed", a.removed}, {"coefficients", a.coef}});
            j["auxiliary"] = aux;
        } else {
            j["vars"] = table_vars;
            j["levels"] = table_levels;
            j["table"] = table;
        }
        return j;
    }

    static FittedModel from_json(const nlohmann::json& j) {
        FittedModel m;
        m.backend = parse_backend(j.at("backend").get<std::string>());
        m.target = j.at("target").get<std::string>();
        if (m.backend == Backend::LinearGaussian) {
            m.features = j.at("features").get<std::vector<std::string>>();
            m.coef = j.at("coefficients").get<std::vector<double>>();
            m.residual_sd = j.value("residual_sd", 0.0);
            for (const auto& a : j.value("auxiliary", nlohmann::json::array()))
                m.auxiliary.push_back({a.at("child").get<std::string>(), a.at("removed").get<std::vector<std::string>>(),
                                       a.at("coefficients").get<std::vector<double>>()});
            if (m.coef.size() != m.features.size() + 1) throw InputError("model: coefficient count mismatch");
        } else {
            m.table_vars = j.at("vars").get<std::vector<std::string>>();
            m.table_levels = j.at("levels").get<std::vector<int>>();
            m.table = j.at("table").get<std::vector<double>>();
        }
        return m;
    }
};

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct OlsFit {
    std::vector<double> coef;  // intercept first
    double residual_sd = 0;
};

inline OlsFit ols(const std::vector<std::vector<double>>& xs, const std::vector<double>& y) {
    const Eigen::Index n = static_cast<Eigen::Index>(y.size());
    const Eigen::Index p = static_cast<Eigen::Index>(xs.size()) + 1;
    if (n < p) throw DegenerateDataError("regression needs more rows than coefficients");
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd Y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        X(r, 0) = 1;
        for (Eigen::Index j = 1; j < p; ++j) X(r, j) = xs[j - 1][r];
        Y(r) = y[r];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw DegenerateDataError("rank-deficient regression");
    const Eigen::VectorXd b = qr.solve(Y);
    const Eigen::VectorXd res = Y - X * b;
    OlsFit out;
    out.coef.assign(b.data(), b.data() + p);
    out.residual_sd = n > p ? std::sqrt(res.squaredNorm() / static_cast<double>(n - p)) : 0.0;
    return out;
}

// Plain regression model E[y | features].
inline FittedModel fit_ols(const DataTable& train, const std::string& y, const std::vector<std::string>& features) {
    FittedModel m;
    m.backend = Backend::LinearGaussian;
    m.target = y;
    m.features = features;
    std::vector<std::vector<double>> xs;
    for (const auto& f : features) xs.push_back(train.column(f).values);
    const OlsFit fit = ols(xs, train.column(y).values);
    m.coef = fit.coef;
    m.residual_sd = fit.residual_sd;
    return m;
}

// ---------------------------------------------------------------------------
// Fitting identified expressions
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> names_in(VertexSet s, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (int v : s) out.push_back(names.at(v));
    return out;
}

inline void require_continuous(const DataTable& d, const std::vector<std::string>& cols) {
    for (const auto& c : cols) {
        if (!d.has_column(c)) throw InputError("missing column " + c);
        if (d.column(c).kind != ColumnKind::Continuous)
            throw UnsupportedModelError("linear-gaussian backend needs continuous column " + c);
    }
}

inline FittedModel fit_linear(const ExprPtr& e, const std::vector<std::string>& names, const DataTable& train, int y) {
    const std::string yname = names.at(y);
    // P(y | A): regression of y on A.
    if (is_leaf(*e)) {
        if (e->target != VertexSet::single(y)) throw UnsupportedModelError("expression is not a conditional of the target");
        const auto feats = names_in(e->given, names);
        require_continuous(train, feats);
        return fit_ols(train, yname, feats);
    }
    // prior(y | A) * Π_k P(c_k | y, B_k) / Σ_y [same]: posterior of y. Each
    // c_k is residualized on B_k (its non-target parents), then y is regressed
    // on A and the residualized children.
    if (e->kind != ExprKind::Quotient) throw UnsupportedModelError("unsupported expression shape for linear-gaussian backend");
    const ExprPtr& num = e->kids[0];
    const ExprPtr& den = e->kids[1];
    if (den->kind != ExprKind::Sum || den->vars != VertexSet::single(y) || key(*den->kids[0]) != key(*num))
        throw UnsupportedModelError("unsupported expression shape for linear-gaussian backend");
    const std::vector<ExprPtr> factors = num->kind == ExprKind::Product ? num->kids : std::vector<ExprPtr>{num};
    FittedModel m;
    m.backend = Backend::LinearGaussian;
    m.target = yname;
    VertexSet prior_given;
    bool have_prior = false;
    std::vector<std::string> children;
    for (const auto& f : factors) {
        if (!is_leaf(*f) || f->target.size() != 1) throw UnsupportedModelError("factors must be single-variable conditionals");
        if (f->target.contains(y)) {
            if (have_prior) throw UnsupportedModelError("more than one factor for the target");
            have_prior = true;
            prior_given = f->given;
            continue;
        }
        if (!f->given.contains(y)) throw UnsupportedModelError("factor does not involve the target");
        const int c = f->target.front();
        const VertexSet others = f->given - VertexSet::single(y);
        std::vector<std::string> regressors{yname};
        for (const auto& b : names_in(others, names)) regressors.push_back(b);
        require_continuous(train, regressors);
        require_continuous(train, {names.at(c)});
        const FittedModel child = fit_ols(train, names.at(c), regressors);
        AuxiliaryFeature aux{names.at(c), {}, {}};
        for (std::size_t i = 1; i < regressors.size(); ++i) {
            aux.removed.push_back(regressors[i]);
            aux.coef.push_back(child.coef[i + 1]);
        }
        m.auxiliary.push_back(aux);
        children.push_back(names.at(c));
    }
    if (!have_prior) throw UnsupportedModelError("no factor for the target");
    m.features = names_in(prior_given, names);
    for (const auto& c : children) m.features.push_back(c);
    require_continuous(train, m.features);
    std::vector<std::vector<double>> xs;
    for (const auto& f : m.features) xs.push_back(m.feature_values(train, f));
    const OlsFit fit = ols(xs, train.column(yname).values);
    m.coef = fit.coef;
    m.residual_sd = fit.residual_sd;
    return m;
}

inline FittedModel fit_discrete(const ExprPtr& e, const std::vector<std::string>& names, const DataTable& train, int y) {
    std::vector<ExprPtr> leaves;
    collect_leaves(e, leaves);
    VertexSet used = free_vars(*e);
    for (const auto& l : leaves) used |= l->target | l->given;
    if (!used.contains(y)) throw UnsupportedModelError("expression does not mention the target");
    std::vector<Column> cols;
    std::vector<int> index;
    for (int v = 0; v < static_cast<int>(names.size()); ++v) {
        if (used.contains(v)) {
            if (!train.has_column(names[v])) throw InputError("missing column " + names[v]);
            const Column& c = train.column(names[v]);
            if (c.kind != ColumnKind::Discrete) throw UnsupportedModelError("discrete backend needs discrete column " + c.name);
            cols.push_back(c);
        } else {
            cols.push_back(Column{"__unused" + std::to_string(v), ColumnKind::Discrete, 1, std::vector<double>(train.num_rows(), 0)});
        }
        index.push_back(v);
    }
    const DataTable aligned(std::move(cols));
    const EmpiricalSource src(aligned, index);
    const Factor f = evaluate_table(e, src);
    FittedModel m;
    m.backend = Backend::DiscreteExact;
    m.target = names.at(y);
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        m.table_vars.push_back(names.at(f.vars[i]));
        m.table_levels.push_back(f.card[i]);
    }
    m.table = f.values;
    if (std::find(f.vars.begin(), f.vars.end(), y) == f.vars.end()) throw UnsupportedModelError("expression is constant in the target");
    return m;
}

}  // namespace detail

// `names` maps expression vertex ids to data column names.
inline FittedModel fit_expression(const ExprPtr& e, const std::vector<std::string>& names, const DataTable& train,
                                  const std::string& y, Backend backend) {
    const auto it = std::find(names.begin(), names.end(), y);
    if (it == names.end()) throw InputError("unknown target " + y);
    if (train.num_rows() == 0) throw InputError("empty training data");
    const int yi = static_cast<int>(it - names.begin());
    return backend == Backend::DiscreteExact ? detail::fit_discrete(e, names, train, yi)
                                             : detail::fit_linear(e, names, train, yi);
}

// Mean squared error for continuous targets, mean negative log-likelihood for
// discrete ones (Auto), or the requested loss.
inline double validation_loss(const FittedModel& m, const DataTable& data, LossKind kind = LossKind::Auto) {
    if (data.num_rows() == 0) throw InputError("validation loss on empty data");
    if (!data.has_column(m.target)) throw InputError("missing target column " + m.target);
    const Column& y = data.column(m.target);
    if (kind == LossKind::Auto) kind = m.backend == Backend::DiscreteExact ? LossKind::LogLoss : LossKind::SquaredError;
    double total = 0;
    if (kind == LossKind::LogLoss) {
        const auto dist = m.predict_distribution(data);
        for (std::size_t r = 0; r < dist.size(); ++r) total -= std::log(dist[r].at(static_cast<std::size_t>(y.values[r])));
    } else {
        const auto pred = m.predict(data);
        for (std::size_t r = 0; r < pred.size(); ++r) total += (pred[r] - y.values[r]) * (pred[r] - y.values[r]);
    }
    return total / static_cast<double>(data.num_rows());
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

// Spearman's rho.
inline double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InputError("rank_correlation: length mismatch");
    if (a.size() < 2) throw InputError("rank_correlation: need at least two values");
    const auto ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 || sbb == 0) throw DegenerateDataError("rank_correlation: constant ranks");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace ispec

#endif  // ISPEC_ESTIMATE_HPP

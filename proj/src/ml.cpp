#include "mgeneo/ml.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "mgeneo/error.hpp"
#include "mgeneo/parallel.hpp"

namespace mgeneo::ml {

void Dataset::validate() const
{
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw DimensionError("dataset has " + std::to_string(features.rows()) + " rows but " +
                             std::to_string(labels.size()) + " labels");
    }
    if (!features.allFinite()) throw ValueError("dataset contains non-finite features");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    Dataset d{Matrix(static_cast<Eigen::Index>(rows.size()), features.cols()), {}};
    d.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
        d.labels.push_back(labels[rows[i]]);
    }
    return d;
}

Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::vector<int> labels)
{
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    Dataset d{Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim)), std::move(labels)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != dim) throw DimensionError("feature rows have different lengths");
        for (std::size_t j = 0; j < dim; ++j) {
            d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    d.validate();
    return d;
}

namespace {

std::vector<int> sorted_classes(std::span<const int> y)
{
    std::vector<int> c(y.begin(), y.end());
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

struct Svd {
    Vector mean;
    Vector singular_values;
    Matrix v;
    int rank = 0;
};

Svd centered_svd(const Matrix& x)
{
    if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("PCA needs a non-empty matrix");
    if (!x.allFinite()) throw ValueError("PCA input contains non-finite values");
    Svd s;
    s.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - s.mean.transpose();
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    s.singular_values = svd.singularValues();
    s.v = svd.matrixV();
    const double top = s.singular_values.size() ? s.singular_values(0) : 0.0;
    const double tol = static_cast<double>(std::max(x.rows(), x.cols())) * std::numeric_limits<double>::epsilon() * top;
    s.rank = static_cast<int>((s.singular_values.array() > tol).count());
    return s;
}

PCAModel finish_pca(Svd s, int n)
{
    if (n < 0) throw InvalidArgument("n_components must be >= 0");
    if (n > s.rank) {
        throw InvalidArgument("n_components " + std::to_string(n) + " exceeds data rank " + std::to_string(s.rank));
    }
    PCAModel m{std::move(s.mean), s.v.leftCols(n), std::move(s.singular_values), s.rank};
    for (Eigen::Index c = 0; c < m.components.cols(); ++c) {
        Eigen::Index arg = 0;
        m.components.col(c).cwiseAbs().maxCoeff(&arg);
        if (m.components(arg, c) < 0.0) m.components.col(c) *= -1.0;
    }
    return m;
}

}  // namespace

PCAModel pca_fit(const Matrix& x, int n_components)
{
    if (n_components > std::min(x.rows(), x.cols())) {
        throw InvalidArgument("n_components exceeds min(samples, dim)");
    }
    return finish_pca(centered_svd(x), n_components);
}

PCAModel pca_fit_auto(const Matrix& x, double fraction, int cap)
{
    Svd s = centered_svd(x);
    const Vector var = s.singular_values.array().square();
    const double total = var.sum();
    int n = 0;
    if (total > 0.0) {
        double acc = 0.0;
        while (n < s.rank && acc < fraction * total) acc += var(n++);
    }
    const int keep = std::min({n, cap, s.rank});
    return finish_pca(std::move(s), keep);
}

Matrix pca_transform(const PCAModel& model, const Matrix& x)
{
    if (x.cols() != model.mean.size()) throw DimensionError("PCA transform: feature dimension mismatch");
    return (x.rowwise() - model.mean.transpose()) * model.components;
}

Matrix pca_reconstruct(const PCAModel& model, const Matrix& projected)
{
    return (projected * model.components.transpose()).rowwise() + model.mean.transpose();
}

LDAModel lda_fit(const Matrix& x, std::span<const int> y)
{
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DimensionError("LDA: row and label counts differ");
    const auto classes = sorted_classes(y);
    if (classes.size() < 2) throw InvalidArgument("LDA needs at least two classes");
    const auto dim = x.cols();
    const auto nc = static_cast<Eigen::Index>(classes.size());
    Matrix means = Matrix::Zero(dim, nc);
    std::vector<int> counts(classes.size(), 0);
    std::vector<Eigen::Index> idx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        idx[i] = std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin();
        means.col(idx[i]) += x.row(static_cast<Eigen::Index>(i)).transpose();
        ++counts[static_cast<std::size_t>(idx[i])];
    }
    for (Eigen::Index c = 0; c < nc; ++c) {
        if (counts[static_cast<std::size_t>(c)] < 2) throw InvalidArgument("LDA needs at least two samples per class");
        means.col(c) /= counts[static_cast<std::size_t>(c)];
    }
    Matrix centered(x.rows(), dim);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        centered.row(i) = x.row(i) - means.col(idx[static_cast<std::size_t>(i)]).transpose();
    }
    const double dof = static_cast<double>(std::max<Eigen::Index>(1, x.rows() - nc));
    Matrix sw = Matrix::Zero(dim, dim);
    sw.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / dof);
    sw = sw.selfadjointView<Eigen::Lower>();
    const double trace = sw.trace();
    LDAModel m;
    m.classes = classes;
    m.ridge = dim > 0 ? 1e-6 * trace / static_cast<double>(dim) : 0.0;
    if (m.ridge <= 0.0) m.ridge = 1e-12;
    sw.diagonal().array() += m.ridge;
    Eigen::LDLT<Matrix> ldlt(sw);
    m.coef = ldlt.solve(means);
    m.intercept.resize(nc);
    for (Eigen::Index c = 0; c < nc; ++c) {
        const double prior = static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(x.rows());
        m.intercept(c) = -0.5 * means.col(c).dot(m.coef.col(c)) + std::log(prior);
    }
    return m;
}

Matrix lda_scores(const LDAModel& model, const Matrix& x)
{
    if (x.cols() != model.coef.rows()) throw DimensionError("LDA: feature dimension mismatch");
    return (x * model.coef).rowwise() + model.intercept.transpose();
}

namespace {

std::vector<int> argmax_rows(const Matrix& scores, const std::vector<int>& classes)
{
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index arg = 0;
        scores.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(arg)];
    }
    return out;
}

}  // namespace

std::vector<int> lda_predict(const LDAModel& model, const Matrix& x)
{
    return argmax_rows(lda_scores(model, x), model.classes);
}

SVMModel svm_fit(const Matrix& x, std::span<const int> y, const SVMParams& params)
{
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DimensionError("SVM: row and label counts differ");
    if (!(params.lambda > 0.0) || params.epochs < 1) throw InvalidArgument("SVM needs lambda > 0 and epochs >= 1");
    SVMModel m;
    m.classes = sorted_classes(y);
    if (m.classes.size() < 2) throw InvalidArgument("SVM needs at least two classes");
    const auto n = x.rows();
    const auto dim = x.cols();
    m.mean = x.colwise().mean().transpose();
    m.scale = ((x.rowwise() - m.mean.transpose()).array().square().colwise().sum() / static_cast<double>(n))
                  .sqrt()
                  .transpose();
    for (auto& s : m.scale) {
        if (!(s > 0.0)) s = 1.0;
    }
    Matrix z(dim + 1, n);
    z.topRows(dim) = ((x.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array()).transpose();
    z.row(dim).setOnes();

    const std::size_t machines = m.classes.size() == 2 ? 1 : m.classes.size();
    m.weights = Matrix::Zero(dim + 1, static_cast<Eigen::Index>(machines));
    const long total = static_cast<long>(params.epochs) * n;
    const long average_from = total / 2;
    for (std::size_t k = 0; k < machines; ++k) {
        const int positive = machines == 1 ? m.classes[1] : m.classes[k];
        std::mt19937_64 rng(params.seed);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Vector w = Vector::Zero(dim + 1);
        Vector avg = Vector::Zero(dim + 1);
        long t = 0;
        for (int e = 0; e < params.epochs; ++e) {
            std::shuffle(order.begin(), order.end(), rng);
            for (const auto i : order) {
                ++t;
                const double eta = 1.0 / (params.lambda * static_cast<double>(t));
                const double yi = y[static_cast<std::size_t>(i)] == positive ? 1.0 : -1.0;
                const double margin = yi * w.dot(z.col(i));
                w *= 1.0 - eta * params.lambda;
                if (margin < 1.0) w += (eta * yi) * z.col(i);
                if (t > average_from) avg += w;
            }
        }
        m.weights.col(static_cast<Eigen::Index>(k)) = avg / static_cast<double>(total - average_from);
    }
    return m;
}

Matrix svm_decision(const SVMModel& model, const Matrix& x)
{
    const auto dim = model.mean.size();
    if (x.cols() != dim) throw DimensionError("SVM: feature dimension mismatch");
    const Matrix z = (x.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
    return (z * model.weights.topRows(dim)).rowwise() + model.weights.row(dim);
}

std::vector<int> svm_predict(const SVMModel& model, const Matrix& x)
{
    const Matrix d = svm_decision(model, x);
    if (model.weights.cols() == 1) {
        std::vector<int> out(static_cast<std::size_t>(d.rows()));
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            out[static_cast<std::size_t>(i)] = d(i, 0) > 0.0 ? model.classes[1] : model.classes[0];
        }
        return out;
    }
    return argmax_rows(d, model.classes);
}

double accuracy(std::span<const int> truth, std::span<const int> predicted)
{
    if (truth.size() != predicted.size()) throw DimensionError("accuracy: length mismatch");
    if (truth.empty()) throw InvalidArgument("accuracy of an empty set");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::L: return "L";
    case Method::PL: return "PL";
    case Method::PS: return "PS";
    }
    return "?";
}

Method parse_method(std::string_view s)
{
    if (s == "L") return Method::L;
    if (s == "PL") return Method::PL;
    if (s == "PS") return Method::PS;
    throw InvalidArgument("unknown method '" + std::string(s) + "' (expected L, PL or PS)");
}

double fit_and_score(Method method, const Dataset& train, const Dataset& test, const ClassifierOptions& options)
{
    if (method == Method::L) {
        return accuracy(test.labels, lda_predict(lda_fit(train.features, train.labels), test.features));
    }
    const PCAModel pca = options.pca_components > 0
                             ? pca_fit(train.features, options.pca_components)
                             : pca_fit_auto(train.features, options.pca_variance, options.pca_cap);
    const Matrix ptrain = pca_transform(pca, train.features);
    const Matrix ptest = pca_transform(pca, test.features);
    if (method == Method::PL) return accuracy(test.labels, lda_predict(lda_fit(ptrain, train.labels), ptest));
    return accuracy(test.labels, svm_predict(svm_fit(ptrain, train.labels, options.svm), ptest));
}

std::vector<TrialReport> run_trials(const Dataset& data, std::span<const Method> methods,
                                    const SubsampleProtocol& protocol, const ClassifierOptions& options,
                                    std::string_view homology, int threads)
{
    data.validate();
    if (protocol.per_class < 2 || protocol.trials < 1) throw InvalidArgument("protocol needs per_class >= 2, trials >= 1");
    if (!(protocol.train_fraction > 0.0 && protocol.train_fraction < 1.0)) {
        throw InvalidArgument("train_fraction must lie in (0, 1)");
    }
    const auto n_train = static_cast<std::size_t>(std::lround(protocol.per_class * protocol.train_fraction));
    if (n_train < 2 || n_train >= static_cast<std::size_t>(protocol.per_class)) {
        throw InvalidArgument("split leaves a side with too few samples");
    }
    // Canonical order: by label, then lexicographically by features.
    std::vector<std::size_t> canon(data.size());
    std::iota(canon.begin(), canon.end(), std::size_t{0});
    std::stable_sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
        if (data.labels[a] != data.labels[b]) return data.labels[a] < data.labels[b];
        const auto ra = data.features.row(static_cast<Eigen::Index>(a));
        const auto rb = data.features.row(static_cast<Eigen::Index>(b));
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    std::map<int, std::vector<std::size_t>> by_class;
    for (const auto i : canon) by_class[data.labels[i]].push_back(i);
    if (by_class.size() < 2) throw InvalidArgument("need at least two classes");
    for (const auto& [label, rows] : by_class) {
        if (rows.size() < static_cast<std::size_t>(protocol.per_class)) {
            throw InvalidArgument("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                  " samples, fewer than the requested " + std::to_string(protocol.per_class));
        }
    }

    const auto t_count = static_cast<std::size_t>(protocol.trials);
    std::vector<std::vector<double>> acc(t_count, std::vector<double>(methods.size()));
    parallel_for(t_count, threads, [&](std::size_t t) {
        std::seed_seq seq{static_cast<std::uint32_t>(protocol.seed), static_cast<std::uint32_t>(protocol.seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> test_rows;
        for (const auto& [label, rows] : by_class) {
            auto pick = rows;
            std::shuffle(pick.begin(), pick.end(), rng);
            pick.resize(static_cast<std::size_t>(protocol.per_class));
            train_rows.insert(train_rows.end(), pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n_train));
            test_rows.insert(test_rows.end(), pick.begin() + static_cast<std::ptrdiff_t>(n_train), pick.end());
        }
        const Dataset train = data.subset(train_rows);
        const Dataset test = data.subset(test_rows);
        ClassifierOptions opt = options;
        opt.svm.seed = options.svm.seed + rng();
        for (std::size_t m = 0; m < methods.size(); ++m) acc[t][m] = fit_and_score(methods[m], train, test, opt);
    });

    std::vector<TrialReport> reports;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        TrialReport r;
        r.method = methods[m];
        r.homology = std::string(homology);
        r.protocol = "subsample:" + std::to_string(protocol.per_class) + "x" + std::to_string(protocol.trials) +
                     ",train=" + std::to_string(protocol.train_fraction) + ",seed=" + std::to_string(protocol.seed);
        r.trials = protocol.trials;
        for (std::size_t t = 0; t < t_count; ++t) r.accuracies.push_back(acc[t][m]);
        r.mean_accuracy = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / static_cast<double>(t_count);
        reports.push_back(std::move(r));
    }
    return reports;
}

TrialReport run_official(const Dataset& train, const Dataset& test, Method method,
                         const ClassifierOptions& options, std::string_view homology)
{
    train.validate();
    test.validate();
    TrialReport r;
    r.method = method;
    r.homology = std::string(homology);
    r.protocol = "official";
    r.trials = 1;
    r.accuracies.push_back(fit_and_score(method, train, test, options));
    r.mean_accuracy = r.accuracies.front();
    return r;
}

nlohmann::json report_to_json(const TrialReport& r)
{
    return {{"method", to_string(r.method)},
            {"homology", r.homology},
            {"protocol", r.protocol},
            {"mean_accuracy", r.mean_accuracy},
            {"trials", r.trials},
            {"accuracies", r.accuracies}};
}

}  // namespace mgeneo::ml

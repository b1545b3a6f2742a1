#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace mgeneo::ml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Dataset {
    Matrix features;  // samples x dim
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    // Row count matches labels and every entry is finite.
    void validate() const;
    Dataset subset(std::span<const std::size_t> rows) const;
};

Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::vector<int> labels);

struct PCAModel {
    Vector mean;
    Matrix components;  // dim x n, one component per column
    Vector singular_values;  // all of them, decreasing
    int rank = 0;

    int n_components() const { return static_cast<int>(components.cols()); }
};

/// Centers by the training mean and keeps the top right-singular vectors of
/// the centered data. Each component's largest-magnitude entry is positive.
PCAModel pca_fit(const Matrix& x, int n_components);
/// Smallest n whose components explain >= `fraction` of the variance, at most `cap`.
PCAModel pca_fit_auto(const Matrix& x, double fraction = 0.95, int cap = 50);
Matrix pca_transform(const PCAModel& model, const Matrix& x);
/// Inverse map back to feature space (mean added back).
Matrix pca_reconstruct(const PCAModel& model, const Matrix& projected);

struct LDAModel {
    std::vector<int> classes;
    Matrix coef;       // dim x classes
    Vector intercept;  // per class
    double ridge = 0.0;
};

/// Fisher discriminant with pooled within-class covariance plus ridge
/// 1e-6 * trace / dim; class scores are linear with log-prior intercepts.
LDAModel lda_fit(const Matrix& x, std::span<const int> y);
Matrix lda_scores(const LDAModel& model, const Matrix& x);
std::vector<int> lda_predict(const LDAModel& model, const Matrix& x);

struct SVMParams {
    double lambda = 1e-3;
    int epochs = 40;
    std::uint64_t seed = 1;
};

/// Linear soft-margin classifier: Pegasos subgradient steps on the hinge loss
/// over standardized features with a constant bias feature. The returned
/// weights average the iterates of the second half of training. Two classes
/// train one machine (classes[1] positive); more train one versus rest each.
struct SVMModel {
    std::vector<int> classes;
    Vector mean;
    Vector scale;
    Matrix weights;  // (dim + 1) x machines, last row is the bias
};

SVMModel svm_fit(const Matrix& x, std::span<const int> y, const SVMParams& params = {});
/// Margins per machine (samples x machines).
Matrix svm_decision(const SVMModel& model, const Matrix& x);
std::vector<int> svm_predict(const SVMModel& model, const Matrix& x);

double accuracy(std::span<const int> truth, std::span<const int> predicted);

enum class Method { L, PL, PS };  // LDA, PCA+LDA, PCA+SVM

std::string to_string(Method m);
Method parse_method(std::string_view s);

struct ClassifierOptions {
    int pca_components = 0;  // 0 selects by explained variance
    double pca_variance = 0.95;
    int pca_cap = 50;
    SVMParams svm;
};

double fit_and_score(Method method, const Dataset& train, const Dataset& test, const ClassifierOptions& options);

struct SubsampleProtocol {
    int per_class = 500;
    int trials = 100;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct TrialReport {
    Method method = Method::L;
    std::string homology;
    std::string protocol;
    double mean_accuracy = 0.0;
    int trials = 0;
    std::vector<double> accuracies;
};

/// Each trial draws `per_class` samples of every class and splits each class
/// train_fraction / rest. Samples are put in a canonical order first, so the
/// report depends on the multiset of samples and the seed only.
std::vector<TrialReport> run_trials(const Dataset& data, std::span<const Method> methods,
                                    const SubsampleProtocol& protocol, const ClassifierOptions& options,
                                    std::string_view homology, int threads = 1);

TrialReport run_official(const Dataset& train, const Dataset& test, Method method,
                         const ClassifierOptions& options, std::string_view homology);

nlohmann::json report_to_json(const TrialReport& r);

}  // namespace mgeneo::ml

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgeneo/complex.hpp"
#include "mgeneo/geneo.hpp"
#include "mgeneo/image.hpp"
#include "mgeneo/landscape.hpp"
#include "mgeneo/ml.hpp"
#include "mgeneo/vectorize.hpp"

namespace mgeneo::pipeline {

enum class Filtration { Lower, Upper, MulG, MulD, MixG };

std::string to_string(Filtration f);  // lower, upper, mul-G, mul-D, mix-G
Filtration parse_filtration(std::string_view s);
bool is_multiparameter(Filtration f);
/// Default bank kind for the multiparameter filtrations.
std::string bank_kind(Filtration f);

struct FeatureParams {
    vec::PersistenceImageParams pi;
    mpl::GridSpec grid = mpl::default_landscape_grid();
    int k_max = 1;
    int bins = 10;  // coarsening of the bifiltration, 0 disables
    cx::TriangleRule rule = cx::TriangleRule::SquareMax;
    std::optional<geneo::OperatorBank> bank;  // replaces the filtration's default bank

    geneo::OperatorBank bank_for(Filtration f) const;
    nlohmann::json to_json(Filtration f) const;
};

/// H0 and H1 features of one image: persistence images for the one-parameter
/// filtrations, flattened landscapes for the bifiltrations.
struct ImageFeatures {
    vec::FeatureVector h0;
    vec::FeatureVector h1;
};

ImageFeatures image_features(const img::GrayImage& image, Filtration f, const FeatureParams& params);

/// Persistence diagram of a one-parameter filtration, upper-star points mapped
/// back to the image scale.
ph::PersistenceDiagram one_parameter_diagram(const img::GrayImage& image, Filtration f);

/// Bifiltration of the image under the filtration's bank, coarsened per params.
cx::Bifiltration image_bifiltration(const img::GrayImage& image, Filtration f, const FeatureParams& params);

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 14695981039346656037ull);
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

/// Features for many images, in input order. With a cache directory, images
/// are processed in chunks whose results are stored under a key hashing the
/// parameters and the pixel data, so an interrupted run resumes at the first
/// missing chunk. A stored chunk whose payload hash does not match raises
/// CacheError.
struct BatchOptions {
    int threads = 1;
    std::optional<std::filesystem::path> cache_dir;
    std::size_t chunk_size = 1000;
};

struct BatchStats {
    std::size_t chunks = 0;
    std::size_t cache_hits = 0;
};

std::vector<ImageFeatures> batch_features(std::span<const img::GrayImage> images, Filtration f,
                                          const FeatureParams& params, const BatchOptions& options,
                                          BatchStats* stats = nullptr);

enum class Homology { H0, H1, Both };
std::string to_string(Homology h);  // H0, H1, H0+H1
Homology parse_homology(std::string_view s);
vec::FeatureVector select(const ImageFeatures& f, Homology h);
ml::Dataset to_dataset(std::span<const ImageFeatures> features, std::span<const int> labels, Homology h);

// Experiments.

struct ExperimentSpec {
    std::string task = "0vs1";  // 0vs1, 1vs3, 6vs9, ten
    Filtration filtration = Filtration::MixG;
    std::string scale = "sample500";  // sample500 or full
    int per_class = 500;
    ml::SubsampleProtocol protocol;  // per_class is overwritten from above
    std::vector<ml::Method> methods{ml::Method::L, ml::Method::PL, ml::Method::PS};
    std::vector<Homology> homologies{Homology::H0, Homology::H1, Homology::Both};
    ml::ClassifierOptions classifier;
    FeatureParams features;
};

std::vector<int> task_classes(std::string_view task);

/// First `per_class` samples of each class in order of appearance.
std::vector<std::size_t> first_per_class(std::span<const int> labels, std::span<const int> classes, int per_class);

struct ExperimentResult {
    nlohmann::json report;
    BatchStats stats;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& mnist_dir,
                                const BatchOptions& batch);

// Stability harness.

struct StabilitySpec {
    int pairs = 100;
    int size = 12;
    std::string bank_kind = "multi-geneo";
    std::uint64_t seed = 7;
    int k_max = 3;
    mpl::GridSpec grid{{-260.0, -260.0}, {260.0, 260.0}, 10.0, mpl::GridAlignment::Centers};
};

struct StabilityPair {
    double distance_h0 = 0.0;
    double distance_h1 = 0.0;
    double operator_distance = 0.0;  // max_i sup |psi_i(phi1) - psi_i(phi2)|
    double input_distance = 0.0;     // sup |phi1 - phi2|
    double bound = 0.0;              // factor * input_distance + step
    bool ok = true;
};

struct StabilityResult {
    double factor = 1.0;
    std::vector<StabilityPair> pairs;
    int violations = 0;
    double min_slack = 0.0;
    nlohmann::json to_json() const;
};

/// Random image pairs, mostly perturbations with log-uniform amplitude, some
/// independent. Rescaling is turned off in the bank.
StabilityResult run_stability(const StabilitySpec& spec, int threads = 1);
/// 1 for banks of GENEOs and identities, 2 if any operator is a DGENEO.
double stability_factor(const geneo::OperatorBank& bank);

// The 3 x 3 example with two hand-given filtering functions.
img::GrayImage fixture_psi1();
img::GrayImage fixture_psi2();
/// Vertex letters g h i / d e f / a b c, row-major from the top row.
char fixture_letter(cx::VertexId v);
std::string fixture_simplex_name(const cx::Simplex& s);

}  // namespace mgeneo::pipeline

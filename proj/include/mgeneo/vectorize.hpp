#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgeneo/landscape.hpp"
#include "mgeneo/persistence.hpp"

namespace mgeneo::vec {

struct FeatureVector {
    std::vector<double> values;
    std::string homology;  // "H0", "H1", "H0+H1"
    std::string method;    // "pi", "landscape", or a '+'-joined list

    std::size_t size() const { return values.size(); }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct PersistenceImageParams {
    int resolution = 5;
    double sigma = 1.0;
    std::array<double, 2> range{0.0, 256.0};

    void validate() const;
};

/// Points become (birth, persistence) with infinite deaths clamped to
/// range[1]; each is weighted by persistence / span (clamped to [0, 1]) and
/// spread as an isotropic Gaussian. Cell (r, c) holds the Gaussian mass over
/// persistence bin r and birth bin c; the vector is row-major in (r, c).
FeatureVector persistence_image(const ph::PersistenceDiagram& d, int dim, const PersistenceImageParams& params);

/// Sup-norm change of the image per unit sup-norm move of one diagram point.
double persistence_image_lipschitz(const PersistenceImageParams& params);

/// values(k, ix, iy) in (k, row-major) order.
FeatureVector landscape_vector(const mpl::Landscape& l, std::string_view homology);
/// Inverse of landscape_vector for a known k_max and grid.
mpl::Landscape landscape_from_vector(const FeatureVector& v, int k_max, const mpl::GridSpec& grid);

FeatureVector concat(std::span<const FeatureVector> parts);

// Header "label,f0,f1,...", one sample per row.
std::string write_feature_csv(std::span<const int> labels, std::span<const FeatureVector> rows);

struct FeatureTable {
    std::vector<int> labels;
    std::vector<std::vector<double>> rows;
};

FeatureTable read_feature_csv(std::string_view text);

}  // namespace mgeneo::vec

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgeneo/complex.hpp"

namespace mgeneo::ph {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PersistencePoint {
    double birth = 0.0;
    double death = kInfinity;
    int dim = 0;

    bool essential() const { return death == kInfinity; }
    double persistence() const { return death - birth; }
    friend bool operator==(const PersistencePoint&, const PersistencePoint&) = default;
};

struct PersistenceDiagram {
    std::vector<PersistencePoint> points;

    std::vector<PersistencePoint> of_dim(int dim) const;
    std::size_t essential_count(int dim) const;
    // Number of dim-d points with birth <= t < death.
    std::size_t alive_at(int dim, double t) const;
    friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;
};

/// One entry of the raw pairing, zero-length pairs included.
struct RawPair {
    cx::SimplexId birth_simplex = 0;
    std::optional<cx::SimplexId> death_simplex;  // empty for essential classes
    int dim = 0;
    double birth = 0.0;
    double death = kInfinity;
};

struct PersistenceResult {
    PersistenceDiagram diagram;
    std::vector<RawPair> raw;
};

/// Standard F2 column reduction with clearing (twist). Reusable buffers make
/// repeated reductions over one complex allocation-free; one instance must
/// not be shared between threads.
class Reducer {
public:
    explicit Reducer(std::shared_ptr<const cx::SimplicialComplex> complex);

    // Simplices are ordered by (value, dim, id); +infinity excludes a simplex.
    // Values must be monotone (not re-checked here). Dimensions above 1 are
    // reduced but not reported.
    PersistenceResult reduce(std::span<const double> values, bool keep_raw = false);

    const cx::SimplicialComplex& complex() const { return *complex_; }

private:
    std::shared_ptr<const cx::SimplicialComplex> complex_;
    std::vector<std::pair<double, std::uint64_t>> keys_;
    std::vector<cx::SimplexId> order_;
    std::vector<std::uint32_t> position_;
    std::vector<std::vector<std::uint32_t>> columns_;
    std::vector<std::int64_t> pivot_;
    std::vector<std::uint8_t> cleared_;
    std::vector<std::uint32_t> scratch_;
    std::vector<std::uint32_t> root_;
};

/// Persistence diagram of a monotone filtration (throws NonMonotoneError otherwise).
/// Zero-length pairs are dropped.
PersistenceDiagram compute_persistence(const cx::Filtration1D& f);
PersistenceResult compute_persistence_pairs(const cx::Filtration1D& f);

/// (b0, b1) of the sublevel complex {value <= t} by dense F2 elimination of
/// its boundary matrices, independent of the reduction above.
std::pair<int, int> betti_numbers(const cx::Filtration1D& f, double t);

/// For a diagram of the lower-star filtration of (maxval - phi): maps each
/// point (b, d) to (maxval - d, maxval - b). Essential points get birth
/// `scale_floor`. With maxval = 0 this undoes upper_star_filtration's negation.
PersistenceDiagram swap_for_upper_star(const PersistenceDiagram& d, double maxval = 0.0,
                                       double scale_floor = 0.0);

// "dim,birth,death" with an `inf` literal for essential classes.
std::string write_diagram_csv(const PersistenceDiagram& d);
PersistenceDiagram read_diagram_csv(std::string_view text);

}  // namespace mgeneo::ph

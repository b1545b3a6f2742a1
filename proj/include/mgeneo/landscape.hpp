#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgeneo/complex.hpp"
#include "mgeneo/image.hpp"

namespace mgeneo::mpl {

// Where the evaluation points sit inside [lo, hi].
enum class GridAlignment {
    Centers,  // lo + (i + 1/2) step, one point per cell
    Corners,  // lo + i step, cells + 1 points including hi
};

struct GridSpec {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{260.0, 260.0};
    double step = 10.0;
    GridAlignment alignment = GridAlignment::Centers;

    // lo < hi componentwise, step > 0, (hi - lo) / step integral within 1e-9.
    void validate() const;
    int cells(int axis) const;
    int points(int axis) const;
    std::size_t point_count() const
    {
        return static_cast<std::size_t>(points(0)) * static_cast<std::size_t>(points(1));
    }
    cx::Grade point(int ix, int iy) const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// 26 x 26 cells of side 10 over [0, 260]^2, evaluated at cell centers 5..255.
GridSpec default_landscape_grid();

/// lambda(k, x) for k = 1..k_max on the points of `grid`. Stored as
/// values[(k - 1) * ny * nx + iy * nx + ix], i.e. row-major per k with rows
/// along the second parameter.
struct Landscape {
    int k_max = 1;
    GridSpec grid;
    std::vector<double> values;

    int nx() const { return grid.points(0); }
    int ny() const { return grid.points(1); }
    double at(int k, int ix, int iy) const { return values[offset(k, ix, iy)]; }
    double& at(int k, int ix, int iy) { return values[offset(k, ix, iy)]; }
    std::size_t offset(int k, int ix, int iy) const
    {
        return (static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(ny()) + static_cast<std::size_t>(iy)) *
                   static_cast<std::size_t>(nx()) +
               static_cast<std::size_t>(ix);
    }

    static Landscape zeros(int k_max, const GridSpec& grid);
};

/// Restriction to the diagonal line through `basepoint`:
/// t(simplex) = max(g1 - x1, g2 - x2).
cx::Filtration1D slice_filtration(const cx::Bifiltration& b, const cx::Grade& basepoint);

/// lambda(k, x) = k-th largest of max(0, min(-birth, death)) over the dim-d
/// bars of the slice through x. Basepoints on one diagonal share a slice up to
/// a shift, so one reduction serves a whole diagonal of the grid.
Landscape landscape(const cx::Bifiltration& b, int dim, int k_max, const GridSpec& grid);
/// Dimension 0 and 1 landscapes from the same reductions.
std::array<Landscape, 2> landscapes(const cx::Bifiltration& b, int k_max, const GridSpec& grid);

/// rank(H_dim(sublevel a) -> H_dim(sublevel b)); requires a <= b.
int rank_invariant(const cx::Bifiltration& b, int dim, const cx::Grade& a, const cx::Grade& at_b);

struct HilbertFunction {
    GridSpec grid;
    std::vector<int> values;  // row-major, rows along the second parameter
    int at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.points(0) + ix]; }
};

HilbertFunction hilbert_function(const cx::Bifiltration& b, int dim, const GridSpec& grid);

/// L^p norm of the difference over (k, grid points), cells weighted by step^2
/// for finite p. Pass p = infinity for the sup norm.
double landscape_distance(const Landscape& a, const Landscape& b, double p);

Landscape average_landscape(std::span<const Landscape> landscapes);

nlohmann::json landscape_to_json(const Landscape& l);
Landscape landscape_from_json(const nlohmann::json& j);
// Values of layer k as an image (row 0 = largest second parameter, so the
// picture has the usual axis orientation). Scale with img::write_pgm.
img::GrayImage landscape_layer_image(const Landscape& l, int k);

std::string write_hilbert_csv(const HilbertFunction& h);

}  // namespace mgeneo::mpl

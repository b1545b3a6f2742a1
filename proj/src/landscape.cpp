#include "mgeneo/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <json.hpp>

#include "mgeneo/error.hpp"
#include "mgeneo/persistence.hpp"

namespace mgeneo::mpl {

void GridSpec::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("grid step must be positive");
    for (int a = 0; a < 2; ++a) {
        if (!(lo[a] < hi[a])) throw InvalidArgument("grid requires lo < hi componentwise");
        const double q = (hi[a] - lo[a]) / step;
        if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) {
            throw InvalidArgument("grid extent is not an integral number of steps");
        }
    }
}

int GridSpec::cells(int axis) const
{
    return static_cast<int>(std::lround((hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]) / step));
}

int GridSpec::points(int axis) const
{
    return alignment == GridAlignment::Centers ? cells(axis) : cells(axis) + 1;
}

cx::Grade GridSpec::point(int ix, int iy) const
{
    const double off = alignment == GridAlignment::Centers ? 0.5 : 0.0;
    return {lo[0] + (ix + off) * step, lo[1] + (iy + off) * step};
}

GridSpec default_landscape_grid() { return GridSpec{}; }

Landscape Landscape::zeros(int k_max, const GridSpec& grid)
{
    grid.validate();
    if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
    Landscape l{k_max, grid, {}};
    l.values.assign(static_cast<std::size_t>(k_max) * grid.point_count(), 0.0);
    return l;
}

cx::Filtration1D slice_filtration(const cx::Bifiltration& b, const cx::Grade& x)
{
    cx::Filtration1D f{b.complex, std::vector<double>(b.grades.size())};
    for (std::size_t i = 0; i < b.grades.size(); ++i) {
        f.values[i] = std::max(b.grades[i][0] - x[0], b.grades[i][1] - x[1]);
    }
    return f;
}

namespace {

// Walks every diagonal of the grid, reduces the slice through its first point
// once, and hands each point's bar contributions to `sink`.
void for_each_diagonal(const cx::Bifiltration& b, const GridSpec& grid,
                       const std::function<void(int ix, int iy, double shift,
                                                const ph::PersistenceDiagram&)>& visit)
{
    grid.validate();
    b.check_monotone();
    const int nx = grid.points(0);
    const int ny = grid.points(1);
    ph::Reducer reducer(b.complex);
    std::vector<double> values(b.grades.size());
    for (int delta = -(nx - 1); delta <= ny - 1; ++delta) {
        const int ix0 = std::max(0, -delta);
        const int iy0 = std::max(0, delta);
        const cx::Grade x0 = grid.point(ix0, iy0);
        for (std::size_t i = 0; i < b.grades.size(); ++i) {
            values[i] = std::max(b.grades[i][0] - x0[0], b.grades[i][1] - x0[1]);
        }
        const auto diagram = reducer.reduce(values).diagram;
        for (int m = 0; ix0 + m < nx && iy0 + m < ny; ++m) {
            visit(ix0 + m, iy0 + m, m * grid.step, diagram);
        }
    }
}

void fill_point(Landscape& l, int dim, int ix, int iy, double shift, const ph::PersistenceDiagram& d,
                std::vector<double>& buf)
{
    buf.clear();
    for (const auto& p : d.points) {
        if (p.dim != dim) continue;
        // Bar [b - s, d - s) seen from the shifted basepoint.
        const double v = std::min(shift - p.birth, p.death - shift);
        if (v > 0.0) buf.push_back(v);
    }
    const auto k = std::min<std::size_t>(buf.size(), static_cast<std::size_t>(l.k_max));
    std::partial_sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), buf.end(), std::greater<>());
    for (std::size_t i = 0; i < k; ++i) l.at(static_cast<int>(i) + 1, ix, iy) = buf[i];
}

}  // namespace

Landscape landscape(const cx::Bifiltration& b, int dim, int k_max, const GridSpec& grid)
{
    if (dim != 0 && dim != 1) throw InvalidArgument("landscape dimension must be 0 or 1");
    Landscape l = Landscape::zeros(k_max, grid);
    std::vector<double> buf;
    for_each_diagonal(b, grid, [&](int ix, int iy, double shift, const ph::PersistenceDiagram& d) {
        fill_point(l, dim, ix, iy, shift, d, buf);
    });
    return l;
}

std::array<Landscape, 2> landscapes(const cx::Bifiltration& b, int k_max, const GridSpec& grid)
{
    std::array<Landscape, 2> out{Landscape::zeros(k_max, grid), Landscape::zeros(k_max, grid)};
    std::vector<double> buf;
    for_each_diagonal(b, grid, [&](int ix, int iy, double shift, const ph::PersistenceDiagram& d) {
        fill_point(out[0], 0, ix, iy, shift, d, buf);
        fill_point(out[1], 1, ix, iy, shift, d, buf);
    });
    return out;
}

int rank_invariant(const cx::Bifiltration& b, int dim, const cx::Grade& a, const cx::Grade& at_b)
{
    if (!cx::grade_leq(a, at_b)) throw InvalidArgument("rank_invariant requires a <= b");
    if (dim != 0 && dim != 1) throw InvalidArgument("rank_invariant dimension must be 0 or 1");
    // Two-step filtration: sublevel(a) at 0, the rest of sublevel(b) at 1.
    std::vector<double> values(b.grades.size(), ph::kInfinity);
    for (std::size_t i = 0; i < b.grades.size(); ++i) {
        if (cx::grade_leq(b.grades[i], a)) {
            values[i] = 0.0;
        } else if (cx::grade_leq(b.grades[i], at_b)) {
            values[i] = 1.0;
        }
    }
    ph::Reducer reducer(b.complex);
    const auto d = reducer.reduce(values).diagram;
    return static_cast<int>(std::count_if(d.points.begin(), d.points.end(), [&](const auto& p) {
        return p.dim == dim && p.birth <= 0.0 && p.death > 1.0;
    }));
}

HilbertFunction hilbert_function(const cx::Bifiltration& b, int dim, const GridSpec& grid)
{
    grid.validate();
    b.check_monotone();
    HilbertFunction h{grid, std::vector<int>(grid.point_count())};
    for (int iy = 0; iy < grid.points(1); ++iy) {
        for (int ix = 0; ix < grid.points(0); ++ix) {
            const auto x = grid.point(ix, iy);
            h.values[static_cast<std::size_t>(iy) * grid.points(0) + ix] = rank_invariant(b, dim, x, x);
        }
    }
    return h;
}

double landscape_distance(const Landscape& a, const Landscape& b, double p)
{
    if (a.k_max != b.k_max || !(a.grid == b.grid) || a.values.size() != b.values.size()) {
        throw DimensionError("landscapes are on different grids");
    }
    if (!(p >= 1.0)) throw InvalidArgument("landscape distance needs p >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::pow(std::abs(a.values[i] - b.values[i]), p);
    return std::pow(s * a.grid.step * a.grid.step, 1.0 / p);
}

Landscape average_landscape(std::span<const Landscape> ls)
{
    if (ls.empty()) throw InvalidArgument("average of an empty landscape list");
    Landscape avg = Landscape::zeros(ls.front().k_max, ls.front().grid);
    for (const auto& l : ls) {
        if (l.k_max != avg.k_max || !(l.grid == avg.grid)) throw DimensionError("landscapes are on different grids");
        for (std::size_t i = 0; i < avg.values.size(); ++i) avg.values[i] += l.values[i];
    }
    for (auto& v : avg.values) v /= static_cast<double>(ls.size());
    return avg;
}

nlohmann::json landscape_to_json(const Landscape& l)
{
    nlohmann::json layers = nlohmann::json::array();
    const std::size_t per = l.grid.point_count();
    for (int k = 0; k < l.k_max; ++k) {
        layers.push_back(std::vector<double>(l.values.begin() + static_cast<std::ptrdiff_t>(k * per),
                                             l.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * per)));
    }
    return {{"k_max", l.k_max},
            {"lo", l.grid.lo},
            {"hi", l.grid.hi},
            {"step", l.grid.step},
            {"alignment", l.grid.alignment == GridAlignment::Centers ? "centers" : "corners"},
            {"nx", l.nx()},
            {"ny", l.ny()},
            {"values", layers}};
}

Landscape landscape_from_json(const nlohmann::json& j)
{
    try {
        GridSpec g;
        g.lo = j.at("lo").get<std::array<double, 2>>();
        g.hi = j.at("hi").get<std::array<double, 2>>();
        g.step = j.at("step").get<double>();
        const std::string align = j.value("alignment", std::string("centers"));
        if (align != "centers" && align != "corners") throw FormatError("bad alignment '" + align + "'");
        g.alignment = align == "centers" ? GridAlignment::Centers : GridAlignment::Corners;
        Landscape l = Landscape::zeros(j.at("k_max").get<int>(), g);
        const auto& layers = j.at("values");
        if (layers.size() != static_cast<std::size_t>(l.k_max)) throw FormatError("landscape has wrong layer count");
        std::size_t i = 0;
        for (const auto& layer : layers) {
            if (layer.size() != g.point_count()) throw FormatError("landscape layer has wrong size");
            for (const auto& v : layer) l.values[i++] = v.get<double>();
        }
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad landscape JSON: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("bad landscape JSON: ") + e.what());
    }
}

img::GrayImage landscape_layer_image(const Landscape& l, int k)
{
    img::GrayImage out(l.nx(), l.ny());
    for (int iy = 0; iy < l.ny(); ++iy) {
        for (int ix = 0; ix < l.nx(); ++ix) out.at(l.ny() - 1 - iy, ix) = l.at(k, ix, iy);
    }
    return out;
}

std::string write_hilbert_csv(const HilbertFunction& h)
{
    std::string out = "x,y,value\n";
    for (int iy = 0; iy < h.grid.points(1); ++iy) {
        for (int ix = 0; ix < h.grid.points(0); ++ix) {
            const auto p = h.grid.point(ix, iy);
            char buf[96];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", p[0], p[1], h.at(ix, iy));
            out += buf;
        }
    }
    return out;
}

}  // namespace mgeneo::mpl

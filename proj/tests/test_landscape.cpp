#include <doctest.h>

#include <cmath>
#include <random>

#include "mgeneo/complex.hpp"
#include "mgeneo/error.hpp"
#include "mgeneo/landscape.hpp"
#include "mgeneo/persistence.hpp"
#include "mgeneo/pipeline.hpp"
#include "oracles.hpp"

using namespace mgeneo;
using namespace mgeneo::cx;
using namespace mgeneo::mpl;
using img::GrayImage;
using ph::kInfinity;

namespace {

Bifiltration single_vertex(Grade g)
{
    Bifiltration b;
    b.complex = std::make_shared<const SimplicialComplex>(std::vector<Simplex>{Simplex::vertex(0)});
    b.grades = {g};
    return b;
}

Bifiltration random_bifiltration(std::mt19937_64& rng, int vertices, std::size_t max_simplices, int vmax)
{
    Bifiltration b;
    auto k = std::make_shared<const SimplicialComplex>(oracle::random_complex(rng, vertices, max_simplices));
    b.grades = oracle::random_monotone_grades(rng, *k, vmax);
    b.complex = std::move(k);
    return b;
}

GrayImage random_image(std::mt19937_64& rng, int w, int h, int levels)
{
    std::uniform_int_distribution<int> u(0, levels - 1);
    GrayImage g(w, h);
    for (auto& v : g.values()) v = u(rng);
    return g;
}

GridSpec corners(double lo, double hi, double step)
{
    return GridSpec{{lo, lo}, {hi, hi}, step, GridAlignment::Corners};
}

Bifiltration fixture(TriangleRule rule)
{
    return build_bifiltration(pipeline::fixture_psi1(), pipeline::fixture_psi2(), rule);
}

Landscape random_landscape(std::mt19937_64& rng, int k_max, const GridSpec& g)
{
    std::uniform_real_distribution<double> u(0.0, 50.0);
    auto l = Landscape::zeros(k_max, g);
    for (auto& v : l.values) v = u(rng);
    return l;
}

}  // namespace

TEST_SUITE("mpl") {

TEST_CASE("grid spec")
{
    const auto g = default_landscape_grid();
    CHECK(g.points(0) == 26);
    CHECK(g.point_count() == 676);
    CHECK(g.point(0, 0) == Grade{5, 5});
    CHECK(g.point(25, 1) == Grade{255, 15});
    const auto c = corners(0, 10, 1);
    CHECK(c.points(0) == 11);
    CHECK(c.point(10, 3) == Grade{10, 3});
    CHECK_THROWS_AS((GridSpec{{0, 0}, {10, 10}, 3}.validate()), InvalidArgument);
    CHECK_THROWS_AS((GridSpec{{0, 0}, {0, 10}, 1}.validate()), InvalidArgument);
    CHECK_THROWS_AS((GridSpec{{0, 0}, {10, 10}, 0}.validate()), InvalidArgument);
    CHECK_NOTHROW((GridSpec{{0, 0}, {1, 1}, 0.1}.validate()));
}

TEST_CASE("slice filtration")
{
    CHECK(slice_filtration(single_vertex({4, 6}), {4, 6}).values == std::vector<double>{0.0});
    CHECK(slice_filtration(single_vertex({9, 8}), {0, 0}).values == std::vector<double>{9.0});
}

TEST_CASE("slice sublevel sets match the bifiltration along the diagonal")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const auto b = random_bifiltration(rng, 6, 25, 6);
        std::uniform_real_distribution<double> u(-3.0, 9.0);
        const Grade x{u(rng), u(rng)};
        const auto f = slice_filtration(b, x);
        CHECK_NOTHROW(f.check_monotone());
        for (double t = -4.0; t <= 10.0; t += 0.5) {
            const auto expect = oracle::sublevel_mask(b.grades, Grade{x[0] + t, x[1] + t});
            CHECK(oracle::sublevel_mask(f.values, t) == expect);
        }
    }
}

TEST_CASE("single vertex landscape")
{
    const auto b = single_vertex({0, 0});
    const auto l = landscape(b, 0, 2, corners(-5, 10, 1));
    for (int iy = 0; iy < l.ny(); ++iy) {
        for (int ix = 0; ix < l.nx(); ++ix) {
            const auto x = l.grid.point(ix, iy);
            CHECK(l.at(1, ix, iy) == std::max(0.0, std::min(x[0], x[1])));
            CHECK(l.at(2, ix, iy) == 0.0);
        }
    }
    CHECK(l.at(1, 8, 10) == 3.0);
}

TEST_CASE("empty module gives a zero landscape")
{
    GrayImage high(5, 4);
    for (auto& v : high.values()) v = 300.0;
    const auto b = build_bifiltration(high, high);
    for (int dim = 0; dim <= 1; ++dim) {
        const auto l = landscape(b, dim, 2, default_landscape_grid());
        CHECK(landscape_distance(l, Landscape::zeros(2, l.grid), kInfinity) == 0.0);
    }
}

TEST_CASE("fixture landscape agrees with the definition")
{
    const double step = 1.0;
    const double delta = step / 4;
    for (const auto rule : {TriangleRule::SquareMax, TriangleRule::SimplexMax}) {
        const auto b = fixture(rule);
        const auto l = landscape(b, 1, 2, corners(0, 11, step));
        for (int iy = 0; iy < l.ny(); ++iy) {
            for (int ix = 0; ix < l.nx(); ++ix) {
                const auto want = oracle::eps_sup_landscape(b, 1, 2, l.grid.point(ix, iy), delta);
                for (int k = 1; k <= 2; ++k) {
                    CHECK(std::abs(l.at(k, ix, iy) - want[static_cast<std::size_t>(k - 1)]) <= delta + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("random landscapes agree with the definition")
{
    std::mt19937_64 rng(23);
    const double delta = 0.25;
    for (int trial = 0; trial < 25; ++trial) {
        const auto b = random_bifiltration(rng, 6, 25, 5);
        for (int dim = 0; dim <= 1; ++dim) {
            const auto l = landscape(b, dim, 3, corners(-1, 8, 1));
            for (int iy = 0; iy < l.ny(); iy += 2) {
                for (int ix = 0; ix < l.nx(); ix += 2) {
                    const auto want = oracle::eps_sup_landscape(b, dim, 3, l.grid.point(ix, iy), delta);
                    for (int k = 1; k <= 3; ++k) {
                        if (dim == 0 && k == 1 && want[0] > 12.0) continue;  // essential class, unbounded
                        CHECK(std::abs(l.at(k, ix, iy) - want[static_cast<std::size_t>(k - 1)]) <= delta + 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("landscapes computes both dimensions at once")
{
    std::mt19937_64 rng(2);
    const auto b = build_bifiltration(random_image(rng, 6, 6, 256), random_image(rng, 6, 6, 256));
    const auto both = landscapes(b, 3, default_landscape_grid());
    CHECK(both[0].values == landscape(b, 0, 3, default_landscape_grid()).values);
    CHECK(both[1].values == landscape(b, 1, 3, default_landscape_grid()).values);
    CHECK_THROWS_AS(landscape(b, 2, 1, default_landscape_grid()), InvalidArgument);
    CHECK_THROWS_AS(landscape(b, 0, 0, default_landscape_grid()), InvalidArgument);
}

TEST_CASE("landscape is nonnegative, monotone in k and lipschitz")
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto b = build_bifiltration(random_image(rng, 7, 7, 256), random_image(rng, 7, 7, 256));
        for (const auto& l : landscapes(b, 3, default_landscape_grid())) {
            const double step = l.grid.step;
            for (int k = 1; k <= 3; ++k) {
                for (int iy = 0; iy < l.ny(); ++iy) {
                    for (int ix = 0; ix < l.nx(); ++ix) {
                        const double v = l.at(k, ix, iy);
                        CHECK(v >= 0.0);
                        if (k > 1) CHECK(v <= l.at(k - 1, ix, iy));
                        if (ix + 1 < l.nx()) CHECK(std::abs(l.at(k, ix + 1, iy) - v) <= step + 1e-9);
                        if (iy + 1 < l.ny()) CHECK(std::abs(l.at(k, ix, iy + 1) - v) <= step + 1e-9);
                    }
                }
            }
        }
    }
}

TEST_CASE("rank invariant")
{
    const auto b = fixture(TriangleRule::SimplexMax);
    CHECK(rank_invariant(b, 1, {9, 8}, {9, 8}) == 1);
    CHECK(rank_invariant(b, 1, {8, 8}, {8, 8}) == 0);
    CHECK(rank_invariant(b, 0, {100, 100}, {100, 100}) == 1);
    CHECK_THROWS_AS(rank_invariant(b, 0, {5, 5}, {4, 9}), InvalidArgument);
}

TEST_CASE("rank invariant matches induced-map elimination")
{
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> u(0, 7);
    for (int trial = 0; trial < 80; ++trial) {
        const auto b = random_bifiltration(rng, 6, 30, 5);
        Grade lo{static_cast<double>(u(rng)), static_cast<double>(u(rng))};
        Grade hi{lo[0] + u(rng), lo[1] + u(rng)};
        for (int dim = 0; dim <= 1; ++dim) {
            CHECK(rank_invariant(b, dim, lo, hi) == oracle::rank_between(b, dim, lo, hi));
        }
    }
}

TEST_CASE("hilbert function is the diagonal of the rank invariant")
{
    std::mt19937_64 rng(43);
    const auto grid = corners(0, 8, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const auto b = random_bifiltration(rng, 6, 25, 5);
        for (int dim = 0; dim <= 1; ++dim) {
            const auto h = hilbert_function(b, dim, grid);
            for (int iy = 0; iy < grid.points(1); ++iy) {
                for (int ix = 0; ix < grid.points(0); ++ix) {
                    const auto x = grid.point(ix, iy);
                    CHECK(h.at(ix, iy) == rank_invariant(b, dim, x, x));
                }
            }
        }
    }
    const auto f = hilbert_function(fixture(TriangleRule::SimplexMax), 1, corners(0, 10, 1));
    CHECK(f.at(0, 0) == 0);
    CHECK(f.at(9, 8) == 1);
    const auto csv = write_hilbert_csv(f);
    CHECK(csv.rfind("x,y,value\n", 0) == 0);
    CHECK(csv.find("\n9,8,1\n") != std::string::npos);
}

TEST_CASE("landscape distance")
{
    std::mt19937_64 rng(47);
    const auto g = corners(0, 4, 2);
    const auto a = random_landscape(rng, 2, g);
    const auto b = random_landscape(rng, 2, g);
    const auto z = Landscape::zeros(2, g);
    CHECK(landscape_distance(a, a, 1.0) == 0.0);
    CHECK(landscape_distance(a, a, kInfinity) == 0.0);
    CHECK(landscape_distance(a, z, kInfinity) == *std::max_element(a.values.begin(), a.values.end()));
    double sup = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    for (int k = 1; k <= 2; ++k) {
        for (int iy = 0; iy < a.ny(); ++iy) {
            for (int ix = 0; ix < a.nx(); ++ix) {
                const double d = std::abs(a.at(k, ix, iy) - b.at(k, ix, iy));
                sup = std::max(sup, d);
                l1 += d * 4.0;
                l2 += d * d * 4.0;
            }
        }
    }
    CHECK(landscape_distance(a, b, kInfinity) == sup);
    CHECK(landscape_distance(a, b, 1.0) == doctest::Approx(l1).epsilon(1e-12));
    CHECK(landscape_distance(a, b, 2.0) == doctest::Approx(std::sqrt(l2)).epsilon(1e-12));
    CHECK_THROWS_AS(landscape_distance(a, Landscape::zeros(1, g), 1.0), DimensionError);
    CHECK_THROWS_AS(landscape_distance(a, Landscape::zeros(2, corners(0, 6, 2)), 1.0), DimensionError);
    CHECK_THROWS_AS(landscape_distance(a, b, 0.5), InvalidArgument);
}

TEST_CASE("average landscape")
{
    std::mt19937_64 rng(53);
    const auto g = corners(0, 4, 1);
    const auto a = random_landscape(rng, 1, g);
    const std::vector<Landscape> one{a};
    CHECK(average_landscape(one).values == a.values);
    const std::vector<Landscape> two{a, Landscape::zeros(1, g)};
    const auto half = average_landscape(two);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(half.values[i] == a.values[i] / 2);
    CHECK_THROWS_AS(average_landscape(std::vector<Landscape>{}), InvalidArgument);
    const std::vector<Landscape> bad{a, Landscape::zeros(1, corners(0, 5, 1))};
    CHECK_THROWS_AS(average_landscape(bad), DimensionError);
}

TEST_CASE("landscape json round trip")
{
    std::mt19937_64 rng(59);
    const auto a = random_landscape(rng, 3, GridSpec{{-10, 0}, {30, 20}, 5, GridAlignment::Centers});
    const auto j = landscape_to_json(a);
    const auto back = landscape_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.k_max == a.k_max);
    CHECK(back.grid == a.grid);
    CHECK(back.values == a.values);
    auto broken = j;
    broken["values"] = nlohmann::json::array();
    CHECK_THROWS_AS(landscape_from_json(broken), FormatError);
    CHECK_THROWS_AS(landscape_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("layer image puts the largest second coordinate on top")
{
    auto l = Landscape::zeros(1, corners(0, 2, 1));
    l.at(1, 2, 0) = 7.0;
    const auto im = landscape_layer_image(l, 1);
    CHECK(im.width() == 3);
    CHECK(im.at(2, 2) == 7.0);
}

}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mgeneo/error.hpp"
#include "mgeneo/vectorize.hpp"
#include "oracles.hpp"

using namespace mgeneo;
using namespace mgeneo::vec;
using ph::kInfinity;
using ph::PersistenceDiagram;

namespace {

double sup_diff(const FeatureVector& a, const FeatureVector& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

PersistenceDiagram random_diagram(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> b(0.0, 200.0);
    std::uniform_real_distribution<double> p(0.5, 80.0);
    std::bernoulli_distribution essential(0.1);
    PersistenceDiagram d;
    for (int i = 0; i < n; ++i) {
        const double birth = b(rng);
        d.points.push_back({birth, essential(rng) ? kInfinity : birth + p(rng), i % 2});
    }
    return d;
}

}  // namespace

TEST_SUITE("vec") {

TEST_CASE("parameters are validated")
{
    CHECK_THROWS_AS((PersistenceImageParams{0, 1.0, {0, 1}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((PersistenceImageParams{5, 0.0, {0, 1}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((PersistenceImageParams{5, 1.0, {1, 1}}.validate()), InvalidArgument);
    CHECK_NOTHROW(PersistenceImageParams{}.validate());
}

TEST_CASE("empty diagram gives the zero image")
{
    const auto v = persistence_image({}, 0, {});
    CHECK(v.values == std::vector<double>(25, 0.0));
    CHECK(v.homology == "H0");
    CHECK(v.method == "pi");
}

TEST_CASE("single point matches numeric integration")
{
    for (const double sigma : {1.0, 20.0}) {
        const PersistenceImageParams params{5, sigma, {0, 256}};
        const double birth = 25.6;
        const double pers = 76.8;
        const auto v = persistence_image(PersistenceDiagram{{{birth, birth + pers, 1}}}, 1, params);
        const double w = pers / 256.0;
        const double cell = 256.0 / 5;
        for (int r = 0; r < 5; ++r) {
            for (int c = 0; c < 5; ++c) {
                const double want = w * oracle::gaussian_cell_mass(birth, pers, sigma, c * cell, (c + 1) * cell, r * cell,
                                                                   (r + 1) * cell, 400);
                CHECK(std::abs(v.values[static_cast<std::size_t>(r * 5 + c)] - want) <= 1e-5 * want + 1e-8);
            }
        }
        if (sigma == 1.0) {
            const auto top = std::max_element(v.values.begin(), v.values.end());
            CHECK(top - v.values.begin() == 5);
            CHECK(*top == doctest::Approx(w).epsilon(1e-9));
        }
    }
}

TEST_CASE("other dimensions are ignored and infinite deaths clamp to the range")
{
    const PersistenceImageParams params;
    const auto a = persistence_image(PersistenceDiagram{{{10, kInfinity, 0}, {5, 9, 1}}}, 0, params);
    const auto b = persistence_image(PersistenceDiagram{{{10, 256, 0}}}, 0, params);
    CHECK(a.values == b.values);
    const auto big = persistence_image(PersistenceDiagram{{{-100, 300, 0}}}, 0, params);
    const auto cap = persistence_image(PersistenceDiagram{{{-100, 256, 0}}}, 0, params);
    CHECK(big.values == cap.values);
}

TEST_CASE("duplicating a point doubles its image")
{
    const PersistenceImageParams params{5, 8.0, {0, 256}};
    const PersistenceDiagram one{{{40, 120, 0}}};
    const PersistenceDiagram two{{{40, 120, 0}, {40, 120, 0}}};
    const auto a = persistence_image(one, 0, params);
    const auto b = persistence_image(two, 0, params);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.values[i] == 2 * a.values[i]);
}

TEST_CASE("persistence image is additive over disjoint unions")
{
    std::mt19937_64 rng(61);
    const PersistenceImageParams params{5, 10.0, {0, 256}};
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_diagram(rng, 6);
        const auto b = random_diagram(rng, 4);
        PersistenceDiagram u = a;
        u.points.insert(u.points.end(), b.points.begin(), b.points.end());
        for (int dim = 0; dim <= 1; ++dim) {
            const auto ia = persistence_image(a, dim, params);
            const auto ib = persistence_image(b, dim, params);
            const auto iu = persistence_image(u, dim, params);
            for (std::size_t i = 0; i < iu.size(); ++i) CHECK(iu.values[i] == doctest::Approx(ia.values[i] + ib.values[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("persistence image is lipschitz in the diagram")
{
    std::mt19937_64 rng(67);
    std::uniform_real_distribution<double> step(-1.0, 1.0);
    for (const double sigma : {1.0, 4.0}) {
        const PersistenceImageParams params{5, sigma, {0, 256}};
        const double lip = persistence_image_lipschitz(params);
        for (int trial = 0; trial < 300; ++trial) {
            auto d = random_diagram(rng, 5);
            const auto before = persistence_image(d, 0, params);
            auto& p = d.points[0];
            p.dim = 0;
            const double db = step(rng);
            const double dd = step(rng);
            p.birth += db;
            if (!p.essential()) p.death += dd;
            const double delta = std::max(std::abs(db), p.essential() ? 0.0 : std::abs(dd));
            const auto after = persistence_image(d, 0, params);
            CHECK(sup_diff(before, after) <= lip * delta + 1e-12);
        }
    }
}

TEST_CASE("landscape vectors")
{
    const auto grid = mpl::default_landscape_grid();
    const auto z = mpl::Landscape::zeros(1, grid);
    const auto v = landscape_vector(z, "H1");
    CHECK(v.size() == 676);
    CHECK(std::all_of(v.values.begin(), v.values.end(), [](double x) { return x == 0.0; }));
    CHECK(v.homology == "H1");

    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0, 30);
    auto l = mpl::Landscape::zeros(3, grid);
    for (auto& x : l.values) x = u(rng);
    const auto flat = landscape_vector(l, "H0");
    CHECK(flat.size() == 3 * 676);
    CHECK(flat.values[static_cast<std::size_t>(676 + 26 * 4 + 7)] == l.at(2, 7, 4));
    const auto back = landscape_from_vector(flat, 3, grid);
    CHECK(back.values == l.values);
    CHECK_THROWS_AS(landscape_from_vector(flat, 2, grid), DimensionError);
}

TEST_CASE("concat")
{
    const FeatureVector a{{1, 2}, "H0", "landscape"};
    const FeatureVector b{{3}, "H1", "landscape"};
    const FeatureVector c{{4, 5, 6}, "H1", "pi"};
    const std::vector<FeatureVector> ab{a, b};
    const auto j = concat(ab);
    CHECK(j.values == std::vector<double>{1, 2, 3});
    CHECK(j.homology == "H0+H1");
    CHECK(j.method == "landscape");
    CHECK(concat(std::vector<FeatureVector>{a}) == a);
    const std::vector<FeatureVector> bc{b, c};
    const auto left = concat(std::vector<FeatureVector>{concat(ab), c});
    const auto right = concat(std::vector<FeatureVector>{a, concat(bc)});
    CHECK(left.values == right.values);
    CHECK(left.values.size() == 6);
    CHECK_THROWS_AS(concat(std::vector<FeatureVector>{}), InvalidArgument);

    const auto grid = mpl::default_landscape_grid();
    const auto h0 = landscape_vector(mpl::Landscape::zeros(1, grid), "H0");
    const auto h1 = landscape_vector(mpl::Landscape::zeros(1, grid), "H1");
    CHECK(concat(std::vector<FeatureVector>{h0, h1}).size() == 1352);
}

TEST_CASE("feature csv round trip")
{
    const std::vector<int> labels{6, 9};
    const std::vector<FeatureVector> rows{{{0.1, 1e-300, -3}, "H0", "pi"}, {{2, 0, 1.0 / 3}, "H0", "pi"}};
    const auto text = write_feature_csv(labels, rows);
    CHECK(text.rfind("label,f0,f1,f2\n", 0) == 0);
    const auto t = read_feature_csv(text);
    CHECK(t.labels == labels);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == rows[0].values);
    CHECK(t.rows[1] == rows[1].values);
    CHECK_THROWS_AS(read_feature_csv("label,f0\n1,2\n3\n"), FormatError);
    CHECK_THROWS_AS(read_feature_csv("label,f0\n1,abc\n"), FormatError);
    CHECK_THROWS_AS(write_feature_csv(std::vector<int>{1}, rows), DimensionError);
}

}

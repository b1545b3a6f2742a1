#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mgeneo/cli.hpp"
#include "mgeneo/error.hpp"
#include "mgeneo/pipeline.hpp"

using namespace mgeneo;
using namespace mgeneo::pipeline;
using img::GrayImage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("mgeneo-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

GrayImage random_image(std::mt19937_64& rng, int w, int h)
{
    std::uniform_int_distribution<int> u(0, 255);
    GrayImage g(w, h);
    for (auto& v : g.values()) v = u(rng);
    return g;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("filtration and homology names")
{
    for (const auto f : {Filtration::Lower, Filtration::Upper, Filtration::MulG, Filtration::MulD, Filtration::MixG}) {
        CHECK(parse_filtration(to_string(f)) == f);
    }
    CHECK(to_string(Filtration::MixG) == "mix-G");
    CHECK(bank_kind(Filtration::MulG) == "multi-geneo");
    CHECK(bank_kind(Filtration::MulD) == "multi-dgeneo");
    CHECK(bank_kind(Filtration::MixG) == "mix-geneo");
    CHECK_FALSE(is_multiparameter(Filtration::Upper));
    CHECK_THROWS_AS(parse_filtration("sideways"), InvalidArgument);
    CHECK(parse_homology("H0+H1") == Homology::Both);
    CHECK_THROWS_AS(parse_homology("H2"), InvalidArgument);
    CHECK(task_classes("6vs9") == std::vector<int>{6, 9});
    CHECK(task_classes("ten").size() == 10);
    CHECK_THROWS_AS(task_classes("2vs7x"), InvalidArgument);
}

TEST_CASE("feature shapes")
{
    std::mt19937_64 rng(139);
    const auto image = random_image(rng, 10, 10);
    const FeatureParams params;
    const auto pi = image_features(image, Filtration::Lower, params);
    CHECK(pi.h0.size() == 25);
    CHECK(pi.h1.size() == 25);
    CHECK(pi.h0.method == "pi");
    const auto land = image_features(image, Filtration::MixG, params);
    CHECK(land.h0.size() == 676);
    CHECK(land.h1.size() == 676);
    CHECK(select(land, Homology::Both).size() == 1352);
    CHECK(select(land, Homology::Both).homology == "H0+H1");
}

TEST_CASE("upper star diagrams are on the image scale")
{
    std::mt19937_64 rng(149);
    const auto image = random_image(rng, 8, 8);
    const auto d = one_parameter_diagram(image, Filtration::Upper);
    CHECK(d.essential_count(0) == 0);
    for (const auto& p : d.points) {
        CHECK(p.birth < p.death);
        CHECK(p.birth >= 0.0);
        CHECK(p.death <= 255.0);
    }
    CHECK_THROWS_AS(one_parameter_diagram(image, Filtration::MixG), InvalidArgument);
}

TEST_CASE("first samples per class")
{
    const std::vector<int> labels{3, 1, 3, 0, 1, 3, 1};
    const std::vector<int> classes{1, 3};
    CHECK(first_per_class(labels, classes, 2) == std::vector<std::size_t>{0, 1, 2, 4});
    CHECK_THROWS_AS(first_per_class(labels, classes, 4), InvalidArgument);
}

TEST_CASE("batch features are cached and independent of thread count")
{
    std::mt19937_64 rng(151);
    std::vector<GrayImage> images;
    for (int i = 0; i < 5; ++i) images.push_back(random_image(rng, 8, 8));
    FeatureParams params;
    params.grid = mpl::GridSpec{{0, 0}, {260, 260}, 20, mpl::GridAlignment::Centers};
    const auto plain = batch_features(images, Filtration::MixG, params, {1, std::nullopt, 2});
    const auto threaded = batch_features(images, Filtration::MixG, params, {3, std::nullopt, 2});
    REQUIRE(plain.size() == 5);
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(plain[i].h0 == threaded[i].h0);
        CHECK(plain[i].h1 == threaded[i].h1);
        CHECK(plain[i].h1 == image_features(images[i], Filtration::MixG, params).h1);
    }

    TempDir dir;
    BatchStats first;
    BatchStats second;
    const auto a = batch_features(images, Filtration::MixG, params, {2, dir.path, 2}, &first);
    const auto b = batch_features(images, Filtration::MixG, params, {1, dir.path, 2}, &second);
    CHECK(first.chunks == 3);
    CHECK(first.cache_hits == 0);
    CHECK(second.cache_hits == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].h0 == plain[i].h0);
        CHECK(b[i].h1 == plain[i].h1);
    }

    auto other = params;
    other.k_max = 2;
    BatchStats third;
    (void)batch_features(images, Filtration::MixG, other, {1, dir.path, 2}, &third);
    CHECK(third.cache_hits == 0);

    for (const auto& entry : fs::directory_iterator(dir.path)) {
        std::fstream f(entry.path(), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(batch_features(images, Filtration::MixG, params, {1, dir.path, 2}), CacheError);
}

TEST_CASE("fixture images")
{
    const auto a = fixture_psi1();
    CHECK(a.width() == 3);
    CHECK(a.at(2, 0) == 1.0);
    CHECK(a.at(0, 2) == 3.0);
    CHECK(fixture_letter(0) == 'g');
    CHECK(fixture_letter(6) == 'a');
    CHECK(fixture_simplex_name(cx::Simplex::edge(7, 6)) == "ab");
}

TEST_CASE("small stability run")
{
    StabilitySpec spec;
    spec.pairs = 6;
    spec.size = 7;
    for (const auto& kind : {"multi-geneo", "mix-geneo"}) {
        spec.bank_kind = kind;
        const auto r = run_stability(spec, 2);
        CHECK(r.pairs.size() == 6);
        CHECK(r.violations == 0);
        CHECK(r.factor == (spec.bank_kind == "multi-geneo" ? 1.0 : 2.0));
        for (const auto& p : r.pairs) CHECK(p.bound == r.factor * p.input_distance + spec.grid.step);
        CHECK(r.to_json().at("pairs").size() == 6);
    }
}

}

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2")
{
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"filter", "--input", "/nonexistent.pgm", "--out", "x"}).code == cli::kExitUsage);
    CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("missing or broken bank config exits with 2")
{
    TempDir dir;
    img::write_pgm_file(dir / "phi.pgm", GrayImage(4, 4));
    const auto missing = run({"filter", "--input", dir / "phi.pgm", "--out", dir / "o", "--bank", dir / "none.json"});
    CHECK(missing.code == cli::kExitUsage);
    CHECK_FALSE(missing.err.empty());
    std::ofstream(dir / "bad.json") << "{\"operators\": 3}";
    CHECK(run({"filter", "--input", dir / "phi.pgm", "--out", dir / "o", "--bank", dir / "bad.json"}).code ==
          cli::kExitUsage);
    CHECK(run({"--config", dir / "none.toml", "fixture", "--out", dir / "f"}).code == cli::kExitUsage);
}

TEST_CASE("identity filter reproduces the input")
{
    TempDir dir;
    std::mt19937_64 rng(157);
    const auto phi = random_image(rng, 6, 5);
    std::ofstream(dir / "phi.csv") << img::write_matrix_csv(phi);
    const auto r = run({"filter", "--input", dir / "phi.csv", "--out", dir / "o", "--bank-kind", "identity",
                        "--no-rescale"});
    REQUIRE(r.code == 0);
    CHECK(img::read_matrix_csv(slurp(dir / "o/psi1.csv")) == phi);
    CHECK(img::read_matrix_csv(slurp(dir / "o/psi2.csv")) == phi);
    CHECK(fs::exists(dir / "o/psi1.pgm"));
}

TEST_CASE("mix bank outputs lie in [0, 255]")
{
    TempDir dir;
    std::mt19937_64 rng(163);
    img::write_pgm_file(dir / "phi.pgm", random_image(rng, 12, 12));
    REQUIRE(run({"filter", "--input", dir / "phi.pgm", "--out", dir / "o", "--bank-kind", "mix-geneo"}).code == 0);
    for (const auto* name : {"o/psi1.csv", "o/psi2.csv"}) {
        const auto psi = img::read_matrix_csv(slurp(dir / name));
        CHECK(psi.min_value() == 0.0);
        CHECK(psi.max_value() == 255.0);
    }
}

TEST_CASE("fixture command")
{
    TempDir dir;
    const auto r = run({"fixture", "--out", dir / "fx"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("square-max sublevel(4,6): a b c ab bc") != std::string::npos);
    CHECK(r.out.find("simplex-max sublevel(4,6): a b c ab bc") != std::string::npos);
    const auto b = cx::read_bifiltration_text(slurp(dir / "fx/bifiltration-simplex-max.txt"));
    CHECK(b.complex->size() == 9 + 16 + 8);
    const auto hilbert = slurp(dir / "fx/hilbert-h1-simplex-max.csv");
    CHECK(hilbert.find("\n9,8,1\n") != std::string::npos);
    CHECK(slurp(dir / "fx/rivet-square-max.txt").rfind("--datatype bifiltration\n", 0) == 0);
}

TEST_CASE("bifilt, hilbert and pd on the fixture")
{
    TempDir dir;
    REQUIRE(run({"fixture", "--out", dir.path.string()}).code == 0);
    const auto bf = run({"bifilt", "--psi1", dir / "psi1.csv", "--psi2", dir / "psi2.csv", "--rule", "simplex-max",
                         "--bins", "0", "--out", dir / "b.txt", "--rivet", dir / "r.txt"});
    REQUIRE(bf.code == 0);
    CHECK(slurp(dir / "b.txt") == slurp(dir / "bifiltration-simplex-max.txt"));
    CHECK(slurp(dir / "r.txt") == slurp(dir / "rivet-simplex-max.txt"));
    const auto h = run({"hilbert", "--bifiltration", dir / "b.txt", "--dim", "1", "--lo", "0,0", "--hi", "10,10",
                        "--step", "1", "--alignment", "corners"});
    REQUIRE(h.code == 0);
    CHECK(h.out == slurp(dir / "hilbert-h1-simplex-max.csv"));
    const auto pd = run({"pd", "--bifiltration", dir / "b.txt", "--basepoint", "0,0"});
    REQUIRE(pd.code == 0);
    CHECK(pd.out.rfind("dim,birth,death\n", 0) == 0);
    CHECK(run({"pd", "--bifiltration", dir / "b.txt"}).code == cli::kExitUsage);
}

TEST_CASE("bifiltration format errors carry line numbers")
{
    TempDir dir;
    std::ofstream(dir / "bad.txt") << "1 1\nsquare-max\n0 ; 1\n";
    const auto r = run({"landscape", "--bifiltration", dir / "bad.txt"});
    CHECK(r.code == cli::kExitFailure);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("landscape of a blank image is zero")
{
    TempDir dir;
    img::write_pgm_file(dir / "blank.pgm", GrayImage(8, 8));
    const auto r = run({"landscape", "--input", dir / "blank.pgm", "--heatmap", dir / "h.pgm"});
    REQUIRE(r.code == 0);
    const auto l = mpl::landscape_from_json(nlohmann::json::parse(r.out));
    CHECK(l.values.size() == 676);
    for (const auto v : l.values) CHECK(v == 0.0);
    CHECK(fs::exists(dir / "h.pgm"));
}

TEST_CASE("vectorize and classify")
{
    TempDir dir;
    std::mt19937_64 rng(167);
    std::vector<std::string> args{"vectorize", "--filtration", "lower", "--homology", "H0+H1", "--out",
                                  dir / "f.csv", "--labels"};
    std::string labels;
    std::vector<std::string> inputs;
    for (int i = 0; i < 12; ++i) {
        GrayImage g(6, 6);
        // Class 1 gets a bright ring, class 0 a bright blob.
        for (int r = 1; r < 5; ++r) {
            for (int c = 1; c < 5; ++c) {
                const bool ring = r == 1 || r == 4 || c == 1 || c == 4;
                g.at(r, c) = (i % 2 == 0 || ring) ? 200 + (rng() % 50) : 0;
            }
        }
        const auto name = dir / ("im" + std::to_string(i) + ".pgm");
        img::write_pgm_file(name, g);
        inputs.push_back(name);
        labels += (i ? "," : "") + std::to_string(i % 2);
    }
    args.push_back(labels);
    args.push_back("--input");
    args.insert(args.end(), inputs.begin(), inputs.end());
    REQUIRE(run(args).code == 0);
    const auto table = vec::read_feature_csv(slurp(dir / "f.csv"));
    CHECK(table.rows.size() == 12);
    CHECK(table.rows[0].size() == 50);
    const auto c = run({"classify", "--features", dir / "f.csv", "--per-class", "6", "--trials", "3",
                        "--train-fraction", "0.5", "--methods", "L,PS"});
    REQUIRE(c.code == 0);
    const auto j = nlohmann::json::parse(c.out);
    CHECK(j.at("cells").size() == 2);
}

TEST_CASE("stability command")
{
    const auto r = run({"stability", "--pairs", "3", "--size", "6", "--bank-kind", "multi-dgeneo"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("PASS", 0) == 0);
    CHECK(r.out.find("factor=2") != std::string::npos);
}

TEST_CASE("experiment runs are cached and reproducible")
{
    const fs::path mnist = MGENEO_MNIST_DIR;
    if (!fs::exists(mnist)) return;
    TempDir dir;
    const std::vector<std::string> base{"experiment", "--task", "0vs1", "--filtration", "lower", "--per-class", "30",
                                        "--trials", "2", "--mnist-dir", mnist.string(), "--cache-dir",
                                        dir / "cache", "--methods", "L,PL"};
    auto first = base;
    first.insert(first.end(), {"--out", dir / "a.json"});
    auto second = base;
    second.insert(second.end(), {"--out", dir / "b.json"});
    const auto a = run(first);
    REQUIRE(a.code == 0);
    const auto b = run(second);
    REQUIRE(b.code == 0);
    CHECK(a.err.find("served from cache: 0") != std::string::npos);
    CHECK(b.err.find("served from cache: 1") != std::string::npos);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    const auto j = nlohmann::json::parse(slurp(dir / "a.json"));
    CHECK(j.at("cells").size() == 6);

    for (const auto& entry : fs::directory_iterator(dir / "cache")) {
        std::fstream f(entry.path(), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(64);
        f.put('\x55');
    }
    auto third = base;
    third.insert(third.end(), {"--out", dir / "c.json"});
    const auto c = run(third);
    CHECK(c.code == cli::kExitFailure);
    CHECK(c.err.find("corrupt") != std::string::npos);
    CHECK(run({"experiment", "--mnist-dir", dir / "nowhere"}).code == cli::kExitUsage);
}

TEST_CASE("installed binary reports exit codes")
{
    const std::string bin = MGENEO_CLI_PATH;
    CHECK(std::system((bin + " fixture --out " + (fs::temp_directory_path() / "mgeneo-bin-fixture").string() +
                       " > /dev/null").c_str()) == 0);
    fs::remove_all(fs::temp_directory_path() / "mgeneo-bin-fixture");
    const int status = std::system((bin + " nosuchcommand 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 2);
}

}

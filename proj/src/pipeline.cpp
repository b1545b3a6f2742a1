#include "mgeneo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "mgeneo/error.hpp"
#include "mgeneo/parallel.hpp"
#include "mgeneo/persistence.hpp"

namespace mgeneo::pipeline {

std::string to_string(Filtration f)
{
    switch (f) {
    case Filtration::Lower: return "lower";
    case Filtration::Upper: return "upper";
    case Filtration::MulG: return "mul-G";
    case Filtration::MulD: return "mul-D";
    case Filtration::MixG: return "mix-G";
    }
    return "?";
}

Filtration parse_filtration(std::string_view s)
{
    for (auto f : {Filtration::Lower, Filtration::Upper, Filtration::MulG, Filtration::MulD, Filtration::MixG}) {
        if (s == to_string(f)) return f;
    }
    throw InvalidArgument("unknown filtration '" + std::string(s) + "' (expected lower, upper, mul-G, mul-D, mix-G)");
}

bool is_multiparameter(Filtration f) { return f != Filtration::Lower && f != Filtration::Upper; }

std::string bank_kind(Filtration f)
{
    switch (f) {
    case Filtration::MulG: return "multi-geneo";
    case Filtration::MulD: return "multi-dgeneo";
    case Filtration::MixG: return "mix-geneo";
    default: throw InvalidArgument("filtration " + to_string(f) + " has no operator bank");
    }
}

geneo::OperatorBank FeatureParams::bank_for(Filtration f) const
{
    return bank ? *bank : geneo::default_bank(bank_kind(f));
}

nlohmann::json FeatureParams::to_json(Filtration f) const
{
    nlohmann::json j{{"filtration", pipeline::to_string(f)}};
    if (is_multiparameter(f)) {
        j["bank"] = geneo::bank_to_json(bank_for(f));
        j["grid"] = {{"lo", grid.lo},
                     {"hi", grid.hi},
                     {"step", grid.step},
                     {"alignment", grid.alignment == mpl::GridAlignment::Centers ? "centers" : "corners"}};
        j["k_max"] = k_max;
        j["bins"] = bins;
        j["triangle_rule"] = cx::to_string(rule);
    } else {
        j["pi"] = {{"resolution", pi.resolution}, {"sigma", pi.sigma}, {"range", pi.range}};
    }
    return j;
}

ph::PersistenceDiagram one_parameter_diagram(const img::GrayImage& image, Filtration f)
{
    if (f == Filtration::Lower) return ph::compute_persistence(cx::lower_star_filtration(image));
    if (f == Filtration::Upper) {
        return ph::swap_for_upper_star(ph::compute_persistence(cx::upper_star_filtration(image)), 0.0, 0.0);
    }
    throw InvalidArgument("filtration " + to_string(f) + " is not one-parameter");
}

cx::Bifiltration image_bifiltration(const img::GrayImage& image, Filtration f, const FeatureParams& params)
{
    auto b = cx::build_bifiltration(image, params.bank_for(f), params.rule);
    if (params.bins > 0) b = cx::coarsen_bifiltration(b, params.bins);
    return b;
}

ImageFeatures image_features(const img::GrayImage& image, Filtration f, const FeatureParams& params)
{
    if (!is_multiparameter(f)) {
        const auto d = one_parameter_diagram(image, f);
        return {vec::persistence_image(d, 0, params.pi), vec::persistence_image(d, 1, params.pi)};
    }
    const auto ls = mpl::landscapes(image_bifiltration(image, f, params), params.k_max, params.grid);
    return {vec::landscape_vector(ls[0], "H0"), vec::landscape_vector(ls[1], "H1")};
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h)
{
    for (const auto b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed)
{
    return fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), seed);
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

constexpr char kCacheMagic[8] = {'M', 'G', 'F', 'E', 'A', 'T', '1', '\n'};

template <class T>
std::span<const std::uint8_t> as_bytes_of(const T& v)
{
    return {reinterpret_cast<const std::uint8_t*>(&v), sizeof v};
}

std::span<const std::uint8_t> as_bytes_of(std::span<const double> v)
{
    return {reinterpret_cast<const std::uint8_t*>(v.data()), v.size_bytes()};
}

std::vector<std::uint8_t> encode_chunk(std::span<const ImageFeatures> feats)
{
    std::vector<std::uint8_t> payload;
    auto put = [&](std::span<const std::uint8_t> b) { payload.insert(payload.end(), b.begin(), b.end()); };
    const std::uint64_t count = feats.size();
    const std::uint64_t n0 = feats.empty() ? 0 : feats.front().h0.size();
    const std::uint64_t n1 = feats.empty() ? 0 : feats.front().h1.size();
    put(as_bytes_of(count));
    put(as_bytes_of(n0));
    put(as_bytes_of(n1));
    for (const auto& f : feats) {
        put(as_bytes_of(std::span<const double>(f.h0.values)));
        put(as_bytes_of(std::span<const double>(f.h1.values)));
    }
    return payload;
}

std::optional<std::vector<ImageFeatures>> read_chunk(const std::filesystem::path& path, std::size_t expected,
                                                     const ImageFeatures& shape)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t head = sizeof kCacheMagic;
    if (bytes.size() < head + 32 || std::memcmp(bytes.data(), kCacheMagic, head) != 0) {
        throw CacheError("cache file " + path.string() + " has a bad header");
    }
    const std::span<const std::uint8_t> payload(bytes.data() + head, bytes.size() - head - 8);
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (fnv1a(payload) != stored) throw CacheError("cache file " + path.string() + " is corrupt (hash mismatch)");
    std::uint64_t count = 0;
    std::uint64_t n0 = 0;
    std::uint64_t n1 = 0;
    std::memcpy(&count, payload.data(), 8);
    std::memcpy(&n0, payload.data() + 8, 8);
    std::memcpy(&n1, payload.data() + 16, 8);
    if (count != expected || n0 != shape.h0.size() || n1 != shape.h1.size() ||
        payload.size() != 24 + count * (n0 + n1) * sizeof(double)) {
        throw CacheError("cache file " + path.string() + " does not match the requested shape");
    }
    std::vector<ImageFeatures> out(count, shape);
    const std::uint8_t* p = payload.data() + 24;
    for (auto& f : out) {
        std::memcpy(f.h0.values.data(), p, n0 * sizeof(double));
        p += n0 * sizeof(double);
        std::memcpy(f.h1.values.data(), p, n1 * sizeof(double));
        p += n1 * sizeof(double);
    }
    return out;
}

void write_chunk(const std::filesystem::path& path, std::span<const ImageFeatures> feats)
{
    const auto payload = encode_chunk(feats);
    const std::uint64_t h = fnv1a(payload);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(kCacheMagic, sizeof kCacheMagic);
        out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
        out.write(reinterpret_cast<const char*>(&h), sizeof h);
        if (!out) throw CacheError("cannot write cache file " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<ImageFeatures> batch_features(std::span<const img::GrayImage> images, Filtration f,
                                          const FeatureParams& params, const BatchOptions& options,
                                          BatchStats* stats)
{
    std::vector<ImageFeatures> out(images.size());
    BatchStats local;
    if (!options.cache_dir) {
        parallel_for(images.size(), options.threads, [&](std::size_t i) { out[i] = image_features(images[i], f, params); });
        if (stats) *stats = local;
        return out;
    }
    std::filesystem::create_directories(*options.cache_dir);
    const std::string param_key = params.to_json(f).dump();
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
    // Shape template from a blank image of the first size seen.
    std::optional<ImageFeatures> shape;
    for (std::size_t start = 0; start < images.size(); start += chunk) {
        const std::size_t end = std::min(images.size(), start + chunk);
        std::uint64_t h = fnv1a(param_key);
        for (std::size_t i = start; i < end; ++i) {
            const int wh[2] = {images[i].width(), images[i].height()};
            h = fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(wh), sizeof wh), h);
            h = fnv1a(as_bytes_of(images[i].values()), h);
        }
        const auto path = *options.cache_dir / (to_string(f) + "-" + hex64(h) + ".feat");
        ++local.chunks;
        if (!shape) {
            auto blank = image_features(img::GrayImage(images[start].width(), images[start].height()), f, params);
            std::fill(blank.h0.values.begin(), blank.h0.values.end(), 0.0);
            std::fill(blank.h1.values.begin(), blank.h1.values.end(), 0.0);
            shape = std::move(blank);
        }
        if (std::filesystem::exists(path)) {
            auto cached = read_chunk(path, end - start, *shape);
            if (cached) {
                std::move(cached->begin(), cached->end(), out.begin() + static_cast<std::ptrdiff_t>(start));
                ++local.cache_hits;
                continue;
            }
        }
        parallel_for(end - start, options.threads,
                     [&](std::size_t i) { out[start + i] = image_features(images[start + i], f, params); });
        write_chunk(path, std::span(out).subspan(start, end - start));
    }
    if (stats) *stats = local;
    return out;
}

std::string to_string(Homology h)
{
    switch (h) {
    case Homology::H0: return "H0";
    case Homology::H1: return "H1";
    case Homology::Both: return "H0+H1";
    }
    return "?";
}

Homology parse_homology(std::string_view s)
{
    if (s == "H0") return Homology::H0;
    if (s == "H1") return Homology::H1;
    if (s == "H0+H1") return Homology::Both;
    throw InvalidArgument("unknown homology '" + std::string(s) + "' (expected H0, H1 or H0+H1)");
}

vec::FeatureVector select(const ImageFeatures& f, Homology h)
{
    switch (h) {
    case Homology::H0: return f.h0;
    case Homology::H1: return f.h1;
    case Homology::Both: {
        const std::array parts{f.h0, f.h1};
        return vec::concat(parts);
    }
    }
    throw InvalidArgument("bad homology selector");
}

ml::Dataset to_dataset(std::span<const ImageFeatures> features, std::span<const int> labels, Homology h)
{
    if (features.size() != labels.size()) throw DimensionError("feature and label counts differ");
    const std::size_t dim = features.empty() ? 0 : select(features.front(), h).size();
    ml::Dataset d{ml::Matrix(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(dim)),
                  std::vector<int>(labels.begin(), labels.end())};
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto v = select(features[i], h);
        if (v.size() != dim) throw DimensionError("feature vectors have different lengths");
        d.features.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const ml::Vector>(v.values.data(), static_cast<Eigen::Index>(dim)).transpose();
    }
    d.validate();
    return d;
}

std::vector<int> task_classes(std::string_view task)
{
    if (task == "0vs1") return {0, 1};
    if (task == "1vs3") return {1, 3};
    if (task == "6vs9") return {6, 9};
    if (task == "ten") return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    throw InvalidArgument("unknown task '" + std::string(task) + "' (expected 0vs1, 1vs3, 6vs9, ten)");
}

std::vector<std::size_t> first_per_class(std::span<const int> labels, std::span<const int> classes, int per_class)
{
    std::vector<int> taken(classes.size(), 0);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto it = std::find(classes.begin(), classes.end(), labels[i]);
        if (it == classes.end()) continue;
        auto& n = taken[static_cast<std::size_t>(it - classes.begin())];
        if (n < per_class) {
            ++n;
            rows.push_back(i);
        }
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (taken[c] < per_class) {
            throw InvalidArgument("class " + std::to_string(classes[c]) + " has only " + std::to_string(taken[c]) +
                                  " samples, " + std::to_string(per_class) + " requested");
        }
    }
    return rows;
}

namespace {

struct Selection {
    std::vector<img::GrayImage> images;
    std::vector<int> labels;
};

Selection pick(const img::MnistSplit& split, std::span<const std::size_t> rows)
{
    Selection s;
    for (const auto i : rows) {
        s.images.push_back(split.images[i]);
        s.labels.push_back(split.labels[i]);
    }
    return s;
}

std::vector<std::size_t> all_of_classes(std::span<const int> labels, std::span<const int> classes)
{
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (std::find(classes.begin(), classes.end(), labels[i]) != classes.end()) rows.push_back(i);
    }
    return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& mnist_dir,
                                const BatchOptions& batch)
{
    const auto classes = task_classes(spec.task);
    if (spec.scale != "sample500" && spec.scale != "full") {
        throw InvalidArgument("unknown scale '" + spec.scale + "' (expected sample500 or full)");
    }
    ExperimentResult result;
    nlohmann::json cells = nlohmann::json::array();
    auto add_cell = [&](const ml::TrialReport& r) {
        auto j = ml::report_to_json(r);
        j["task"] = spec.task;
        j["filtration"] = to_string(spec.filtration);
        cells.push_back(std::move(j));
    };

    const auto train_split = img::load_mnist(mnist_dir, img::MnistPart::Train);
    if (spec.scale == "sample500") {
        const auto rows = first_per_class(train_split.labels, classes, spec.per_class);
        const auto sel = pick(train_split, rows);
        const auto feats = batch_features(sel.images, spec.filtration, spec.features, batch, &result.stats);
        auto protocol = spec.protocol;
        protocol.per_class = spec.per_class;
        for (const auto h : spec.homologies) {
            const auto data = to_dataset(feats, sel.labels, h);
            for (const auto& r : ml::run_trials(data, spec.methods, protocol, spec.classifier, to_string(h), batch.threads)) {
                add_cell(r);
            }
        }
    } else {
        const auto test_split = img::load_mnist(mnist_dir, img::MnistPart::Test);
        const auto train = pick(train_split, all_of_classes(train_split.labels, classes));
        const auto test = pick(test_split, all_of_classes(test_split.labels, classes));
        BatchStats s1;
        BatchStats s2;
        const auto ftrain = batch_features(train.images, spec.filtration, spec.features, batch, &s1);
        const auto ftest = batch_features(test.images, spec.filtration, spec.features, batch, &s2);
        result.stats = {s1.chunks + s2.chunks, s1.cache_hits + s2.cache_hits};
        for (const auto h : spec.homologies) {
            const auto dtrain = to_dataset(ftrain, train.labels, h);
            const auto dtest = to_dataset(ftest, test.labels, h);
            for (const auto m : spec.methods) add_cell(ml::run_official(dtrain, dtest, m, spec.classifier, to_string(h)));
        }
    }

    result.report = {{"task", spec.task},
                     {"filtration", to_string(spec.filtration)},
                     {"scale", spec.scale},
                     {"per_class", spec.per_class},
                     {"trials", spec.scale == "full" ? 1 : spec.protocol.trials},
                     {"train_fraction", spec.protocol.train_fraction},
                     {"seed", spec.protocol.seed},
                     {"features", spec.features.to_json(spec.filtration)},
                     {"cells", cells}};
    return result;
}

double stability_factor(const geneo::OperatorBank& bank)
{
    for (const auto& op : bank.operators) {
        if (std::holds_alternative<geneo::DGeneo>(op)) return 2.0;
    }
    return 1.0;
}

nlohmann::json StabilityResult::to_json() const
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : pairs) {
        rows.push_back({{"d_lambda_h0", p.distance_h0},
                        {"d_lambda_h1", p.distance_h1},
                        {"operator_distance", p.operator_distance},
                        {"input_distance", p.input_distance},
                        {"bound", p.bound},
                        {"slack", p.bound - std::max(p.distance_h0, p.distance_h1)},
                        {"ok", p.ok}});
    }
    return {{"factor", factor}, {"violations", violations}, {"min_slack", min_slack}, {"pairs", rows}};
}

StabilityResult run_stability(const StabilitySpec& spec, int threads)
{
    if (spec.pairs < 1 || spec.size < 1) throw InvalidArgument("stability needs pairs >= 1 and size >= 1");
    auto bank = geneo::default_bank(spec.bank_kind);
    bank.rescale = false;
    StabilityResult result;
    result.factor = stability_factor(bank);

    // Draw all images up front so the result does not depend on threading.
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> pixel(0.0, 255.0);
    std::uniform_real_distribution<double> log_amp(std::log(0.01), std::log(64.0));
    std::vector<std::pair<img::GrayImage, img::GrayImage>> images;
    for (int p = 0; p < spec.pairs; ++p) {
        img::GrayImage a(spec.size, spec.size);
        for (auto& v : a.values()) v = pixel(rng);
        img::GrayImage b = a;
        if (p % 5 == 4) {
            for (auto& v : b.values()) v = pixel(rng);
        } else {
            const double amp = std::exp(log_amp(rng));
            std::uniform_real_distribution<double> noise(-amp, amp);
            for (auto& v : b.values()) v += noise(rng);
        }
        images.emplace_back(std::move(a), std::move(b));
    }

    result.pairs.resize(images.size());
    parallel_for(images.size(), threads, [&](std::size_t i) {
        const auto& [a, b] = images[i];
        const auto pa = geneo::apply_bank(bank, a);
        const auto pb = geneo::apply_bank(bank, b);
        StabilityPair s;
        for (std::size_t k = 0; k < pa.size(); ++k) s.operator_distance = std::max(s.operator_distance, img::sup_distance(pa[k], pb[k]));
        s.input_distance = img::sup_distance(a, b);
        const auto la = mpl::landscapes(cx::build_bifiltration(pa[0], pa[1]), spec.k_max, spec.grid);
        const auto lb = mpl::landscapes(cx::build_bifiltration(pb[0], pb[1]), spec.k_max, spec.grid);
        const double inf = std::numeric_limits<double>::infinity();
        s.distance_h0 = mpl::landscape_distance(la[0], lb[0], inf);
        s.distance_h1 = mpl::landscape_distance(la[1], lb[1], inf);
        s.bound = result.factor * s.input_distance + spec.grid.step;
        s.ok = std::max(s.distance_h0, s.distance_h1) <= s.bound;
        result.pairs[i] = s;
    });
    result.min_slack = std::numeric_limits<double>::infinity();
    for (const auto& p : result.pairs) {
        result.violations += p.ok ? 0 : 1;
        result.min_slack = std::min(result.min_slack, p.bound - std::max(p.distance_h0, p.distance_h1));
    }
    return result;
}

img::GrayImage fixture_psi1() { return img::GrayImage(3, 3, {7, 5, 3, 8, 6, 9, 1, 4, 2}); }
img::GrayImage fixture_psi2() { return img::GrayImage(3, 3, {3, 2, 7, 4, 9, 8, 5, 6, 1}); }

char fixture_letter(cx::VertexId v)
{
    static constexpr char kLetters[] = "ghidefabc";
    if (v >= 9) throw InvalidArgument("fixture vertex out of range");
    return kLetters[v];
}

std::string fixture_simplex_name(const cx::Simplex& s)
{
    std::string name;
    for (const auto v : s.vertices()) name += fixture_letter(v);
    std::sort(name.begin(), name.end());
    return name;
}

}  // namespace mgeneo::pipeline

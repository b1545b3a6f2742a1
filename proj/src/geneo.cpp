#include "mgeneo/geneo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "mgeneo/error.hpp"

namespace mgeneo::geneo {

void KernelSpec::validate() const
{
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("kernel sigma must be > 0");
    if (terms.empty()) throw InvalidArgument("kernel needs at least one term");
    double sum_a2 = 0.0;
    double sum_t2 = 0.0;
    for (const auto& t : terms) {
        if (!std::isfinite(t.amplitude) || !std::isfinite(t.center)) {
            throw InvalidArgument("kernel terms must be finite");
        }
        sum_a2 += t.amplitude * t.amplitude;
        sum_t2 += t.center * t.center;
    }
    if (!unconstrained && std::abs(sum_a2 - sum_t2) > 1e-9 * std::max(1.0, sum_a2)) {
        throw InvalidArgument("kernel violates sum a^2 == sum tau^2 (set unconstrained to allow)");
    }
}

int KernelSpec::radius() const
{
    double max_tau = 0.0;
    for (const auto& t : terms) max_tau = std::max(max_tau, std::abs(t.center));
    return static_cast<int>(std::ceil(3.0 * sigma + max_tau));
}

KernelGrid::KernelGrid(int radius, std::vector<double> values)
    : radius_(radius), values_(std::move(values))
{
    if (radius < 0 || values_.size() != static_cast<std::size_t>(side()) * side()) {
        throw DimensionError("kernel grid size does not match radius");
    }
}

double KernelGrid::l1_mass() const
{
    double m = 0.0;
    for (double v : values_) m += std::abs(v);
    return m;
}

KernelGrid sample_kernel(const KernelSpec& spec)
{
    spec.validate();
    const int r = spec.radius();
    const int side = 2 * r + 1;
    const double denom = 2.0 * spec.sigma * spec.sigma;
    std::vector<double> values(static_cast<std::size_t>(side) * side);
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            // dx^2 + dy^2 is exact, so symmetric offsets get bitwise-equal values.
            const double t = std::sqrt(static_cast<double>(dx * dx + dy * dy));
            double v = 0.0;
            for (const auto& term : spec.terms) {
                const double u = t - term.center;
                const double e = spec.exponent == GaussianExponent::Squared ? u * u : u;
                v += term.amplitude * std::exp(-e / denom);
            }
            values[static_cast<std::size_t>(dy + r) * side + (dx + r)] = v;
        }
    }
    return KernelGrid(r, std::move(values));
}

namespace {

// One dihedral orbit {(+-p, +-q), (+-q, +-p)} of kernel offsets sharing a weight.
struct Orbit {
    double weight;
    std::vector<std::pair<int, int>> offsets;  // (dx, dy)
};

std::vector<Orbit> build_orbits(const KernelGrid& grid)
{
    const double mass = grid.l1_mass();
    if (!(mass > 0.0)) throw DegenerateKernelError("kernel has zero L1 mass");
    std::vector<Orbit> orbits;
    const int r = grid.radius();
    for (int p = 0; p <= r; ++p) {
        for (int q = 0; q <= p; ++q) {
            const double w = grid.at(p, q) / mass;
            if (w == 0.0) continue;
            Orbit o{w, {}};
            for (auto [a, b] : {std::pair{p, q}, std::pair{q, p}}) {
                for (int sa : {1, -1}) {
                    for (int sb : {1, -1}) {
                        std::pair<int, int> off{sa * a, sb * b};
                        if (std::find(o.offsets.begin(), o.offsets.end(), off) == o.offsets.end()) {
                            o.offsets.push_back(off);
                        }
                    }
                }
            }
            orbits.push_back(std::move(o));
        }
    }
    return orbits;
}

img::GrayImage convolve(const KernelSpec& spec, const img::GrayImage& image)
{
    const auto orbits = build_orbits(sample_kernel(spec));
    const int w = image.width();
    const int h = image.height();
    img::GrayImage out(w, h);
    std::array<double, 8> buf{};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (const auto& orbit : orbits) {
                std::size_t n = 0;
                for (auto [dx, dy] : orbit.offsets) {
                    const int rr = r + dy;
                    const int cc = c + dx;
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                    buf[n++] = image.at(rr, cc);
                }
                if (n == 0) continue;
                // Summing the orbit's values in sorted order makes the result a
                // function of the multiset only.
                std::sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += buf[i];
                acc += orbit.weight * s;
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

}  // namespace

img::GrayImage apply_operator(const OperatorSpec& op, const img::GrayImage& image)
{
    if (image.empty()) throw InvalidArgument("apply_operator on an empty image");
    return std::visit(
        [&](const auto& o) -> img::GrayImage {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return image;
            } else if constexpr (std::is_same_v<T, Geneo>) {
                return convolve(o.kernel, image);
            } else {
                auto a = convolve(o.first, image);
                const auto b = convolve(o.second, image);
                auto av = a.values();
                const auto bv = b.values();
                for (std::size_t i = 0; i < av.size(); ++i) av[i] -= bv[i];
                return a;
            }
        },
        op);
}

img::GrayImage rescale_image(const img::GrayImage& image, double lo, double hi)
{
    if (!(lo < hi)) throw InvalidArgument("rescale_image requires lo < hi");
    const double mn = image.min_value();
    const double mx = image.max_value();
    img::GrayImage out = image;
    auto v = out.values();
    if (!(mx > mn)) {
        std::fill(v.begin(), v.end(), lo);
        return out;
    }
    const double scale = (hi - lo) / (mx - mn);
    for (auto& x : v) x = lo + (x - mn) * scale;
    return out;
}

void OperatorBank::validate() const
{
    if (operators.empty()) throw InvalidArgument("operator bank must have at least one operator");
    for (const auto& op : operators) {
        if (const auto* g = std::get_if<Geneo>(&op)) g->kernel.validate();
        if (const auto* d = std::get_if<DGeneo>(&op)) {
            d->first.validate();
            d->second.validate();
        }
    }
}

std::vector<img::GrayImage> apply_bank(const OperatorBank& bank, const img::GrayImage& image)
{
    bank.validate();
    std::vector<img::GrayImage> out;
    out.reserve(bank.operators.size());
    for (const auto& op : bank.operators) {
        auto psi = apply_operator(op, image);
        out.push_back(bank.rescale ? rescale_image(psi, 0.0, 255.0) : std::move(psi));
    }
    return out;
}

KernelSpec default_kernel(int index)
{
    static constexpr double kSigma[] = {1.0, 1.0, 2.0, 0.5, 1.5};
    if (index < 0 || index > 4) throw InvalidArgument("default kernels are G0..G4");
    return KernelSpec{kSigma[index], {{1.0, 1.0}}};
}

OperatorBank default_bank(std::string_view kind)
{
    OperatorBank bank;
    bank.kind = std::string(kind);
    if (kind == "multi-geneo") {
        bank.operators = {Geneo{default_kernel(0)}, Identity{}};
    } else if (kind == "multi-dgeneo") {
        bank.operators = {DGeneo{default_kernel(3), default_kernel(4)},
                          DGeneo{default_kernel(1), default_kernel(2)}};
    } else if (kind == "mix-geneo") {
        bank.operators = {Geneo{default_kernel(0)}, DGeneo{default_kernel(3), default_kernel(4)}};
    } else if (kind == "identity") {
        bank.operators = {Identity{}, Identity{}};
    } else {
        throw ConfigError("unknown bank kind '" + std::string(kind) + "'");
    }
    return bank;
}

std::string to_string(GaussianExponent e)
{
    return e == GaussianExponent::Squared ? "squared" : "linear";
}

namespace {

using nlohmann::json;

KernelSpec kernel_from_json(const json& j, bool unconstrained, GaussianExponent exponent)
{
    KernelSpec k;
    k.sigma = j.at("sigma").get<double>();
    for (const auto& t : j.at("terms")) {
        if (t.is_array()) {
            if (t.size() != 2) throw ConfigError("kernel term must be [a, tau]");
            k.terms.push_back({t[0].get<double>(), t[1].get<double>()});
        } else {
            k.terms.push_back({t.at("a").get<double>(), t.at("tau").get<double>()});
        }
    }
    k.unconstrained = j.value("unconstrained", unconstrained);
    k.exponent = exponent;
    return k;
}

json kernel_to_json(const KernelSpec& k)
{
    json terms = json::array();
    for (const auto& t : k.terms) terms.push_back({t.amplitude, t.center});
    return {{"sigma", k.sigma}, {"terms", terms}};
}

}  // namespace

OperatorBank bank_from_json(const json& j)
{
    try {
        const std::string kind = j.value("kind", std::string("custom"));
        const bool unconstrained = j.value("unconstrained", false);
        const std::string exp_name = j.value("gaussian_exponent", std::string("squared"));
        GaussianExponent exponent;
        if (exp_name == "squared") {
            exponent = GaussianExponent::Squared;
        } else if (exp_name == "linear") {
            exponent = GaussianExponent::Linear;
        } else {
            throw ConfigError("gaussian_exponent must be 'squared' or 'linear'");
        }

        OperatorBank bank;
        if (j.contains("operators")) {
            bank.kind = kind;
            for (const auto& o : j.at("operators")) {
                const std::string type = o.at("type").get<std::string>();
                if (type == "identity") {
                    bank.operators.emplace_back(Identity{});
                } else if (type == "geneo") {
                    bank.operators.emplace_back(
                        Geneo{kernel_from_json(o.at("kernel"), unconstrained, exponent)});
                } else if (type == "dgeneo") {
                    bank.operators.emplace_back(
                        DGeneo{kernel_from_json(o.at("first"), unconstrained, exponent),
                               kernel_from_json(o.at("second"), unconstrained, exponent)});
                } else {
                    throw ConfigError("unknown operator type '" + type + "'");
                }
            }
        } else {
            // A named default bank, optionally with G0..G4 overridden.
            bank = default_bank(kind);
            if (j.contains("kernels")) {
                const auto& ks = j.at("kernels");
                auto lookup = [&](int i) {
                    const std::string key = "G" + std::to_string(i);
                    return ks.contains(key) ? kernel_from_json(ks.at(key), unconstrained, exponent)
                                            : default_kernel(i);
                };
                std::vector<KernelSpec> g;
                for (int i = 0; i < 5; ++i) g.push_back(lookup(i));
                if (kind == "multi-geneo") {
                    bank.operators = {Geneo{g[0]}, Identity{}};
                } else if (kind == "multi-dgeneo") {
                    bank.operators = {DGeneo{g[3], g[4]}, DGeneo{g[1], g[2]}};
                } else if (kind == "mix-geneo") {
                    bank.operators = {Geneo{g[0]}, DGeneo{g[3], g[4]}};
                }
            }
            for (auto& op : bank.operators) {
                if (auto* ge = std::get_if<Geneo>(&op)) {
                    ge->kernel.exponent = exponent;
                    ge->kernel.unconstrained = ge->kernel.unconstrained || unconstrained;
                }
                if (auto* d = std::get_if<DGeneo>(&op)) {
                    for (KernelSpec* k : {&d->first, &d->second}) {
                        k->exponent = exponent;
                        k->unconstrained = k->unconstrained || unconstrained;
                    }
                }
            }
        }
        bank.rescale = j.value("rescale", true);
        bank.validate();
        return bank;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad operator-bank config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("bad operator-bank config: ") + e.what());
    }
}

json bank_to_json(const OperatorBank& bank)
{
    json ops = json::array();
    GaussianExponent exponent = GaussianExponent::Squared;
    bool unconstrained = false;
    for (const auto& op : bank.operators) {
        std::visit(
            [&](const auto& o) {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, Identity>) {
                    ops.push_back({{"type", "identity"}});
                } else if constexpr (std::is_same_v<T, Geneo>) {
                    exponent = o.kernel.exponent;
                    unconstrained = unconstrained || o.kernel.unconstrained;
                    ops.push_back({{"type", "geneo"}, {"kernel", kernel_to_json(o.kernel)}});
                } else {
                    exponent = o.first.exponent;
                    unconstrained = unconstrained || o.first.unconstrained || o.second.unconstrained;
                    ops.push_back({{"type", "dgeneo"},
                                   {"first", kernel_to_json(o.first)},
                                   {"second", kernel_to_json(o.second)}});
                }
            },
            op);
    }
    return {{"kind", bank.kind},
            {"rescale", bank.rescale},
            {"unconstrained", unconstrained},
            {"gaussian_exponent", to_string(exponent)},
            {"operators", ops}};
}

OperatorBank load_bank_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open operator-bank config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return bank_from_json(j);
}

}  // namespace mgeneo::geneo

#include "mgeneo/vectorize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "mgeneo/error.hpp"

namespace mgeneo::vec {

void PersistenceImageParams::validate() const
{
    if (resolution < 1) throw InvalidArgument("persistence image resolution must be >= 1");
    if (!(sigma > 0.0)) throw InvalidArgument("persistence image sigma must be positive");
    if (!(range[0] < range[1])) throw InvalidArgument("persistence image range must satisfy lo < hi");
}

namespace {

// Mass of N(mu, sigma^2) on [a, b].
double gaussian_mass(double mu, double sigma, double a, double b)
{
    const double s = sigma * std::numbers::sqrt2;
    return 0.5 * (std::erf((b - mu) / s) - std::erf((a - mu) / s));
}

}  // namespace

FeatureVector persistence_image(const ph::PersistenceDiagram& d, int dim, const PersistenceImageParams& params)
{
    params.validate();
    const int n = params.resolution;
    const double lo = params.range[0];
    const double span = params.range[1] - params.range[0];
    const double cell = span / n;
    FeatureVector out{std::vector<double>(static_cast<std::size_t>(n) * n, 0.0), "H" + std::to_string(dim), "pi"};
    std::vector<double> mb(static_cast<std::size_t>(n));
    std::vector<double> mp(static_cast<std::size_t>(n));
    for (const auto& p : d.points) {
        if (p.dim != dim) continue;
        const double death = std::min(p.death, params.range[1]);
        const double pers = death - p.birth;
        const double w = std::clamp(pers / span, 0.0, 1.0);
        if (w == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            mb[static_cast<std::size_t>(i)] = gaussian_mass(p.birth, params.sigma, lo + i * cell, lo + (i + 1) * cell);
            mp[static_cast<std::size_t>(i)] = gaussian_mass(pers, params.sigma, lo + i * cell, lo + (i + 1) * cell);
        }
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                out.values[static_cast<std::size_t>(r) * n + c] +=
                    w * mp[static_cast<std::size_t>(r)] * mb[static_cast<std::size_t>(c)];
            }
        }
    }
    return out;
}

double persistence_image_lipschitz(const PersistenceImageParams& params)
{
    params.validate();
    // Birth moves by at most delta, persistence by at most 2 delta.
    const double g = 1.0 / (params.sigma * std::sqrt(2.0 * std::numbers::pi));
    return 3.0 * g + 2.0 / (params.range[1] - params.range[0]);
}

FeatureVector landscape_vector(const mpl::Landscape& l, std::string_view homology)
{
    return {l.values, std::string(homology), "landscape"};
}

mpl::Landscape landscape_from_vector(const FeatureVector& v, int k_max, const mpl::GridSpec& grid)
{
    auto l = mpl::Landscape::zeros(k_max, grid);
    if (v.values.size() != l.values.size()) throw DimensionError("feature length does not match landscape shape");
    l.values = v.values;
    return l;
}

FeatureVector concat(std::span<const FeatureVector> parts)
{
    if (parts.empty()) throw InvalidArgument("concat of no feature vectors");
    FeatureVector out = parts.front();
    for (const auto& p : parts.subspan(1)) {
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
        out.homology += "+" + p.homology;
        if (p.method != out.method) out.method += "+" + p.method;
    }
    return out;
}

std::string write_feature_csv(std::span<const int> labels, std::span<const FeatureVector> rows)
{
    if (labels.size() != rows.size()) throw DimensionError("label count differs from row count");
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    std::string out = "label";
    for (std::size_t j = 0; j < width; ++j) out += ",f" + std::to_string(j);
    out += '\n';
    char buf[32];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) throw DimensionError("feature rows have different lengths");
        out += std::to_string(labels[i]);
        for (double v : rows[i].values) {
            const auto r = std::to_chars(buf, buf + sizeof buf, v);
            out += ',';
            out.append(buf, r.ptr);
        }
        out += '\n';
    }
    return out;
}

FeatureTable read_feature_csv(std::string_view text)
{
    FeatureTable t;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool header = true;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (header) {
            if (line.substr(0, 5) != "label") throw FormatError("line 1: expected 'label' header");
            width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
            header = false;
            continue;
        }
        std::vector<double> row;
        int label = 0;
        std::size_t field = 0;
        while (true) {
            const auto comma = line.find(',');
            const std::string_view tok = line.substr(0, comma);
            const char* end = tok.data() + tok.size();
            std::from_chars_result r{};
            if (field == 0) {
                r = std::from_chars(tok.data(), end, label);
            } else {
                double v = 0.0;
                r = std::from_chars(tok.data(), end, v);
                row.push_back(v);
            }
            if (r.ec != std::errc{} || r.ptr != end) {
                throw FormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
            }
            ++field;
            if (comma == std::string_view::npos) break;
            line = line.substr(comma + 1);
        }
        if (row.size() != width) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " features");
        }
        t.labels.push_back(label);
        t.rows.push_back(std::move(row));
    }
    if (header) throw FormatError("feature CSV is empty");
    return t;
}

}  // namespace mgeneo::vec

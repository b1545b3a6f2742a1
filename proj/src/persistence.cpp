#include "mgeneo/persistence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mgeneo/error.hpp"

namespace mgeneo::ph {

std::vector<PersistencePoint> PersistenceDiagram::of_dim(int dim) const
{
    std::vector<PersistencePoint> out;
    for (const auto& p : points) {
        if (p.dim == dim) out.push_back(p);
    }
    return out;
}

std::size_t PersistenceDiagram::essential_count(int dim) const
{
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [&](const auto& p) { return p.dim == dim && p.essential(); }));
}

std::size_t PersistenceDiagram::alive_at(int dim, double t) const
{
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [&](const auto& p) {
        return p.dim == dim && p.birth <= t && t < p.death;
    }));
}

Reducer::Reducer(std::shared_ptr<const cx::SimplicialComplex> complex) : complex_(std::move(complex))
{
    const std::size_t n = complex_->size();
    order_.reserve(n);
    keys_.reserve(n);
    position_.resize(n);
    columns_.resize(n);
    pivot_.resize(n);
    cleared_.resize(n);
    root_.resize(n);
}

PersistenceResult Reducer::reduce(std::span<const double> values, bool keep_raw)
{
    const auto& k = *complex_;
    if (values.size() != k.size()) throw DimensionError("filtration values do not match complex");

    keys_.clear();
    for (cx::SimplexId i = 0; i < k.size(); ++i) {
        if (values[i] != kInfinity) keys_.emplace_back(values[i], (std::uint64_t(k.dim(i)) << 32) | i);
    }
    std::sort(keys_.begin(), keys_.end());
    order_.clear();
    for (const auto& key : keys_) order_.push_back(static_cast<cx::SimplexId>(key.second & 0xffffffffu));
    const std::size_t n = order_.size();
    for (std::size_t p = 0; p < n; ++p) position_[order_[p]] = static_cast<std::uint32_t>(p);
    std::fill(pivot_.begin(), pivot_.begin() + static_cast<std::ptrdiff_t>(n), -1);
    std::fill(cleared_.begin(), cleared_.begin() + static_cast<std::ptrdiff_t>(n), 0);
    for (std::size_t j = 0; j < n; ++j) columns_[j].clear();

    // Twist: reduce the triangles first so their pivots clear edge columns.
    for (std::size_t j = 0; j < n; ++j) {
        const cx::SimplexId s = order_[j];
        if (k.dim(s) != 2) continue;
        auto& col = columns_[j];
        for (cx::SimplexId f : k.boundary(s)) col.push_back(position_[f]);
        std::sort(col.begin(), col.end());
        while (!col.empty()) {
            const std::int64_t other = pivot_[col.back()];
            if (other < 0) break;
            const auto& add = columns_[static_cast<std::size_t>(other)];
            scratch_.clear();
            std::set_symmetric_difference(col.begin(), col.end(), add.begin(), add.end(),
                                          std::back_inserter(scratch_));
            col.swap(scratch_);
        }
        if (!col.empty()) {
            pivot_[col.back()] = static_cast<std::int64_t>(j);
            cleared_[col.back()] = 1;
        }
    }

    // Edge columns reduce to the younger of the two component roots (elder
    // rule), which union-find over positions yields directly.
    for (std::size_t p = 0; p < n; ++p) root_[p] = static_cast<std::uint32_t>(p);
    auto find = [&](std::uint32_t x) {
        while (root_[x] != x) {
            root_[x] = root_[root_[x]];
            x = root_[x];
        }
        return x;
    };
    for (std::size_t j = 0; j < n; ++j) {
        const cx::SimplexId s = order_[j];
        if (k.dim(s) != 1 || cleared_[j]) continue;
        const auto faces = k.boundary(s);
        const std::uint32_t a = find(position_[faces[0]]);
        const std::uint32_t b = find(position_[faces[1]]);
        if (a == b) continue;  // essential cycle
        const auto young = std::max(a, b);
        root_[young] = std::min(a, b);
        pivot_[young] = static_cast<std::int64_t>(j);
        cleared_[young] = 1;
        columns_[j].push_back(young);
    }

    PersistenceResult result;
    auto emit = [&](std::size_t birth_pos, std::optional<std::size_t> death_pos) {
        const cx::SimplexId bs = order_[birth_pos];
        const int dim = k.dim(bs);
        if (dim > 1) return;
        const double b = values[bs];
        const double d = death_pos ? values[order_[*death_pos]] : kInfinity;
        if (keep_raw) {
            RawPair raw{bs, std::nullopt, dim, b, d};
            if (death_pos) raw.death_simplex = order_[*death_pos];
            result.raw.push_back(raw);
        }
        if (d > b) result.diagram.points.push_back({b, d, dim});
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (pivot_[i] >= 0) {
            emit(i, static_cast<std::size_t>(pivot_[i]));
        } else if (!cleared_[i] && columns_[i].empty()) {
            emit(i, std::nullopt);
        }
    }
    return result;
}

PersistenceResult compute_persistence_pairs(const cx::Filtration1D& f)
{
    f.check_monotone();
    Reducer reducer(f.complex);
    return reducer.reduce(f.values, true);
}

PersistenceDiagram compute_persistence(const cx::Filtration1D& f)
{
    f.check_monotone();
    Reducer reducer(f.complex);
    return reducer.reduce(f.values, false).diagram;
}

namespace {

using Bits = std::vector<std::uint64_t>;

// Rank over F2 of a set of column vectors given as bitsets.
int f2_rank(std::vector<Bits> cols)
{
    int rank = 0;
    std::vector<Bits> basis;
    std::vector<std::size_t> lead;
    for (auto& c : cols) {
        for (std::size_t b = 0; b < basis.size(); ++b) {
            if ((c[lead[b] / 64] >> (lead[b] % 64)) & 1U) {
                for (std::size_t w = 0; w < c.size(); ++w) c[w] ^= basis[b][w];
            }
        }
        std::size_t first = c.size() * 64;
        for (std::size_t w = 0; w < c.size(); ++w) {
            if (c[w]) {
                first = w * 64 + static_cast<std::size_t>(__builtin_ctzll(c[w]));
                break;
            }
        }
        if (first == c.size() * 64) continue;
        // Keep the basis fully reduced on its lead bits.
        for (std::size_t b = 0; b < basis.size(); ++b) {
            if ((basis[b][first / 64] >> (first % 64)) & 1U) {
                for (std::size_t w = 0; w < c.size(); ++w) basis[b][w] ^= c[w];
            }
        }
        basis.push_back(std::move(c));
        lead.push_back(first);
        ++rank;
    }
    return rank;
}

}  // namespace

std::pair<int, int> betti_numbers(const cx::Filtration1D& f, double t)
{
    const auto& k = *f.complex;
    std::vector<std::int64_t> local(k.size(), -1);
    std::array<std::vector<cx::SimplexId>, 3> by_dim;
    for (cx::SimplexId i = 0; i < k.size(); ++i) {
        if (f.values[i] <= t) {
            auto& bucket = by_dim[static_cast<std::size_t>(k.dim(i))];
            local[i] = static_cast<std::int64_t>(bucket.size());
            bucket.push_back(i);
        }
    }
    auto boundary_rank = [&](int dim) {
        const auto& rows = by_dim[static_cast<std::size_t>(dim - 1)];
        std::vector<Bits> cols;
        for (cx::SimplexId s : by_dim[static_cast<std::size_t>(dim)]) {
            Bits c((rows.size() + 63) / 64 + 1, 0);
            for (cx::SimplexId face : k.boundary(s)) {
                const auto r = static_cast<std::size_t>(local[face]);
                c[r / 64] ^= std::uint64_t{1} << (r % 64);
            }
            cols.push_back(std::move(c));
        }
        return f2_rank(std::move(cols));
    };
    const int r1 = boundary_rank(1);
    const int r2 = boundary_rank(2);
    const int v = static_cast<int>(by_dim[0].size());
    const int e = static_cast<int>(by_dim[1].size());
    return {v - r1, e - r1 - r2};
}

PersistenceDiagram swap_for_upper_star(const PersistenceDiagram& d, double maxval, double scale_floor)
{
    PersistenceDiagram out;
    out.points.reserve(d.points.size());
    for (const auto& p : d.points) {
        const double death = maxval - p.birth;
        const double birth = p.essential() ? std::min(scale_floor, death) : maxval - p.death;
        out.points.push_back({birth, death, p.dim});
    }
    return out;
}

namespace {

std::string format_value(double v)
{
    if (v == kInfinity) return "inf";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

double parse_value(const std::string& tok, int lineno)
{
    if (tok == "inf" || tok == "+inf" || tok == "Infinity") return kInfinity;
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw FormatError("diagram line " + std::to_string(lineno) + ": bad number '" + tok + "'");
}

}  // namespace

std::string write_diagram_csv(const PersistenceDiagram& d)
{
    std::string out = "dim,birth,death\n";
    for (const auto& p : d.points) {
        out += std::to_string(p.dim) + "," + format_value(p.birth) + "," + format_value(p.death) + "\n";
    }
    return out;
}

PersistenceDiagram read_diagram_csv(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    PersistenceDiagram d;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("dim", 0) == 0) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) fields.push_back(tok);
        if (fields.size() != 3) {
            throw FormatError("diagram line " + std::to_string(lineno) + ": expected dim,birth,death");
        }
        const double dim = parse_value(fields[0], lineno);
        if (dim != 0.0 && dim != 1.0) {
            throw FormatError("diagram line " + std::to_string(lineno) + ": dim must be 0 or 1");
        }
        d.points.push_back({parse_value(fields[1], lineno), parse_value(fields[2], lineno), static_cast<int>(dim)});
    }
    return d;
}

}  // namespace mgeneo::ph

#include "mgeneo/complex.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "mgeneo/error.hpp"

namespace mgeneo::cx {

Simplex::Simplex(std::span<const VertexId> vertices)
{
    if (vertices.empty() || vertices.size() > 3) throw InvalidArgument("simplex needs 1 to 3 vertices");
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (i > 0 && vertices[i] <= vertices[i - 1]) {
            throw InvalidArgument("simplex vertices must be strictly increasing");
        }
        v_[i] = vertices[i];
    }
    count_ = static_cast<std::uint8_t>(vertices.size());
}

Simplex Simplex::edge(VertexId a, VertexId b)
{
    if (a > b) std::swap(a, b);
    return Simplex(std::array{a, b});
}

Simplex Simplex::triangle(VertexId a, VertexId b, VertexId c)
{
    std::array v{a, b, c};
    std::sort(v.begin(), v.end());
    return Simplex(v);
}

SimplicialComplex::SimplicialComplex(std::vector<Simplex> simplices) : simplices_(std::move(simplices))
{
    std::map<Simplex, SimplexId> index;
    for (SimplexId i = 0; i < simplices_.size(); ++i) {
        if (!index.emplace(simplices_[i], i).second) throw InvalidArgument("duplicate simplex");
    }
    boundary_.assign(3 * simplices_.size(), 0);
    for (SimplexId i = 0; i < simplices_.size(); ++i) {
        const auto v = simplices_[i].vertices();
        if (v.size() == 1) continue;
        // Face k omits vertex k.
        for (std::size_t k = 0; k < v.size(); ++k) {
            std::array<VertexId, 2> face{};
            std::size_t n = 0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (j != k) face[n++] = v[j];
            }
            const auto it = index.find(Simplex(std::span<const VertexId>(face.data(), n)));
            if (it == index.end()) throw InvalidArgument("complex is not closed under faces");
            boundary_[3 * i + k] = it->second;
        }
    }
    count_dims();
}

SimplicialComplex::SimplicialComplex(std::vector<Simplex> simplices, std::vector<SimplexId> boundary)
    : simplices_(std::move(simplices)), boundary_(std::move(boundary))
{
    count_dims();
}

void SimplicialComplex::count_dims()
{
    counts_ = {};
    for (const auto& s : simplices_) ++counts_[static_cast<std::size_t>(s.dim())];
}

std::optional<SimplexId> SimplicialComplex::find(const Simplex& s) const
{
    for (SimplexId i = 0; i < simplices_.size(); ++i) {
        if (simplices_[i] == s) return i;
    }
    return std::nullopt;
}

std::array<VertexId, 4> GridComplex::square_of_triangle(SimplexId id) const
{
    const std::size_t sq = (id - first_triangle_) / 2;
    const int r = static_cast<int>(sq / static_cast<std::size_t>(width_ - 1));
    const int c = static_cast<int>(sq % static_cast<std::size_t>(width_ - 1));
    return {vertex(r, c), vertex(r, c + 1), vertex(r + 1, c), vertex(r + 1, c + 1)};
}

GridComplex build_grid_complex(int width, int height)
{
    if (width < 1 || height < 1) throw InvalidArgument("grid dimensions must be >= 1");
    static std::mutex mutex;
    static std::map<std::pair<int, int>, GridComplex> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find({width, height});
    if (it != cache.end()) return it->second;

    GridComplex g;
    g.width_ = width;
    g.height_ = height;
    const auto vid = [&](int r, int c) { return static_cast<VertexId>(r * width + c); };

    std::vector<Simplex> simplices;
    std::vector<SimplexId> boundary;
    auto push = [&](Simplex s, std::array<SimplexId, 3> b) {
        simplices.push_back(s);
        boundary.insert(boundary.end(), b.begin(), b.end());
        return static_cast<SimplexId>(simplices.size() - 1);
    };

    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) push(Simplex::vertex(vid(r, c)), {});
    }
    // Edge lookup tables keyed by the lower-left-most endpoint.
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<SimplexId> horiz(n), vert(n), diag(n);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c + 1 < width; ++c) {
            horiz[vid(r, c)] = push(Simplex::edge(vid(r, c), vid(r, c + 1)), {vid(r, c + 1), vid(r, c), 0});
        }
    }
    for (int r = 0; r + 1 < height; ++r) {
        for (int c = 0; c < width; ++c) {
            vert[vid(r, c)] = push(Simplex::edge(vid(r, c), vid(r + 1, c)), {vid(r + 1, c), vid(r, c), 0});
        }
    }
    for (int r = 0; r + 1 < height; ++r) {
        for (int c = 0; c + 1 < width; ++c) {
            diag[vid(r, c)] =
                push(Simplex::edge(vid(r, c), vid(r + 1, c + 1)), {vid(r + 1, c + 1), vid(r, c), 0});
        }
    }
    g.first_triangle_ = static_cast<SimplexId>(simplices.size());
    for (int r = 0; r + 1 < height; ++r) {
        for (int c = 0; c + 1 < width; ++c) {
            const VertexId ul = vid(r, c);
            const VertexId ur = vid(r, c + 1);
            const VertexId ll = vid(r + 1, c);
            const VertexId lr = vid(r + 1, c + 1);
            // {ul, ur, lr}: faces omit ul, ur, lr in turn.
            push(Simplex::triangle(ul, ur, lr), {vert[ur], diag[ul], horiz[ul]});
            // {ul, ll, lr}
            push(Simplex::triangle(ul, ll, lr), {horiz[ll], diag[ul], vert[ul]});
        }
    }
    g.complex_ = std::shared_ptr<const SimplicialComplex>(
        new SimplicialComplex(std::move(simplices), std::move(boundary)));
    cache.emplace(std::pair{width, height}, g);
    return g;
}

void Filtration1D::check_monotone() const
{
    if (!complex || values.size() != complex->size()) {
        throw DimensionError("filtration values do not match its complex");
    }
    for (SimplexId i = 0; i < complex->size(); ++i) {
        if (std::isnan(values[i])) throw NonMonotoneError("filtration value is NaN");
        for (SimplexId f : complex->boundary(i)) {
            if (values[f] > values[i]) {
                throw NonMonotoneError("filtration is not monotone at simplex " + std::to_string(i));
            }
        }
    }
}

namespace {

Filtration1D lower_star_of(const img::GrayImage& phi, bool negate)
{
    const auto grid = build_grid_complex(phi.width(), phi.height());
    const auto& k = *grid.complex();
    Filtration1D f{grid.complex(), std::vector<double>(k.size())};
    const auto vals = phi.values();
    for (SimplexId i = 0; i < k.size(); ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (VertexId v : k.simplex(i).vertices()) m = std::max(m, negate ? -vals[v] : vals[v]);
        f.values[i] = m;
    }
    return f;
}

}  // namespace

Filtration1D lower_star_filtration(const img::GrayImage& phi) { return lower_star_of(phi, false); }

Filtration1D upper_star_filtration(const img::GrayImage& phi) { return lower_star_of(phi, true); }

TriangleRule parse_triangle_rule(std::string_view name)
{
    if (name == "square-max") return TriangleRule::SquareMax;
    if (name == "simplex-max") return TriangleRule::SimplexMax;
    throw InvalidArgument("unknown triangle rule '" + std::string(name) + "'");
}

std::string to_string(TriangleRule rule)
{
    return rule == TriangleRule::SquareMax ? "square-max" : "simplex-max";
}

void Bifiltration::check_monotone() const
{
    if (!complex || grades.size() != complex->size()) {
        throw DimensionError("bifiltration grades do not match its complex");
    }
    for (SimplexId i = 0; i < complex->size(); ++i) {
        for (SimplexId f : complex->boundary(i)) {
            if (!grade_leq(grades[f], grades[i])) {
                throw NonMonotoneError("bifiltration is not monotone at simplex " + std::to_string(i));
            }
        }
    }
}

std::vector<SimplexId> Bifiltration::sublevel(const Grade& at) const
{
    std::vector<SimplexId> out;
    for (SimplexId i = 0; i < grades.size(); ++i) {
        if (grade_leq(grades[i], at)) out.push_back(i);
    }
    return out;
}

Bifiltration build_bifiltration(const img::GrayImage& psi1, const img::GrayImage& psi2, TriangleRule rule)
{
    if (psi1.width() != psi2.width() || psi1.height() != psi2.height()) {
        throw DimensionError("bifiltration channels differ in size");
    }
    const auto grid = build_grid_complex(psi1.width(), psi1.height());
    const auto& k = *grid.complex();
    Bifiltration b{grid.complex(), std::vector<Grade>(k.size()), psi1.width(), psi1.height(), rule};
    const auto v1 = psi1.values();
    const auto v2 = psi2.values();
    const SimplexId nv = static_cast<SimplexId>(k.vertex_count());
    for (SimplexId v = 0; v < nv; ++v) b.grades[v] = {v1[v], v2[v]};
    for (SimplexId i = nv; i < grid.first_triangle(); ++i) {
        const auto e = k.simplex(i).vertices();
        b.grades[i] = grade_max(b.grades[e[0]], b.grades[e[1]]);
    }
    for (SimplexId i = grid.first_triangle(); i < k.size(); i += 2) {
        if (rule == TriangleRule::SquareMax) {
            const auto sq = grid.square_of_triangle(i);
            const Grade g = grade_max(grade_max(b.grades[sq[0]], b.grades[sq[1]]),
                                      grade_max(b.grades[sq[2]], b.grades[sq[3]]));
            b.grades[i] = g;
            b.grades[i + 1] = g;
        } else {
            for (SimplexId t : {i, i + 1}) {
                const auto tv = k.simplex(t).vertices();
                b.grades[t] = grade_max(grade_max(b.grades[tv[0]], b.grades[tv[1]]), b.grades[tv[2]]);
            }
        }
    }
    return b;
}

Bifiltration build_bifiltration(const img::GrayImage& phi, const geneo::OperatorBank& bank, TriangleRule rule)
{
    if (bank.operators.size() != 2) {
        throw InvalidArgument("a bifiltration needs exactly two operators, bank has " +
                              std::to_string(bank.operators.size()));
    }
    const auto psi = geneo::apply_bank(bank, phi);
    return build_bifiltration(psi[0], psi[1], rule);
}

Bifiltration coarsen_bifiltration(const Bifiltration& b, int bins)
{
    if (bins < 1) throw InvalidArgument("coarsening needs bins >= 1");
    Bifiltration out = b;
    if (b.grades.empty()) return out;
    for (std::size_t axis = 0; axis < 2; ++axis) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& g : b.grades) {
            lo = std::min(lo, g[axis]);
            hi = std::max(hi, g[axis]);
        }
        if (!(hi > lo)) continue;
        const double span = hi - lo;
        const auto boundary = [&](long i) {
            return i >= bins ? hi : lo + span * static_cast<double>(i) / static_cast<double>(bins);
        };
        for (auto& g : out.grades) {
            long i = static_cast<long>(std::ceil((g[axis] - lo) * bins / span));
            i = std::clamp(i, 0L, static_cast<long>(bins));
            // Guard against rounding in either direction: boundary(i) must be the
            // smallest boundary >= the value.
            while (i > 0 && boundary(i - 1) >= g[axis]) --i;
            while (boundary(i) < g[axis]) ++i;
            g[axis] = boundary(i);
        }
    }
    return out;
}

namespace {

std::string format_double(double v)
{
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace

std::string write_bifiltration_text(const Bifiltration& b)
{
    std::string out = std::to_string(b.width) + " " + std::to_string(b.height) + "\n" + to_string(b.rule) + "\n";
    for (SimplexId i = 0; i < b.complex->size(); ++i) {
        for (VertexId v : b.complex->simplex(i).vertices()) out += std::to_string(v) + " ";
        out += "; " + format_double(b.grades[i][0]) + " " + format_double(b.grades[i][1]) + "\n";
    }
    return out;
}

Bifiltration read_bifiltration_text(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    const auto fail = [&](const std::string& msg) {
        throw FormatError("bifiltration line " + std::to_string(lineno) + ": " + msg);
    };
    const auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };

    Bifiltration b;
    if (!next_line()) fail("missing 'width height' header");
    {
        std::istringstream hs(line);
        if (!(hs >> b.width >> b.height) || b.width < 0 || b.height < 0) fail("bad 'width height' header");
    }
    if (!next_line()) fail("missing triangle rule");
    {
        std::istringstream rs(line);
        std::string rule;
        rs >> rule;
        try {
            b.rule = parse_triangle_rule(rule);
        } catch (const InvalidArgument&) {
            fail("unknown triangle rule '" + rule + "'");
        }
    }
    std::vector<Simplex> simplices;
    while (next_line()) {
        const auto semi = line.find(';');
        if (semi == std::string::npos) fail("expected 'vertices ; gx gy'");
        std::istringstream vs(line.substr(0, semi));
        std::istringstream gs(line.substr(semi + 1));
        std::vector<VertexId> verts;
        long long v = 0;
        while (vs >> v) {
            if (v < 0) fail("negative vertex id");
            verts.push_back(static_cast<VertexId>(v));
        }
        if (!vs.eof()) fail("bad vertex id");
        Grade g{};
        std::string extra;
        if (!(gs >> g[0] >> g[1])) fail("expected two grade values");
        if (gs >> extra) fail("unexpected trailing text '" + extra + "'");
        try {
            simplices.emplace_back(verts);
        } catch (const InvalidArgument& e) {
            fail(e.what());
        }
        b.grades.push_back(g);
    }
    try {
        b.complex = std::make_shared<const SimplicialComplex>(std::move(simplices));
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("bifiltration is not a valid complex: ") + e.what());
    }
    try {
        b.check_monotone();
    } catch (const NonMonotoneError& e) {
        throw FormatError(e.what());
    }
    return b;
}

std::string write_rivet_bifiltration(const Bifiltration& b, std::string_view xlabel, std::string_view ylabel)
{
    std::string out = "--datatype bifiltration\n--xlabel " + std::string(xlabel) + "\n--ylabel " +
                      std::string(ylabel) + "\n\n";
    for (SimplexId i = 0; i < b.complex->size(); ++i) {
        const auto v = b.complex->simplex(i).vertices();
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (j) out += ' ';
            out += std::to_string(v[j]);
        }
        out += " ; " + format_double(b.grades[i][0]) + " " + format_double(b.grades[i][1]) + "\n";
    }
    return out;
}

}  // namespace mgeneo::cx

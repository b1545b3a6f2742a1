#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgeneo/geneo.hpp"
#include "mgeneo/image.hpp"

namespace mgeneo::cx {

using VertexId = std::uint32_t;
using SimplexId = std::uint32_t;

/// 1 to 3 strictly increasing vertex ids; dim = count - 1.
class Simplex {
public:
    Simplex() = default;
    explicit Simplex(std::span<const VertexId> vertices);
    static Simplex vertex(VertexId a) { return Simplex(std::array{a}); }
    static Simplex edge(VertexId a, VertexId b);
    static Simplex triangle(VertexId a, VertexId b, VertexId c);

    int dim() const { return count_ - 1; }
    std::span<const VertexId> vertices() const { return {v_.data(), count_}; }

    friend auto operator<=>(const Simplex&, const Simplex&) = default;

private:
    std::array<VertexId, 3> v_{};
    std::uint8_t count_ = 0;
};

class GridComplex;

/// Closed simplicial complex of dimension <= 2 with precomputed boundaries.
/// Simplex ids are positions in the construction order.
class SimplicialComplex {
public:
    // Throws InvalidArgument if a face of some simplex is missing or a simplex repeats.
    explicit SimplicialComplex(std::vector<Simplex> simplices);

    std::size_t size() const { return simplices_.size(); }
    const Simplex& simplex(SimplexId id) const { return simplices_[id]; }
    int dim(SimplexId id) const { return simplices_[id].dim(); }
    std::span<const SimplexId> boundary(SimplexId id) const
    {
        return {boundary_.data() + 3 * static_cast<std::size_t>(id),
                static_cast<std::size_t>(simplices_[id].dim() == 0 ? 0 : simplices_[id].dim() + 1)};
    }
    std::size_t count(int dim) const { return counts_[static_cast<std::size_t>(dim)]; }
    std::size_t vertex_count() const { return counts_[0]; }
    std::optional<SimplexId> find(const Simplex& s) const;

private:
    friend GridComplex build_grid_complex(int width, int height);
    SimplicialComplex(std::vector<Simplex> simplices, std::vector<SimplexId> boundary);
    void count_dims();

    std::vector<Simplex> simplices_;
    std::vector<SimplexId> boundary_;  // 3 slots per simplex
    std::array<std::size_t, 3> counts_{};
};

/// Triangulated pixel grid. Vertex id = row * width + col (row 0 on top).
/// Edges: horizontal, vertical, and the upper-left to lower-right diagonal of
/// each unit square; each square holds the two triangles on either side of it.
/// Order: all vertices, then horizontal, vertical, diagonal edges, then
/// triangles in square order (upper-right triangle first).
class GridComplex {
public:
    int width() const { return width_; }
    int height() const { return height_; }
    const std::shared_ptr<const SimplicialComplex>& complex() const { return complex_; }
    VertexId vertex(int row, int col) const { return static_cast<VertexId>(row * width_ + col); }
    SimplexId first_triangle() const { return first_triangle_; }
    std::size_t square_count() const
    {
        return static_cast<std::size_t>(width_ - 1) * static_cast<std::size_t>(height_ - 1);
    }
    // The four corners (ul, ur, ll, lr) of the unit square owning triangle `id`.
    std::array<VertexId, 4> square_of_triangle(SimplexId id) const;

private:
    friend GridComplex build_grid_complex(int width, int height);
    int width_ = 0;
    int height_ = 0;
    SimplexId first_triangle_ = 0;
    std::shared_ptr<const SimplicialComplex> complex_;
};

/// Shared and immutable; repeated calls with the same size reuse one instance.
GridComplex build_grid_complex(int width, int height);

struct Filtration1D {
    std::shared_ptr<const SimplicialComplex> complex;
    // +infinity marks a simplex as absent from the complex.
    std::vector<double> values;

    void check_monotone() const;  // throws NonMonotoneError
};

/// value(simplex) = max of phi over its vertices.
Filtration1D lower_star_filtration(const img::GrayImage& phi);
/// lower_star_filtration(-phi); diagrams come back through ph::swap_for_upper_star.
Filtration1D upper_star_filtration(const img::GrayImage& phi);

using Grade = std::array<double, 2>;

inline bool grade_leq(const Grade& a, const Grade& b) { return a[0] <= b[0] && a[1] <= b[1]; }
inline Grade grade_max(const Grade& a, const Grade& b)
{
    return {a[0] < b[0] ? b[0] : a[0], a[1] < b[1] ? b[1] : a[1]};
}

enum class TriangleRule {
    SquareMax,   // max over all four vertices of the owning unit square
    SimplexMax,  // max over the triangle's own three vertices
};

TriangleRule parse_triangle_rule(std::string_view name);
std::string to_string(TriangleRule rule);

/// One-critical bifiltration: exactly one grade per simplex.
struct Bifiltration {
    std::shared_ptr<const SimplicialComplex> complex;
    std::vector<Grade> grades;
    int width = 0;
    int height = 0;
    TriangleRule rule = TriangleRule::SquareMax;

    void check_monotone() const;  // throws NonMonotoneError
    // Simplices whose grade is <= `at` componentwise.
    std::vector<SimplexId> sublevel(const Grade& at) const;
};

Bifiltration build_bifiltration(const img::GrayImage& psi1, const img::GrayImage& psi2,
                                TriangleRule rule = TriangleRule::SquareMax);
/// psi_i = bank[i](phi), rescaled per bank.rescale. Bank must have two operators.
Bifiltration build_bifiltration(const img::GrayImage& phi, const geneo::OperatorBank& bank,
                                TriangleRule rule = TriangleRule::SquareMax);

/// Snaps each grade component up to the next boundary of a uniform `bins`-cell
/// partition of that component's observed range.
Bifiltration coarsen_bifiltration(const Bifiltration& b, int bins);

// Text format: "width height", then the triangle rule, then one simplex per
// line as "v0 [v1 [v2]] ; gx gy". Reading reports errors with line numbers.
std::string write_bifiltration_text(const Bifiltration& b);
Bifiltration read_bifiltration_text(std::string_view text);
// RIVET bifiltration input file.
std::string write_rivet_bifiltration(const Bifiltration& b, std::string_view xlabel = "psi1",
                                     std::string_view ylabel = "psi2");

}  // namespace mgeneo::cx

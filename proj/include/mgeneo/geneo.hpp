#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mgeneo/image.hpp"

namespace mgeneo::geneo {

// Shape of the radial Gaussian ring g(t) = exp(-e(t - tau) / (2 sigma^2)).
// Squared uses e(u) = u^2; Linear uses e(u) = u, which is unbounded for t < tau.
enum class GaussianExponent { Squared, Linear };

struct KernelTerm {
    double amplitude = 1.0;
    double center = 0.0;  // ring radius tau, pixels
};

/// Gaussian-mixture radial kernel G(x, y) = sum_j a_j g_{tau_j}(sqrt(x^2 + y^2)).
/// Unless `unconstrained`, the amplitudes and centers must satisfy
/// sum a_j^2 == sum tau_j^2 (relative tolerance 1e-9).
struct KernelSpec {
    double sigma = 1.0;
    std::vector<KernelTerm> terms;
    bool unconstrained = false;
    GaussianExponent exponent = GaussianExponent::Squared;

    void validate() const;
    int radius() const;  // ceil(3 sigma + max |tau|)
};

/// Square sampled kernel of side 2*radius+1, centered at (0, 0).
class KernelGrid {
public:
    KernelGrid(int radius, std::vector<double> values);

    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }
    double at(int dx, int dy) const
    {
        return values_[static_cast<std::size_t>(dy + radius_) * side() + (dx + radius_)];
    }
    std::span<const double> values() const { return values_; }
    double l1_mass() const;

private:
    int radius_;
    std::vector<double> values_;
};

KernelGrid sample_kernel(const KernelSpec& spec);

struct Identity {};
struct Geneo {
    KernelSpec kernel;
};
// first(phi) - second(phi)
struct DGeneo {
    KernelSpec first;
    KernelSpec second;
};

using OperatorSpec = std::variant<Identity, Geneo, DGeneo>;

struct OperatorBank {
    std::string kind = "custom";
    std::vector<OperatorSpec> operators;
    bool rescale = true;

    void validate() const;
};

/// Normalized discrete convolution with zero padding. Geneo divides by the
/// discrete L1 mass sum |G|; DGeneo is the elementwise difference of two Geneos.
/// The accumulation order is canonical over dihedral orbits of kernel offsets,
/// so results commute bit-for-bit with rotations and flips of square images.
img::GrayImage apply_operator(const OperatorSpec& op, const img::GrayImage& image);

/// Affine min-max map onto [lo, hi]; constant images map to lo.
img::GrayImage rescale_image(const img::GrayImage& image, double lo, double hi);

/// Applies every operator of the bank, rescaling each output to [0, 255] when
/// bank.rescale is set.
std::vector<img::GrayImage> apply_bank(const OperatorBank& bank, const img::GrayImage& image);

// Default kernels G0..G4: k = 1, a = tau = 1, sigma = 1, 1, 2, 0.5, 1.5.
KernelSpec default_kernel(int index);

/// "multi-geneo" -> [G0, I]; "multi-dgeneo" -> [G3-G4, G1-G2];
/// "mix-geneo" -> [G0, G3-G4]; "identity" -> [I, I]. Rescale is on.
OperatorBank default_bank(std::string_view kind);

OperatorBank bank_from_json(const nlohmann::json& j);
nlohmann::json bank_to_json(const OperatorBank& bank);
OperatorBank load_bank_config(const std::filesystem::path& path);

std::string to_string(GaussianExponent e);

}  // namespace mgeneo::geneo

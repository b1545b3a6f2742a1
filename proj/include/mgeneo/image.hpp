#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mgeneo::img {

/// Rectangular grid of finite real intensities stored row-major.
/// Row 0 is the top image row.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height);
    GrayImage(int width, int height, std::vector<double> values);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double at(int row, int col) const { return values_[index(row, col)]; }
    double& at(int row, int col) { return values_[index(row, col)]; }
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double min_value() const;
    double max_value() const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

// IDX containers (big-endian headers, unsigned byte payload).
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

std::vector<GrayImage> load_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> load_idx_labels(std::span<const std::uint8_t> bytes);

// Reads a whole file; gzip-compressed input is inflated transparently.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct MnistSplit {
    std::vector<GrayImage> images;
    std::vector<int> labels;
};

enum class MnistPart { Train, Test };

// Locates `train-images-idx3-ubyte` (also `.gz` and the `train-images.idx3-ubyte`
// spelling) and its label file inside `dir`.
MnistSplit load_mnist(const std::filesystem::path& dir, MnistPart part);

// Binary PGM (P5). Values written outside [lo, hi] are clamped before being
// mapped linearly onto 0..255 and rounded to the nearest integer.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pgm(const GrayImage& image, double lo = 0.0, double hi = 255.0);

GrayImage read_pgm_file(const std::filesystem::path& path);
void write_pgm_file(const std::filesystem::path& path, const GrayImage& image, double lo = 0.0,
                    double hi = 255.0);

// Plain numeric matrix, one image row per line, comma or whitespace separated.
GrayImage read_matrix_csv(const std::string& text);
std::string write_matrix_csv(const GrayImage& image);

// Loads a PGM or a CSV matrix depending on the extension.
GrayImage load_image_file(const std::filesystem::path& path);

/// max over pixels of |a - b|. Throws DimensionError on shape mismatch.
double sup_distance(const GrayImage& a, const GrayImage& b);

}  // namespace mgeneo::img

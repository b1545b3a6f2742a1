#include "mgeneo/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mgeneo/error.hpp"

namespace mgeneo::img {

GrayImage::GrayImage(int width, int height)
    : GrayImage(width, height,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                    static_cast<std::size_t>(std::max(height, 0))))
{
}

GrayImage::GrayImage(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values))
{
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("image dimensions must be positive");
    }
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DimensionError("image value count does not match width*height");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw ValueError("image values must be finite");
    }
}

double GrayImage::min_value() const
{
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double GrayImage::max_value() const
{
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset)
{
    if (bytes.size() < offset + 4) throw LengthError("IDX header truncated");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

std::vector<GrayImage> load_idx_images(std::span<const std::uint8_t> bytes)
{
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kIdxImageMagic) {
        throw FormatError("IDX image stream has magic " + std::to_string(magic) +
                          ", expected 2051");
    }
    const std::size_t count = read_be32(bytes, 4);
    const std::size_t rows = read_be32(bytes, 8);
    const std::size_t cols = read_be32(bytes, 12);
    if (rows == 0 || cols == 0) throw FormatError("IDX image stream has zero-sized images");
    const std::size_t pixels = rows * cols;
    if (bytes.size() - 16 < count * pixels) {
        throw LengthError("IDX image payload truncated: need " + std::to_string(count * pixels) +
                          " bytes, have " + std::to_string(bytes.size() - 16));
    }

    std::vector<GrayImage> images;
    images.reserve(count);
    const std::uint8_t* p = bytes.data() + 16;
    for (std::size_t i = 0; i < count; ++i, p += pixels) {
        std::vector<double> values(p, p + pixels);
        images.emplace_back(static_cast<int>(cols), static_cast<int>(rows), std::move(values));
    }
    return images;
}

std::vector<int> load_idx_labels(std::span<const std::uint8_t> bytes)
{
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kIdxLabelMagic) {
        throw FormatError("IDX label stream has magic " + std::to_string(magic) +
                          ", expected 2049");
    }
    const std::size_t count = read_be32(bytes, 4);
    if (bytes.size() - 8 < count) {
        throw LengthError("IDX label payload truncated: need " + std::to_string(count) +
                          " bytes, have " + std::to_string(bytes.size() - 8));
    }
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int v = bytes[8 + i];
        if (v > 9) {
            throw ValueError("IDX label " + std::to_string(i) + " has value " + std::to_string(v));
        }
        labels[i] = v;
    }
    return labels;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    // gzread passes uncompressed files through unchanged.
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> chunk(1 << 20);
    for (;;) {
        const int n = gzread(file, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            int errnum = 0;
            std::string msg = gzerror(file, &errnum);
            gzclose(file);
            throw FormatError("error reading " + path.string() + ": " + msg);
        }
        if (n == 0) break;
        out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    }
    gzclose(file);
    return out;
}

namespace {

std::filesystem::path find_idx(const std::filesystem::path& dir, const std::string& stem,
                               const std::string& kind)
{
    // Both `train-images-idx3-ubyte` and `train-images.idx3-ubyte` exist in the wild.
    const std::string names[] = {stem + "-" + kind, stem + "." + kind};
    for (const auto& name : names) {
        for (const char* suffix : {"", ".gz"}) {
            auto p = dir / (name + suffix);
            if (std::filesystem::exists(p)) return p;
        }
    }
    throw Error("MNIST file " + stem + "-" + kind + " not found in " + dir.string());
}

}  // namespace

MnistSplit load_mnist(const std::filesystem::path& dir, MnistPart part)
{
    const std::string prefix = part == MnistPart::Train ? "train" : "t10k";
    MnistSplit split;
    split.images = load_idx_images(read_file_bytes(find_idx(dir, prefix + "-images", "idx3-ubyte")));
    split.labels = load_idx_labels(read_file_bytes(find_idx(dir, prefix + "-labels", "idx1-ubyte")));
    if (split.images.size() != split.labels.size()) {
        throw DimensionError("MNIST image and label counts differ");
    }
    return split;
}

namespace {

// Reads the next whitespace-delimited PGM header token, skipping # comments.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos)
{
    for (;;) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
        tok.push_back(static_cast<char>(bytes[pos++]));
    }
    if (tok.empty()) throw FormatError("PGM header truncated");
    return tok;
}

int parse_positive(const std::string& tok, const char* what)
{
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw FormatError(std::string("PGM header has invalid ") + what + " '" + tok + "'");
}

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    const std::string magic = next_token(bytes, pos);
    if (magic != "P5") throw FormatError("expected binary PGM (P5), found '" + magic + "'");
    const int width = parse_positive(next_token(bytes, pos), "width");
    const int height = parse_positive(next_token(bytes, pos), "height");
    const int maxval = parse_positive(next_token(bytes, pos), "maxval");
    if (maxval > 255) throw FormatError("PGM maxval " + std::to_string(maxval) + " exceeds 255");
    ++pos;  // single whitespace byte after maxval
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() < pos || bytes.size() - pos < n) throw LengthError("PGM raster truncated");
    std::vector<double> values(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                               bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return GrayImage(width, height, std::move(values));
}

std::vector<std::uint8_t> write_pgm(const GrayImage& image, double lo, double hi)
{
    if (!(lo < hi)) throw InvalidArgument("write_pgm requires lo < hi");
    const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                               std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.size());
    for (double v : image.values()) {
        const double c = std::clamp(v, lo, hi);
        out.push_back(static_cast<std::uint8_t>(std::lround((c - lo) / (hi - lo) * 255.0)));
    }
    return out;
}

GrayImage read_pgm_file(const std::filesystem::path& path)
{
    return read_pgm(read_file_bytes(path));
}

void write_pgm_file(const std::filesystem::path& path, const GrayImage& image, double lo, double hi)
{
    const auto bytes = write_pgm(image, lo, hi);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GrayImage read_matrix_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    int width = -1;
    int height = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::vector<double> rv;
        std::string tok;
        while (row >> tok) {
            try {
                std::size_t used = 0;
                rv.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw FormatError("matrix line " + std::to_string(lineno) + ": bad number '" + tok + "'");
            }
        }
        if (rv.empty()) continue;
        if (width < 0) width = static_cast<int>(rv.size());
        if (static_cast<int>(rv.size()) != width) {
            throw FormatError("matrix line " + std::to_string(lineno) + ": expected " +
                              std::to_string(width) + " values");
        }
        values.insert(values.end(), rv.begin(), rv.end());
        ++height;
    }
    if (height == 0) throw FormatError("matrix is empty");
    return GrayImage(width, height, std::move(values));
}

std::string write_matrix_csv(const GrayImage& image)
{
    std::ostringstream out;
    out.precision(17);
    for (int r = 0; r < image.height(); ++r) {
        for (int c = 0; c < image.width(); ++c) {
            if (c) out << ',';
            out << image.at(r, c);
        }
        out << '\n';
    }
    return out.str();
}

GrayImage load_image_file(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    const auto ext = path.extension().string();
    if (ext == ".csv" || ext == ".txt") {
        return read_matrix_csv(std::string(bytes.begin(), bytes.end()));
    }
    return read_pgm(bytes);
}

double sup_distance(const GrayImage& a, const GrayImage& b)
{
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionError("sup_distance requires images of equal size");
    }
    double d = 0.0;
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
    return d;
}

}  // namespace mgeneo::img

#include "lfsr/lf_io.hpp"

#include "lfsr/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <vector>

namespace lfsr {
namespace {

struct RawPng {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int channels = 0;
    int bit_depth = 0;
    unsigned char* pixels = nullptr; // malloc'd, row-major, big-endian for 16-bit
};

// C-style reader: nothing with a destructor lives across setjmp.
bool read_png_raw(const char* path, RawPng* out, const char** error) {
    FILE* fp = std::fopen(path, "rb");
    if (!fp) {
        *error = "cannot open file";
        return false;
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        *error = "libpng initialization failed";
        return false;
    }
    unsigned char* volatile pixels = nullptr;
    png_bytep* volatile rows = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        std::free(pixels);
        std::free(rows);
        *error = "corrupt or unsupported PNG";
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out->width = png_get_image_width(png, info);
    out->height = png_get_image_height(png, info);
    out->channels = png_get_channels(png, info);
    out->bit_depth = png_get_bit_depth(png, info);
    const png_size_t row_bytes = png_get_rowbytes(png, info);
    pixels = static_cast<unsigned char*>(std::malloc(row_bytes * out->height));
    rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * out->height));
    if (!pixels || !rows) png_error(png, "out of memory");
    for (png_uint_32 y = 0; y < out->height; ++y) rows[y] = pixels + y * row_bytes;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    std::free(rows);
    out->pixels = pixels;
    return true;
}

bool write_png_raw(const char* path, const unsigned char* pixels, png_uint_32 width, png_uint_32 height,
                   int channels, int bit_depth, const char** error) {
    FILE* fp = std::fopen(path, "wb");
    if (!fp) {
        *error = "cannot create file";
        return false;
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        *error = "libpng initialization failed";
        return false;
    }
    png_bytep* volatile rows = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        std::free(rows);
        *error = "PNG encoding failed";
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * height));
    if (!rows) png_error(png, "out of memory");
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = const_cast<unsigned char*>(pixels) + y * row_bytes;
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::free(rows);
    return std::fclose(fp) == 0;
}

} // namespace

nlohmann::json LfManifest::to_json() const {
    return nlohmann::json{{"width", width},
                          {"height", height},
                          {"angular_rho", angular_rho},
                          {"angular_tau", angular_tau},
                          {"bit_depth", bit_depth},
                          {"color_space", to_string(color_space)},
                          {"extra", extra}};
}

LfManifest LfManifest::from_json(const nlohmann::json& j) {
    LfManifest m;
    try {
        m.width = j.at("width").get<Index>();
        m.height = j.at("height").get<Index>();
        m.angular_rho = j.at("angular_rho").get<Index>();
        m.angular_tau = j.at("angular_tau").get<Index>();
        m.bit_depth = j.value("bit_depth", 8);
        m.color_space = color_space_from_string(j.value("color_space", std::string("y")));
        m.extra = j.value("extra", nlohmann::json::object());
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("invalid manifest: ") + ex.what());
    }
    if (m.width <= 0 || m.height <= 0 || m.angular_rho <= 0 || m.angular_tau <= 0) {
        throw IoError("manifest extents must be positive");
    }
    if (m.bit_depth != 8 && m.bit_depth != 16) throw IoError("manifest bit depth must be 8 or 16");
    return m;
}

std::uint32_t quantize(float value, int bit_depth) {
    const double max_level = bit_depth == 16 ? 65535.0 : 255.0;
    const double v = std::clamp(static_cast<double>(value), 0.0, 1.0);
    return static_cast<std::uint32_t>(std::floor(v * max_level + 0.5));
}

Tensor read_png(const std::filesystem::path& path) {
    RawPng raw;
    const char* error = nullptr;
    if (!read_png_raw(path.c_str(), &raw, &error)) throw IoError(path.string() + ": " + error);
    Tensor img(Shape{static_cast<Index>(raw.height), static_cast<Index>(raw.width), raw.channels});
    const Index n = img.size();
    if (raw.bit_depth == 16) {
        for (Index i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(raw.pixels[2 * i]) << 8) | raw.pixels[2 * i + 1];
            img[i] = static_cast<float>(v / 65535.0);
        }
    } else {
        for (Index i = 0; i < n; ++i) img[i] = static_cast<float>(raw.pixels[i] / 255.0);
    }
    std::free(raw.pixels);
    return img;
}

void write_png(const std::filesystem::path& path, const Tensor& image, int bit_depth) {
    require(image.rank() == 3 && (image.dim(2) == 1 || image.dim(2) == 3), "PNG images must be (H, W, 1|3)");
    require(bit_depth == 8 || bit_depth == 16, "PNG bit depth must be 8 or 16");
    const Index n = image.size();
    std::vector<unsigned char> bytes(static_cast<std::size_t>(n * (bit_depth / 8)));
    for (Index i = 0; i < n; ++i) {
        const std::uint32_t q = quantize(image[i], bit_depth);
        if (bit_depth == 16) {
            bytes[static_cast<std::size_t>(2 * i)] = static_cast<unsigned char>(q >> 8);
            bytes[static_cast<std::size_t>(2 * i + 1)] = static_cast<unsigned char>(q & 0xff);
        } else {
            bytes[static_cast<std::size_t>(i)] = static_cast<unsigned char>(q);
        }
    }
    const char* error = nullptr;
    if (!write_png_raw(path.c_str(), bytes.data(), static_cast<png_uint_32>(image.dim(1)),
                       static_cast<png_uint_32>(image.dim(0)), static_cast<int>(image.dim(2)), bit_depth, &error)) {
        throw IoError(path.string() + ": " + (error ? error : "write failed"));
    }
}

std::string view_filename(Index rho, Index tau) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "view_%02lld_%02lld.png", static_cast<long long>(rho), static_cast<long long>(tau));
    return buf;
}

void save_lightfield(const std::filesystem::path& dir, const LightField4D& lf, int bit_depth,
                     const nlohmann::json& extra) {
    std::filesystem::create_directories(dir);
    for (Index r = 0; r < lf.angular_rho(); ++r) {
        for (Index t = 0; t < lf.angular_tau(); ++t) write_png(dir / view_filename(r, t), extract_sai(lf, {r, t}), bit_depth);
    }
    LfManifest m;
    m.width = lf.width();
    m.height = lf.height();
    m.angular_rho = lf.angular_rho();
    m.angular_tau = lf.angular_tau();
    m.bit_depth = bit_depth;
    m.color_space = lf.color_space();
    m.extra = extra;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << m.to_json().dump(2) << '\n';
}

LoadedLightField load_lightfield(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("missing manifest.json in " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("malformed manifest.json: ") + ex.what());
    }
    LfManifest m = LfManifest::from_json(j);
    const Index channels = m.color_space == ColorSpace::Y ? 1 : 3;

    std::vector<std::string> missing;
    for (Index r = 0; r < m.angular_rho; ++r) {
        for (Index t = 0; t < m.angular_tau; ++t) {
            if (!std::filesystem::exists(dir / view_filename(r, t))) missing.push_back(view_filename(r, t));
        }
    }
    if (!missing.empty()) {
        throw IoError("incomplete view grid in " + dir.string() + ": " + std::to_string(missing.size()) +
                      " missing, first " + missing.front());
    }
    LightField4D lf(m.height, m.width, m.angular_rho, m.angular_tau, channels, m.color_space);
    for (Index r = 0; r < m.angular_rho; ++r) {
        for (Index t = 0; t < m.angular_tau; ++t) {
            const Tensor img = read_png(dir / view_filename(r, t));
            if (img.dim(0) != m.height || img.dim(1) != m.width || img.dim(2) != channels) {
                throw IoError(view_filename(r, t) + " has shape " + shape_string(img.shape()) +
                              ", manifest expects (" + std::to_string(m.height) + "," + std::to_string(m.width) + "," +
                              std::to_string(channels) + ")");
            }
            for (Index y = 0; y < m.height; ++y)
                for (Index x = 0; x < m.width; ++x)
                    for (Index c = 0; c < channels; ++c) lf(y, x, r, t, c) = img[(y * m.width + x) * channels + c];
        }
    }
    return {std::move(lf), std::move(m)};
}

} // namespace lfsr

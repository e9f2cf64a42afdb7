#include "image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <vector>

#include <png.h>

namespace dna {

namespace {

constexpr int kMaxDim = 1 << 16; // refuse absurd headers before allocating

std::uint8_t quantize(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

struct FileHandle {
    std::FILE* f = nullptr;
    explicit FileHandle(const std::string& path, const char* mode)
        : f(std::fopen(path.c_str(), mode)) {}
    ~FileHandle() {
        if (f)
            std::fclose(f);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

// ---- PGM (P5) ---------------------------------------------------------------

// Next whitespace-separated header token, skipping '#' comment lines.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty())
                return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int pgm_int(std::istream& in, const char* what) {
    const std::string tok = pgm_token(in);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw FormatError(std::string("corrupt PGM header: bad ") + what);
    if (tok.size() > 9)
        throw FormatError(std::string("PGM header: ") + what + " overflows");
    return std::stoi(tok);
}

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::string magic = pgm_token(in);
    if (magic != "P5")
        throw FormatError("unsupported format: expected PGM magic P5, got '" +
                          magic + "'");
    const int width = pgm_int(in, "width");
    const int height = pgm_int(in, "height");
    const int maxval = pgm_int(in, "maxval");
    if (width < 1 || height < 1 || width > kMaxDim || height > kMaxDim)
        throw FormatError("PGM dimension overflow: " + std::to_string(width) +
                          "x" + std::to_string(height));
    if (maxval != 255)
        throw FormatError("unsupported PGM maxval " + std::to_string(maxval) +
                          " (only 255)");
    // exactly one whitespace byte separates the header from the payload;
    // pgm_token already consumed it.
    std::vector<char> bytes(static_cast<std::size_t>(width) * height);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw FormatError("PGM payload truncated in '" + path + "'");
    Image img(1, height, width);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = static_cast<std::uint8_t>(bytes[i]) / 255.0;
    return img;
}

void write_pgm(const std::string& path, const Image& img) {
    if (img.channels != 1)
        throw ConfigError("PGM is grayscale; image has " +
                          std::to_string(img.channels) +
                          " channels (write a .png instead)");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create '" + path + "'");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<char> bytes(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        bytes[i] = static_cast<char>(quantize(img.data[i]));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("failed writing '" + path + "'");
}

// ---- PNG --------------------------------------------------------------------

Image read_png(const std::string& path) {
    FileHandle fh(path, "rb");
    if (!fh.f)
        throw IoError("cannot open '" + path + "'");
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0, channels = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG file '" + path + "'");
    }
    png_init_io(png, fh.f);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr,
                 nullptr, nullptr);
    if (bit_depth != 8 ||
        (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("unsupported PNG variant in '" + path +
                          "' (need 8-bit grayscale or RGB)");
    }
    if (width < 1 || height < 1 || width > kMaxDim || height > kMaxDim) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("PNG dimension overflow");
    }
    channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    pixels.resize(static_cast<std::size_t>(width) * height * channels);
    rows.resize(height);
    for (png_uint_32 i = 0; i < height; ++i)
        rows[i] = pixels.data() + static_cast<std::size_t>(i) * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(channels, static_cast<int>(height), static_cast<int>(width));
    const std::size_t plane = img.plane();
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < channels; ++c)
            img.data[c * plane + p] = pixels[p * channels + c] / 255.0;
    return img;
}

void write_png(const std::string& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ConfigError("PNG writer supports 1 or 3 channels, image has " +
                          std::to_string(img.channels));
    FileHandle fh(path, "wb");
    if (!fh.f)
        throw IoError("cannot create '" + path + "'");
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    const std::size_t plane = img.plane();
    std::vector<png_byte> pixels(img.size());
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < img.channels; ++c)
            pixels[p * img.channels + c] = quantize(img.data[c * plane + p]);
    std::vector<png_bytep> rows(img.height);
    for (int i = 0; i < img.height; ++i)
        rows[i] = pixels.data() +
                  static_cast<std::size_t>(i) * img.width * img.channels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing '" + path + "'");
    }
    png_init_io(png, fh.f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::string lower_ext(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos)
        return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

} // namespace

Image read_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw IoError("cannot open '" + path + "'");
    unsigned char magic[8] = {0};
    probe.read(reinterpret_cast<char*>(magic), 8);
    probe.close();
    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' &&
        magic[3] == 'G')
        return read_png(path);
    return read_pgm(path); // read_pgm reports a clean error for other magics
}

void write_image(const std::string& path, const Image& img) {
    const std::string ext = lower_ext(path);
    const std::string tmp = path + ".tmp";
    if (ext == "pgm")
        write_pgm(tmp, img);
    else if (ext == "png")
        write_png(tmp, img);
    else
        throw FormatError("unsupported output extension '" + ext +
                          "' (use .pgm or .png)");
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot move temporary file onto '" + path + "'");
    }
}

} // namespace dna

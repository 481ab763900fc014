#include "dcpviz/contour.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace dcpviz::contour {

namespace {

Rgb rgb(std::uint32_t hex) {
    return {static_cast<std::uint8_t>(hex >> 16), static_cast<std::uint8_t>(hex >> 8), static_cast<std::uint8_t>(hex)};
}

std::vector<ColorRamp> make_ramps() {
    // ColorBrewer YlGnBu (9 classes) and RdYlBu (11 classes, reversed).
    ColorRamp absolute{"ylgnbu", "yellow-green-blue, for absolute values", {}};
    for (std::uint32_t h : {0xffffd9u, 0xedf8b1u, 0xc7e9b4u, 0x7fcdbbu, 0x41b6c4u, 0x1d91c0u, 0x225ea8u, 0x253494u,
                            0x081d58u})
        absolute.stops.push_back(rgb(h));
    ColorRamp relative{"bu_ylrd", "blue-pale yellow-red, for relative values centered on zero", {}};
    for (std::uint32_t h : {0x313695u, 0x4575b4u, 0x74add1u, 0xabd9e9u, 0xe0f3f8u, 0xffffbfu, 0xfee090u, 0xfdae61u,
                            0xf46d43u, 0xd73027u, 0xa50026u})
        relative.stops.push_back(rgb(h));
    return {absolute, relative};
}

} // namespace

Rgb ColorRamp::sample(double u) const {
    if (stops.empty()) return {};
    if (!(u > 0.0)) return stops.front();
    if (u >= 1.0) return stops.back();
    double x = u * static_cast<double>(stops.size() - 1);
    auto k = static_cast<std::size_t>(x);
    double f = x - static_cast<double>(k);
    const Rgb& a = stops[k];
    const Rgb& b = stops[std::min(k + 1, stops.size() - 1)];
    auto mix = [f](std::uint8_t p, std::uint8_t q) {
        return static_cast<std::uint8_t>(std::lround(p + f * (static_cast<double>(q) - p)));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

const std::vector<ColorRamp>& color_ramps() {
    static const std::vector<ColorRamp> ramps = make_ramps();
    return ramps;
}

const ColorRamp& ramp(std::string_view id) {
    for (const auto& r : color_ramps())
        if (r.id == id) return r;
    throw ContourError(Errc::UnknownRamp, "unknown color ramp '" + std::string(id) + "'");
}

std::string hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

Rgb band_color(const ColorRamp& r, std::size_t band_index, std::size_t band_count) {
    if (band_count == 0) return r.sample(0.5);
    return r.sample((static_cast<double>(band_index) + 0.5) / static_cast<double>(band_count));
}

Raster rasterize(const ContourProduct& product, std::size_t width, std::size_t height, const ColorRamp& ramp) {
    if (width == 0 || height == 0) throw ContourError(Errc::RenderFailed, "raster size must be positive");
    Raster out{width, height, std::vector<std::uint8_t>(width * height * 4, 0)};
    const BBox& bb = product.bbox;
    const double dx = (bb.east - bb.west) / static_cast<double>(width);
    const double dy = (bb.north - bb.south) / static_cast<double>(height);
    if (!(dx > 0.0) || !(dy > 0.0)) throw ContourError(Errc::RenderFailed, "degenerate bounding box");

    std::vector<double> xs;
    for (const auto& band : product.bands) {
        const Rgb color = band_color(ramp, static_cast<std::size_t>(band.band_id), product.spec.band_count());
        for (const auto& poly : band.polygons) {
            double south = poly.outer.front().lat, north = south;
            for (const auto& p : poly.outer) {
                south = std::min(south, p.lat);
                north = std::max(north, p.lat);
            }
            // rows whose center latitude lies inside the polygon's extent
            long y0 = static_cast<long>(std::floor((bb.north - north) / dy - 0.5));
            long y1 = static_cast<long>(std::ceil((bb.north - south) / dy - 0.5));
            y0 = std::max(0L, y0);
            y1 = std::min(static_cast<long>(height) - 1, y1);
            for (long y = y0; y <= y1; ++y) {
                const double lat = bb.north - (static_cast<double>(y) + 0.5) * dy;
                xs.clear();
                auto collect = [&](const Ring& r) {
                    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
                        const Point& a = r[k];
                        const Point& b = r[k + 1];
                        if ((a.lat > lat) != (b.lat > lat))
                            xs.push_back(a.lon + (lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon));
                    }
                };
                collect(poly.outer);
                for (const auto& h : poly.holes) collect(h);
                std::sort(xs.begin(), xs.end());
                for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                    // pixels whose center lies in [xs[k], xs[k+1])
                    long x0 = static_cast<long>(std::ceil((xs[k] - bb.west) / dx - 0.5));
                    long x1 = static_cast<long>(std::ceil((xs[k + 1] - bb.west) / dx - 0.5)) - 1;
                    x0 = std::max(0L, x0);
                    x1 = std::min(static_cast<long>(width) - 1, x1);
                    for (long x = x0; x <= x1; ++x) {
                        auto* px = &out.rgba[(static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)) * 4];
                        px[0] = color.r;
                        px[1] = color.g;
                        px[2] = color.b;
                        px[3] = 255;
                    }
                }
            }
        }
    }
    return out;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_no_flush(png_structp) {}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw ContourError(Errc::RenderFailed, msg); }
void png_warn(png_structp, png_const_charp) {}

struct PngReadCursor {
    const std::vector<std::uint8_t>* data;
    std::size_t pos;
};

void png_consume(png_structp png, png_bytep out, png_size_t length) {
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + length > cur->data->size()) png_error(png, "truncated PNG");
    std::memcpy(out, cur->data->data() + cur->pos, length);
    cur->pos += length;
}

} // namespace

std::vector<std::uint8_t> encode_png(const Raster& raster) {
    if (raster.rgba.size() != raster.width * raster.height * 4)
        throw ContourError(Errc::RenderFailed, "raster buffer size does not match its dimensions");
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw ContourError(Errc::RenderFailed, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
        if (!info) throw ContourError(Errc::RenderFailed, "png_create_info_struct failed");
        png_set_write_fn(png, &out, png_append, png_no_flush);
        png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height), 8,
                     PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_compression_level(png, 9);
        png_write_info(png, info);
        for (std::size_t y = 0; y < raster.height; ++y)
            png_write_row(png, const_cast<png_bytep>(&raster.rgba[y * raster.width * 4]));
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

Raster decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw ContourError(Errc::RenderFailed, "not a PNG image");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw ContourError(Errc::RenderFailed, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    Raster out;
    PngReadCursor cursor{&bytes, 0};
    try {
        if (!info) throw ContourError(Errc::RenderFailed, "png_create_info_struct failed");
        png_set_read_fn(png, &cursor, png_consume);
        png_read_info(png, info);
        out.width = png_get_image_width(png, info);
        out.height = png_get_image_height(png, info);
        if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGBA || png_get_bit_depth(png, info) != 8)
            throw ContourError(Errc::RenderFailed, "only 8-bit RGBA images are decoded");
        out.rgba.resize(out.width * out.height * 4);
        for (std::size_t y = 0; y < out.height; ++y) png_read_row(png, &out.rgba[y * out.width * 4], nullptr);
        png_read_end(png, nullptr);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

std::vector<std::uint8_t> render_thumbnail(const ContourProduct& product, std::size_t width, std::size_t height,
                                           std::string_view ramp_id) {
    if (height == 0) {
        const double aspect = (product.bbox.north - product.bbox.south) / (product.bbox.east - product.bbox.west);
        height = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(width) * aspect)));
    }
    return encode_png(rasterize(product, width, height, ramp(ramp_id)));
}

} // namespace dcpviz::contour

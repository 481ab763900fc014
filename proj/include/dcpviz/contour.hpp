#pragma once

#include "dcpviz/error.hpp"
#include "dcpviz/grid.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dcpviz::contour {

enum class Errc {
    GridTooSmall,
    InvalidBands,
    BadGeoJson,
    UnknownRamp,
    RenderFailed,
    Internal,
};

std::string to_code(Errc errc);

using ContourError = ModuleError<Errc>;

// Band i covers [thresholds[i], thresholds[i+1]).
struct BandSpec {
    std::vector<double> thresholds;

    std::size_t band_count() const noexcept { return thresholds.size() < 2 ? 0 : thresholds.size() - 1; }
    void validate() const; // strictly ascending, finite, 2..256 entries
    bool operator==(const BandSpec&) const = default;

    static BandSpec uniform(double lo, double hi, double step);
    // 0-14 mm/day in 2 mm/day steps (8 bands).
    static BandSpec default_precipitation();
    // -20..45 degC in 5 degC steps.
    static BandSpec default_temperature();
    static BandSpec default_for(grid::ClimateVariable v);
};

BandSpec parse_band_spec(std::string_view json); // {"thresholds": [...]}
std::string band_spec_json(const BandSpec& spec);
// FNV-1a over the thresholds' bit patterns; used as a cache key.
std::uint64_t band_spec_hash(const BandSpec& spec);

struct Point {
    double lon = 0.0;
    double lat = 0.0;
    bool operator==(const Point&) const = default;
};

// Closed: front() == back().
using Ring = std::vector<Point>;

struct Polygon {
    Ring outer;              // counterclockwise
    std::vector<Ring> holes; // clockwise
};

struct Band {
    int band_id = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<Polygon> polygons;
};

struct BBox {
    double west = 0.0, south = 0.0, east = 0.0, north = 0.0;
    bool operator==(const BBox&) const = default;
};

struct ContourProduct {
    std::string index; // DataIndex string form
    grid::ClimateVariable variable = grid::ClimateVariable::Pr;
    std::string units;
    BandSpec spec;
    std::size_t rows = 0;
    std::size_t cols = 0;
    BBox bbox;
    std::vector<Band> bands; // only bands with at least one polygon, ascending
};

struct ContourOptions {
    // Largest distance, in cell-size units, between an emitted chord and the
    // bilinear iso-line it approximates.
    double arc_tolerance = 1e-3;
    int max_arc_depth = 8;
};

// Filled iso-bands of the bilinear interpolant of the snapshot. Cells with a
// missing corner belong to no band.
ContourProduct marching_squares_bands(const grid::GridSnapshot& snapshot, const BandSpec& spec,
                                      const ContourOptions& options = {});

// Signed area (positive for counterclockwise) of a closed ring, in degrees^2.
double ring_area(const Ring& ring);
double polygon_area(const Polygon& p);

// FeatureCollection with a bbox member and one MultiPolygon feature per band.
// Coordinates are written with `decimals` fractional digits.
std::string to_geojson(const ContourProduct& product, int decimals = 6);
ContourProduct parse_geojson(std::string_view text);

// ---------------------------------------------------------------------------
// Color ramps and thumbnails

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct ColorRamp {
    std::string id;
    std::string description;
    std::vector<Rgb> stops;

    // Linear interpolation between stops, u clamped to [0, 1].
    Rgb sample(double u) const;
};

// "ylgnbu" (absolute values, yellow-green-blue) and "bu_ylrd" (relative
// values, blue-pale yellow-red, zero anomaly at the midpoint).
const std::vector<ColorRamp>& color_ramps();
const ColorRamp& ramp(std::string_view id);
std::string hex(Rgb c);

// Color of band i of n under a ramp: the ramp sampled at (i + 0.5) / n.
Rgb band_color(const ColorRamp& ramp, std::size_t band_index, std::size_t band_count);

// RGBA raster of the bands over the product's bounding box, row 0 = north.
// Pixels outside every band are fully transparent.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgba;
};

Raster rasterize(const ContourProduct& product, std::size_t width, std::size_t height, const ColorRamp& ramp);
std::vector<std::uint8_t> encode_png(const Raster& raster);
Raster decode_png(const std::vector<std::uint8_t>& png);

// Height follows the bounding box aspect ratio when `height` is 0.
std::vector<std::uint8_t> render_thumbnail(const ContourProduct& product, std::size_t width, std::size_t height = 0,
                                           std::string_view ramp_id = "ylgnbu");

} // namespace dcpviz::contour

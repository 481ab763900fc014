#include "dcpviz/contour.hpp"

#include "support/contour_oracle.hpp"

#include <doctest.h>

#include <json.hpp>

#include <random>

using namespace dcpviz;
using namespace dcpviz::contour;
using grid::GridSnapshot;

namespace {

template <typename F>
Errc contour_errc(F&& f) {
    try {
        f();
    } catch (const ContourError& e) {
        return e.errc();
    }
    FAIL("expected a ContourError");
    return Errc::Internal;
}

GridSnapshot make_grid(std::vector<double> lat, std::vector<double> lon, std::vector<double> values) {
    GridSnapshot g;
    g.model = "CESM1-CAM5";
    g.scenario = grid::Scenario::Rcp85;
    g.year = 2021;
    g.month = 3;
    g.lat = std::move(lat);
    g.lon = std::move(lon);
    g.values = std::move(values);
    g.missing.assign(g.values.size(), 0);
    return g;
}

double total_area(const ContourProduct& p) {
    double a = 0;
    for (const auto& b : p.bands)
        for (const auto& poly : b.polygons) a += polygon_area(poly);
    return a;
}

bool segments_cross(Point a, Point b, Point c, Point d) {
    auto orient = [](Point p, Point q, Point r) {
        double v = (q.lon - p.lon) * (r.lat - p.lat) - (q.lat - p.lat) * (r.lon - p.lon);
        return (v > 0) - (v < 0);
    };
    int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

// Proper crossings between any two non-adjacent segments of one ring.
bool self_crossing(const Ring& r) {
    const std::size_t n = r.size() - 1;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 2; b < n; ++b) {
            if (a == 0 && b == n - 1) continue;
            if (segments_cross(r[a], r[a + 1], r[b], r[b + 1])) return true;
        }
    return false;
}

} // namespace

TEST_CASE("band spec validation and defaults") {
    CHECK(BandSpec::default_precipitation().thresholds == std::vector<double>{0, 2, 4, 6, 8, 10, 12, 14});
    CHECK(BandSpec::default_precipitation().band_count() == 7);
    CHECK(BandSpec::default_temperature().thresholds.front() == -20.0);
    CHECK(BandSpec::default_temperature().thresholds.back() == 45.0);
    CHECK(contour_errc([] { BandSpec{{1.0}}.validate(); }) == Errc::InvalidBands);
    CHECK(contour_errc([] { BandSpec{{1.0, 1.0}}.validate(); }) == Errc::InvalidBands);
    CHECK(contour_errc([] { BandSpec{{2.0, 1.0}}.validate(); }) == Errc::InvalidBands);
    auto spec = parse_band_spec(R"({"thresholds": [0, 1.5, 3]})");
    CHECK(spec.thresholds == std::vector<double>{0, 1.5, 3});
    CHECK(parse_band_spec(band_spec_json(spec)) == spec);
    CHECK(band_spec_hash(spec) != band_spec_hash(BandSpec::default_precipitation()));
    CHECK(contour_errc([] { parse_band_spec("[1,2]"); }) == Errc::InvalidBands);
}

TEST_CASE("one cell with a horizontal isoline at mid-latitude") {
    auto g = make_grid({0, 1}, {0, 1}, {0, 0, 10, 10});
    auto p = marching_squares_bands(g, BandSpec{{0, 5, 20}});
    REQUIRE(p.bands.size() == 2);
    const auto& lower = p.bands[0];
    CHECK(lower.band_id == 0);
    REQUIRE(lower.polygons.size() == 1);
    CHECK(polygon_area(lower.polygons[0]) == doctest::Approx(0.5).epsilon(1e-12));
    double top = -1;
    for (const auto& pt : lower.polygons[0].outer) top = std::max(top, pt.lat);
    CHECK(top == doctest::Approx(0.5).epsilon(1e-12));
    const auto& upper = p.bands[1];
    REQUIRE(upper.polygons.size() == 1);
    for (const auto& pt : upper.polygons[0].outer) CHECK(pt.lat >= 0.5 - 1e-12);
    // the isoline spans the full longitude extent
    double west = 1, east = 0;
    for (const auto& pt : upper.polygons[0].outer)
        if (std::abs(pt.lat - 0.5) < 1e-12) {
            west = std::min(west, pt.lon);
            east = std::max(east, pt.lon);
        }
    CHECK(west == 0.0);
    CHECK(east == 1.0);
}

TEST_CASE("uniform field fills the bounding rectangle") {
    auto g = make_grid({30, 31, 32}, {-100, -99, -98, -97}, std::vector<double>(12, 1.0));
    auto p = marching_squares_bands(g, BandSpec{{0, 2}});
    REQUIRE(p.bands.size() == 1);
    REQUIRE(p.bands[0].polygons.size() == 1);
    const auto& outer = p.bands[0].polygons[0].outer;
    CHECK(outer.size() == 5);
    CHECK(outer.front() == outer.back());
    CHECK(ring_area(outer) == doctest::Approx(6.0));
    CHECK(p.bands[0].polygons[0].holes.empty());
    CHECK(p.bbox == BBox{-100, 30, -97, 32});
}

TEST_CASE("field outside the thresholds yields no bands") {
    auto g = make_grid({0, 1}, {0, 1}, {-5, -4, -3, -2});
    CHECK(marching_squares_bands(g, BandSpec::default_precipitation()).bands.empty());
    auto hot = make_grid({0, 1}, {0, 1}, {50, 50, 50, 50});
    CHECK(marching_squares_bands(hot, BandSpec::default_precipitation()).bands.empty());
}

TEST_CASE("grids smaller than 2x2 are rejected") {
    auto g = make_grid({0}, {0, 1}, {1, 2});
    CHECK(contour_errc([&] { marching_squares_bands(g, BandSpec{{0, 5}}); }) == Errc::GridTooSmall);
}

TEST_CASE("saddle cells follow the bilinear saddle value") {
    // corners 10 at (0,0) and (1,1), 0 elsewhere; center average 5
    auto g = make_grid({0, 1}, {0, 1}, {10, 0, 0, 10});
    SUBCASE("level below the saddle value joins the high corners") {
        auto p = marching_squares_bands(g, BandSpec{{4, 20}});
        REQUIRE(p.bands.size() == 1);
        CHECK(p.bands[0].polygons.size() == 1);
    }
    SUBCASE("level above the saddle value separates them") {
        auto p = marching_squares_bands(g, BandSpec{{6, 20}});
        REQUIRE(p.bands.size() == 1);
        CHECK(p.bands[0].polygons.size() == 2);
    }
}

TEST_CASE("missing cells are holes in every band") {
    std::vector<double> v(25, 3.0);
    auto g = make_grid({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}, v);
    g.missing[2 * 5 + 2] = 1; // center node: four cells drop out
    auto p = marching_squares_bands(g, BandSpec{{0, 10}});
    REQUIRE(p.bands.size() == 1);
    REQUIRE(p.bands[0].polygons.size() == 1);
    REQUIRE(p.bands[0].polygons[0].holes.size() == 1);
    CHECK(ring_area(p.bands[0].polygons[0].holes[0]) == doctest::Approx(-4.0));
    CHECK(polygon_area(p.bands[0].polygons[0]) == doctest::Approx(12.0));
    CHECK(contour_oracle::bands_containing(p, {2.1, 2.3}).empty());

    SUBCASE("diagonal missing cells touch at a node without merging rings") {
        std::vector<double> w(9, 1.0);
        auto h = make_grid({0, 1, 2}, {0, 1, 2}, w);
        h.missing[2] = 1; // kills cell (0,1)
        h.missing[6] = 1; // kills cell (1,0)
        auto q = marching_squares_bands(h, BandSpec{{0, 2}});
        REQUIRE(q.bands.size() == 1);
        CHECK(q.bands[0].polygons.size() == 2);
        for (const auto& poly : q.bands[0].polygons) CHECK(polygon_area(poly) == doctest::Approx(1.0));
    }
}

TEST_CASE("point membership on random grids") {
    std::mt19937_64 rng(4242);
    contour_oracle::MembershipTally tally;
    for (int trial = 0; trial < 120; ++trial) {
        auto g = contour_oracle::random_grid(rng, trial % 3 == 0 ? 0.1 : 0.0);
        auto spec = contour_oracle::random_bands(rng);
        auto p = marching_squares_bands(g, spec);
        contour_oracle::check_membership(g, p, rng, 40, tally);
        for (const auto& band : p.bands)
            for (const auto& poly : band.polygons) {
                CHECK(poly.outer.front() == poly.outer.back());
                CHECK(ring_area(poly.outer) > 0);
                CHECK_FALSE(self_crossing(poly.outer));
                for (const auto& h : poly.holes) {
                    CHECK(h.front() == h.back());
                    CHECK(ring_area(h) < 0);
                    CHECK_FALSE(self_crossing(h));
                }
            }
    }
    MESSAGE("membership pass rate " << tally.pass_rate() << " over " << tally.samples << " samples");
    CHECK(tally.pass_rate() >= 0.999);
    CHECK(tally.missing_cell_violations == 0);
}

TEST_CASE("bands tile the bounding box when thresholds span the field") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        auto g = contour_oracle::random_grid(rng, 0.0);
        auto spec = contour_oracle::random_bands(rng);
        spec.thresholds.front() = std::min(spec.thresholds.front(), -1.0);
        spec.thresholds.back() = std::max(spec.thresholds.back(), 11.0);
        auto p = marching_squares_bands(g, spec);
        double box = (p.bbox.east - p.bbox.west) * (p.bbox.north - p.bbox.south);
        CHECK(total_area(p) == doctest::Approx(box).epsilon(1e-9));
    }
}

TEST_CASE("adding a threshold leaves the union of bands unchanged") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = contour_oracle::random_grid(rng, trial % 2 ? 0.1 : 0.0);
        auto coarse = contour_oracle::random_bands(rng);
        auto fine = coarse;
        std::uniform_real_distribution<double> pick(coarse.thresholds.front(), coarse.thresholds.back());
        double extra = pick(rng);
        bool fresh = true;
        for (double t : coarse.thresholds) fresh &= t != extra;
        if (!fresh) continue;
        fine.thresholds.push_back(extra);
        std::sort(fine.thresholds.begin(), fine.thresholds.end());
        auto a = marching_squares_bands(g, coarse), b = marching_squares_bands(g, fine);
        CHECK(total_area(a) == doctest::Approx(total_area(b)).epsilon(1e-6));
        std::uniform_real_distribution<double> lon(g.lon.front(), g.lon.back()), lat(g.lat.front(), g.lat.back());
        int disagreements = 0;
        for (int k = 0; k < 500; ++k) {
            Point q{lon(rng), lat(rng)};
            disagreements += contour_oracle::bands_containing(a, q).empty() !=
                             contour_oracle::bands_containing(b, q).empty();
        }
        CHECK(disagreements <= 1);
    }
}

TEST_CASE("GeoJSON serialization") {
    std::mt19937_64 rng(7);
    SUBCASE("empty product") {
        ContourProduct p;
        p.bbox = {0, 0, 1, 1};
        auto doc = nlohmann::json::parse(to_geojson(p));
        CHECK(doc["type"] == "FeatureCollection");
        CHECK(doc["features"].empty());
    }
    SUBCASE("every feature carries the index") {
        auto g = contour_oracle::random_grid(rng, 0.1);
        auto p = marching_squares_bands(g, BandSpec::uniform(0, 10, 2));
        p.index = "NEX-DCP_CESM1-CAM5_pr_2021-03-01";
        auto doc = nlohmann::json::parse(to_geojson(p));
        REQUIRE(doc["features"].size() == p.bands.size());
        for (const auto& f : doc["features"]) {
            CHECK(f["properties"]["index"] == "NEX-DCP_CESM1-CAM5_pr_2021-03-01");
            CHECK(f["properties"]["variable"] == "pr");
            CHECK(f["properties"]["units"] == "mm/day");
            CHECK(f["geometry"]["type"] == "MultiPolygon");
        }
    }
    SUBCASE("parse-back keeps band count, bbox and ring orientation") {
        for (int trial = 0; trial < 30; ++trial) {
            auto g = contour_oracle::random_grid(rng, 0.1);
            auto p = marching_squares_bands(g, contour_oracle::random_bands(rng));
            p.index = "NEX-DCP_CESM1-CAM5_pr_2040-01-01";
            auto back = parse_geojson(to_geojson(p));
            CHECK(back.bands.size() == p.bands.size());
            CHECK(back.bbox == p.bbox);
            CHECK(back.index == p.index);
            CHECK(back.spec == p.spec);
            CHECK(back.rows == p.rows);
            for (std::size_t b = 0; b < p.bands.size(); ++b) {
                CHECK(back.bands[b].band_id == p.bands[b].band_id);
                CHECK(back.bands[b].lo == p.bands[b].lo);
                for (const auto& poly : back.bands[b].polygons) {
                    CHECK(ring_area(poly.outer) > 0);
                    for (const auto& h : poly.holes) CHECK(ring_area(h) < 0);
                }
            }
        }
    }
    SUBCASE("malformed documents") {
        CHECK(contour_errc([] { parse_geojson("{"); }) == Errc::BadGeoJson);
        CHECK(contour_errc([] { parse_geojson(R"({"type":"Feature"})"); }) == Errc::BadGeoJson);
        CHECK(contour_errc([] { parse_geojson(R"({"type":"FeatureCollection","features":[]})"); }) ==
              Errc::BadGeoJson);
    }
}

TEST_CASE("color ramps") {
    CHECK(color_ramps().size() == 2);
    const auto& abs = ramp("ylgnbu");
    CHECK(abs.sample(0.0) == Rgb{0xff, 0xff, 0xd9});
    CHECK(abs.sample(1.0) == Rgb{0x08, 0x1d, 0x58});
    const auto& rel = ramp("bu_ylrd");
    CHECK(rel.sample(0.5) == Rgb{0xff, 0xff, 0xbf});
    CHECK(hex(rel.sample(0.0)) == "#313695");
    CHECK(contour_errc([] { ramp("viridis"); }) == Errc::UnknownRamp);
}

TEST_CASE("thumbnails") {
    SUBCASE("deterministic bytes") {
        std::mt19937_64 rng(3);
        auto g = contour_oracle::random_grid(rng, 0.1);
        auto p = marching_squares_bands(g, BandSpec::uniform(0, 10, 2));
        auto a = render_thumbnail(p, 64, 48), b = render_thumbnail(p, 64, 48);
        CHECK(a == b);
        auto img = decode_png(a);
        CHECK(img.width == 64);
        CHECK(img.height == 48);
    }
    SUBCASE("uniform field is one color") {
        auto g = make_grid({0, 1, 2}, {0, 1, 2}, std::vector<double>(9, 1.0));
        auto img = decode_png(render_thumbnail(marching_squares_bands(g, BandSpec{{0, 2}}), 30, 30));
        auto expect = band_color(ramp("ylgnbu"), 0, 1);
        for (std::size_t k = 0; k < img.width * img.height; ++k) {
            CHECK(img.rgba[4 * k] == expect.r);
            CHECK(img.rgba[4 * k + 1] == expect.g);
            CHECK(img.rgba[4 * k + 2] == expect.b);
            CHECK(img.rgba[4 * k + 3] == 255);
        }
    }
    SUBCASE("transition row of the single-cell example") {
        auto g = make_grid({0, 1}, {0, 1}, {0, 0, 10, 10});
        auto p = marching_squares_bands(g, BandSpec{{0, 5, 20}});
        auto img = decode_png(render_thumbnail(p, 100, 100));
        const auto& r = ramp("ylgnbu");
        auto lower = band_color(r, 0, 2), upper = band_color(r, 1, 2);
        REQUIRE(lower != upper);
        auto pixel = [&](std::size_t x, std::size_t y) {
            const auto* px = &img.rgba[(y * 100 + x) * 4];
            return Rgb{px[0], px[1], px[2]};
        };
        // row 0 is north: the upper band sits at the top of the image
        long transition = -1;
        for (std::size_t y = 0; y + 1 < 100; ++y)
            if (pixel(50, y) == upper && pixel(50, y + 1) == lower) transition = static_cast<long>(y) + 1;
        CHECK(std::abs(transition - 50) <= 1);
        for (std::size_t x = 0; x < 100; ++x) {
            CHECK(pixel(x, 10) == upper);
            CHECK(pixel(x, 90) == lower);
        }
    }
}

TEST_CASE("a peak just above a threshold far from the origin is a hole") {
    auto g = make_grid({33.0, 33.9, 34.8}, {-109.2, -108.5, -107.6}, {1, 1, 1, 1, 8.0000001, 1, 1, 1, 1});
    auto p = marching_squares_bands(g, BandSpec{{6, 8, 11}});
    REQUIRE(p.bands.size() == 2);
    REQUIRE(p.bands[0].polygons.size() == 1);
    REQUIRE(p.bands[0].polygons[0].holes.size() == 1);
    CHECK(ring_area(p.bands[0].polygons[0].holes[0]) < 0);
    REQUIRE(p.bands[1].polygons.size() == 1);
    CHECK(ring_area(p.bands[1].polygons[0].outer) > 0);
}

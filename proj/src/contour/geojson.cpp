#include "dcpviz/contour.hpp"

#include <json.hpp>

#include <cstdio>

namespace dcpviz::contour {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

// Ring coordinates with consecutive duplicates (after rounding) dropped;
// empty when fewer than four positions remain.
std::vector<std::string> ring_positions(const Ring& ring, int decimals) {
    std::vector<std::string> out;
    for (const auto& p : ring) {
        std::string pos = "[" + fixed(p.lon, decimals) + "," + fixed(p.lat, decimals) + "]";
        if (out.empty() || out.back() != pos) out.push_back(std::move(pos));
    }
    if (!out.empty() && out.front() != out.back()) out.push_back(out.front());
    if (out.size() < 4) out.clear();
    return out;
}

void append_ring(std::string& out, const std::vector<std::string>& positions) {
    out += "[";
    for (std::size_t k = 0; k < positions.size(); ++k) {
        if (k) out += ",";
        out += positions[k];
    }
    out += "]";
}

} // namespace

std::string to_geojson(const ContourProduct& product, int decimals) {
    const std::string variable(grid::to_string(product.variable));
    std::string out = "{\"type\":\"FeatureCollection\",\"bbox\":[" + fmt17(product.bbox.west) + "," +
                      fmt17(product.bbox.south) + "," + fmt17(product.bbox.east) + "," + fmt17(product.bbox.north) +
                      "],";
    out += "\"generation\":{\"index\":" + json(product.index).dump() + ",\"variable\":" + json(variable).dump() +
           ",\"units\":" + json(product.units).dump() + ",\"grid_shape\":[" + std::to_string(product.rows) + "," +
           std::to_string(product.cols) + "],\"thresholds\":[";
    for (std::size_t k = 0; k < product.spec.thresholds.size(); ++k) {
        if (k) out += ",";
        out += fmt17(product.spec.thresholds[k]);
    }
    out += "]},\"features\":[";
    bool first_feature = true;
    for (const auto& band : product.bands) {
        if (!first_feature) out += ",";
        first_feature = false;
        out += "{\"type\":\"Feature\",\"properties\":{\"band_id\":" + std::to_string(band.band_id) +
               ",\"lo\":" + fmt17(band.lo) + ",\"hi\":" + fmt17(band.hi) + ",\"variable\":" + json(variable).dump() +
               ",\"units\":" + json(product.units).dump() + ",\"index\":" + json(product.index).dump() +
               "},\"geometry\":{\"type\":\"MultiPolygon\",\"coordinates\":[";
        bool first_poly = true;
        for (const auto& poly : band.polygons) {
            auto outer = ring_positions(poly.outer, decimals);
            if (outer.empty()) continue;
            if (!first_poly) out += ",";
            first_poly = false;
            out += "[";
            append_ring(out, outer);
            for (const auto& h : poly.holes) {
                auto hole = ring_positions(h, decimals);
                if (hole.empty()) continue;
                out += ",";
                append_ring(out, hole);
            }
            out += "]";
        }
        out += "]}}";
    }
    out += "]}";
    return out;
}

namespace {

Ring parse_ring(const json& j) {
    Ring r;
    for (const auto& pos : j) {
        if (!pos.is_array() || pos.size() < 2) throw ContourError(Errc::BadGeoJson, "position is not [lon, lat]");
        r.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    if (r.size() < 4 || r.front() != r.back()) throw ContourError(Errc::BadGeoJson, "ring is not closed");
    return r;
}

} // namespace

ContourProduct parse_geojson(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ContourError(Errc::BadGeoJson, std::string("invalid JSON: ") + e.what());
    }
    try {
        if (doc.value("type", "") != "FeatureCollection")
            throw ContourError(Errc::BadGeoJson, "not a FeatureCollection");
        ContourProduct p;
        const auto& bb = doc.at("bbox");
        p.bbox = {bb.at(0).get<double>(), bb.at(1).get<double>(), bb.at(2).get<double>(), bb.at(3).get<double>()};
        if (doc.contains("generation")) {
            const auto& g = doc["generation"];
            p.index = g.value("index", "");
            p.variable = grid::parse_variable(g.value("variable", "pr"));
            p.units = g.value("units", "");
            if (g.contains("grid_shape")) {
                p.rows = g["grid_shape"].at(0).get<std::size_t>();
                p.cols = g["grid_shape"].at(1).get<std::size_t>();
            }
            if (g.contains("thresholds")) p.spec.thresholds = g["thresholds"].get<std::vector<double>>();
        }
        for (const auto& f : doc.at("features")) {
            const auto& props = f.at("properties");
            Band band;
            band.band_id = props.at("band_id").get<int>();
            band.lo = props.at("lo").get<double>();
            band.hi = props.at("hi").get<double>();
            const auto& geom = f.at("geometry");
            if (geom.at("type") != "MultiPolygon") throw ContourError(Errc::BadGeoJson, "band geometry must be MultiPolygon");
            for (const auto& poly : geom.at("coordinates")) {
                Polygon pg;
                for (std::size_t k = 0; k < poly.size(); ++k) {
                    if (k == 0)
                        pg.outer = parse_ring(poly[k]);
                    else
                        pg.holes.push_back(parse_ring(poly[k]));
                }
                band.polygons.push_back(std::move(pg));
            }
            p.bands.push_back(std::move(band));
        }
        return p;
    } catch (const json::exception& e) {
        throw ContourError(Errc::BadGeoJson, std::string("malformed contour document: ") + e.what());
    } catch (const grid::GridError& e) {
        throw ContourError(Errc::BadGeoJson, e.what());
    }
}

BandSpec parse_band_spec(std::string_view text) {
    BandSpec spec;
    try {
        auto doc = json::parse(text);
        spec.thresholds = doc.at("thresholds").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ContourError(Errc::InvalidBands, std::string("band spec must be {\"thresholds\": [...]}: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string band_spec_json(const BandSpec& spec) {
    std::string out = "{\"thresholds\":[";
    for (std::size_t k = 0; k < spec.thresholds.size(); ++k) {
        if (k) out += ",";
        out += fmt17(spec.thresholds[k]);
    }
    return out + "]}";
}

} // namespace dcpviz::contour

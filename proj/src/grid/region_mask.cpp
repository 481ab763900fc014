#include "dcpviz/grid.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dcpviz::grid {

std::vector<int> RegionMask::region_ids() const {
    std::vector<int> out;
    for (const auto& [id, name] : names) out.push_back(id);
    return out;
}

const std::string& RegionMask::name_of(int id) const {
    auto it = names.find(id);
    if (it == names.end()) throw GridError(Errc::UnknownRegionId, "unknown region id " + std::to_string(id));
    return it->second;
}

void RegionMask::validate() const {
    if (!is_ascending_axis(lat) || !is_ascending_axis(lon))
        throw GridError(Errc::BadAxis, "mask axes must be strictly ascending");
    if (ids.size() != lat.size() * lon.size())
        throw GridError(Errc::ShapeMismatch, "mask has " + std::to_string(ids.size()) + " cells, axes need " +
                                                 std::to_string(lat.size() * lon.size()));
    for (const auto& [id, name] : names) {
        if (id <= 0) throw GridError(Errc::UnknownRegionId, "region ids must be positive");
        if (name.empty()) throw GridError(Errc::ParseError, "empty name for region " + std::to_string(id));
    }
    for (int id : ids) {
        if (id < 0) throw GridError(Errc::UnknownRegionId, "negative region id " + std::to_string(id));
        if (id != 0 && !names.contains(id))
            throw GridError(Errc::UnknownRegionId, "region id " + std::to_string(id) + " has no name entry");
    }
}

void RegionMask::require_axes(const Axis& lat_axis, const Axis& lon_axis) const {
    if (lat != lat_axis || lon != lon_axis)
        throw GridError(Errc::ShapeMismatch, "region mask axes (" + std::to_string(lat.size()) + "x" +
                                                 std::to_string(lon.size()) + ") differ from grid axes (" +
                                                 std::to_string(lat_axis.size()) + "x" +
                                                 std::to_string(lon_axis.size()) + ")");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
    throw GridError(Errc::ParseError, "mask line " + std::to_string(line) + ": " + msg);
}

template <typename T>
std::vector<T> parse_numbers(std::string_view s, std::size_t line) {
    std::vector<T> out;
    std::istringstream in{std::string(s)};
    std::string tok;
    while (in >> tok) {
        T v{};
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) parse_fail(line, "bad number '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

std::string_view expect_key(std::string_view line, std::string_view key, std::size_t lineno) {
    line = trim(line);
    if (line.substr(0, key.size()) != key || line.size() <= key.size() || line[key.size()] != ':')
        parse_fail(lineno, "expected '" + std::string(key) + ":'");
    return line.substr(key.size() + 1);
}

} // namespace

RegionMask parse_region_mask(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        if (!trim(line).empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    if (lines.size() < 3) throw GridError(Errc::ParseError, "mask needs lat, lon and names header lines");

    RegionMask mask;
    mask.lat = parse_numbers<double>(expect_key(lines[0], "lat", 1), 1);
    mask.lon = parse_numbers<double>(expect_key(lines[1], "lon", 2), 2);
    auto names = trim(expect_key(lines[2], "names", 3));
    while (!names.empty()) {
        auto semi = names.find(';');
        auto entry = trim(names.substr(0, semi));
        if (!entry.empty()) {
            auto eq = entry.find('=');
            if (eq == std::string_view::npos) parse_fail(3, "name entry without '='");
            auto id_text = trim(entry.substr(0, eq));
            int id = 0;
            auto [p, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
            if (ec != std::errc{} || p != id_text.data() + id_text.size()) parse_fail(3, "bad region id");
            if (!mask.names.emplace(id, std::string(trim(entry.substr(eq + 1)))).second)
                parse_fail(3, "duplicate region id " + std::to_string(id));
        }
        if (semi == std::string_view::npos) break;
        names.remove_prefix(semi + 1);
    }

    const std::size_t rows = lines.size() - 3;
    if (rows != mask.lat.size())
        throw GridError(Errc::ShapeMismatch, "mask has " + std::to_string(rows) + " rows for " +
                                                 std::to_string(mask.lat.size()) + " latitudes");
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = parse_numbers<int>(lines[3 + r], 4 + r);
        if (row.size() != mask.lon.size())
            throw GridError(Errc::ShapeMismatch, "mask row " + std::to_string(r) + " has " +
                                                     std::to_string(row.size()) + " entries for " +
                                                     std::to_string(mask.lon.size()) + " longitudes");
        mask.ids.insert(mask.ids.end(), row.begin(), row.end());
    }
    mask.validate();
    return mask;
}

std::string format_region_mask(const RegionMask& mask) {
    mask.validate();
    std::string out;
    char buf[32];
    auto axis = [&](std::string_view key, const Axis& a) {
        out += key;
        out += ":";
        for (double v : a) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out += buf;
        }
        out += "\n";
    };
    axis("lat", mask.lat);
    axis("lon", mask.lon);
    out += "names: ";
    bool first = true;
    for (const auto& [id, name] : mask.names) {
        if (!first) out += ";";
        first = false;
        out += std::to_string(id) + "=" + name;
    }
    out += "\n";
    for (std::size_t i = 0; i < mask.lat.size(); ++i) {
        for (std::size_t j = 0; j < mask.lon.size(); ++j) {
            if (j) out += ' ';
            out += std::to_string(mask.at(i, j));
        }
        out += "\n";
    }
    return out;
}

RegionMask load_region_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GridError(Errc::Io, "cannot open region mask '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_region_mask(ss.str());
}

RegionMask load_region_mask(const std::string& path, const Axis& lat, const Axis& lon) {
    auto mask = load_region_mask(path);
    mask.require_axes(lat, lon);
    return mask;
}

void save_region_mask(const RegionMask& mask, const std::string& path) {
    auto text = format_region_mask(mask);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw GridError(Errc::Io, "cannot write region mask '" + path + "'");
}

const std::map<int, std::string>& nca_region_names() {
    static const std::map<int, std::string> names{
        {1, "Northeast"}, {2, "Southeast"},           {3, "Midwest"},
        {4, "Southwest"}, {5, "Northwest"},           {6, "Northern Great Plains"},
        {7, "Southern Great Plains"},
    };
    return names;
}

namespace {

int nca_region_at(double lon, double lat) {
    if (lon < -111.0) return lat >= 42.0 ? 5 : 4;
    if (lon < -94.0) {
        if (lat >= 40.0) return 6;
        return lon < -103.0 ? 4 : 7;
    }
    if (lon < -80.0) return lat >= 37.0 ? 3 : 2;
    return lat >= 39.0 ? 1 : 2;
}

} // namespace

RegionMask make_nca_mask(const Axis& lat, const Axis& lon) {
    if (!is_ascending_axis(lat) || !is_ascending_axis(lon))
        throw GridError(Errc::BadAxis, "mask axes must be strictly ascending");
    RegionMask mask;
    mask.lat = lat;
    mask.lon = lon;
    mask.names = nca_region_names();
    mask.ids.resize(lat.size() * lon.size());
    auto stretch = [](const Axis& a, std::size_t k, double lo, double hi) {
        double u = a.size() > 1 ? (a[k] - a.front()) / (a.back() - a.front()) : 0.5;
        return lo + u * (hi - lo);
    };
    for (std::size_t i = 0; i < lat.size(); ++i)
        for (std::size_t j = 0; j < lon.size(); ++j)
            mask.ids[i * lon.size() + j] =
                nca_region_at(stretch(lon, j, -124.5, -67.5), stretch(lat, i, 24.5, 49.5));
    return mask;
}

} // namespace dcpviz::grid

#include "dcpviz/netcdf.hpp"

#include <json.hpp>

#include <set>

namespace dcpviz::nc {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& msg) { throw NetcdfError(Errc::SpecInvalid, msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) invalid(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) invalid("unknown key '" + k + "' in " + where);
}

Type parse_type(const std::string& name) {
    for (auto t : {Type::Byte, Type::Short, Type::Int, Type::Float, Type::Double})
        if (type_name(t) == name) return t;
    invalid("unsupported variable type '" + name + "'");
}

Generator parse_generator(const std::string& name) {
    if (name == "climate") return Generator::Climate;
    if (name == "constant") return Generator::Constant;
    if (name == "random") return Generator::Random;
    invalid("unknown generator '" + name + "'");
}

AxisSpec parse_axis(const json& j, const std::string& where) {
    check_keys(j, {"count", "start", "step"}, where);
    AxisSpec a;
    a.count = j.at("count").get<std::size_t>();
    a.start = j.value("start", 0.0);
    a.step = j.value("step", 1.0);
    return a;
}

std::vector<SyntheticSpec> parse_one(const json& j) {
    check_keys(j,
               {"format", "lat", "lon", "start_year", "start_month", "months", "years", "unlimited_time",
                "descending_lat", "variables", "seed", "dataset", "model", "scenario", "missing_cells", "split_years"},
               "archive spec");
    SyntheticSpec s;
    if (j.contains("format")) {
        int f = j["format"].get<int>();
        if (f != 1 && f != 2) invalid("format must be 1 or 2");
        s.format = static_cast<Format>(f);
    }
    if (j.contains("lat")) s.lat = parse_axis(j["lat"], "lat");
    if (j.contains("lon")) s.lon = parse_axis(j["lon"], "lon");
    s.start_year = j.value("start_year", s.start_year);
    s.start_month = j.value("start_month", s.start_month);
    if (j.contains("months") && j.contains("years")) invalid("give months or years, not both");
    if (j.contains("years")) s.months = 12 * j["years"].get<std::size_t>();
    if (j.contains("months")) s.months = j["months"].get<std::size_t>();
    s.unlimited_time = j.value("unlimited_time", s.unlimited_time);
    s.descending_lat = j.value("descending_lat", s.descending_lat);
    s.seed = j.value("seed", s.seed);
    s.dataset = j.value("dataset", s.dataset);
    s.model = j.value("model", s.model);
    s.scenario = j.value("scenario", s.scenario);
    if (j.contains("missing_cells"))
        for (const auto& c : j["missing_cells"]) {
            if (!c.is_array() || c.size() != 2) invalid("missing_cells entries are [lat, lon] pairs");
            s.missing_cells.emplace_back(c[0].get<std::size_t>(), c[1].get<std::size_t>());
        }
    if (!j.contains("variables")) invalid("no variables");
    for (const auto& vj : j["variables"]) {
        check_keys(vj,
                   {"name", "units", "type", "scale_factor", "add_offset", "fill_value", "generator", "constant",
                    "random_low", "random_high"},
                   "variable");
        SyntheticVariable v;
        v.name = vj.at("name").get<std::string>();
        v.units = vj.value("units", std::string(v.name == "pr" ? "kg m-2 s-1" : "K"));
        if (vj.contains("type")) v.type = parse_type(vj["type"].get<std::string>());
        if (vj.contains("scale_factor")) v.scale_factor = vj["scale_factor"].get<double>();
        if (vj.contains("add_offset")) v.add_offset = vj["add_offset"].get<double>();
        if (vj.contains("fill_value")) v.fill_value = vj["fill_value"].get<double>();
        if (vj.contains("generator")) v.generator = parse_generator(vj["generator"].get<std::string>());
        v.constant = vj.value("constant", v.constant);
        v.random_low = vj.value("random_low", v.random_low);
        v.random_high = vj.value("random_high", v.random_high);
        s.variables.push_back(std::move(v));
    }
    validate(s);

    const std::size_t split = j.value("split_years", std::size_t{0});
    if (split == 0) return {s};
    if (s.start_month != 1 || s.months % 12 != 0) invalid("split_years needs whole years starting in January");
    std::vector<SyntheticSpec> out;
    for (std::size_t first = 0; first < s.months; first += 12 * split) {
        SyntheticSpec part = s;
        part.start_year = s.start_year + static_cast<int>(first / 12);
        part.months = std::min(12 * split, s.months - first);
        out.push_back(std::move(part));
    }
    return out;
}

} // namespace

std::vector<SyntheticSpec> parse_synthetic_specs(std::string_view json_text) {
    try {
        auto j = json::parse(json_text);
        if (j.is_object() && j.contains("archives")) {
            check_keys(j, {"archives"}, "document");
            std::vector<SyntheticSpec> out;
            for (const auto& a : j["archives"]) {
                auto parts = parse_one(a);
                out.insert(out.end(), parts.begin(), parts.end());
            }
            if (out.empty()) invalid("no archives");
            return out;
        }
        return parse_one(j);
    } catch (const json::exception& e) {
        invalid(std::string("archive spec: ") + e.what());
    }
}

std::string archive_file_name(const SyntheticSpec& spec) {
    const int last_year = spec.start_year + static_cast<int>((spec.start_month - 1 + spec.months - 1) / 12);
    return spec.model + "_" + spec.scenario + "_" + std::to_string(spec.start_year) + "-" +
           std::to_string(last_year) + ".nc";
}

} // namespace dcpviz::nc

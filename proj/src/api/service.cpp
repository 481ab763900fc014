#include "dcpviz/api.hpp"

#include "dcpviz/contour.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace dcpviz::api {

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::BadParameter: return "bad_parameter";
    case Errc::UnknownParameter: return "unknown_parameter";
    case Errc::UnknownRegion: return "unknown_region";
    case Errc::InvalidWindow: return "invalid_window";
    case Errc::MalformedIndex: return "malformed_index";
    case Errc::AmbiguousIndex: return "ambiguous_index";
    case Errc::NotFound: return "not_found";
    case Errc::MissingAuthor: return "missing_author";
    case Errc::UnknownSnapshot: return "unknown_snapshot";
    case Errc::BadBody: return "bad_body";
    case Errc::NoCommonYears: return "no_common_years";
    case Errc::Internal: return "internal";
    }
    return "internal";
}

int http_status(Errc errc) {
    switch (errc) {
    case Errc::NotFound:
    case Errc::UnknownSnapshot: return 404;
    case Errc::Internal: return 500;
    default: return 400;
    }
}

namespace {

using grid::ClimateVariable;
using grid::Scenario;

[[noreturn]] void bad(const std::string& msg) { throw ApiError(Errc::BadParameter, msg); }

void allow(const Params& p, std::initializer_list<std::string_view> names) {
    for (const auto& [k, v] : p)
        if (std::find(names.begin(), names.end(), k) == names.end())
            throw ApiError(Errc::UnknownParameter, "unknown parameter '" + k + "'");
}

const std::string* get(const Params& p, const std::string& name) {
    auto it = p.find(name);
    return it == p.end() ? nullptr : &it->second;
}

std::optional<int> int_param(const Params& p, const std::string& name) {
    const auto* s = get(p, name);
    if (!s) return std::nullopt;
    int v = 0;
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (s->empty() || ec != std::errc{} || ptr != s->data() + s->size())
        bad("parameter '" + name + "' must be an integer, got '" + *s + "'");
    return v;
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        bad(what + " must be a finite number, got '" + s + "'");
    return v;
}

std::optional<double> double_param(const Params& p, const std::string& name) {
    const auto* s = get(p, name);
    if (!s) return std::nullopt;
    return parse_double(*s, "parameter '" + name + "'");
}

bool bool_param(const Params& p, const std::string& name, bool fallback) {
    const auto* s = get(p, name);
    if (!s) return fallback;
    if (*s == "true" || *s == "1") return true;
    if (*s == "false" || *s == "0") return false;
    bad("parameter '" + name + "' must be true or false, got '" + *s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto c = s.find(sep, start);
        out.push_back(s.substr(start, c - start));
        if (c == std::string::npos) break;
        start = c + 1;
    }
    return out;
}

ClimateVariable variable_of(const std::string& s) {
    try {
        return grid::parse_variable(s);
    } catch (const grid::GridError&) {
        bad("unknown variable '" + s + "'");
    }
}

Scenario scenario_of(const std::string& s) {
    try {
        return grid::parse_scenario(s);
    } catch (const grid::GridError&) {
        bad("unknown scenario '" + s + "'");
    }
}

grid::Season season_param(const Params& p) {
    const auto* s = get(p, "season");
    if (!s) bad("parameter 'season' is required");
    try {
        return grid::parse_season(*s);
    } catch (const grid::GridError&) {
        bad("unknown season '" + *s + "'");
    }
}

ClimateVariable variable_param(const Params& p, ClimateVariable fallback) {
    const auto* s = get(p, "variable");
    return s ? variable_of(*s) : fallback;
}

std::string dataset_param(const Params& p) {
    const auto* s = get(p, "dataset");
    return s ? *s : std::string(store::kDefaultDataset);
}

store::DataIndex index_of(const std::string& text) {
    try {
        return store::parse_index(text);
    } catch (const store::StoreError& e) {
        throw ApiError(Errc::MalformedIndex, e.what());
    }
}

Json tree_json(const analytics::TreeNode& n) {
    Json j{{"name", n.name}, {"size", n.size}, {"color", n.color}};
    if (!n.children.empty()) {
        j["children"] = Json::array();
        for (const auto& c : n.children) j["children"].push_back(tree_json(c));
    }
    return j;
}

const analytics::RegionalSeries* series_for(const std::vector<analytics::RegionalSeries>& all, int region) {
    for (const auto& s : all)
        if (s.region_id == region) return &s;
    return nullptr;
}

Json paginate(const Json& items, const Page& page) {
    Json out{{"total", items.size()}, {"page", page.page}, {"page_size", page.page_size}, {"items", Json::array()}};
    const std::size_t begin = (page.page - 1) * page.page_size;
    for (std::size_t i = begin; i < items.size() && i < begin + page.page_size; ++i) out["items"].push_back(items[i]);
    return out;
}

Scenario actual_scenario(Scenario requested, int year) {
    return year <= grid::kLastHistoricalYear ? Scenario::Historical : requested;
}

} // namespace

std::vector<analytics::RegionalSeries> load_series(const store::Store& store, const std::string& dataset,
                                                   const std::string& model, ClimateVariable variable,
                                                   Scenario scenario, bool chain) {
    store::Query q;
    q.dataset = dataset;
    q.model = model;
    q.variable = std::string(grid::to_string(variable));
    q.kind = store::ProductKind::Aggregate;
    auto records = store.records(q);
    // historical months first so a projection's own product wins on overlap
    std::stable_sort(records.begin(), records.end(), [](const store::Receipt& a, const store::Receipt& b) {
        return (a.key.scenario == Scenario::Historical) > (b.key.scenario == Scenario::Historical);
    });

    std::map<int, analytics::RegionalSeries> by_region;
    for (const auto& r : records) {
        const bool wanted = r.key.scenario == scenario ||
                            (chain && scenario != Scenario::Historical && r.key.scenario == Scenario::Historical);
        if (!wanted) continue;
        try {
            auto bytes = store.get_product(r.key);
            auto parsed = analytics::parse_aggregate_csv(
                std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
            for (const auto& s : parsed) {
                auto& out = by_region[s.region_id];
                out.region_id = s.region_id;
                out.variable = variable;
                out.model = model;
                out.scenario = scenario;
                for (const auto& [ym, v] : s.entries) out.add(ym.year, ym.month, v, s.cell_counts.at(ym));
            }
        } catch (const Error& e) {
            throw ApiError(Errc::Internal, "stored aggregate " + r.path + ": " + e.what());
        }
    }
    std::vector<analytics::RegionalSeries> out;
    for (auto& [id, s] : by_region) out.push_back(std::move(s));
    return out;
}

Service::Service(store::Store& store, std::map<int, std::string> region_names, ServiceLimits limits)
    : store_(store), regions_(std::move(region_names)), limits_(limits) {}

int Service::region_param(const Params& p) const {
    const auto* s = get(p, "region");
    if (!s) bad("parameter 'region' is required");
    int id = 0;
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), id);
    if (!s->empty() && ec == std::errc{} && ptr == s->data() + s->size()) {
        if (regions_.count(id)) return id;
    } else {
        for (const auto& [rid, name] : regions_)
            if (name == *s) return rid;
    }
    throw ApiError(Errc::UnknownRegion, "unknown region '" + *s + "'");
}

std::string Service::model_param(const Params& p, const std::string& dataset) const {
    if (const auto* s = get(p, "model")) return *s;
    std::set<std::string> models;
    store::Query q;
    q.dataset = dataset;
    for (const auto& r : store_.records(q)) models.insert(r.key.index.model);
    if (models.size() == 1) return *models.begin();
    if (models.empty()) throw ApiError(Errc::NotFound, "the store holds no products for dataset '" + dataset + "'");
    bad("parameter 'model' is required when the store holds several models");
}

Scenario Service::scenario_param(const Params& p, const std::string& dataset, const std::string& model) const {
    if (const auto* s = get(p, "scenario")) return scenario_of(*s);
    std::set<Scenario> held;
    store::Query q;
    q.dataset = dataset;
    q.model = model;
    for (const auto& r : store_.records(q)) held.insert(r.key.scenario);
    held.erase(Scenario::Historical);
    if (held.size() == 1) return *held.begin();
    if (held.empty()) return Scenario::Historical;
    bad("parameter 'scenario' is required when several scenarios are stored");
}

Page Service::page_param(const Params& p) const {
    Page page{1, limits_.default_page_size};
    if (auto v = int_param(p, "page")) {
        if (*v < 1) bad("page starts at 1");
        page.page = static_cast<std::size_t>(*v);
    }
    if (auto v = int_param(p, "page_size")) {
        if (*v < 1 || static_cast<std::size_t>(*v) > limits_.max_page_size)
            bad("page_size must lie in 1.." + std::to_string(limits_.max_page_size));
        page.page_size = static_cast<std::size_t>(*v);
    }
    return page;
}

Json Service::catalog() const {
    struct Coverage {
        int first = 0, last = 0;
        std::map<store::ProductKind, std::size_t> counts;
    };
    std::set<std::string> datasets, models;
    std::set<ClimateVariable> variables;
    std::set<Scenario> scenarios;
    std::map<std::tuple<std::string, std::string, std::string, Scenario>, Coverage> coverage;
    for (const auto& r : store_.records()) {
        const auto& ix = r.key.index;
        datasets.insert(ix.dataset);
        models.insert(ix.model);
        try {
            variables.insert(grid::parse_variable(ix.variable));
        } catch (const grid::GridError&) {
        }
        scenarios.insert(r.key.scenario);
        auto [it, fresh] = coverage.try_emplace({ix.dataset, ix.model, ix.variable, r.key.scenario});
        auto& c = it->second;
        if (fresh) c.first = c.last = ix.year;
        c.first = std::min(c.first, ix.year);
        c.last = std::max(c.last, ix.year);
        ++c.counts[r.key.kind];
    }

    Json j{{"datasets", Json::array()}, {"models", Json::array()},    {"variables", Json::array()},
           {"scenarios", Json::array()}, {"coverage", Json::array()}, {"regions", Json::array()},
           {"color_ramps", Json::array()}, {"seasons", Json::array()}};
    for (const auto& d : datasets) j["datasets"].push_back(d);
    for (const auto& m : models) j["models"].push_back(m);
    for (auto v : variables)
        j["variables"].push_back({{"id", grid::to_string(v)}, {"units", grid::canonical_units(v)}});
    for (auto s : scenarios) j["scenarios"].push_back(grid::to_string(s));
    for (const auto& [k, c] : coverage) {
        Json counts = Json::object();
        for (auto kind : store::kAllKinds) counts[std::string(store::to_string(kind))] = c.counts.count(kind) ? c.counts.at(kind) : 0;
        j["coverage"].push_back({{"dataset", std::get<0>(k)},
                                 {"model", std::get<1>(k)},
                                 {"variable", std::get<2>(k)},
                                 {"scenario", grid::to_string(std::get<3>(k))},
                                 {"year_start", c.first},
                                 {"year_end", c.last},
                                 {"products", counts}});
    }
    for (const auto& [id, name] : regions_) j["regions"].push_back({{"id", id}, {"name", name}});
    for (const auto& r : contour::color_ramps()) {
        Json stops = Json::array();
        for (auto c : r.stops) stops.push_back(contour::hex(c));
        j["color_ramps"].push_back({{"id", r.id}, {"description", r.description}, {"stops", stops}});
    }
    for (int s = 0; s < 4; ++s) {
        grid::Season season{s};
        auto m = season.months();
        j["seasons"].push_back({{"index", s}, {"name", season.name()}, {"months", {m[0], m[1], m[2]}}});
    }
    return j;
}

Blob Service::snapshot(const std::string& text, const Params& p) const {
    allow(p, {"fmt", "scenario"});
    auto index = index_of(text);
    store::ProductKind kind = store::ProductKind::GeoJson;
    if (const auto* f = get(p, "fmt")) {
        if (*f == "geojson") kind = store::ProductKind::GeoJson;
        else if (*f == "thumb") kind = store::ProductKind::Thumbnail;
        else bad("fmt must be geojson or thumb");
    }
    std::optional<Scenario> scenario;
    if (const auto* s = get(p, "scenario")) {
        scenario = scenario_of(*s);
    } else {
        std::vector<Scenario> held;
        for (auto s : grid::kAllScenarios)
            if (store_.find({index, s, kind})) held.push_back(s);
        if (held.size() > 1)
            throw ApiError(Errc::AmbiguousIndex, "index " + index.str() + " exists under several scenarios; add scenario=");
        if (held.size() == 1) scenario = held.front();
    }
    if (!scenario || !store_.find({index, *scenario, kind}))
        throw ApiError(Errc::NotFound, "no " + std::string(store::to_string(kind)) + " stored for " + index.str());
    try {
        auto bytes = store_.get_product({index, *scenario, kind});
        return {std::string(store::media_type(kind)), std::string(bytes.begin(), bytes.end())};
    } catch (const store::StoreError& e) {
        if (e.errc() == store::Errc::NotFound) throw ApiError(Errc::NotFound, e.what());
        throw ApiError(Errc::Internal, e.what());
    }
}

Json Service::products(const Params& p) const {
    allow(p, {"dataset", "model", "variable", "scenario", "kind", "year_start", "year_end", "page", "page_size"});
    store::Query q;
    if (const auto* s = get(p, "dataset")) q.dataset = *s;
    if (const auto* s = get(p, "model")) q.model = *s;
    if (const auto* s = get(p, "variable")) q.variable = std::string(grid::to_string(variable_of(*s)));
    if (const auto* s = get(p, "scenario")) q.scenario = scenario_of(*s);
    if (const auto* s = get(p, "kind")) {
        try {
            q.kind = store::parse_kind(*s);
        } catch (const store::StoreError&) {
            bad("unknown product kind '" + *s + "'");
        }
    }
    auto y0 = int_param(p, "year_start"), y1 = int_param(p, "year_end");
    if (y0 || y1) {
        q.years = {y0.value_or(0), y1.value_or(9999)};
        if (q.years->first > q.years->second) bad("year_start is after year_end");
    }
    auto page = page_param(p);
    Json items = Json::array();
    for (const auto& r : store_.records(q))
        items.push_back({{"index", r.key.index.str()},
                         {"scenario", grid::to_string(r.key.scenario)},
                         {"kind", store::to_string(r.key.kind)},
                         {"size", r.size}});
    return paginate(items, page);
}

Json Service::heatmap(const Params& p) const {
    allow(p, {"dataset", "region", "variable", "model", "scenario", "relative", "retro_start", "retro_end", "lo", "hi"});
    const int region = region_param(p);
    const auto variable = variable_param(p, ClimateVariable::Pr);
    const bool relative = bool_param(p, "relative", false);
    analytics::RetroWindow window;
    if (auto v = int_param(p, "retro_start")) window.t0 = *v;
    if (auto v = int_param(p, "retro_end")) window.t1 = *v;
    try {
        window.validate();
    } catch (const analytics::AnalyticsError& e) {
        throw ApiError(Errc::InvalidWindow, e.what());
    }
    const auto lo = double_param(p, "lo"), hi = double_param(p, "hi");
    if (lo && hi && *lo > *hi) bad("lo is above hi");
    const auto dataset = dataset_param(p);
    const auto model = model_param(p, dataset);
    const auto scenario = scenario_param(p, dataset, model);

    auto all = load_series(store_, dataset, model, variable, scenario, true);
    Json j{{"region", {{"id", region}, {"name", regions_.at(region)}}},
           {"dataset", dataset},
           {"model", model},
           {"variable", grid::to_string(variable)},
           {"units", grid::canonical_units(variable)},
           {"scenario", grid::to_string(scenario)},
           {"relative", relative},
           {"retro", relative ? Json{{"start", window.t0}, {"end", window.t1}} : Json(nullptr)},
           {"lo", lo ? Json(*lo) : Json(nullptr)},
           {"hi", hi ? Json(*hi) : Json(nullptr)},
           {"cells", Json::array()}};
    const auto* series = series_for(all, region);
    if (!series) return j;

    auto cell = [&](int year, int month, double value) {
        return Json{{"year", year},
                    {"month", month},
                    {"season", grid::season_of(month).index},
                    {"scenario", grid::to_string(actual_scenario(scenario, year))},
                    {"index", store::make_index(dataset, model, grid::to_string(variable), year, month).str()},
                    {"value", value},
                    {"cell_count", series->cell_counts.at({year, month})}};
    };
    auto filtered = [&](std::optional<double> m) { return m && ((lo && *m < *lo) || (hi && *m > *hi)); };

    if (relative) {
        std::vector<analytics::AnomalyRow> rows;
        try {
            rows = analytics::anomaly_table(*series, window);
        } catch (const analytics::AnalyticsError& e) {
            throw ApiError(Errc::InvalidWindow, e.what());
        }
        for (const auto& r : rows) {
            auto c = cell(r.year, r.month, r.value);
            c["undefined"] = !r.anomaly.has_value();
            c["baseline"] = r.anomaly ? Json(r.anomaly->baseline) : Json(nullptr);
            c["ri_signed"] = r.anomaly ? Json(r.anomaly->ri_signed) : Json(nullptr);
            c["ri_magnitude"] = r.anomaly ? Json(r.anomaly->ri_magnitude) : Json(nullptr);
            c["filtered"] = filtered(r.anomaly ? std::optional<double>(r.anomaly->ri_signed) : std::nullopt);
            j["cells"].push_back(std::move(c));
        }
    } else {
        for (const auto& [ym, v] : series->entries) {
            auto c = cell(ym.year, ym.month, v);
            c["undefined"] = false;
            c["filtered"] = filtered(v);
            j["cells"].push_back(std::move(c));
        }
    }
    return j;
}

Json Service::timeseries(const Params& p) const {
    allow(p, {"dataset", "region", "season", "variables", "scenario", "model"});
    const int region = region_param(p);
    const auto season = season_param(p);
    std::vector<ClimateVariable> variables;
    if (const auto* s = get(p, "variables")) {
        for (const auto& name : split(*s, ',')) {
            auto v = variable_of(name);
            if (std::find(variables.begin(), variables.end(), v) != variables.end())
                bad("variable '" + name + "' listed twice");
            variables.push_back(v);
        }
    } else {
        variables = {ClimateVariable::Pr, ClimateVariable::Tasmax};
    }
    const auto dataset = dataset_param(p);
    const auto model = model_param(p, dataset);
    const auto scenario = scenario_param(p, dataset, model);

    Json j{{"region", {{"id", region}, {"name", regions_.at(region)}}},
           {"season", {{"index", season.index}, {"name", season.name()}}},
           {"dataset", dataset},
           {"model", model},
           {"scenario", grid::to_string(scenario)},
           {"series", Json::array()}};
    for (auto v : variables) {
        Json points = Json::array();
        auto all = load_series(store_, dataset, model, v, scenario, true);
        if (const auto* s = series_for(all, region)) {
            for (int year : s->years()) {
                try {
                    points.push_back({{"year", year}, {"value", analytics::seasonal_mean(*s, year, season)}});
                } catch (const analytics::AnalyticsError& e) {
                    if (e.errc() != analytics::Errc::IncompleteSeason) throw;
                }
            }
        }
        j["series"].push_back(
            {{"variable", grid::to_string(v)}, {"units", grid::canonical_units(v)}, {"points", std::move(points)}});
    }
    return j;
}

Json Service::rcp_compare(const Params& p) const {
    allow(p, {"dataset", "region", "season", "variable", "model", "scenarios"});
    const int region = region_param(p);
    const auto season = season_param(p);
    const auto variable = variable_param(p, ClimateVariable::Pr);
    const auto dataset = dataset_param(p);
    const auto model = model_param(p, dataset);

    std::vector<Scenario> scenarios;
    if (const auto* s = get(p, "scenarios")) {
        for (const auto& name : split(*s, ',')) {
            auto sc = scenario_of(name);
            if (std::find(scenarios.begin(), scenarios.end(), sc) != scenarios.end())
                bad("scenario '" + name + "' listed twice");
            scenarios.push_back(sc);
        }
        if (scenarios.size() < 2) bad("compare at least two scenarios");
    } else {
        std::set<Scenario> held;
        store::Query q;
        q.dataset = dataset;
        q.model = model;
        q.variable = std::string(grid::to_string(variable));
        for (const auto& r : store_.records(q))
            if (r.key.scenario != Scenario::Historical) held.insert(r.key.scenario);
        scenarios.assign(held.begin(), held.end());
    }

    Json j{{"region", {{"id", region}, {"name", regions_.at(region)}}},
           {"season", {{"index", season.index}, {"name", season.name()}}},
           {"variable", grid::to_string(variable)},
           {"units", grid::canonical_units(variable)},
           {"model", model},
           {"scenarios", Json::array()},
           {"rows", Json::array()}};
    std::vector<analytics::RegionalSeries> per_scenario;
    for (auto sc : scenarios) {
        j["scenarios"].push_back(grid::to_string(sc));
        auto all = load_series(store_, dataset, model, variable, sc, false);
        if (const auto* s = series_for(all, region)) per_scenario.push_back(*s);
    }
    std::vector<analytics::SpreadRow> rows;
    try {
        rows = analytics::scenario_spread(per_scenario, season);
    } catch (const analytics::AnalyticsError& e) {
        if (e.errc() != analytics::Errc::NoCommonYears) throw ApiError(Errc::Internal, e.what());
        return j; // no overlapping years: empty comparison
    }
    for (const auto& r : rows) {
        Json values = Json::object();
        for (const auto& [sc, v] : r.values) values[std::string(grid::to_string(sc))] = v;
        j["rows"].push_back({{"year", r.year}, {"values", values}, {"min", r.min}, {"max", r.max}});
    }
    return j;
}

Json Service::treemap(const Params& p) const {
    allow(p, {"dataset", "year_start", "year_end", "model", "scenario"});
    auto y0 = int_param(p, "year_start"), y1 = int_param(p, "year_end");
    if (!y0 || !y1) bad("parameters 'year_start' and 'year_end' are required");
    if (*y0 > *y1) bad("year_start is after year_end");
    const auto dataset = dataset_param(p);
    const auto model = model_param(p, dataset);
    const auto scenario = scenario_param(p, dataset, model);
    auto pr = load_series(store_, dataset, model, ClimateVariable::Pr, scenario, true);
    auto tasmax = load_series(store_, dataset, model, ClimateVariable::Tasmax, scenario, true);
    auto tree = analytics::treemap_hierarchy(pr, tasmax, *y0, *y1, regions_);
    return {{"model", model},
            {"scenario", grid::to_string(scenario)},
            {"year_start", *y0},
            {"year_end", *y1},
            {"size_variable", "pr"},
            {"color_variable", "tasmax"},
            {"root", tree_json(tree)}};
}

Json Service::add_annotation(const std::string& body) {
    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::exception& e) {
        throw ApiError(Errc::BadBody, std::string("body is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw ApiError(Errc::BadBody, "body must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (k != "author" && k != "text" && k != "pin" && k != "snapshot")
            throw ApiError(Errc::BadBody, "unknown field '" + k + "'");
    if (!j.contains("author") || !j["author"].is_string() || j["author"].get<std::string>().empty())
        throw ApiError(Errc::MissingAuthor, "annotation needs a non-empty author");

    store::AnnotationDraft d;
    d.author = j["author"].get<std::string>();
    if (j.contains("text")) {
        if (!j["text"].is_string()) throw ApiError(Errc::BadBody, "text must be a string");
        d.text = j["text"].get<std::string>();
    }
    if (j.contains("pin") && !j["pin"].is_null()) {
        const auto& pin = j["pin"];
        if (!pin.is_object() || !pin.contains("lat") || !pin.contains("lon") || !pin["lat"].is_number() ||
            !pin["lon"].is_number() || pin.size() != 2)
            throw ApiError(Errc::BadBody, "pin must be {\"lat\": number, \"lon\": number}");
        d.pin = store::Pin{pin["lat"].get<double>(), pin["lon"].get<double>()};
    }
    if (j.contains("snapshot") && !j["snapshot"].is_null()) {
        if (!j["snapshot"].is_string()) throw ApiError(Errc::BadBody, "snapshot must be an index string");
        auto index = index_of(j["snapshot"].get<std::string>());
        if (!store_.contains(index)) throw ApiError(Errc::UnknownSnapshot, "no products stored for " + index.str());
        d.snapshot = index;
    }
    try {
        return Json::parse(store::annotation_json(store_.add_annotation(d)));
    } catch (const store::StoreError& e) {
        if (e.errc() == store::Errc::InvalidAnnotation) throw ApiError(Errc::BadBody, e.what());
        throw ApiError(Errc::Internal, e.what());
    }
}

Json Service::annotations(const Params& p) const {
    allow(p, {"snapshot", "bbox", "page", "page_size"});
    store::AnnotationFilter f;
    if (const auto* s = get(p, "snapshot")) f.snapshot = index_of(*s);
    if (const auto* s = get(p, "bbox")) {
        auto parts = split(*s, ',');
        if (parts.size() != 4) bad("bbox is west,south,east,north");
        grid::Axis b;
        for (const auto& part : parts) b.push_back(parse_double(part, "bbox entry"));
        if (b[0] > b[2] || b[1] > b[3]) bad("bbox west/south must not exceed east/north");
        f.bbox = b;
    }
    auto page = page_param(p);
    Json items = Json::array();
    for (const auto& a : store_.list_annotations(f)) items.push_back(Json::parse(store::annotation_json(a)));
    return paginate(items, page);
}

} // namespace dcpviz::api

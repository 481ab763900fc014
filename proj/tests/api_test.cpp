#include "dcpviz/api.hpp"
#include "dcpviz/workflow.hpp"

#include "support/archive.hpp"
#include "support/raw_series.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>
#include <httplib.h>

#include <random>
#include <thread>

using namespace dcpviz;
using api::Json;
using grid::ClimateVariable;
using grid::Scenario;
namespace fs = std::filesystem;

namespace {

const std::string kModel = "CESM1-CAM5";

// Store with historical 2001-2005 plus rcp26 and rcp85 2006-2010, pr and tasmax.
struct Fixture {
    TempDir dir{"dcpviz-api"};
    fs::path archive = dir / "archive";
    fs::path store_root = dir / "store";

    Fixture() {
        write_archive(archive, small_spec(2001, 5, "historical", {"pr", "tasmax"}));
        write_archive(archive, small_spec(2006, 5, "rcp26", {"pr", "tasmax"}));
        write_archive(archive, small_spec(2006, 5, "rcp85", {"pr", "tasmax"}));
        workflow::DataSite site("local", archive);
        store::Store st(store_root);
        for (auto sc : {Scenario::Rcp26, Scenario::Rcp85}) {
            workflow::WorkflowQuery q;
            q.model = kModel;
            q.variables = {ClimateVariable::Pr, ClimateVariable::Tasmax};
            q.scenario = sc;
            q.year_start = 2006;
            q.year_end = 2010;
            q.retro = analytics::RetroWindow{2001, 2005};
            auto report = site.execute(site.plan(q), st);
            REQUIRE(report.failures.empty());
        }
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

std::vector<analytics::RegionalSeries> raw_series(ClimateVariable v, Scenario scenario, bool chain) {
    return ::raw_series(fixture().archive, kModel, v, scenario, chain);
}

const analytics::RegionalSeries& region_of(const std::vector<analytics::RegionalSeries>& all, int region) {
    for (const auto& s : all)
        if (s.region_id == region) return s;
    throw std::runtime_error("region missing");
}

struct Running {
    api::Server server;
    httplib::Client client;
    explicit Running(api::ApiConfig cfg) : server(prepare(cfg)), client("127.0.0.1", server.start()) {}
    static api::ApiConfig prepare(api::ApiConfig& cfg) {
        cfg.port = 0;
        return cfg;
    }

    httplib::Result get(const std::string& path, const httplib::Params& params = {}) {
        return client.Get(path, params, httplib::Headers{});
    }
    Json get_json(const std::string& path, const httplib::Params& params = {}, int status = 200) {
        auto r = get(path, params);
        REQUIRE(r);
        CHECK(r->status == status);
        return Json::parse(r->body);
    }
};

api::ApiConfig config_for(const fs::path& store_root) {
    api::ApiConfig c;
    c.store_root = store_root;
    return c;
}

void check_problem(Running& srv, const std::string& path, const httplib::Params& params, int status,
                   const std::string& code) {
    auto r = srv.get(path, params);
    REQUIRE(r);
    CHECK(r->status == status);
    CHECK(r->get_header_value("Content-Type") == "application/problem+json");
    auto j = Json::parse(r->body);
    CHECK(j["code"] == code);
    CHECK(j["status"] == status);
}

bool tree_equal(const Json& j, const analytics::TreeNode& n) {
    if (j["name"] != n.name || j["size"].get<double>() != n.size || j["color"].get<double>() != n.color) return false;
    const std::size_t count = j.contains("children") ? j["children"].size() : 0;
    if (count != n.children.size()) return false;
    for (std::size_t i = 0; i < count; ++i)
        if (!tree_equal(j["children"][i], n.children[i])) return false;
    return true;
}

} // namespace

TEST_CASE("catalog") {
    Running srv(config_for(fixture().store_root));
    auto j = srv.get_json("/api/catalog");
    CHECK(j["models"] == Json::array({kModel}));
    CHECK(j["scenarios"] == Json::array({"historical", "rcp26", "rcp85"}));
    CHECK(j["regions"].size() == 7);
    CHECK(j["color_ramps"].size() == 2);
    CHECK(j["variables"][0]["units"] == "mm/day");
    bool found = false;
    for (const auto& c : j["coverage"])
        if (c["variable"] == "pr" && c["scenario"] == "rcp85") {
            found = true;
            CHECK(c["year_start"] == 2006);
            CHECK(c["year_end"] == 2010);
            CHECK(c["products"]["geojson"] == 60);
            CHECK(c["products"]["thumbnail"] == 60);
        }
    CHECK(found);
    check_problem(srv, "/api/catalog", {{"x", "1"}}, 400, "unknown_parameter");

    TempDir empty;
    Running bare(config_for(empty.path()));
    auto e = bare.get_json("/api/catalog");
    CHECK(e["models"].empty());
    CHECK(e["coverage"].empty());
    CHECK(e["scenarios"].empty());
}

TEST_CASE("catalog regions follow a configured mask file") {
    TempDir dir;
    grid::RegionMask mask;
    mask.lat = {30.0, 31.0};
    mask.lon = {-100.0, -99.0};
    mask.ids = {1, 2, 2, 1};
    mask.names = {{1, "North"}, {2, "South"}};
    grid::save_region_mask(mask, (dir / "mask.txt").string());
    auto cfg = config_for(dir / "store");
    cfg.mask_file = dir / "mask.txt";
    Running srv(cfg);
    auto j = srv.get_json("/api/catalog");
    CHECK(j["regions"].size() == 2);
    CHECK(j["regions"][1]["name"] == "South");
}

TEST_CASE("snapshot") {
    Running srv(config_for(fixture().store_root));
    store::Store st(fixture().store_root);
    const std::string index = "NEX-DCP_CESM1-CAM5_pr_2008-07-01";
    auto stored = st.get_product({store::parse_index(index), Scenario::Rcp85, store::ProductKind::GeoJson});

    // present under rcp26 and rcp85
    check_problem(srv, "/api/snapshot/" + index, {}, 400, "ambiguous_index");
    auto r = srv.get("/api/snapshot/" + index, {{"scenario", "rcp85"}});
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "application/geo+json");
    CHECK(r->body == std::string(stored.begin(), stored.end()));

    auto thumb = srv.get("/api/snapshot/" + index, {{"scenario", "rcp26"}, {"fmt", "thumb"}});
    REQUIRE(thumb);
    CHECK(thumb->get_header_value("Content-Type") == "image/png");
    auto png = st.get_product({store::parse_index(index), Scenario::Rcp26, store::ProductKind::Thumbnail});
    CHECK(thumb->body == std::string(png.begin(), png.end()));

    // historical months of the retro window have aggregates only
    check_problem(srv, "/api/snapshot/NEX-DCP_CESM1-CAM5_pr_2003-01-01", {}, 404, "not_found");
    check_problem(srv, "/api/snapshot/NEX-DCP_CESM1-CAM5_pr_2021-03-01", {}, 404, "not_found");
    check_problem(srv, "/api/snapshot/bad%20key", {}, 400, "malformed_index");
    check_problem(srv, "/api/snapshot/" + index, {{"fmt", "tiff"}}, 400, "bad_parameter");
    check_problem(srv, "/api/snapshot/" + index, {{"scenario", "rcp99"}}, 400, "bad_parameter");
    check_problem(srv, "/api/nothing", {}, 404, "not_found");
}

TEST_CASE("products listing paginates deterministically") {
    Running srv(config_for(fixture().store_root));
    httplib::Params base{{"kind", "geojson"}, {"scenario", "rcp85"}, {"variable", "pr"}};
    auto all = srv.get_json("/api/products", base);
    CHECK(all["total"] == 60);
    std::vector<std::string> seen;
    for (int page = 1; page <= 7; ++page) {
        auto p = base;
        p.emplace("page", std::to_string(page));
        p.emplace("page_size", "9");
        auto j = srv.get_json("/api/products", p);
        for (const auto& item : j["items"]) seen.push_back(item["index"]);
    }
    REQUIRE(seen.size() == 60);
    CHECK(seen.front() == "NEX-DCP_CESM1-CAM5_pr_2006-01-01");
    CHECK(seen.back() == "NEX-DCP_CESM1-CAM5_pr_2010-12-01");
    CHECK(std::is_sorted(seen.begin(), seen.end()));
    check_problem(srv, "/api/products", {{"page", "0"}}, 400, "bad_parameter");
    check_problem(srv, "/api/products", {{"page_size", "100000"}}, 400, "bad_parameter");
    check_problem(srv, "/api/products", {{"kind", "tiff"}}, 400, "bad_parameter");
}

TEST_CASE("heatmap") {
    Running srv(config_for(fixture().store_root));
    httplib::Params base{{"region", "3"}, {"variable", "pr"}, {"scenario", "rcp85"}};

    auto abs = srv.get_json("/api/heatmap", base);
    const auto series = raw_series(ClimateVariable::Pr, Scenario::Rcp85, true);
    const auto& s3 = region_of(series, 3);
    REQUIRE(abs["cells"].size() == s3.entries.size());
    for (const auto& c : abs["cells"]) {
        CHECK(c["value"].get<double>() == *s3.find(c["year"], c["month"]));
        CHECK(c["filtered"] == false);
        CHECK(c["scenario"] == (c["year"].get<int>() <= 2005 ? "historical" : "rcp85"));
    }
    CHECK(abs["cells"][0]["index"] == "NEX-DCP_CESM1-CAM5_pr_2001-01-01");

    auto rel_params = base;
    rel_params.emplace("relative", "true");
    rel_params.emplace("retro_start", "2001");
    rel_params.emplace("retro_end", "2005");
    auto rel = srv.get_json("/api/heatmap", rel_params);
    auto table = analytics::anomaly_table(s3, {2001, 2005});
    REQUIRE(rel["cells"].size() == table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        REQUIRE(table[i].anomaly);
        CHECK(rel["cells"][i]["ri_signed"].get<double>() == table[i].anomaly->ri_signed);
        CHECK(rel["cells"][i]["ri_magnitude"].get<double>() == table[i].anomaly->ri_magnitude);
        CHECK(rel["cells"][i]["baseline"].get<double>() == table[i].anomaly->baseline);
    }

    auto zero = base;
    zero.emplace("lo", "0");
    zero.emplace("hi", "0");
    for (const auto& c : srv.get_json("/api/heatmap", zero)["cells"]) CHECK(c["filtered"] == true);

    check_problem(srv, "/api/heatmap", {{"region", "9"}}, 400, "unknown_region");
    check_problem(srv, "/api/heatmap", {{"region", "Atlantis"}}, 400, "unknown_region");
    check_problem(srv, "/api/heatmap", {{"variable", "pr"}}, 400, "bad_parameter");
    check_problem(srv, "/api/heatmap", {{"region", "1"}, {"retro_start", "2005"}, {"retro_end", "2001"}}, 400,
                  "invalid_window");
    check_problem(srv, "/api/heatmap",
                  {{"region", "1"}, {"scenario", "rcp85"}, {"relative", "true"}, {"retro_start", "1985"}}, 400,
                  "invalid_window");
    check_problem(srv, "/api/heatmap", {{"region", "1"}, {"relative", "maybe"}}, 400, "bad_parameter");
    check_problem(srv, "/api/heatmap", {{"region", "1"}, {"lo", "abc"}}, 400, "bad_parameter");
    check_problem(srv, "/api/heatmap", {{"region", "1"}, {"lo", "2"}, {"hi", "1"}}, 400, "bad_parameter");
    check_problem(srv, "/api/heatmap", {{"region", "1"}, {"colour", "red"}}, 400, "unknown_parameter");
    check_problem(srv, "/api/heatmap", {{"region", "1"}, {"variable", "rain"}}, 400, "bad_parameter");
    // several projection scenarios stored: the scenario must be named
    check_problem(srv, "/api/heatmap", {{"region", "1"}}, 400, "bad_parameter");
    check_problem(srv, "/api/heatmap?region=1&region=2", {}, 400, "bad_parameter");

    // region names are accepted as well as ids
    auto named = base;
    named.erase("region");
    named.emplace("region", grid::nca_region_names().at(3));
    CHECK(srv.get_json("/api/heatmap", named)["cells"] == abs["cells"]);
}

TEST_CASE("heatmap: constant field with the retro window over the whole series has zero anomaly") {
    TempDir dir;
    auto spec = small_spec(2006, 3, "rcp45");
    spec.model = "CCSM4";
    spec.variables[0].generator = nc::Generator::Constant;
    spec.variables[0].constant = 3.0 / 86400.0;
    write_archive(dir / "archive", spec);
    workflow::DataSite site("local", dir / "archive");
    store::Store st(dir / "store");
    workflow::WorkflowQuery q;
    q.model = "CCSM4";
    q.variables = {ClimateVariable::Pr};
    q.scenario = Scenario::Rcp45;
    q.year_start = 2006;
    q.year_end = 2008;
    site.execute(site.plan(q), st);

    Running srv(config_for(dir / "store"));
    auto j = srv.get_json("/api/heatmap",
                          {{"region", "5"}, {"relative", "true"}, {"retro_start", "2006"}, {"retro_end", "2008"}});
    REQUIRE(j["cells"].size() == 36);
    for (const auto& c : j["cells"]) {
        CHECK(c["ri_signed"].get<double>() == 0.0);
        CHECK(c["ri_magnitude"].get<double>() == 0.0);
    }
}

TEST_CASE("timeseries, rcp-compare and treemap") {
    Running srv(config_for(fixture().store_root));

    auto ts = srv.get_json("/api/timeseries",
                           {{"region", "2"}, {"season", "JAS"}, {"variables", "pr,tasmax"}, {"scenario", "rcp26"}});
    REQUIRE(ts["series"].size() == 2);
    for (const auto& s : ts["series"]) {
        auto v = grid::parse_variable(s["variable"].get<std::string>());
        const auto& raw = region_of(raw_series(v, Scenario::Rcp26, true), 2);
        REQUIRE(s["points"].size() == 10);
        for (const auto& p : s["points"])
            CHECK(p["value"].get<double>() == analytics::seasonal_mean(raw, p["year"], grid::Season{2}));
    }

    auto rc = srv.get_json("/api/rcp-compare", {{"region", "4"}, {"season", "1"}, {"variable", "tasmax"}});
    CHECK(rc["scenarios"] == Json::array({"rcp26", "rcp85"}));
    auto rows = analytics::scenario_spread({region_of(raw_series(ClimateVariable::Tasmax, Scenario::Rcp26, false), 4),
                                            region_of(raw_series(ClimateVariable::Tasmax, Scenario::Rcp85, false), 4)},
                                           grid::Season{1});
    REQUIRE(rc["rows"].size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rc["rows"][i]["min"].get<double>() == rows[i].min);
        CHECK(rc["rows"][i]["max"].get<double>() == rows[i].max);
        CHECK(rc["rows"][i]["values"]["rcp85"].get<double>() == rows[i].values.at(Scenario::Rcp85));
    }

    auto tm = srv.get_json("/api/treemap", {{"year_start", "2004"}, {"year_end", "2007"}, {"scenario", "rcp85"}});
    auto tree = analytics::treemap_hierarchy(raw_series(ClimateVariable::Pr, Scenario::Rcp85, true),
                                             raw_series(ClimateVariable::Tasmax, Scenario::Rcp85, true), 2004, 2007,
                                             grid::nca_region_names());
    CHECK(tree_equal(tm["root"], tree));

    auto outside = srv.get_json("/api/treemap", {{"year_start", "2050"}, {"year_end", "2060"}, {"scenario", "rcp85"}});
    CHECK(!outside["root"].contains("children"));

    check_problem(srv, "/api/timeseries", {{"region", "2"}}, 400, "bad_parameter");
    check_problem(srv, "/api/timeseries", {{"region", "2"}, {"season", "DJF"}}, 400, "bad_parameter");
    check_problem(srv, "/api/timeseries", {{"region", "0"}, {"season", "1"}}, 400, "unknown_region");
    check_problem(srv, "/api/timeseries", {{"region", "2"}, {"season", "1"}, {"variables", "pr,pr"}}, 400,
                  "bad_parameter");
    check_problem(srv, "/api/rcp-compare", {{"region", "2"}, {"season", "1"}, {"scenarios", "rcp85"}}, 400,
                  "bad_parameter");
    check_problem(srv, "/api/treemap", {{"year_start", "2010"}, {"year_end", "2001"}}, 400, "bad_parameter");
    check_problem(srv, "/api/treemap", {{"year_start", "2010"}}, 400, "bad_parameter");
    check_problem(srv, "/api/treemap", {{"year_start", "20x0"}, {"year_end", "2011"}}, 400, "bad_parameter");
}

TEST_CASE("parity over randomized parameter sets") {
    Running srv(config_for(fixture().store_root));
    std::mt19937_64 rng(20240601);
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    std::map<std::tuple<ClimateVariable, Scenario, bool>, std::vector<analytics::RegionalSeries>> cache;
    auto raw = [&](ClimateVariable v, Scenario s, bool chain) -> const std::vector<analytics::RegionalSeries>& {
        auto key = std::make_tuple(v, s, chain);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, raw_series(v, s, chain)).first;
        return it->second;
    };
    const Scenario projections[] = {Scenario::Rcp26, Scenario::Rcp85};

    std::size_t numbers = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int region = 1 + pick(7);
        const auto v = pick(2) ? ClimateVariable::Pr : ClimateVariable::Tasmax;
        const auto sc = projections[pick(2)];
        const grid::Season season{pick(4)};
        switch (trial % 4) {
        case 0: {
            const bool relative = pick(2);
            const int t0 = 2001 + pick(5), t1 = t0 + pick(2006 - t0);
            httplib::Params p{{"region", std::to_string(region)}, {"variable", std::string(grid::to_string(v))},
                              {"scenario", std::string(grid::to_string(sc))}, {"relative", relative ? "true" : "false"},
                              {"retro_start", std::to_string(t0)}, {"retro_end", std::to_string(t1)}};
            auto j = srv.get_json("/api/heatmap", p);
            const auto& s = region_of(raw(v, sc, true), region);
            if (relative) {
                auto table = analytics::anomaly_table(s, {t0, t1});
                REQUIRE(j["cells"].size() == table.size());
                for (std::size_t i = 0; i < table.size(); ++i) {
                    CHECK(j["cells"][i]["value"].get<double>() == table[i].value);
                    CHECK(j["cells"][i]["ri_signed"].get<double>() == table[i].anomaly->ri_signed);
                    CHECK(j["cells"][i]["ri_magnitude"].get<double>() == table[i].anomaly->ri_magnitude);
                    numbers += 3;
                }
            } else {
                for (const auto& c : j["cells"]) {
                    CHECK(c["value"].get<double>() == *s.find(c["year"], c["month"]));
                    ++numbers;
                }
            }
            break;
        }
        case 1: {
            auto j = srv.get_json("/api/timeseries", {{"region", std::to_string(region)},
                                                      {"season", std::to_string(season.index)},
                                                      {"variables", std::string(grid::to_string(v))},
                                                      {"scenario", std::string(grid::to_string(sc))}});
            const auto& s = region_of(raw(v, sc, true), region);
            for (const auto& p : j["series"][0]["points"]) {
                CHECK(p["value"].get<double>() == analytics::seasonal_mean(s, p["year"], season));
                ++numbers;
            }
            break;
        }
        case 2: {
            auto j = srv.get_json("/api/rcp-compare", {{"region", std::to_string(region)},
                                                       {"season", std::to_string(season.index)},
                                                       {"variable", std::string(grid::to_string(v))},
                                                       {"scenarios", "rcp26,rcp85"}});
            auto rows = analytics::scenario_spread(
                {region_of(raw(v, Scenario::Rcp26, false), region), region_of(raw(v, Scenario::Rcp85, false), region)},
                season);
            REQUIRE(j["rows"].size() == rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                CHECK(j["rows"][i]["min"].get<double>() == rows[i].min);
                CHECK(j["rows"][i]["max"].get<double>() == rows[i].max);
                CHECK(j["rows"][i]["values"]["rcp26"].get<double>() == rows[i].values.at(Scenario::Rcp26));
                CHECK(j["rows"][i]["values"]["rcp85"].get<double>() == rows[i].values.at(Scenario::Rcp85));
                numbers += 4;
            }
            break;
        }
        default: {
            const int y0 = 2001 + pick(10), y1 = y0 + pick(2011 - y0);
            auto j = srv.get_json("/api/treemap", {{"year_start", std::to_string(y0)},
                                                   {"year_end", std::to_string(y1)},
                                                   {"scenario", std::string(grid::to_string(sc))}});
            auto tree = analytics::treemap_hierarchy(raw(ClimateVariable::Pr, sc, true),
                                                     raw(ClimateVariable::Tasmax, sc, true), y0, y1,
                                                     grid::nca_region_names());
            CHECK(tree_equal(j["root"], tree));
            ++numbers;
            break;
        }
        }
    }
    CHECK(numbers > 1000);
}

TEST_CASE("annotations") {
    TempDir dir;
    fs::copy(fixture().store_root, dir / "store", fs::copy_options::recursive);
    Running srv(config_for(dir / "store"));
    const std::string index = "NEX-DCP_CESM1-CAM5_pr_2007-04-01";

    Json body{{"author", "kim"}, {"text", "wet spring"}, {"pin", {{"lat", 38.5}, {"lon", -97.25}}}, {"snapshot", index}};
    auto r = srv.client.Post("/api/annotations", body.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    auto created = Json::parse(r->body);
    CHECK(created["author"] == "kim");
    CHECK(created["id"] == 1);

    auto listed = srv.get_json("/api/annotations", {{"snapshot", index}});
    REQUIRE(listed["total"] == 1);
    CHECK(listed["items"][0] == created);
    CHECK(srv.get_json("/api/annotations", {{"bbox", "-100,35,-95,40"}})["total"] == 1);
    CHECK(srv.get_json("/api/annotations", {{"bbox", "-90,35,-85,40"}})["total"] == 0);

    auto post_problem = [&](const std::string& payload, int status, const std::string& code) {
        auto res = srv.client.Post("/api/annotations", payload, "application/json");
        REQUIRE(res);
        CHECK(res->status == status);
        CHECK(Json::parse(res->body)["code"] == code);
    };
    post_problem(R"({"text": "no author"})", 400, "missing_author");
    post_problem(R"({"author": ""})", 400, "missing_author");
    post_problem(R"({"author": "kim", "snapshot": "NEX-DCP_CESM1-CAM5_pr_2031-01-01"})", 404, "unknown_snapshot");
    post_problem(R"({"author": "kim", "snapshot": "bad key"})", 400, "malformed_index");
    post_problem(R"({"author": "kim", "pin": {"lat": 200, "lon": 0}})", 400, "bad_body");
    post_problem(R"({"author": "kim", "mood": "happy"})", 400, "bad_body");
    post_problem("{not json", 400, "bad_body");
    check_problem(srv, "/api/annotations", {{"bbox", "1,2,3"}}, 400, "bad_parameter");
    check_problem(srv, "/api/annotations", {{"snapshot", "bad key"}}, 400, "malformed_index");

    // concurrent clients each persist with a distinct id
    constexpr int kClients = 8, kEach = 10;
    std::vector<std::thread> clients;
    for (int c = 0; c < kClients; ++c)
        clients.emplace_back([&, c] {
            httplib::Client cli("127.0.0.1", srv.client.port());
            for (int k = 0; k < kEach; ++k) {
                Json b{{"author", "client" + std::to_string(c)}, {"text", std::to_string(k)}};
                cli.Post("/api/annotations", b.dump(), "application/json");
            }
        });
    for (auto& t : clients) t.join();
    auto all = srv.get_json("/api/annotations", {{"page_size", "1000"}});
    REQUIRE(all["total"] == 1 + kClients * kEach);
    std::set<int> ids;
    for (const auto& a : all["items"]) ids.insert(a["id"].get<int>());
    CHECK(ids.size() == 1 + kClients * kEach);

    // persisted: a fresh server over the same store sees the same list
    Running again(config_for(dir / "store"));
    CHECK(again.get_json("/api/annotations", {{"page_size", "1000"}}) == all);
}

TEST_CASE("cors and the index page") {
    auto cfg = config_for(fixture().store_root);
    cfg.cors = true;
    Running srv(cfg);
    auto r = srv.get("/api/health");
    REQUIRE(r);
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    auto page = srv.get("/");
    REQUIRE(page);
    CHECK(page->status == 200);
    CHECK(page->body.find("/api/catalog") != std::string::npos);
}

TEST_CASE("static assets are served under / when configured") {
    TempDir dir;
    fs::create_directories(dir / "ui");
    {
        std::ofstream(dir / "ui" / "index.html") << "<html>ui</html>";
    }
    auto cfg = config_for(dir / "store");
    cfg.static_dir = dir / "ui";
    Running srv(cfg);
    auto r = srv.get("/index.html");
    REQUIRE(r);
    CHECK(r->body == "<html>ui</html>");
}

#include "dcpviz/analytics.hpp"
#include "dcpviz/store.hpp"

#include "support/temp_dir.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI with `args` (already shell-quoted) and the given environment prefix.
Outcome cli(const TempDir& dir, const std::string& args, const std::string& env = "") {
    const auto err_file = dir / "stderr.txt";
    const std::string cmd = env + " " + quote(DCPVIZ_BINARY) + " " + args + " 2>" + quote(err_file.string());
    Outcome o;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) o.out.append(buf, n);
    int status = pclose(p);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err_file);
    std::stringstream ss;
    ss << in.rdbuf();
    o.err = ss.str();
    return o;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string spec(const std::string& name) { return quote(std::string(DCPVIZ_FIXTURES_DIR) + "/specs/" + name); }

} // namespace

TEST_CASE("store ls on an empty store") {
    TempDir dir;
    auto o = cli(dir, "--store " + quote((dir / "store").string()) + " store ls");
    CHECK(o.code == 0);
    CHECK(o.out.empty());
}

TEST_CASE("usage errors exit 2, runtime errors exit 1") {
    TempDir dir;
    const std::string store = "--store " + quote((dir / "store").string());
    CHECK(cli(dir, "").code == 2);
    CHECK(cli(dir, store + " store").code == 2);
    CHECK(cli(dir, store + " store ls --colour red").code == 2);
    CHECK(cli(dir, store + " run --model CESM1-CAM5").code == 2);
    CHECK(cli(dir, store + " run --model CESM1-CAM5 --years 2036-2040").code == 2);
    CHECK(cli(dir, store + " run --model CESM1-CAM5 --years 2040:2036").code == 2);
    CHECK(cli(dir, store + " run --model CESM1-CAM5 --years 2036:2040 --vars rain").code == 2);
    CHECK(cli(dir, store + " store get 'bad key'").code == 2);

    auto missing = cli(dir, store + " store get NEX-DCP_CESM1-CAM5_pr_2021-03-01");
    CHECK(missing.code == 1);
    CHECK(missing.err.rfind("error: not_found: ", 0) == 0);
    CHECK(lines(missing.err) == 1);

    auto no_site = cli(dir, store + " run --model CESM1-CAM5 --years 2036:2040");
    CHECK(no_site.code == 1);
    CHECK(no_site.err.rfind("error: unknown_site: ", 0) == 0);
    CHECK(cli(dir, "--help").code == 0);
}

TEST_CASE("gen-archive, register-site, run, store ls") {
    TempDir dir;
    const std::string store = "--store " + quote((dir / "store").string());
    auto gen = cli(dir, "gen-archive --spec " + spec("five_year_pr.json") + " --out " + quote((dir / "arch").string()));
    REQUIRE(gen.code == 0);
    CHECK(lines(gen.out) == 1);
    CHECK(fs::exists(dir / "arch" / "CESM1-CAM5_rcp85_2036-2040.nc"));

    REQUIRE(cli(dir, store + " register-site --id local --archive " + quote((dir / "arch").string())).code == 0);
    auto run = cli(dir, store + " run --model CESM1-CAM5 --vars pr --scenario rcp85 --years 2036:2040");
    REQUIRE(run.code == 0);
    CHECK(run.out.find("products_emitted: 180") != std::string::npos);
    CHECK(run.out.find("\"derived_bytes_emitted\":") != std::string::npos);

    auto ls = cli(dir, store + " store ls --kind geojson");
    CHECK(ls.code == 0);
    CHECK(lines(ls.out) == 60);
    CHECK(lines(cli(dir, store + " store ls --kind thumbnail").out) == 60);
    CHECK(lines(cli(dir, store + " store ls --years 2037:2038 --kind aggregate").out) == 24);

    auto again = cli(dir, store + " run --model CESM1-CAM5 --vars pr --scenario rcp85 --years 2036:2040");
    CHECK(again.code == 0);
    CHECK(again.out.find("derived_bytes_emitted: 0\n") != std::string::npos);

    SUBCASE("store get returns the stored bytes") {
        auto got = cli(dir, store + " store get NEX-DCP_CESM1-CAM5_pr_2037-05-01");
        REQUIRE(got.code == 0);
        dcpviz::store::Store st(dir / "store");
        auto bytes = st.get_product({dcpviz::store::parse_index("NEX-DCP_CESM1-CAM5_pr_2037-05-01"),
                                     dcpviz::grid::Scenario::Rcp85, dcpviz::store::ProductKind::GeoJson});
        CHECK(got.out == std::string(bytes.begin(), bytes.end()));

        auto png = cli(dir, store + " store get NEX-DCP_CESM1-CAM5_pr_2037-05-01 --kind thumbnail --out " +
                       quote((dir / "t.png").string()));
        CHECK(png.code == 0);
        CHECK(fs::file_size(dir / "t.png") > 0);
    }
    SUBCASE("export writes analytics CSV") {
        auto csv = cli(dir, store + " export --model CESM1-CAM5 --variable pr --region 2 --region 5");
        REQUIRE(csv.code == 0);
        auto series = dcpviz::analytics::parse_aggregate_csv(csv.out);
        REQUIRE(series.size() == 2);
        CHECK(series[0].region_id == 2);
        CHECK(series[0].entries.size() == 60);
        auto rel = cli(dir, store + " export --model CESM1-CAM5 --retro 2036:2038");
        CHECK(rel.code == 0);
        CHECK(rel.out.find("ri_signed") != std::string::npos);
        CHECK(cli(dir, store + " export --model CESM1-CAM5 --retro 1985:2005").code == 1);
    }
    SUBCASE("holdings missing names the year") {
        auto o = cli(dir, store + " run --model CESM1-CAM5 --years 2036:2041");
        CHECK(o.code == 1);
        CHECK(o.err.find("pr:2041") != std::string::npos);
    }
    SUBCASE("custom bands regenerate contour products") {
        auto o = cli(dir, store + " run --model CESM1-CAM5 --years 2036:2040 --bands " + spec("pr_bands.json"));
        CHECK(o.code == 0);
        CHECK(o.out.find("products_emitted: 120") != std::string::npos);
    }
}

TEST_CASE("DCPVIZ_STORE selects the store; --store wins") {
    TempDir dir;
    dcpviz::store::Store a(dir / "a");
    a.put_product({dcpviz::store::parse_index("NEX-DCP_CESM1-CAM5_pr_2040-01-01"), dcpviz::grid::Scenario::Rcp85,
                   dcpviz::store::ProductKind::Aggregate},
                  {'x'});
    const std::string env = "DCPVIZ_STORE=" + quote((dir / "a").string());
    CHECK(lines(cli(dir, "store ls", env).out) == 1);
    CHECK(lines(cli(dir, "--store " + quote((dir / "b").string()) + " store ls", env).out) == 0);
}

TEST_CASE("config file supplies flags") {
    TempDir dir;
    {
        std::ofstream cfg(dir / "dcpviz.toml");
        cfg << "store = \"" << (dir / "cfgstore").string() << "\"\n";
    }
    dcpviz::store::Store s(dir / "cfgstore");
    s.put_product({dcpviz::store::parse_index("NEX-DCP_CESM1-CAM5_pr_2040-01-01"), dcpviz::grid::Scenario::Rcp85,
                   dcpviz::store::ProductKind::Aggregate},
                  {'x'});
    CHECK(lines(cli(dir, "--config " + quote((dir / "dcpviz.toml").string()) + " store ls").out) == 1);
}

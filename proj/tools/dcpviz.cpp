#include "dcpviz/api.hpp"
#include "dcpviz/workflow.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace dcpviz;
namespace fs = std::filesystem;

namespace {

// Bad flag values found after parsing; exit code 2 like parse errors.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_years(const std::string& text, const std::string& flag) {
    auto colon = text.find(':');
    try {
        std::size_t used = 0;
        if (colon == std::string::npos) {
            int y = std::stoi(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return {y, y};
        }
        const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
        int y0 = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument(text);
        int y1 = std::stoi(b, &used);
        if (used != b.size()) throw std::invalid_argument(text);
        if (y0 > y1) throw UsageError(flag + ": start year after end year in '" + text + "'");
        return {y0, y1};
    } catch (const std::logic_error&) {
        throw UsageError(flag + ": expected START:END years, got '" + text + "'");
    }
}

std::string read_text(const fs::path& path) {
    auto bytes = store::read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

template <typename T, typename F>
T usage_parse(F&& f, const std::string& what) {
    try {
        return f();
    } catch (const Error& e) {
        throw UsageError(what + ": " + e.what());
    }
}

void write_output(const std::string& out, const std::string& bytes) {
    if (out.empty() || out == "-") {
        std::fwrite(bytes.data(), 1, bytes.size(), stdout);
        std::fflush(stdout);
        return;
    }
    store::atomic_write(out, bytes.data(), bytes.size());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCPViz: downscaled climate projection products and API"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Optional config file (TOML/INI); flags win");

    std::string store_flag;
    app.add_option("--store", store_flag, "Store directory (default: $DCPVIZ_STORE or ./dcpviz-store)");
    auto store_root = [&]() -> fs::path {
        if (!store_flag.empty()) return store_flag;
        if (const char* env = std::getenv("DCPVIZ_STORE"); env && *env) return env;
        return "dcpviz-store";
    };

    // gen-archive
    auto* gen = app.add_subcommand("gen-archive", "Write synthetic NetCDF archives from a JSON spec");
    std::string gen_spec, gen_out = ".";
    gen->add_option("--spec", gen_spec, "Archive spec (JSON)")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Output directory");

    // register-site
    auto* reg = app.add_subcommand("register-site", "Register a directory of raw archives as a data site");
    std::string reg_id, reg_archive, reg_mask;
    reg->add_option("--id", reg_id, "Site id")->required();
    reg->add_option("--archive", reg_archive, "Archive root")->required()->check(CLI::ExistingDirectory);
    reg->add_option("--mask", reg_mask, "Region mask file")->check(CLI::ExistingFile);

    // run
    auto* run = app.add_subcommand("run", "Plan and execute a workflow at a site");
    std::string run_site, run_model, run_vars = "pr", run_scenario = "rcp85", run_years, run_retro, run_bands,
                                      run_dataset = std::string(store::kDefaultDataset);
    std::size_t run_threads = 0;
    run->add_option("--site", run_site, "Site id (default: the only registered site)");
    run->add_option("--dataset", run_dataset, "Dataset name");
    run->add_option("--model", run_model, "Climate model")->required();
    run->add_option("--vars", run_vars, "Comma-separated variables");
    run->add_option("--scenario", run_scenario, "Projection scenario");
    run->add_option("--years", run_years, "Year range START:END")->required();
    run->add_option("--retro", run_retro, "Retrospective window START:END");
    run->add_option("--bands", run_bands, "Band spec file (JSON)")->check(CLI::ExistingFile);
    run->add_option("--threads", run_threads, "Worker threads (0: all cores)");

    // store ls | get
    auto* st = app.add_subcommand("store", "Inspect the product store");
    st->require_subcommand(1);
    auto* ls = st->add_subcommand("ls", "List stored products");
    std::string ls_model, ls_variable, ls_scenario, ls_kind, ls_years;
    ls->add_option("--model", ls_model);
    ls->add_option("--variable", ls_variable);
    ls->add_option("--scenario", ls_scenario);
    ls->add_option("--kind", ls_kind, "geojson, thumbnail or aggregate");
    ls->add_option("--years", ls_years, "START:END");
    auto* get = st->add_subcommand("get", "Write one product to stdout or a file");
    std::string get_index, get_kind = "geojson", get_scenario, get_out;
    get->add_option("index", get_index, "Data index")->required();
    get->add_option("--kind", get_kind, "geojson, thumbnail or aggregate");
    get->add_option("--scenario", get_scenario, "Needed when several scenarios hold the index");
    get->add_option("--out", get_out, "Output file (default: stdout)");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    api::ApiConfig serve_cfg;
    std::string serve_mask, serve_static;
    serve->add_option("--host", serve_cfg.host, "Bind address");
    serve->add_option("--port", serve_cfg.port, "Port (0: any free port)");
    serve->add_option("--mask", serve_mask, "Region mask file for region names")->check(CLI::ExistingFile);
    serve->add_option("--static", serve_static, "UI asset directory served under /")->check(CLI::ExistingDirectory);
    serve->add_flag("--cors", serve_cfg.cors, "Allow cross-origin requests");
    serve->add_option("--page-size", serve_cfg.limits.default_page_size, "Default page size");
    serve->add_option("--max-page-size", serve_cfg.limits.max_page_size, "Largest accepted page size");

    // export
    auto* exp = app.add_subcommand("export", "Write regional series as analytics CSV");
    std::string exp_model, exp_variable = "pr", exp_scenario = "rcp85", exp_retro, exp_out,
                                    exp_dataset = std::string(store::kDefaultDataset);
    std::vector<int> exp_regions;
    exp->add_option("--dataset", exp_dataset, "Dataset name");
    exp->add_option("--model", exp_model, "Climate model")->required();
    exp->add_option("--variable", exp_variable, "Variable");
    exp->add_option("--scenario", exp_scenario, "Scenario (projections include the historical record)");
    exp->add_option("--retro", exp_retro, "Add relative intensity over window START:END");
    exp->add_option("--region", exp_regions, "Restrict to region ids");
    exp->add_option("--out", exp_out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage_error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*gen) {
            auto specs = nc::parse_synthetic_specs(read_text(gen_spec));
            fs::create_directories(gen_out);
            for (const auto& spec : specs) {
                auto bytes = nc::write_synthetic_archive(spec);
                auto path = fs::path(gen_out) / nc::archive_file_name(spec);
                store::atomic_write(path, bytes.data(), bytes.size());
                std::cout << path.string() << "\n";
            }
        } else if (*reg) {
            auto archive = fs::absolute(reg_archive).lexically_normal();
            std::optional<fs::path> mask;
            if (!reg_mask.empty()) mask = fs::absolute(reg_mask).lexically_normal();
            workflow::DataSite site(reg_id, archive, mask);
            for (const auto& r : site.rejected()) std::cerr << "rejected: " << r << "\n";
            workflow::register_site(store_root(), {reg_id, archive.string(),
                                                   mask ? std::optional<std::string>(mask->string()) : std::nullopt});
            std::cout << "site " << reg_id << ": " << site.holdings().size() << " holdings, " << site.resident_bytes()
                      << " bytes\n";
        } else if (*run) {
            workflow::WorkflowQuery q;
            q.dataset = run_dataset;
            q.model = run_model;
            for (const auto& name : CLI::detail::split(run_vars, ','))
                q.variables.push_back(usage_parse<grid::ClimateVariable>([&] { return grid::parse_variable(name); }, "--vars"));
            q.scenario = usage_parse<grid::Scenario>([&] { return grid::parse_scenario(run_scenario); }, "--scenario");
            std::tie(q.year_start, q.year_end) = parse_years(run_years, "--years");
            if (!run_retro.empty()) {
                auto [t0, t1] = parse_years(run_retro, "--retro");
                q.retro = analytics::RetroWindow{t0, t1};
            }
            if (!run_bands.empty())
                q.bands = usage_parse<contour::BandSpec>([&] { return contour::parse_band_spec(read_text(run_bands)); },
                                                         "--bands");
            try {
                q.validate();
            } catch (const workflow::WorkflowError& e) {
                throw UsageError(e.what());
            }
            auto entry = workflow::find_site(store_root(), run_site);
            std::optional<fs::path> mask;
            if (entry.mask_file) mask = *entry.mask_file;
            workflow::DataSite site(entry.id, entry.archive_root, mask);
            store::Store store(store_root());
            workflow::ExecuteOptions opt;
            opt.threads = run_threads;
            auto report = site.execute(site.plan(q), store, opt);
            std::cout << report.summary() << report.json() << "\n";
            if (!report.failures.empty()) {
                std::cerr << "error: task_failures: " << report.tasks_failed << " of " << report.tasks_total
                          << " tasks failed\n";
                return 1;
            }
        } else if (*ls) {
            store::Query q;
            if (!ls_model.empty()) q.model = ls_model;
            if (!ls_variable.empty()) q.variable = ls_variable;
            if (!ls_scenario.empty())
                q.scenario = usage_parse<grid::Scenario>([&] { return grid::parse_scenario(ls_scenario); }, "--scenario");
            if (!ls_kind.empty())
                q.kind = usage_parse<store::ProductKind>([&] { return store::parse_kind(ls_kind); }, "--kind");
            if (!ls_years.empty()) q.years = parse_years(ls_years, "--years");
            store::Store store(store_root());
            for (const auto& r : store.records(q))
                std::cout << r.key.index.str() << "\t" << grid::to_string(r.key.scenario) << "\t"
                          << store::to_string(r.key.kind) << "\t" << r.size << "\n";
        } else if (*get) {
            auto index = usage_parse<store::DataIndex>([&] { return store::parse_index(get_index); }, "index");
            auto kind = usage_parse<store::ProductKind>([&] { return store::parse_kind(get_kind); }, "--kind");
            store::Store store(store_root());
            std::optional<grid::Scenario> scenario;
            if (!get_scenario.empty()) {
                scenario = usage_parse<grid::Scenario>([&] { return grid::parse_scenario(get_scenario); }, "--scenario");
            } else {
                std::vector<grid::Scenario> held;
                for (auto s : grid::kAllScenarios)
                    if (store.find({index, s, kind})) held.push_back(s);
                if (held.size() > 1) throw UsageError(index.str() + " exists under several scenarios; pass --scenario");
                if (!held.empty()) scenario = held.front();
            }
            if (!scenario) throw store::StoreError(store::Errc::NotFound, "no " + get_kind + " stored for " + index.str());
            auto bytes = store.get_product({index, *scenario, kind});
            write_output(get_out, std::string(bytes.begin(), bytes.end()));
        } else if (*serve) {
            serve_cfg.store_root = store_root();
            if (!serve_mask.empty()) serve_cfg.mask_file = serve_mask;
            if (!serve_static.empty()) serve_cfg.static_dir = serve_static;
            api::Server server(serve_cfg);
            int port = server.bind();
            std::cerr << "listening on http://" << serve_cfg.host << ":" << port << "\n";
            server.run();
        } else if (*exp) {
            auto variable = usage_parse<grid::ClimateVariable>([&] { return grid::parse_variable(exp_variable); }, "--variable");
            auto scenario = usage_parse<grid::Scenario>([&] { return grid::parse_scenario(exp_scenario); }, "--scenario");
            store::Store store(store_root());
            auto series = api::load_series(store, exp_dataset, exp_model, variable, scenario, true);
            if (!exp_regions.empty())
                std::erase_if(series, [&](const analytics::RegionalSeries& s) {
                    return std::find(exp_regions.begin(), exp_regions.end(), s.region_id) == exp_regions.end();
                });
            if (series.empty()) throw store::StoreError(store::Errc::NotFound, "no stored aggregates match");
            std::string csv;
            if (!exp_retro.empty()) {
                auto [t0, t1] = parse_years(exp_retro, "--retro");
                csv = analytics::anomaly_csv(series, {t0, t1});
            } else {
                csv = analytics::aggregate_csv(series);
            }
            write_output(exp_out, csv);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage_error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

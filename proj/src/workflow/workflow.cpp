#include "dcpviz/workflow.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace dcpviz::workflow {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::InvalidQuery: return "invalid_query";
    case Errc::HoldingsMissing: return "holdings_missing";
    case Errc::UnknownSite: return "unknown_site";
    case Errc::BadRegistry: return "bad_registry";
    }
    return "unknown";
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int month_number(YearMonth ym) { return ym.year * 12 + (ym.month - 1); }
YearMonth from_month_number(int n) { return {n / 12, n % 12 + 1}; }

std::string ym_text(YearMonth ym) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", ym.year, ym.month);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

const std::string* global_text(const nc::NcFile& file, std::string_view name) {
    const auto* a = file.global_attributes.find(name);
    return a ? a->as_text() : nullptr;
}

} // namespace

// ---------------------------------------------------------------------------
// Query and plan

void WorkflowQuery::validate() const {
    auto fail = [](const std::string& msg) { throw WorkflowError(Errc::InvalidQuery, msg); };
    if (dataset.empty()) fail("dataset is empty");
    if (model.empty()) fail("model is empty");
    if (!store::is_registered_model(model)) fail("model '" + model + "' is not registered");
    if (variables.empty()) fail("no variables requested");
    std::set<ClimateVariable> seen;
    for (auto v : variables)
        if (!seen.insert(v).second) fail("variable '" + std::string(grid::to_string(v)) + "' listed twice");
    if (year_start > year_end)
        fail("year range " + std::to_string(year_start) + ":" + std::to_string(year_end) + " is reversed");
    if (year_start < 1 || year_end > 9999) fail("years must lie in 1..9999");
    if (scenario == Scenario::Historical && year_end > grid::kLastHistoricalYear)
        fail("historical runs end in " + std::to_string(grid::kLastHistoricalYear));
    if (retro) {
        try {
            retro->validate();
        } catch (const analytics::AnalyticsError& e) {
            fail(e.what());
        }
        if (retro->t1 > grid::kLastHistoricalYear && scenario == Scenario::Historical)
            fail("retro window extends past the historical record");
    }
    if (bands) {
        try {
            bands->validate();
        } catch (const contour::ContourError& e) {
            fail(e.what());
        }
    }
}

contour::BandSpec WorkflowQuery::bands_for(ClimateVariable v) const {
    return bands ? *bands : contour::BandSpec::default_for(v);
}

std::string_view to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::Extract: return "extract";
    case TaskKind::Contour: return "contour";
    case TaskKind::Aggregate: return "aggregate";
    case TaskKind::Baseline: return "baseline";
    case TaskKind::Emit: return "emit";
    }
    return "unknown";
}

std::string Task::label() const {
    std::string out(to_string(kind));
    out += " ";
    out += grid::to_string(variable);
    if (kind != TaskKind::Baseline) out += " " + ym_text(month);
    return out;
}

std::size_t Plan::count(TaskKind kind) const {
    return static_cast<std::size_t>(std::count_if(tasks.begin(), tasks.end(),
                                                  [&](const Task& t) { return t.kind == kind; }));
}

// ---------------------------------------------------------------------------
// Report

double TransferReport::ratio() const {
    return raw_bytes_resident == 0 ? 0.0
                                   : static_cast<double>(derived_bytes_emitted) / static_cast<double>(raw_bytes_resident);
}

std::string TransferReport::summary() const {
    std::ostringstream o;
    o << "site: " << site_id << "\n"
      << "tasks: " << tasks_total << " total, " << tasks_failed << " failed, " << tasks_skipped << " skipped\n"
      << "products_emitted: " << products_emitted << "\n"
      << "cache_hits: " << cache_hits << "\n"
      << "raw_bytes_resident: " << raw_bytes_resident << "\n"
      << "derived_bytes_emitted: " << derived_bytes_emitted << "\n"
      << "ratio: " << fmt17(ratio()) << "\n";
    for (const auto& f : failures) o << "failure: " << f.task << ": " << f.code << ": " << f.message << "\n";
    return o.str();
}

std::string TransferReport::json() const {
    nlohmann::json j{{"site_id", site_id},
                     {"raw_bytes_resident", raw_bytes_resident},
                     {"derived_bytes_emitted", derived_bytes_emitted},
                     {"ratio", ratio()},
                     {"products_emitted", products_emitted},
                     {"cache_hits", cache_hits},
                     {"tasks_total", tasks_total},
                     {"tasks_failed", tasks_failed},
                     {"tasks_skipped", tasks_skipped},
                     {"failures", nlohmann::json::array()}};
    for (const auto& f : failures)
        j["failures"].push_back({{"task", f.task}, {"code", f.code}, {"message", f.message}});
    return j.dump();
}

// ---------------------------------------------------------------------------
// Hashes

std::uint64_t geojson_params_hash(const contour::BandSpec& bands, const contour::ContourOptions& options) {
    return fnv1a("geojson/1|" + contour::band_spec_json(bands) + "|tol=" + fmt17(options.arc_tolerance) +
                 "|depth=" + std::to_string(options.max_arc_depth) + "|decimals=6");
}

std::uint64_t thumbnail_params_hash(const contour::BandSpec& bands, const contour::ContourOptions& options,
                                    std::size_t width, std::string_view ramp) {
    return fnv1a("thumbnail/1|" + hex64(geojson_params_hash(bands, options)) + "|width=" + std::to_string(width) +
                 "|ramp=" + std::string(ramp));
}

std::uint64_t aggregate_params_hash(std::string_view mask_id, const std::optional<analytics::RetroWindow>& retro) {
    std::string s = "aggregate/1|mask=" + std::string(mask_id) + "|retro=";
    s += retro ? std::to_string(retro->t0) + ":" + std::to_string(retro->t1) : std::string("none");
    return fnv1a(s);
}

// ---------------------------------------------------------------------------
// Site

DataSite::DataSite(std::string id, fs::path archive_root, std::optional<fs::path> mask_file)
    : id_(std::move(id)), root_(std::move(archive_root)) {
    if (id_.empty()) throw WorkflowError(Errc::BadRegistry, "site id is empty");
    if (!fs::is_directory(root_))
        throw WorkflowError(Errc::BadRegistry, "archive root '" + root_.string() + "' is not a directory");
    if (mask_file) {
        mask_ = grid::load_region_mask(mask_file->string());
        auto bytes = store::read_file(*mask_file);
        mask_id_ = "file:" + hex64(fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
    }

    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root_))
        if (e.is_regular_file() && e.path().extension() == ".nc") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        const std::string rel = fs::relative(path, root_).generic_string();
        try {
            nc::FileSource src(path.string());
            auto file = nc::parse_header(src);
            const auto* model = global_text(file, "model_id");
            const auto* experiment = global_text(file, "experiment_id");
            if (!model || !experiment) throw std::runtime_error("missing model_id or experiment_id attribute");
            const auto* dataset = global_text(file, "dataset");
            const auto scenario = grid::parse_scenario(*experiment);
            auto times = grid::read_time_axis(src, file);
            if (times.empty()) throw std::runtime_error("empty time axis");
            for (std::size_t t = 1; t < times.size(); ++t)
                if (month_number(times[t]) != month_number(times[0]) + static_cast<int>(t))
                    throw std::runtime_error("time axis is not consecutive months");
            std::size_t found = 0;
            for (auto v : grid::kAllVariables) {
                const auto* var = file.find_variable(grid::to_string(v));
                if (!var || var->dim_ids.size() != 3) continue;
                Holding h;
                h.file = rel;
                h.dataset = dataset ? *dataset : std::string(store::kDefaultDataset);
                h.model = *model;
                h.scenario = scenario;
                h.variable = v;
                h.first = times.front();
                h.last = times.back();
                h.months = times.size();
                h.bytes = src.size();
                holdings_.push_back(std::move(h));
                ++found;
            }
            if (found == 0) throw std::runtime_error("no pr/tasmax/tasmin grid");
        } catch (const std::exception& e) {
            rejected_.push_back(rel + ": " + e.what());
        }
    }
}

std::uint64_t DataSite::resident_bytes() const {
    std::map<std::string, std::uint64_t> sizes;
    for (const auto& h : holdings_) sizes[h.file] = h.bytes;
    std::uint64_t total = 0;
    for (const auto& [f, b] : sizes) total += b;
    return total;
}

Plan DataSite::plan(const WorkflowQuery& query) const {
    query.validate();
    Plan plan;
    plan.query = query;

    std::set<std::size_t> files;
    std::vector<std::string> missing;
    for (auto v : query.variables) {
        std::set<int> in_range, months;
        for (int y = query.year_start; y <= query.year_end; ++y)
            for (int m = 1; m <= 12; ++m) in_range.insert(month_number({y, m}));
        months = in_range;
        if (query.retro)
            for (int y = query.retro->t0; y <= query.retro->t1; ++y)
                for (int m = 1; m <= 12; ++m) months.insert(month_number({y, m}));

        std::vector<std::size_t> aggregates, emits_range;
        std::map<int, std::pair<std::size_t, std::size_t>> per_month; // month -> (contour or npos, aggregate)
        std::set<int> missing_years;
        for (int n : months) {
            const YearMonth ym = from_month_number(n);
            const Scenario scen = ym.year <= grid::kLastHistoricalYear ? Scenario::Historical : query.scenario;
            std::optional<std::size_t> found;
            for (std::size_t h = 0; h < holdings_.size(); ++h) {
                const auto& hd = holdings_[h];
                if (hd.dataset == query.dataset && hd.model == query.model && hd.variable == v &&
                    hd.scenario == scen && hd.first <= ym && ym <= hd.last) {
                    found = h;
                    break;
                }
            }
            if (!found) {
                missing_years.insert(ym.year);
                continue;
            }
            files.insert(*found);
            Task ex;
            ex.kind = TaskKind::Extract;
            ex.variable = v;
            ex.month = ym;
            ex.scenario = scen;
            ex.holding = *found;
            ex.time_index = static_cast<std::size_t>(n - month_number(holdings_[*found].first));
            const std::size_t ex_id = plan.tasks.size();
            plan.tasks.push_back(ex);

            std::size_t contour_id = std::string::npos;
            if (in_range.count(n)) {
                Task c{TaskKind::Contour, v, ym, scen, 0, 0, {ex_id}};
                contour_id = plan.tasks.size();
                plan.tasks.push_back(c);
            }
            Task a{TaskKind::Aggregate, v, ym, scen, 0, 0, {ex_id}};
            const std::size_t agg_id = plan.tasks.size();
            plan.tasks.push_back(a);
            aggregates.push_back(agg_id);
            per_month[n] = {contour_id, agg_id};
        }
        for (int y : missing_years) missing.push_back(std::string(grid::to_string(v)) + ":" + std::to_string(y));
        if (!missing_years.empty()) continue;

        std::optional<std::size_t> baseline;
        if (query.retro) {
            Task b{TaskKind::Baseline, v, YearMonth{0, 0}, query.scenario, 0, 0, aggregates};
            baseline = plan.tasks.size();
            plan.tasks.push_back(std::move(b));
        }
        for (const auto& [n, ids] : per_month) {
            const YearMonth ym = from_month_number(n);
            Task e{TaskKind::Emit, v, ym, ym.year <= grid::kLastHistoricalYear ? Scenario::Historical : query.scenario,
                   0, 0, {}};
            if (ids.first != std::string::npos) e.deps.push_back(ids.first);
            e.deps.push_back(ids.second);
            if (baseline && in_range.count(n)) e.deps.push_back(*baseline);
            plan.tasks.push_back(std::move(e));
        }
    }
    if (!missing.empty()) {
        std::string msg = "holdings at site '" + id_ + "' do not cover";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : " ") + missing[i];
        throw WorkflowError(Errc::HoldingsMissing, msg);
    }
    plan.files.assign(files.begin(), files.end());
    return plan;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

struct Unit {
    ClimateVariable variable;
    YearMonth month;
    Scenario scenario;
    std::size_t holding;
    std::size_t time_index;
    bool in_range = false;
    std::string extract_label;

    bool failed = false;
    std::map<int, analytics::RegionStat> means;
    bool aggregate_cached = false;
};

struct OpenFile {
    std::unique_ptr<nc::FileSource> source;
    nc::NcFile header;
    std::string error;
};

} // namespace

TransferReport DataSite::execute(const Plan& plan, store::Store& store, const ExecuteOptions& options) const {
    const auto& q = plan.query;
    TransferReport report;
    report.site_id = id_;
    report.tasks_total = plan.tasks.size();
    for (auto h : plan.files) {
        if (h >= holdings_.size()) throw WorkflowError(Errc::InvalidQuery, "plan refers to an unknown holding");
    }
    {
        std::set<std::string> seen;
        for (auto h : plan.files)
            if (seen.insert(holdings_[h].file).second) report.raw_bytes_resident += holdings_[h].bytes;
    }

    std::vector<Unit> units;
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        const auto& t = plan.tasks[i];
        if (t.kind != TaskKind::Extract) continue;
        Unit u{t.variable, t.month, t.scenario, t.holding, t.time_index, false, t.label()};
        units.push_back(std::move(u));
    }
    {
        std::set<std::pair<ClimateVariable, YearMonth>> range;
        for (const auto& t : plan.tasks)
            if (t.kind == TaskKind::Contour) range.insert({t.variable, t.month});
        for (auto& u : units) u.in_range = range.count({u.variable, u.month}) > 0;
    }

    std::mutex report_mutex;
    auto record_failure = [&](const std::string& task, const std::string& code, const std::string& message,
                              std::size_t skipped) {
        std::lock_guard lock(report_mutex);
        report.failures.push_back({task, code, message});
        ++report.tasks_failed;
        report.tasks_skipped += skipped;
    };
    auto emit = [&](const store::ProductKey& key, const std::vector<std::uint8_t>& bytes, std::uint64_t hash) {
        store.put_product(key, bytes, hash);
        std::lock_guard lock(report_mutex);
        report.derived_bytes_emitted += bytes.size();
        ++report.products_emitted;
    };
    auto cache_hit = [&] {
        std::lock_guard lock(report_mutex);
        ++report.cache_hits;
    };
    auto key_for = [&](const Unit& u, store::ProductKind kind) {
        return store::ProductKey{
            store::make_index(q.dataset, q.model, grid::to_string(u.variable), u.month.year, u.month.month),
            u.scenario, kind};
    };
    auto cached = [&](const store::ProductKey& key, std::uint64_t hash) {
        auto r = store.find(key);
        return r && r->params_hash == hash && fs::exists(store.product_path(key));
    };

    // Files are opened once and shared; headers are immutable.
    std::map<std::string, OpenFile> open;
    std::mutex open_mutex;
    auto file_for = [&](const Holding& h) -> const OpenFile& {
        std::lock_guard lock(open_mutex);
        auto it = open.find(h.file);
        if (it != open.end()) return it->second;
        OpenFile f;
        try {
            f.source = std::make_unique<nc::FileSource>((root_ / h.file).string());
            f.header = nc::parse_header(*f.source);
        } catch (const std::exception& e) {
            f.error = e.what();
        }
        return open.emplace(h.file, std::move(f)).first->second;
    };

    // Phase 1: extraction, contours and thumbnails, regional means.
    auto run_unit = [&](Unit& u) {
        const auto bands = q.bands_for(u.variable);
        const auto geo_hash = geojson_params_hash(bands, options.contour);
        const auto thumb_hash =
            thumbnail_params_hash(bands, options.contour, options.thumbnail_width, options.thumbnail_ramp);
        const auto agg_hash = aggregate_params_hash(mask_id_, u.in_range ? q.retro : std::nullopt);
        const auto geo_key = key_for(u, store::ProductKind::GeoJson);
        const auto thumb_key = key_for(u, store::ProductKind::Thumbnail);
        const auto agg_key = key_for(u, store::ProductKind::Aggregate);

        const bool need_geo = u.in_range && !cached(geo_key, geo_hash);
        const bool need_thumb = u.in_range && !cached(thumb_key, thumb_hash);
        if (u.in_range && !need_geo) cache_hit();
        if (u.in_range && !need_thumb) cache_hit();

        if (cached(agg_key, agg_hash)) {
            try {
                auto bytes = store.get_product(agg_key);
                auto series = analytics::parse_aggregate_csv(
                    std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
                for (const auto& s : series)
                    if (auto v = s.find(u.month.year, u.month.month))
                        u.means[s.region_id] = {*v, s.cell_counts.at(u.month)};
                u.aggregate_cached = true;
            } catch (const std::exception&) {
                u.means.clear(); // unreadable cached copy: regenerate
            }
        }
        if (!need_geo && !need_thumb && u.aggregate_cached) return;

        grid::GridSnapshot snap;
        try {
            const auto& h = holdings_[u.holding];
            const auto& f = file_for(h);
            if (!f.error.empty()) throw std::runtime_error(f.error);
            snap = grid::snapshot_from_slab(*f.source, f.header, grid::to_string(u.variable), u.time_index,
                                            {q.model, u.scenario});
            if (!u.aggregate_cached) {
                const grid::RegionMask mask = mask_ ? *mask_ : grid::make_nca_mask(snap.lat, snap.lon);
                if (mask_) mask.require_axes(snap.lat, snap.lon);
                u.means = analytics::regional_monthly_mean(snap, mask);
            }
        } catch (const std::exception& e) {
            const auto* err = dynamic_cast<const Error*>(&e);
            u.failed = true;
            u.means.clear();
            record_failure(u.extract_label, err ? err->code() : "io_failure", e.what(), u.in_range ? 3 : 2);
            return;
        }

        if (need_geo || need_thumb) {
            try {
                auto product = contour::marching_squares_bands(snap, bands, options.contour);
                product.index = geo_key.index.str();
                if (need_geo) {
                    auto text = contour::to_geojson(product);
                    emit(geo_key, std::vector<std::uint8_t>(text.begin(), text.end()), geo_hash);
                }
                if (need_thumb)
                    emit(thumb_key,
                         contour::render_thumbnail(product, options.thumbnail_width, 0, options.thumbnail_ramp),
                         thumb_hash);
            } catch (const std::exception& e) {
                const auto* err = dynamic_cast<const Error*>(&e);
                Task t{TaskKind::Contour, u.variable, u.month, u.scenario, 0, 0, {}};
                record_failure(t.label(), err ? err->code() : "internal", e.what(), 0);
            }
        }
    };

    std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, units.size()));
    {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < units.size();) run_unit(units[i]);
            });
        for (auto& th : pool) th.join();
    }

    // Phase 2: baselines per variable, then aggregate products.
    for (auto v : q.variables) {
        std::map<int, analytics::RegionalSeries> by_region;
        for (const auto& u : units) {
            if (u.variable != v || u.failed) continue;
            for (const auto& [region, stat] : u.means) {
                auto& s = by_region[region];
                s.region_id = region;
                s.variable = v;
                s.model = q.model;
                s.scenario = q.scenario;
                s.add(u.month.year, u.month.month, stat.value, stat.cell_count);
            }
        }
        std::vector<analytics::RegionalSeries> series;
        for (auto& [r, s] : by_region) series.push_back(std::move(s));

        std::optional<analytics::RetroWindow> retro = q.retro;
        if (retro) {
            try {
                std::set<int> seasons;
                for (const auto& u : units)
                    if (u.variable == v && u.in_range) seasons.insert(grid::season_of(u.month.month).index);
                for (const auto& s : series)
                    for (int season : seasons) analytics::retrospective_mean(s, *retro, grid::Season{season});
            } catch (const std::exception& e) {
                const auto* err = dynamic_cast<const Error*>(&e);
                Task t{TaskKind::Baseline, v, {0, 0}, q.scenario, 0, 0, {}};
                record_failure(t.label(), err ? err->code() : "internal", e.what(), 0);
                retro.reset();
            }
        }

        std::vector<Unit*> todo;
        for (auto& u : units)
            if (u.variable == v && !u.failed) todo.push_back(&u);
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, std::max<std::size_t>(1, todo.size())); ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < todo.size();) {
                    const Unit& u = *todo[i];
                    const auto window = u.in_range ? retro : std::nullopt;
                    const auto hash = aggregate_params_hash(mask_id_, window);
                    const auto key = key_for(u, store::ProductKind::Aggregate);
                    if (u.aggregate_cached && cached(key, hash)) {
                        cache_hit();
                        continue;
                    }
                    try {
                        std::string csv;
                        if (window) {
                            csv = analytics::anomaly_csv_month(series, *window, u.month, u.scenario);
                        } else {
                            std::vector<analytics::RegionalSeries> one;
                            for (const auto& [region, stat] : u.means) {
                                analytics::RegionalSeries s;
                                s.region_id = region;
                                s.variable = v;
                                s.model = q.model;
                                s.scenario = u.scenario;
                                s.add(u.month.year, u.month.month, stat.value, stat.cell_count);
                                one.push_back(std::move(s));
                            }
                            csv = analytics::aggregate_csv(one);
                        }
                        emit(key, std::vector<std::uint8_t>(csv.begin(), csv.end()), hash);
                    } catch (const std::exception& e) {
                        const auto* err = dynamic_cast<const Error*>(&e);
                        Task t{TaskKind::Emit, v, u.month, u.scenario, 0, 0, {}};
                        record_failure(t.label(), err ? err->code() : "internal", e.what(), 0);
                    }
                }
            });
        for (auto& th : pool) th.join();
    }

    std::sort(report.failures.begin(), report.failures.end(),
              [](const TaskFailure& a, const TaskFailure& b) { return a.task < b.task; });
    return report;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

fs::path registry_path(const fs::path& store_root) { return store_root / "sites.json"; }

} // namespace

std::vector<SiteEntry> load_site_registry(const fs::path& store_root) {
    const auto path = registry_path(store_root);
    if (!fs::exists(path)) return {};
    std::vector<SiteEntry> out;
    try {
        auto bytes = store::read_file(path);
        auto j = json::parse(bytes.begin(), bytes.end());
        for (const auto& e : j.at("sites")) {
            SiteEntry s;
            s.id = e.at("id").get<std::string>();
            s.archive_root = e.at("archive_root").get<std::string>();
            if (e.contains("mask_file") && !e["mask_file"].is_null()) s.mask_file = e["mask_file"].get<std::string>();
            out.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw WorkflowError(Errc::BadRegistry, path.string() + ": " + e.what());
    }
    return out;
}

void register_site(const fs::path& store_root, const SiteEntry& entry) {
    if (entry.id.empty()) throw WorkflowError(Errc::BadRegistry, "site id is empty");
    auto sites = load_site_registry(store_root);
    std::erase_if(sites, [&](const SiteEntry& s) { return s.id == entry.id; });
    sites.push_back(entry);
    std::sort(sites.begin(), sites.end(), [](const SiteEntry& a, const SiteEntry& b) { return a.id < b.id; });
    json j{{"sites", json::array()}};
    for (const auto& s : sites) {
        json e{{"id", s.id}, {"archive_root", s.archive_root}};
        if (s.mask_file) e["mask_file"] = *s.mask_file;
        j["sites"].push_back(std::move(e));
    }
    fs::create_directories(store_root);
    const auto text = j.dump(2) + "\n";
    store::atomic_write(registry_path(store_root), text.data(), text.size());
}

SiteEntry find_site(const fs::path& store_root, std::string_view id) {
    auto sites = load_site_registry(store_root);
    if (id.empty()) {
        if (sites.size() == 1) return sites.front();
        throw WorkflowError(Errc::UnknownSite, sites.empty() ? "no site registered"
                                                             : "several sites registered; name one with --site");
    }
    for (const auto& s : sites)
        if (s.id == id) return s;
    throw WorkflowError(Errc::UnknownSite, "no site '" + std::string(id) + "' registered");
}

} // namespace dcpviz::workflow

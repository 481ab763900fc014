#pragma once

#include "dcpviz/analytics.hpp"
#include "dcpviz/contour.hpp"
#include "dcpviz/error.hpp"
#include "dcpviz/grid.hpp"
#include "dcpviz/store.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dcpviz::workflow {

enum class Errc {
    InvalidQuery,
    HoldingsMissing,
    UnknownSite,
    BadRegistry,
};

std::string to_code(Errc errc);

using WorkflowError = ModuleError<Errc>;

using grid::ClimateVariable;
using grid::Scenario;
using grid::YearMonth;

// One variable of one raw archive file resident at a site.
struct Holding {
    std::string file; // relative to the site's archive root
    std::string dataset;
    std::string model;
    Scenario scenario = Scenario::Historical;
    ClimateVariable variable = ClimateVariable::Pr;
    YearMonth first;
    YearMonth last;
    std::size_t months = 0;
    std::uint64_t bytes = 0;
};

struct WorkflowQuery {
    std::string dataset = std::string(store::kDefaultDataset);
    std::string model;
    std::vector<ClimateVariable> variables;
    Scenario scenario = Scenario::Rcp85; // years <= 2005 are served by historical holdings
    int year_start = 0;
    int year_end = 0;
    std::optional<analytics::RetroWindow> retro;
    std::optional<contour::BandSpec> bands; // default: per-variable defaults

    void validate() const; // InvalidQuery
    contour::BandSpec bands_for(ClimateVariable v) const;
};

enum class TaskKind { Extract, Contour, Aggregate, Baseline, Emit };

std::string_view to_string(TaskKind kind);

struct Task {
    TaskKind kind = TaskKind::Extract;
    ClimateVariable variable = ClimateVariable::Pr;
    YearMonth month;              // unset (0/0) for Baseline
    Scenario scenario = Scenario::Historical; // scenario of the holding serving the month
    std::size_t holding = 0;      // index into DataSite::holdings(); Extract only
    std::size_t time_index = 0;   // record within the holding; Extract only
    std::vector<std::size_t> deps;

    std::string label() const;
};

// Tasks in dependency order: every dep index is smaller than its task's.
struct Plan {
    WorkflowQuery query;
    std::vector<Task> tasks;
    std::vector<std::size_t> files; // holdings the plan reads

    std::size_t count(TaskKind kind) const;
};

struct TaskFailure {
    std::string task;
    std::string code;
    std::string message;
};

struct TransferReport {
    std::string site_id;
    std::uint64_t raw_bytes_resident = 0;    // size of the raw files the plan covers
    std::uint64_t derived_bytes_emitted = 0; // exact sum of emitted product sizes
    std::size_t products_emitted = 0;
    std::size_t cache_hits = 0;
    std::size_t tasks_total = 0;
    std::size_t tasks_failed = 0;
    std::size_t tasks_skipped = 0; // dependents of failed tasks
    std::vector<TaskFailure> failures;

    double ratio() const; // derived / raw; 0 when nothing is resident
    std::string summary() const;
    std::string json() const;
};

struct ExecuteOptions {
    std::size_t threads = 0; // 0: hardware concurrency
    std::size_t thumbnail_width = 160;
    std::string thumbnail_ramp = "ylgnbu";
    contour::ContourOptions contour;
};

// In-process stand-in for a remote data site. Raw archives never leave it:
// the public surface returns holdings metadata, plans and transfer reports;
// execute() ships only derived products into the store.
class DataSite {
public:
    // Scans `archive_root` for *.nc files. Files that do not parse as NetCDF
    // classic, or lack the model/experiment attributes, are listed in
    // rejected() instead of holdings(). Without a mask file the synthetic
    // 7-region mask is laid over each file's grid.
    DataSite(std::string id, std::filesystem::path archive_root,
             std::optional<std::filesystem::path> mask_file = std::nullopt);

    const std::string& id() const { return id_; }
    const std::filesystem::path& archive_root() const { return root_; }
    const std::vector<Holding>& holdings() const { return holdings_; }
    const std::vector<std::string>& rejected() const { return rejected_; }
    std::uint64_t resident_bytes() const;

    // HoldingsMissing names every uncovered (variable, year).
    Plan plan(const WorkflowQuery& query) const;
    TransferReport execute(const Plan& plan, store::Store& store, const ExecuteOptions& options = {}) const;

private:
    std::string id_;
    std::filesystem::path root_;
    std::optional<grid::RegionMask> mask_;
    std::string mask_id_ = "synthetic-nca";
    std::vector<Holding> holdings_;
    std::vector<std::string> rejected_;
};

// Generation-parameter hashes used as cache keys next to (index, kind).
std::uint64_t geojson_params_hash(const contour::BandSpec& bands, const contour::ContourOptions& options);
std::uint64_t thumbnail_params_hash(const contour::BandSpec& bands, const contour::ContourOptions& options,
                                    std::size_t width, std::string_view ramp);
// `mask_id` names the region mask ("synthetic-nca" or a digest of the mask file).
std::uint64_t aggregate_params_hash(std::string_view mask_id, const std::optional<analytics::RetroWindow>& retro);

// Site registry persisted as sites.json in the store root.
struct SiteEntry {
    std::string id;
    std::string archive_root;
    std::optional<std::string> mask_file;
};

std::vector<SiteEntry> load_site_registry(const std::filesystem::path& store_root);
void register_site(const std::filesystem::path& store_root, const SiteEntry& entry); // replaces same id
// Named entry, or the only registered one when `id` is empty; UnknownSite otherwise.
SiteEntry find_site(const std::filesystem::path& store_root, std::string_view id);

} // namespace dcpviz::workflow

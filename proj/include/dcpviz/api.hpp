#pragma once

#include "dcpviz/analytics.hpp"
#include "dcpviz/error.hpp"
#include "dcpviz/store.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dcpviz::api {

enum class Errc {
    BadParameter,
    UnknownParameter,
    UnknownRegion,
    InvalidWindow,
    MalformedIndex,
    AmbiguousIndex,
    NotFound,
    MissingAuthor,
    UnknownSnapshot,
    BadBody,
    NoCommonYears,
    Internal,
};

std::string to_code(Errc errc);
int http_status(Errc errc);

using ApiError = ModuleError<Errc>;

using Json = nlohmann::json;
using Params = std::map<std::string, std::string>;

// Monthly regional series for one (model, variable, scenario) read back from
// the stored aggregate products. With `chain`, a projection scenario also
// takes the historical months, labelled with the projection.
std::vector<analytics::RegionalSeries> load_series(const store::Store& store, const std::string& dataset,
                                                   const std::string& model, grid::ClimateVariable variable,
                                                   grid::Scenario scenario, bool chain);

struct Blob {
    std::string media_type;
    std::string body;
};

struct Page {
    std::size_t page = 1;
    std::size_t page_size = 100;
};

struct ServiceLimits {
    std::size_t default_page_size = 100;
    std::size_t max_page_size = 1000;
};

// Request handling independent of HTTP. Every method validates its parameters
// (unknown names rejected) and throws ApiError.
class Service {
public:
    Service(store::Store& store, std::map<int, std::string> region_names, ServiceLimits limits = {});

    const std::map<int, std::string>& region_names() const { return regions_; }

    Json catalog() const;
    Blob snapshot(const std::string& index, const Params& params) const;
    Json products(const Params& params) const;
    Json heatmap(const Params& params) const;
    Json timeseries(const Params& params) const;
    Json rcp_compare(const Params& params) const;
    Json treemap(const Params& params) const;
    Json add_annotation(const std::string& body);
    Json annotations(const Params& params) const;

private:
    store::Store& store_;
    std::map<int, std::string> regions_;
    ServiceLimits limits_;

    int region_param(const Params& p) const;
    std::string model_param(const Params& p, const std::string& dataset) const;
    grid::Scenario scenario_param(const Params& p, const std::string& dataset, const std::string& model) const;
    Page page_param(const Params& p) const;
};

struct ApiConfig {
    std::string host = "127.0.0.1";
    int port = 8080; // 0: any free port
    std::filesystem::path store_root;
    std::optional<std::filesystem::path> mask_file; // region names; default: the 7 NCA regions
    std::optional<std::filesystem::path> static_dir; // served under /
    bool cors = false;
    ServiceLimits limits;
};

// HTTP front end over Service. All endpoints live under /api; errors are
// application/problem+json bodies with a machine-readable `code`.
class Server {
public:
    explicit Server(ApiConfig config);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and returns the port; then run() blocks until stop().
    int bind();
    void run();
    // bind() + run() on a background thread.
    int start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace dcpviz::api

#include "dcpviz/api.hpp"

#include <httplib.h>

#include <thread>

namespace dcpviz::api {

namespace {

constexpr const char* kProblemType = "application/problem+json";

void send_problem(httplib::Response& res, int status, const std::string& code, const std::string& detail,
                  const std::string& instance) {
    Json j{{"type", "about:blank"},
           {"title", httplib::status_message(status)},
           {"status", status},
           {"code", code},
           {"detail", detail},
           {"instance", instance}};
    res.status = status;
    res.set_content(j.dump(), kProblemType);
}

Params params_of(const httplib::Request& req) {
    Params p;
    for (const auto& [k, v] : req.params)
        if (!p.emplace(k, v).second) throw ApiError(Errc::BadParameter, "parameter '" + k + "' given twice");
    return p;
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

const char* kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>DCPViz</title></head>
<body><h1>DCPViz API</h1>
<p>No UI assets are configured. Endpoints:</p>
<ul>
<li>/api/catalog</li><li>/api/products</li><li>/api/snapshot/{index}?fmt=geojson|thumb</li>
<li>/api/heatmap</li><li>/api/timeseries</li><li>/api/rcp-compare</li><li>/api/treemap</li>
<li>/api/annotations</li>
</ul></body></html>
)";

} // namespace

struct Server::Impl {
    ApiConfig config;
    store::Store store;
    Service service;
    httplib::Server http;
    std::thread thread;
    int port = -1;

    static std::map<int, std::string> region_names(const ApiConfig& c) {
        if (c.mask_file) return grid::load_region_mask(c.mask_file->string()).names;
        return grid::nca_region_names();
    }

    explicit Impl(ApiConfig c)
        : config(std::move(c)), store(config.store_root), service(store, region_names(config), config.limits) {
        routes();
    }

    template <typename F>
    httplib::Server::Handler guarded(F&& f) {
        return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const ApiError& e) {
                send_problem(res, http_status(e.errc()), e.code(), e.what(), req.path);
            } catch (const Error& e) {
                send_problem(res, 500, e.code(), e.what(), req.path);
            } catch (const std::exception& e) {
                send_problem(res, 500, "internal", e.what(), req.path);
            }
        };
    }

    void routes() {
        auto& s = service;
        http.Get("/api/health", guarded([](const auto&, auto& res) { send_json(res, {{"status", "ok"}}); }));
        http.Get("/api/catalog", guarded([&s](const auto& req, auto& res) {
                     if (!req.params.empty()) throw ApiError(Errc::UnknownParameter, "catalog takes no parameters");
                     send_json(res, s.catalog());
                 }));
        http.Get(R"(/api/snapshot/([^/]+))", guarded([&s](const auto& req, auto& res) {
                     auto blob = s.snapshot(req.matches[1].str(), params_of(req));
                     res.set_content(std::move(blob.body), blob.media_type);
                 }));
        http.Get("/api/products", guarded([&s](const auto& req, auto& res) { send_json(res, s.products(params_of(req))); }));
        http.Get("/api/heatmap", guarded([&s](const auto& req, auto& res) { send_json(res, s.heatmap(params_of(req))); }));
        http.Get("/api/timeseries",
                 guarded([&s](const auto& req, auto& res) { send_json(res, s.timeseries(params_of(req))); }));
        http.Get("/api/rcp-compare",
                 guarded([&s](const auto& req, auto& res) { send_json(res, s.rcp_compare(params_of(req))); }));
        http.Get("/api/treemap", guarded([&s](const auto& req, auto& res) { send_json(res, s.treemap(params_of(req))); }));
        http.Get("/api/annotations",
                 guarded([&s](const auto& req, auto& res) { send_json(res, s.annotations(params_of(req))); }));
        http.Post("/api/annotations", guarded([&s](const auto& req, auto& res) {
                      if (!req.params.empty()) throw ApiError(Errc::UnknownParameter, "POST takes a JSON body only");
                      send_json(res, s.add_annotation(req.body), 201);
                  }));
        http.Get("/api/.*", guarded([](const auto& req, auto&) {
                     throw ApiError(Errc::NotFound, "no endpoint " + req.path);
                 }));

        if (config.static_dir) {
            if (!http.set_mount_point("/", config.static_dir->string()))
                throw ApiError(Errc::Internal, "static directory " + config.static_dir->string() + " is missing");
        } else {
            http.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kIndexPage, "text/html"); });
        }

        http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            send_problem(res, res.status, res.status == 404 ? "not_found" : "http_error",
                         httplib::status_message(res.status), req.path);
        });
        if (config.cors) {
            http.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
                res.set_header("Access-Control-Allow-Origin", "*");
            });
            http.Options("/api/.*", [](const httplib::Request&, httplib::Response& res) {
                res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
                res.set_header("Access-Control-Allow-Headers", "Content-Type");
                res.status = 204;
            });
        }
    }
};

Server::Server(ApiConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() { stop(); }

int Server::bind() {
    auto& i = *impl_;
    if (i.config.port == 0) {
        i.port = i.http.bind_to_any_port(i.config.host);
    } else {
        i.port = i.http.bind_to_port(i.config.host, i.config.port) ? i.config.port : -1;
    }
    if (i.port < 0)
        throw ApiError(Errc::Internal, "cannot bind " + i.config.host + ":" + std::to_string(i.config.port));
    return i.port;
}

void Server::run() { impl_->http.listen_after_bind(); }

int Server::start() {
    int port = bind();
    impl_->thread = std::thread([this] { run(); });
    impl_->http.wait_until_ready();
    return port;
}

void Server::stop() {
    if (!impl_) return;
    impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace dcpviz::api

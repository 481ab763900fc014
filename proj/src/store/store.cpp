#include "dcpviz/store.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

namespace dcpviz::store {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::InvalidPart: return "invalid_part";
    case Errc::StorageFull: return "storage_full";
    case Errc::IoFailure: return "io_failure";
    case Errc::NotFound: return "not_found";
    case Errc::InvalidAnnotation: return "invalid_annotation";
    }
    return "unknown";
}

const std::vector<std::string>& registered_models() {
    // Models of the NEX-DCP30 ensemble.
    static const std::vector<std::string> models{
        "ACCESS1-0",    "BNU-ESM",       "CCSM4",          "CESM1-BGC",    "CESM1-CAM5",     "CMCC-CM",
        "CNRM-CM5",     "CSIRO-Mk3-6-0", "CanESM2",        "FGOALS-g2",    "FIO-ESM",        "GFDL-CM3",
        "GFDL-ESM2G",   "GFDL-ESM2M",    "GISS-E2-H-CC",   "GISS-E2-R",    "GISS-E2-R-CC",   "HadGEM2-AO",
        "HadGEM2-CC",   "HadGEM2-ES",    "IPSL-CM5A-LR",   "IPSL-CM5A-MR", "MIROC-ESM",      "MIROC-ESM-CHEM",
        "MIROC5",       "MPI-ESM-LR",    "MPI-ESM-MR",     "MRI-CGCM3",    "NorESM1-M",      "bcc-csm1-1",
        "bcc-csm1-1-m", "inmcm4",        "ensemble-mean",
    };
    return models;
}

bool is_registered_model(std::string_view model) {
    const auto& m = registered_models();
    return std::find(m.begin(), m.end(), model) != m.end();
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw StoreError(Errc::InvalidPart, msg); }

// Dataset and variable tokens: letters, digits, '-' and '.'; no separators.
bool plain_token(std::string_view s) {
    if (s.empty() || s == "." || s == "..") return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '.';
    });
}

int parse_int(std::string_view s, const char* what) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) invalid(std::string("bad ") + what + " '" + std::string(s) + "'");
    return v;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("bad hash");
    return v;
}

std::string now_utc() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

[[noreturn]] void io_fail(const std::string& what, int err) {
    throw StoreError(err == ENOSPC || err == EDQUOT ? Errc::StorageFull : Errc::IoFailure,
                     what + ": " + std::strerror(err));
}

} // namespace

std::string DataIndex::date() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02d-01", year, month);
    return buf;
}

std::string DataIndex::str() const { return dataset + "_" + model + "_" + variable + "_" + date(); }

DataIndex make_index(std::string_view dataset, std::string_view model, std::string_view variable, int year,
                     int month) {
    if (!plain_token(dataset)) invalid("invalid dataset '" + std::string(dataset) + "'");
    if (!is_registered_model(model)) invalid("unregistered model '" + std::string(model) + "'");
    if (!plain_token(variable)) invalid("invalid variable '" + std::string(variable) + "'");
    if (year < 0 || year > 9999) invalid("year out of range: " + std::to_string(year));
    if (month < 1 || month > 12) invalid("month out of range: " + std::to_string(month));
    return {std::string(dataset), std::string(model), std::string(variable), year, month};
}

DataIndex parse_index(std::string_view text) {
    auto first = text.find('_');
    if (first == std::string_view::npos) invalid("index has no separators: '" + std::string(text) + "'");
    std::string_view dataset = text.substr(0, first);
    std::string_view rest = text.substr(first + 1);
    // longest registered model that prefixes the remainder
    std::string_view model;
    for (const auto& m : registered_models())
        if (rest.size() > m.size() && rest.substr(0, m.size()) == m && rest[m.size()] == '_' && m.size() > model.size())
            model = m;
    if (model.empty()) invalid("no registered model in index '" + std::string(text) + "'");
    rest = rest.substr(model.size() + 1);
    auto last = rest.rfind('_');
    if (last == std::string_view::npos) invalid("index lacks a date: '" + std::string(text) + "'");
    std::string_view variable = rest.substr(0, last);
    std::string_view date = rest.substr(last + 1);
    if (date.size() != 10 || date[4] != '-' || date[7] != '-' || date.substr(8) != "01")
        invalid("index date must be YYYY-MM-01: '" + std::string(date) + "'");
    int year = parse_int(date.substr(0, 4), "year");
    int month = parse_int(date.substr(5, 2), "month");
    return make_index(dataset, model, variable, year, month);
}

std::string_view to_string(ProductKind kind) {
    switch (kind) {
    case ProductKind::GeoJson: return "geojson";
    case ProductKind::Thumbnail: return "thumbnail";
    case ProductKind::Aggregate: return "aggregate";
    }
    return "?";
}

std::string_view extension(ProductKind kind) {
    switch (kind) {
    case ProductKind::GeoJson: return "geojson";
    case ProductKind::Thumbnail: return "png";
    case ProductKind::Aggregate: return "csv";
    }
    return "bin";
}

std::string_view media_type(ProductKind kind) {
    switch (kind) {
    case ProductKind::GeoJson: return "application/geo+json";
    case ProductKind::Thumbnail: return "image/png";
    case ProductKind::Aggregate: return "text/csv";
    }
    return "application/octet-stream";
}

ProductKind parse_kind(std::string_view text) {
    for (auto k : kAllKinds)
        if (text == to_string(k) || text == extension(k)) return k;
    invalid("unknown product kind '" + std::string(text) + "'");
}

bool Query::matches(const ProductKey& key) const {
    const auto& ix = key.index;
    if (dataset && ix.dataset != *dataset) return false;
    if (model && ix.model != *model) return false;
    if (variable && ix.variable != *variable) return false;
    if (scenario && key.scenario != *scenario) return false;
    if (years && (ix.year < years->first || ix.year > years->second)) return false;
    if (!months.empty() && !months.count(ix.month)) return false;
    if (kind && key.kind != *kind) return false;
    return true;
}

void atomic_write(const fs::path& target, const void* data, std::size_t size) {
    static std::atomic<std::uint64_t> serial{0};
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) io_fail("cannot create " + target.parent_path().string(), ec.value());
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(serial++);
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("cannot create " + tmp.string(), errno);
    const auto* p = static_cast<const char*>(data);
    std::size_t left = size;
    while (left > 0) {
        ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            ::unlink(tmp.c_str());
            io_fail("write to " + tmp.string() + " failed", err);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fdatasync(fd) != 0 || ::close(fd) != 0) {
        int err = errno;
        ::unlink(tmp.c_str());
        io_fail("flush of " + tmp.string() + " failed", err);
    }
    if (::rename(tmp.c_str(), target.c_str()) != 0) {
        int err = errno;
        ::unlink(tmp.c_str());
        io_fail("rename to " + target.string() + " failed", err);
    }
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError(Errc::NotFound, "cannot open " + path.string());
    std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw StoreError(Errc::IoFailure, "read of " + path.string() + " failed");
    return out;
}

namespace {

json receipt_to_json(const Receipt& r) {
    return json{{"index", r.key.index.str()},
                {"scenario", grid::to_string(r.key.scenario)},
                {"kind", to_string(r.key.kind)},
                {"size", r.size},
                {"params", hex64(r.params_hash)},
                {"path", r.path}};
}

Receipt receipt_from_json(const json& j) {
    Receipt r;
    r.key.index = parse_index(j.at("index").get<std::string>());
    r.key.scenario = grid::parse_scenario(j.at("scenario").get<std::string>());
    r.key.kind = parse_kind(j.at("kind").get<std::string>());
    r.size = j.at("size").get<std::uint64_t>();
    r.params_hash = parse_hex64(j.at("params").get<std::string>());
    r.path = j.at("path").get<std::string>();
    return r;
}

json annotation_to_json(const Annotation& a) {
    json j{{"id", a.id}, {"author", a.author}, {"text", a.text}, {"created_at", a.created_at}};
    j["pin"] = a.pin ? json{{"lat", a.pin->lat}, {"lon", a.pin->lon}} : json(nullptr);
    j["snapshot"] = a.snapshot ? json(a.snapshot->str()) : json(nullptr);
    return j;
}

Annotation annotation_from_json(const json& j) {
    Annotation a;
    a.id = j.at("id").get<std::uint64_t>();
    a.author = j.at("author").get<std::string>();
    a.text = j.at("text").get<std::string>();
    a.created_at = j.at("created_at").get<std::string>();
    if (j.contains("pin") && !j["pin"].is_null()) a.pin = Pin{j["pin"].at("lat").get<double>(), j["pin"].at("lon").get<double>()};
    if (j.contains("snapshot") && !j["snapshot"].is_null()) a.snapshot = parse_index(j["snapshot"].get<std::string>());
    return a;
}

// Lines of an append-only log; a torn or unparsable line is skipped.
template <typename T, typename F>
std::vector<T> read_log(const fs::path& file, F&& parse) {
    std::vector<T> out;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(parse(json::parse(line)));
        } catch (const std::exception&) {
        }
    }
    return out;
}

} // namespace

std::string receipt_json(const Receipt& r) { return receipt_to_json(r).dump(); }
std::string annotation_json(const Annotation& a) { return annotation_to_json(a).dump(); }

Store::Store(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) io_fail("cannot create store root " + root_.string(), ec.value());
    load_catalog();
    load_annotations();
}

fs::path Store::product_path(const ProductKey& key) const {
    const auto& ix = key.index;
    return root_ / ix.dataset / ix.model / std::string(grid::to_string(key.scenario)) / ix.variable /
           (ix.date() + "." + std::string(extension(key.kind)));
}

std::mutex& Store::lock_for(const ProductKey& key) {
    std::size_t h = std::hash<std::string>{}(key.index.str());
    h = h * 31 + static_cast<std::size_t>(key.scenario) * 7 + static_cast<std::size_t>(key.kind);
    return key_locks_[h % key_locks_.size()];
}

void Store::append_line(const fs::path& file, const std::string& line) {
    int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("cannot open " + file.string(), errno);
    std::string data = line + "\n";
    // one write call per record keeps records whole under O_APPEND
    ssize_t n = ::write(fd, data.data(), data.size());
    int err = errno;
    ::close(fd);
    if (n != static_cast<ssize_t>(data.size())) io_fail("append to " + file.string() + " failed", n < 0 ? err : EIO);
}

void Store::load_catalog() {
    const fs::path file = root_ / "catalog.jsonl";
    if (!fs::exists(file)) {
        rebuild_catalog();
        return;
    }
    for (auto& r : read_log<Receipt>(file, receipt_from_json)) {
        if (fs::exists(root_ / r.path)) catalog_[r.key] = std::move(r);
        else catalog_.erase(r.key);
    }
    std::string compacted;
    for (const auto& [key, r] : catalog_) compacted += receipt_json(r) + "\n";
    atomic_write(file, compacted.data(), compacted.size());
}

std::size_t Store::rebuild_catalog() {
    std::unique_lock lock(catalog_mutex_);
    catalog_.clear();
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(root_, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (!it->is_regular_file()) continue;
        const fs::path rel = fs::relative(it->path(), root_);
        std::vector<std::string> parts;
        for (const auto& p : rel) parts.push_back(p.string());
        if (parts.size() != 5) continue;
        const std::string& file = parts[4];
        auto dot = file.find('.');
        if (dot == std::string::npos || file.find(".tmp.") != std::string::npos) continue;
        try {
            ProductKey key;
            key.scenario = grid::parse_scenario(parts[2]);
            key.kind = parse_kind(file.substr(dot + 1));
            key.index = parse_index(parts[0] + "_" + parts[1] + "_" + parts[3] + "_" + file.substr(0, dot));
            if (product_path(key) != it->path()) continue;
            catalog_[key] = Receipt{key, static_cast<std::uint64_t>(it->file_size()), 0, rel.string()};
        } catch (const std::exception&) {
        }
    }
    std::string compacted;
    for (const auto& [key, r] : catalog_) compacted += receipt_json(r) + "\n";
    atomic_write(root_ / "catalog.jsonl", compacted.data(), compacted.size());
    return catalog_.size();
}

Receipt Store::put_product(const ProductKey& key, const std::vector<std::uint8_t>& bytes, std::uint64_t params_hash) {
    const fs::path path = product_path(key);
    Receipt r{key, bytes.size(), params_hash, fs::relative(path, root_).string()};
    std::lock_guard key_lock(lock_for(key));
    atomic_write(path, bytes.data(), bytes.size());
    std::unique_lock lock(catalog_mutex_);
    append_line(root_ / "catalog.jsonl", receipt_json(r));
    catalog_[key] = r;
    return r;
}

std::vector<std::uint8_t> Store::get_product(const ProductKey& key) const {
    if (!find(key))
        throw StoreError(Errc::NotFound, "no " + std::string(to_string(key.kind)) + " for " + key.index.str() + " (" +
                                             std::string(grid::to_string(key.scenario)) + ")");
    return read_file(product_path(key));
}

std::optional<Receipt> Store::find(const ProductKey& key) const {
    std::shared_lock lock(catalog_mutex_);
    auto it = catalog_.find(key);
    if (it == catalog_.end()) return std::nullopt;
    return it->second;
}

std::vector<grid::Scenario> Store::scenarios_of(const DataIndex& index) const {
    std::shared_lock lock(catalog_mutex_);
    std::vector<grid::Scenario> out;
    for (auto s : grid::kAllScenarios)
        for (auto k : kAllKinds)
            if (catalog_.count(ProductKey{index, s, k})) {
                out.push_back(s);
                break;
            }
    return out;
}

bool Store::contains(const DataIndex& index) const { return !scenarios_of(index).empty(); }

namespace {

auto date_order(const ProductKey& a, const ProductKey& b) {
    return std::tie(a.index.year, a.index.month, a.index.variable, a.index.dataset, a.index.model, a.scenario,
                    a.kind) < std::tie(b.index.year, b.index.month, b.index.variable, b.index.dataset,
                                       b.index.model, b.scenario, b.kind);
}

} // namespace

std::vector<Receipt> Store::records(const Query& q) const {
    std::vector<Receipt> out;
    {
        std::shared_lock lock(catalog_mutex_);
        for (const auto& [key, r] : catalog_)
            if (q.matches(key)) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const Receipt& a, const Receipt& b) { return date_order(a.key, b.key); });
    return out;
}

std::vector<DataIndex> Store::query(const Query& q) const {
    std::vector<DataIndex> out;
    std::set<DataIndex> seen;
    for (auto& r : records(q))
        if (seen.insert(r.key.index).second) out.push_back(std::move(r.key.index));
    return out;
}

void Store::load_annotations() {
    const fs::path file = root_ / "annotations.jsonl";
    std::map<std::uint64_t, Annotation> by_id;
    for (auto& a : read_log<Annotation>(file, annotation_from_json)) by_id[a.id] = std::move(a);
    for (auto& [id, a] : by_id) {
        annotations_.push_back(std::move(a));
        next_annotation_id_ = std::max(next_annotation_id_, id + 1);
    }
    if (!fs::exists(file)) return;
    std::string compacted;
    for (const auto& a : annotations_) compacted += annotation_json(a) + "\n";
    atomic_write(file, compacted.data(), compacted.size());
}

Annotation Store::add_annotation(const AnnotationDraft& draft) {
    if (draft.author.empty()) throw StoreError(Errc::InvalidAnnotation, "annotation author must not be empty");
    if (draft.pin && (!std::isfinite(draft.pin->lat) || !std::isfinite(draft.pin->lon) ||
                      std::abs(draft.pin->lat) > 90.0 || std::abs(draft.pin->lon) > 360.0))
        throw StoreError(Errc::InvalidAnnotation, "pin coordinates out of range");
    std::lock_guard lock(annotation_mutex_);
    Annotation a{next_annotation_id_, draft.author, draft.text, now_utc(), draft.pin, draft.snapshot};
    append_line(root_ / "annotations.jsonl", annotation_json(a));
    ++next_annotation_id_;
    annotations_.push_back(a);
    return a;
}

std::vector<Annotation> Store::list_annotations(const AnnotationFilter& filter) const {
    std::lock_guard lock(annotation_mutex_);
    if (filter.empty()) return annotations_;
    if (filter.bbox && filter.bbox->size() != 4)
        throw StoreError(Errc::InvalidAnnotation, "bbox needs west,south,east,north");
    std::vector<Annotation> out;
    for (const auto& a : annotations_) {
        bool hit = true;
        if (filter.snapshot) hit = a.snapshot && *a.snapshot == *filter.snapshot;
        if (hit && filter.bbox) {
            const auto& b = *filter.bbox;
            hit = a.pin && a.pin->lon >= b[0] && a.pin->lat >= b[1] && a.pin->lon <= b[2] && a.pin->lat <= b[3];
        }
        if (hit) out.push_back(a);
    }
    return out;
}

} // namespace dcpviz::store

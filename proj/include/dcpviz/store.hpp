#pragma once

#include "dcpviz/error.hpp"
#include "dcpviz/grid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace dcpviz::store {

enum class Errc {
    InvalidPart,
    StorageFull,
    IoFailure,
    NotFound,
    InvalidAnnotation,
};

std::string to_code(Errc errc);

using StoreError = ModuleError<Errc>;

// Climate models whose names may appear in an index string.
const std::vector<std::string>& registered_models();
bool is_registered_model(std::string_view model);

// `<dataset>_<model>_<variable>_<YYYY-MM-01>`. The scenario is not part of the
// key; the store keeps it as metadata next to each product.
struct DataIndex {
    std::string dataset;
    std::string model;
    std::string variable;
    int year = 0;
    int month = 1;

    std::string str() const;
    std::string date() const; // YYYY-MM-01
    auto operator<=>(const DataIndex&) const = default;
};

inline constexpr std::string_view kDefaultDataset = "NEX-DCP";

// Throws InvalidPart on empty parts, separators inside parts, unregistered
// models or a month outside 1..12.
DataIndex make_index(std::string_view dataset, std::string_view model, std::string_view variable, int year,
                     int month);
DataIndex parse_index(std::string_view text);

enum class ProductKind { GeoJson, Thumbnail, Aggregate };

inline constexpr std::array<ProductKind, 3> kAllKinds{ProductKind::GeoJson, ProductKind::Thumbnail,
                                                      ProductKind::Aggregate};

std::string_view to_string(ProductKind kind);    // geojson, thumbnail, aggregate
std::string_view extension(ProductKind kind);    // geojson, png, csv
std::string_view media_type(ProductKind kind);
ProductKind parse_kind(std::string_view text);   // InvalidPart

struct ProductKey {
    DataIndex index;
    grid::Scenario scenario = grid::Scenario::Historical;
    ProductKind kind = ProductKind::GeoJson;

    auto operator<=>(const ProductKey&) const = default;
};

// One catalog line.
struct Receipt {
    ProductKey key;
    std::uint64_t size = 0;
    std::uint64_t params_hash = 0; // generation parameters the bytes depend on
    std::string path;              // relative to the store root
};

struct Query {
    std::optional<std::string> dataset;
    std::optional<std::string> model;
    std::optional<std::string> variable;
    std::optional<grid::Scenario> scenario;
    std::optional<std::pair<int, int>> years; // inclusive
    std::set<int> months;                     // empty = all
    std::optional<ProductKind> kind;

    bool matches(const ProductKey& key) const;
};

struct Pin {
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const Pin&) const = default;
};

struct Annotation {
    std::uint64_t id = 0;
    std::string author;
    std::string text;
    std::string created_at; // UTC, ISO 8601
    std::optional<Pin> pin;
    std::optional<DataIndex> snapshot;
    bool operator==(const Annotation&) const = default;
};

struct AnnotationDraft {
    std::string author;
    std::string text;
    std::optional<Pin> pin;
    std::optional<DataIndex> snapshot;
};

struct AnnotationFilter {
    std::optional<DataIndex> snapshot;
    std::optional<grid::Axis> bbox; // west, south, east, north
    bool empty() const { return !snapshot && !bbox; }
};

// Products live at `<root>/<dataset>/<model>/<scenario>/<variable>/<date>.<ext>`
// with an append-only catalog (catalog.jsonl) and annotation log
// (annotations.jsonl) at the root. Both logs are compacted when a Store opens.
class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    // Atomic replace: readers see the old bytes or the new ones, never a mix.
    Receipt put_product(const ProductKey& key, const std::vector<std::uint8_t>& bytes,
                        std::uint64_t params_hash = 0);
    std::vector<std::uint8_t> get_product(const ProductKey& key) const; // NotFound
    std::optional<Receipt> find(const ProductKey& key) const;
    bool contains(const DataIndex& index) const;
    // Scenarios holding any product for `index`, in canonical order.
    std::vector<grid::Scenario> scenarios_of(const DataIndex& index) const;

    // Distinct indices matching every supplied predicate, by date then variable.
    std::vector<DataIndex> query(const Query& q) const;
    // Catalog records matching the query, by date, variable, scenario, kind.
    std::vector<Receipt> records(const Query& q = {}) const;

    Annotation add_annotation(const AnnotationDraft& draft);
    // Unfiltered: everything. Otherwise annotations matching every given
    // predicate (snapshot equality, pin inside the bbox).
    std::vector<Annotation> list_annotations(const AnnotationFilter& filter = {}) const;

    // Rebuilds the catalog from the product files on disk (parameter hashes
    // are lost). Returns the number of products found.
    std::size_t rebuild_catalog();

    std::filesystem::path product_path(const ProductKey& key) const;

private:
    std::filesystem::path root_;
    mutable std::shared_mutex catalog_mutex_;
    std::map<ProductKey, Receipt> catalog_;
    mutable std::mutex annotation_mutex_;
    std::vector<Annotation> annotations_;
    std::uint64_t next_annotation_id_ = 1;
    std::array<std::mutex, 64> key_locks_;

    std::mutex& lock_for(const ProductKey& key);
    void load_catalog();
    void load_annotations();
    void append_line(const std::filesystem::path& file, const std::string& line);
};

// Write `bytes` to `target` through a temporary sibling and a rename. Maps
// ENOSPC to StorageFull and other failures to IoFailure.
void atomic_write(const std::filesystem::path& target, const void* data, std::size_t size);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

std::string receipt_json(const Receipt& r);
std::string annotation_json(const Annotation& a);

} // namespace dcpviz::store

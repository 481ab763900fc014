#pragma once

// Reader and writer for the NetCDF classic binary format (CDF-1 and CDF-2).
//
// Layout reminder (all integers big-endian):
//   header = magic numrecs dim_list gatt_list var_list
//   data   = fixed-size variables in header order, then records, where each
//            record interleaves one slab of every record variable.
// NetCDF-4 (HDF5 container) and CDF-5 files are detected and rejected.

#include "dcpviz/error.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace dcpviz::nc {

enum class Errc {
    BadMagic,
    Truncated,
    Unsupported,
    Malformed,
    NoSuchVariable,
    OutOfBounds,
    TypeMismatch,
    SpecInvalid,
    Io,
};

std::string to_code(Errc errc);

using NetcdfError = ModuleError<Errc>;

enum class Format { Cdf1 = 1, Cdf2 = 2 };

enum class Type : std::int32_t {
    Byte = 1,
    Char = 2,
    Short = 3,
    Int = 4,
    Float = 5,
    Double = 6,
};

std::size_t type_size(Type type);
std::string_view type_name(Type type);

// Typed attribute payload. NC_CHAR attributes are text; everything else is a
// vector of the matching C++ type.
class Attribute {
public:
    using Value = std::variant<std::string,
                               std::vector<std::int8_t>,
                               std::vector<std::int16_t>,
                               std::vector<std::int32_t>,
                               std::vector<float>,
                               std::vector<double>>;

    Attribute() = default;
    explicit Attribute(Value value) : value_(std::move(value)) {}

    static Attribute text(std::string s) { return Attribute(std::move(s)); }
    static Attribute of(double v) { return Attribute(std::vector<double>{v}); }
    static Attribute of(float v) { return Attribute(std::vector<float>{v}); }
    static Attribute of(std::int32_t v) { return Attribute(std::vector<std::int32_t>{v}); }
    static Attribute of(std::int16_t v) { return Attribute(std::vector<std::int16_t>{v}); }

    Type type() const;
    std::size_t size() const;
    const Value& value() const noexcept { return value_; }

    // First element widened to double; nullopt for text or empty values.
    std::optional<double> as_double() const;
    // Text content; nullptr when the attribute is numeric.
    const std::string* as_text() const;

    bool operator==(const Attribute&) const = default;

private:
    Value value_ = std::string{};
};

// Insertion-ordered name -> attribute table. Order is significant on disk.
class Attributes {
public:
    using Entry = std::pair<std::string, Attribute>;

    void set(std::string name, Attribute value);
    const Attribute* find(std::string_view name) const;
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool operator==(const Attributes&) const = default;

private:
    std::vector<Entry> entries_;
};

struct Dimension {
    std::string name;
    std::uint64_t length = 0; // for the unlimited dimension: current numrecs
    bool is_unlimited = false;

    bool operator==(const Dimension&) const = default;
};

struct Variable {
    std::string name;
    std::vector<std::size_t> dim_ids;
    Attributes attributes;
    Type type = Type::Float;
    std::uint64_t vsize = 0;  // padded bytes per variable (fixed) or per record
    std::uint64_t begin = 0;  // file offset of the first element

    std::optional<std::string> units() const;
};

// Parsed header. Immutable once returned by parse_header; safe to share
// between threads issuing concurrent read_slab calls.
struct NcFile {
    Format format = Format::Cdf1;
    std::uint64_t numrecs = 0;
    std::vector<Dimension> dimensions;
    Attributes global_attributes;
    std::vector<Variable> variables;
    std::uint64_t header_size = 0;
    std::uint64_t record_size = 0; // bytes per record across all record variables

    const Variable* find_variable(std::string_view name) const;
    const Variable& variable(std::string_view name) const; // throws NoSuchVariable
    std::optional<std::size_t> find_dimension(std::string_view name) const;
    std::optional<std::size_t> unlimited_dimension() const;
    bool is_record_variable(const Variable& var) const;
    std::vector<std::uint64_t> shape(const Variable& var) const;
    std::vector<std::string> dimension_names(const Variable& var) const;
};

// Random-access byte provider. Implementations must be safe for concurrent
// read_at calls; no shared cursor.
class ByteSource {
public:
    virtual ~ByteSource() = default;
    virtual std::uint64_t size() const = 0;
    // Fills `out` from `offset`; throws Truncated if the range runs past size().
    virtual void read_at(std::uint64_t offset, std::span<std::byte> out) const = 0;
};

class MemorySource final : public ByteSource {
public:
    explicit MemorySource(std::vector<std::byte> bytes) : bytes_(std::move(bytes)) {}
    std::uint64_t size() const override { return bytes_.size(); }
    void read_at(std::uint64_t offset, std::span<std::byte> out) const override;

private:
    std::vector<std::byte> bytes_;
};

// pread-backed file source.
class FileSource final : public ByteSource {
public:
    explicit FileSource(const std::string& path);
    ~FileSource() override;
    FileSource(const FileSource&) = delete;
    FileSource& operator=(const FileSource&) = delete;

    std::uint64_t size() const override { return size_; }
    void read_at(std::uint64_t offset, std::span<std::byte> out) const override;
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    int fd_ = -1;
    std::uint64_t size_ = 0;
};

NcFile parse_header(const ByteSource& source);
NcFile parse_header(std::span<const std::byte> bytes);

// Hyperslab in row-major order of the variable's dimensions. Packing is
// applied (raw * scale_factor + add_offset); cells equal to _FillValue, or
// NaN, are flagged in `missing` and hold 0 in `values`.
struct Slab {
    std::vector<std::uint64_t> shape;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;
    std::string units;

    std::size_t size() const noexcept { return values.size(); }
    std::size_t missing_count() const;
};

Slab read_slab(const ByteSource& source, const NcFile& file, std::string_view var,
               std::span<const std::uint64_t> start, std::span<const std::uint64_t> count);

// Whole variable, unpacked.
Slab read_variable(const ByteSource& source, const NcFile& file, std::string_view var);

// Raw stored values widened to double, no packing or fill handling.
std::vector<double> read_raw(const ByteSource& source, const NcFile& file, std::string_view var,
                             std::span<const std::uint64_t> start,
                             std::span<const std::uint64_t> count);

// Contents of a char variable as text (trailing NULs stripped).
std::string read_text(const ByteSource& source, const NcFile& file, std::string_view var);

// ---------------------------------------------------------------------------
// Writer

// Variable payload: raw values in the variable's stored type (converted with
// static_cast on encode) or text for char variables.
using VariableData = std::variant<std::vector<double>, std::string>;

class Writer {
public:
    explicit Writer(Format format = Format::Cdf1) : format_(format) {}

    std::size_t add_dimension(std::string name, std::uint64_t length, bool unlimited = false);
    void set_global(std::string name, Attribute value);
    std::size_t add_variable(std::string name, Type type, std::vector<std::size_t> dim_ids,
                             Attributes attributes = {});
    void set_data(std::size_t var_index, VariableData data);

    std::vector<std::byte> encode() const;

private:
    Format format_;
    std::vector<Dimension> dims_;
    Attributes globals_;
    std::vector<Variable> vars_;
    std::vector<VariableData> data_;
};

// ---------------------------------------------------------------------------
// Synthetic desk-scale archives

enum class Generator {
    Climate,  // smooth seasonal field shaped after the variable name
    Constant,
    Random,   // uniform in [random_low, random_high)
};

struct AxisSpec {
    std::size_t count = 0;
    double start = 0.0;
    double step = 1.0;
};

struct SyntheticVariable {
    std::string name;
    std::string units;
    Type type = Type::Float;
    std::optional<double> scale_factor;
    std::optional<double> add_offset;
    std::optional<double> fill_value;
    Generator generator = Generator::Climate;
    double constant = 0.0;
    double random_low = 0.0;
    double random_high = 1.0;
};

struct SyntheticSpec {
    Format format = Format::Cdf1;
    AxisSpec lat{4, 25.0, 1.0};
    AxisSpec lon{5, -120.0, 1.0};
    int start_year = 2036;
    int start_month = 1;
    std::size_t months = 60; // one file spans 5 years of monthly data by default
    bool unlimited_time = true;
    bool descending_lat = false;
    std::vector<SyntheticVariable> variables;
    std::uint64_t seed = 1;
    std::string dataset = "NEX-DCP";
    std::string model = "CESM1-CAM5";
    std::string scenario = "rcp85";
    // (lat, lon) cells written as _FillValue at every time step.
    std::vector<std::pair<std::size_t, std::size_t>> missing_cells;
};

// Epoch of the synthetic time axis ("days since 1950-01-01").
inline constexpr int kTimeEpochYear = 1950;

void validate(const SyntheticSpec& spec);

// Raw values (stored type domain, after conversion) for one variable, laid
// out (time, lat, lon). What read_raw must return for the whole variable.
std::vector<double> synthetic_values(const SyntheticSpec& spec, const SyntheticVariable& var);

std::vector<std::byte> write_synthetic_archive(const SyntheticSpec& spec);

// JSON archive specs. The document is one spec object or {"archives": [...]}.
// A spec with "split_years": n becomes one spec per n-year chunk. Unknown keys
// and ill-typed values throw SpecInvalid.
std::vector<SyntheticSpec> parse_synthetic_specs(std::string_view json_text);
// <model>_<scenario>_<first year>-<last year>.nc
std::string archive_file_name(const SyntheticSpec& spec);

} // namespace dcpviz::nc

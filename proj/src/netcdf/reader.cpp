#include "dcpviz/netcdf.hpp"

#include "big_endian.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <limits>
#include <numeric>
#include <sys/stat.h>
#include <unistd.h>

namespace dcpviz::nc {

using detail::load_u16;
using detail::load_u32;
using detail::load_u64;
using detail::padded4;

std::string to_code(Errc errc) {
    switch (errc) {
    case Errc::BadMagic: return "bad_magic";
    case Errc::Truncated: return "truncated";
    case Errc::Unsupported: return "unsupported";
    case Errc::Malformed: return "malformed";
    case Errc::NoSuchVariable: return "no_such_variable";
    case Errc::OutOfBounds: return "out_of_bounds";
    case Errc::TypeMismatch: return "type_mismatch";
    case Errc::SpecInvalid: return "spec_invalid";
    case Errc::Io: return "io_failure";
    }
    return "unknown";
}

std::size_t type_size(Type type) {
    switch (type) {
    case Type::Byte:
    case Type::Char: return 1;
    case Type::Short: return 2;
    case Type::Int:
    case Type::Float: return 4;
    case Type::Double: return 8;
    }
    return 0;
}

std::string_view type_name(Type type) {
    switch (type) {
    case Type::Byte: return "byte";
    case Type::Char: return "char";
    case Type::Short: return "short";
    case Type::Int: return "int";
    case Type::Float: return "float";
    case Type::Double: return "double";
    }
    return "?";
}

// --- Attribute -------------------------------------------------------------

Type Attribute::type() const {
    switch (value_.index()) {
    case 0: return Type::Char;
    case 1: return Type::Byte;
    case 2: return Type::Short;
    case 3: return Type::Int;
    case 4: return Type::Float;
    default: return Type::Double;
    }
}

std::size_t Attribute::size() const {
    return std::visit([](const auto& v) { return v.size(); }, value_);
}

std::optional<double> Attribute::as_double() const {
    return std::visit(
        [](const auto& v) -> std::optional<double> {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>) {
                return std::nullopt;
            } else {
                if (v.empty()) return std::nullopt;
                return static_cast<double>(v.front());
            }
        },
        value_);
}

const std::string* Attribute::as_text() const { return std::get_if<std::string>(&value_); }

void Attributes::set(std::string name, Attribute value) {
    for (auto& [n, v] : entries_) {
        if (n == name) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(std::move(name), std::move(value));
}

const Attribute* Attributes::find(std::string_view name) const {
    for (const auto& [n, v] : entries_)
        if (n == name) return &v;
    return nullptr;
}

std::optional<std::string> Variable::units() const {
    if (const auto* a = attributes.find("units"))
        if (const auto* t = a->as_text()) return *t;
    return std::nullopt;
}

// --- NcFile ----------------------------------------------------------------

const Variable* NcFile::find_variable(std::string_view name) const {
    for (const auto& v : variables)
        if (v.name == name) return &v;
    return nullptr;
}

const Variable& NcFile::variable(std::string_view name) const {
    const auto* v = find_variable(name);
    if (!v) throw NetcdfError(Errc::NoSuchVariable, "no variable named '" + std::string(name) + "'");
    return *v;
}

std::optional<std::size_t> NcFile::find_dimension(std::string_view name) const {
    for (std::size_t i = 0; i < dimensions.size(); ++i)
        if (dimensions[i].name == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> NcFile::unlimited_dimension() const {
    for (std::size_t i = 0; i < dimensions.size(); ++i)
        if (dimensions[i].is_unlimited) return i;
    return std::nullopt;
}

bool NcFile::is_record_variable(const Variable& var) const {
    return !var.dim_ids.empty() && dimensions[var.dim_ids.front()].is_unlimited;
}

std::vector<std::uint64_t> NcFile::shape(const Variable& var) const {
    std::vector<std::uint64_t> s;
    s.reserve(var.dim_ids.size());
    for (auto id : var.dim_ids) s.push_back(dimensions[id].is_unlimited ? numrecs : dimensions[id].length);
    return s;
}

std::vector<std::string> NcFile::dimension_names(const Variable& var) const {
    std::vector<std::string> names;
    for (auto id : var.dim_ids) names.push_back(dimensions[id].name);
    return names;
}

std::size_t Slab::missing_count() const {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

// --- Sources ---------------------------------------------------------------

void MemorySource::read_at(std::uint64_t offset, std::span<std::byte> out) const {
    if (offset > bytes_.size() || out.size() > bytes_.size() - offset)
        throw NetcdfError(Errc::Truncated, "read past end of buffer at offset " + std::to_string(offset));
    if (!out.empty()) std::memcpy(out.data(), bytes_.data() + offset, out.size());
}

FileSource::FileSource(const std::string& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) throw NetcdfError(Errc::Io, "cannot open " + path + ": " + std::strerror(errno));
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
        ::close(fd_);
        throw NetcdfError(Errc::Io, "cannot stat " + path);
    }
    size_ = static_cast<std::uint64_t>(st.st_size);
}

FileSource::~FileSource() {
    if (fd_ >= 0) ::close(fd_);
}

void FileSource::read_at(std::uint64_t offset, std::span<std::byte> out) const {
    if (offset > size_ || out.size() > size_ - offset)
        throw NetcdfError(Errc::Truncated, path_ + ": read past end of file at offset " + std::to_string(offset));
    std::size_t done = 0;
    while (done < out.size()) {
        auto n = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetcdfError(Errc::Io, path_ + ": " + std::strerror(errno));
        }
        if (n == 0) throw NetcdfError(Errc::Truncated, path_ + ": unexpected end of file");
        done += static_cast<std::size_t>(n);
    }
}

namespace {

class SpanSource final : public ByteSource {
public:
    explicit SpanSource(std::span<const std::byte> bytes) : bytes_(bytes) {}
    std::uint64_t size() const override { return bytes_.size(); }
    void read_at(std::uint64_t offset, std::span<std::byte> out) const override {
        if (offset > bytes_.size() || out.size() > bytes_.size() - offset)
            throw NetcdfError(Errc::Truncated, "read past end of buffer at offset " + std::to_string(offset));
        if (!out.empty()) std::memcpy(out.data(), bytes_.data() + offset, out.size());
    }

private:
    std::span<const std::byte> bytes_;
};

constexpr std::uint32_t kTagDimension = 0x0A;
constexpr std::uint32_t kTagVariable = 0x0B;
constexpr std::uint32_t kTagAttribute = 0x0C;
constexpr std::uint32_t kStreaming = 0xFFFFFFFFu;

// Sequential reader over the header region; every read is bounds-checked
// against the source so hostile counts fail as Truncated, not as huge
// allocations.
class HeaderCursor {
public:
    explicit HeaderCursor(const ByteSource& src) : src_(src) {}

    std::uint64_t offset() const { return offset_; }

    void need(std::uint64_t n, const char* what) const {
        if (offset_ > src_.size() || n > src_.size() - offset_)
            throw NetcdfError(Errc::Truncated, std::string("header ends inside ") + what);
    }

    std::vector<std::byte> bytes(std::uint64_t n, const char* what) {
        need(n, what);
        std::vector<std::byte> buf(n);
        src_.read_at(offset_, buf);
        offset_ += n;
        return buf;
    }

    std::uint32_t u32(const char* what) {
        auto b = bytes(4, what);
        return load_u32(b.data());
    }

    std::uint64_t u64(const char* what) {
        auto b = bytes(8, what);
        return load_u64(b.data());
    }

    std::uint64_t offset_field(Format f, const char* what) {
        return f == Format::Cdf1 ? u32(what) : u64(what);
    }

    std::string name(const char* what) {
        auto n = u32(what);
        auto raw = bytes(padded4(n), what);
        if (n == 0) throw NetcdfError(Errc::Malformed, std::string("empty name in ") + what);
        return std::string(reinterpret_cast<const char*>(raw.data()), n);
    }

private:
    const ByteSource& src_;
    std::uint64_t offset_ = 0;
};

Type read_type(HeaderCursor& cur, const char* what) {
    auto t = cur.u32(what);
    if (t >= 1 && t <= 6) return static_cast<Type>(t);
    if (t >= 7 && t <= 12)
        throw NetcdfError(Errc::Unsupported, "extended (CDF-5) type " + std::to_string(t) + " in " + what);
    throw NetcdfError(Errc::Malformed, "invalid nc_type " + std::to_string(t) + " in " + what);
}

template <typename T, typename Load>
std::vector<T> decode_values(const std::vector<std::byte>& raw, std::size_t n, std::size_t width, Load load) {
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = load(raw.data() + i * width);
    return out;
}

Attribute read_attribute_value(HeaderCursor& cur, Type type) {
    auto n = cur.u32("attribute length");
    auto width = type_size(type);
    auto raw = cur.bytes(padded4(std::uint64_t(n) * width), "attribute values");
    switch (type) {
    case Type::Char: {
        std::string s(reinterpret_cast<const char*>(raw.data()), n);
        return Attribute(std::move(s));
    }
    case Type::Byte:
        return Attribute(decode_values<std::int8_t>(raw, n, 1, [](const std::byte* p) {
            return static_cast<std::int8_t>(*p);
        }));
    case Type::Short:
        return Attribute(decode_values<std::int16_t>(raw, n, 2, [](const std::byte* p) {
            return static_cast<std::int16_t>(load_u16(p));
        }));
    case Type::Int:
        return Attribute(decode_values<std::int32_t>(raw, n, 4, [](const std::byte* p) {
            return static_cast<std::int32_t>(load_u32(p));
        }));
    case Type::Float:
        return Attribute(decode_values<float>(raw, n, 4, [](const std::byte* p) {
            return std::bit_cast<float>(load_u32(p));
        }));
    case Type::Double:
        return Attribute(decode_values<double>(raw, n, 8, [](const std::byte* p) {
            return std::bit_cast<double>(load_u64(p));
        }));
    }
    throw NetcdfError(Errc::Malformed, "bad attribute type");
}

Attributes read_attribute_list(HeaderCursor& cur) {
    Attributes attrs;
    auto tag = cur.u32("attribute list");
    auto n = cur.u32("attribute list");
    if (tag == 0) {
        if (n != 0) throw NetcdfError(Errc::Malformed, "ABSENT attribute list with nonzero count");
        return attrs;
    }
    if (tag != kTagAttribute) throw NetcdfError(Errc::Malformed, "expected NC_ATTRIBUTE tag");
    for (std::uint32_t i = 0; i < n; ++i) {
        auto name = cur.name("attribute name");
        auto type = read_type(cur, "attribute");
        attrs.set(std::move(name), read_attribute_value(cur, type));
    }
    return attrs;
}

std::uint64_t element_count(const NcFile& f, const Variable& v, bool per_record) {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < v.dim_ids.size(); ++i) {
        const auto& d = f.dimensions[v.dim_ids[i]];
        if (d.is_unlimited) {
            if (per_record) continue;
            n *= f.numrecs;
        } else {
            n *= d.length;
        }
    }
    return n;
}

} // namespace

NcFile parse_header(const ByteSource& source) {
    HeaderCursor cur(source);
    if (source.size() < 4) throw NetcdfError(Errc::Truncated, "input shorter than the 4-byte magic");
    auto magic = cur.bytes(4, "magic");
    auto m = [&](int i) { return std::to_integer<unsigned>(magic[i]); };
    if (m(0) == 0x89 && m(1) == 'H' && m(2) == 'D' && m(3) == 'F')
        throw NetcdfError(Errc::Unsupported, "HDF5-based (NetCDF-4) files are not supported");
    if (m(0) != 'C' || m(1) != 'D' || m(2) != 'F')
        throw NetcdfError(Errc::BadMagic, "not a NetCDF classic file");
    NcFile f;
    switch (m(3)) {
    case 1: f.format = Format::Cdf1; break;
    case 2: f.format = Format::Cdf2; break;
    case 5: throw NetcdfError(Errc::Unsupported, "CDF-5 (64-bit data) files are not supported");
    default: throw NetcdfError(Errc::BadMagic, "unknown classic format version " + std::to_string(m(3)));
    }

    auto numrecs = cur.u32("numrecs");
    bool streaming = numrecs == kStreaming;
    f.numrecs = streaming ? 0 : numrecs;

    // dimensions
    {
        auto tag = cur.u32("dimension list");
        auto n = cur.u32("dimension list");
        if (tag == 0 && n != 0) throw NetcdfError(Errc::Malformed, "ABSENT dimension list with nonzero count");
        if (tag != 0 && tag != kTagDimension) throw NetcdfError(Errc::Malformed, "expected NC_DIMENSION tag");
        for (std::uint32_t i = 0; i < n; ++i) {
            Dimension d;
            d.name = cur.name("dimension name");
            d.length = cur.u32("dimension length");
            d.is_unlimited = d.length == 0;
            f.dimensions.push_back(std::move(d));
        }
        auto unlimited = std::count_if(f.dimensions.begin(), f.dimensions.end(),
                                       [](const Dimension& d) { return d.is_unlimited; });
        if (unlimited > 1) throw NetcdfError(Errc::Malformed, "more than one unlimited dimension");
    }

    f.global_attributes = read_attribute_list(cur);

    // variables
    {
        auto tag = cur.u32("variable list");
        auto n = cur.u32("variable list");
        if (tag == 0 && n != 0) throw NetcdfError(Errc::Malformed, "ABSENT variable list with nonzero count");
        if (tag != 0 && tag != kTagVariable) throw NetcdfError(Errc::Malformed, "expected NC_VARIABLE tag");
        for (std::uint32_t i = 0; i < n; ++i) {
            Variable v;
            v.name = cur.name("variable name");
            auto ndims = cur.u32("variable rank");
            cur.need(std::uint64_t(ndims) * 4, "variable dimension ids");
            for (std::uint32_t k = 0; k < ndims; ++k) {
                auto id = cur.u32("dimension id");
                if (id >= f.dimensions.size())
                    throw NetcdfError(Errc::Malformed, "variable '" + v.name + "' references undeclared dimension " +
                                                           std::to_string(id));
                if (f.dimensions[id].is_unlimited && k != 0)
                    throw NetcdfError(Errc::Malformed,
                                      "unlimited dimension must be the first dimension of '" + v.name + "'");
                v.dim_ids.push_back(id);
            }
            v.attributes = read_attribute_list(cur);
            v.type = read_type(cur, "variable");
            v.vsize = cur.u32("vsize");
            v.begin = cur.offset_field(f.format, "variable begin");
            f.variables.push_back(std::move(v));
        }
    }
    f.header_size = cur.offset();

    // record layout
    std::vector<const Variable*> record_vars;
    for (const auto& v : f.variables)
        if (f.is_record_variable(v)) record_vars.push_back(&v);
    if (record_vars.size() == 1) {
        const auto* v = record_vars.front();
        f.record_size = element_count(f, *v, true) * type_size(v->type);
    } else {
        for (const auto* v : record_vars) f.record_size += padded4(element_count(f, *v, true) * type_size(v->type));
    }
    if (streaming && f.record_size > 0) {
        std::uint64_t first = std::numeric_limits<std::uint64_t>::max();
        for (const auto* v : record_vars) first = std::min(first, v->begin);
        f.numrecs = source.size() > first ? (source.size() - first) / f.record_size : 0;
    }
    if (auto u = f.unlimited_dimension()) f.dimensions[*u].length = f.numrecs;

    // fixed-size variables must lie inside the file and must not overlap
    std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
    for (const auto& v : f.variables) {
        if (f.is_record_variable(v)) continue;
        auto bytes = element_count(f, v, false) * type_size(v.type);
        if (v.begin < f.header_size)
            throw NetcdfError(Errc::Malformed, "variable '" + v.name + "' begins inside the header");
        if (v.begin > source.size() || bytes > source.size() - v.begin)
            throw NetcdfError(Errc::Truncated, "data of variable '" + v.name + "' extends past end of file");
        extents.emplace_back(v.begin, v.begin + bytes);
    }
    std::sort(extents.begin(), extents.end());
    for (std::size_t i = 1; i < extents.size(); ++i)
        if (extents[i].first < extents[i - 1].second)
            throw NetcdfError(Errc::Malformed, "fixed-size variables overlap");

    return f;
}

NcFile parse_header(std::span<const std::byte> bytes) {
    SpanSource src(bytes);
    return parse_header(src);
}

// --- Slab reads ------------------------------------------------------------

namespace {

double decode_element(Type type, const std::byte* p) {
    switch (type) {
    case Type::Byte: return static_cast<double>(static_cast<std::int8_t>(*p));
    case Type::Char: return static_cast<double>(static_cast<unsigned char>(*p));
    case Type::Short: return static_cast<double>(static_cast<std::int16_t>(load_u16(p)));
    case Type::Int: return static_cast<double>(static_cast<std::int32_t>(load_u32(p)));
    case Type::Float: return static_cast<double>(std::bit_cast<float>(load_u32(p)));
    case Type::Double: return std::bit_cast<double>(load_u64(p));
    }
    return 0.0;
}

// Value of a numeric attribute after a round trip through the variable's type,
// so a double _FillValue on a float variable still matches stored floats.
double in_type_domain(Type type, double v) {
    switch (type) {
    case Type::Byte: return static_cast<double>(static_cast<std::int8_t>(v));
    case Type::Short: return static_cast<double>(static_cast<std::int16_t>(v));
    case Type::Int: return static_cast<double>(static_cast<std::int32_t>(v));
    case Type::Float: return static_cast<double>(static_cast<float>(v));
    default: return v;
    }
}

// Walks the hyperslab as maximal contiguous runs and hands each decoded raw
// value to `sink(linear_output_index, raw)`.
template <typename Sink>
void walk_slab(const ByteSource& source, const NcFile& file, const Variable& var,
               std::span<const std::uint64_t> start, std::span<const std::uint64_t> count, Sink&& sink) {
    const auto shape = file.shape(var);
    const std::size_t nd = shape.size();
    if (start.size() != nd || count.size() != nd)
        throw NetcdfError(Errc::OutOfBounds, "start/count rank does not match variable '" + var.name + "'");
    for (std::size_t i = 0; i < nd; ++i)
        if (start[i] > shape[i] || count[i] > shape[i] - start[i])
            throw NetcdfError(Errc::OutOfBounds, "hyperslab exceeds dimension " + std::to_string(i) + " of '" +
                                                     var.name + "'");
    std::uint64_t total = 1;
    for (auto c : count) total *= c;
    if (total == 0) return;

    const bool is_record = file.is_record_variable(var);
    const std::size_t width = type_size(var.type);

    // strides in elements within one record (or the whole fixed variable)
    std::vector<std::uint64_t> stride(nd, 1);
    for (std::size_t i = nd; i-- > 1;) stride[i - 1] = stride[i] * shape[i];

    // fold trailing fully selected dimensions plus one partial dimension into a run
    const std::size_t lo = is_record ? 1 : 0;
    std::size_t k = nd;
    std::uint64_t run = 1;
    while (k > lo && count[k - 1] == shape[k - 1]) {
        run *= count[k - 1];
        --k;
    }
    if (k > lo) {
        run *= count[k - 1];
        --k;
    }

    std::vector<std::byte> buf(run * width);
    std::vector<std::uint64_t> idx(k, 0);
    std::uint64_t out = 0;
    while (true) {
        std::uint64_t offset = var.begin;
        std::uint64_t elem = 0;
        for (std::size_t i = 0; i < nd; ++i) {
            std::uint64_t pos = start[i] + (i < k ? idx[i] : 0);
            if (is_record && i == 0)
                offset += pos * file.record_size;
            else
                elem += pos * stride[i];
        }
        offset += elem * width;
        source.read_at(offset, buf);
        for (std::uint64_t e = 0; e < run; ++e) sink(out + e, decode_element(var.type, buf.data() + e * width));
        out += run;

        std::size_t d = k;
        while (d > 0) {
            --d;
            if (++idx[d] < count[d]) break;
            idx[d] = 0;
            if (d == 0) return;
        }
        if (k == 0) return;
    }
}

} // namespace

Slab read_slab(const ByteSource& source, const NcFile& file, std::string_view name,
               std::span<const std::uint64_t> start, std::span<const std::uint64_t> count) {
    const auto& var = file.variable(name);
    if (var.type == Type::Char)
        throw NetcdfError(Errc::TypeMismatch, "'" + var.name + "' is a char variable; use read_text");

    Slab slab;
    slab.shape.assign(count.begin(), count.end());
    slab.units = var.units().value_or("");
    std::uint64_t total = 1;
    for (auto c : count) total *= c;
    if (start.size() == count.size()) {
        slab.values.assign(total, 0.0);
        slab.missing.assign(total, 0);
    }

    auto num = [&](std::string_view a) -> std::optional<double> {
        if (const auto* attr = var.attributes.find(a)) {
            if (attr->type() == Type::Char)
                throw NetcdfError(Errc::TypeMismatch, "attribute " + std::string(a) + " of '" + var.name +
                                                          "' is text");
            return attr->as_double();
        }
        return std::nullopt;
    };
    const auto fill = num("_FillValue");
    const auto missing_value = num("missing_value");
    const double scale = num("scale_factor").value_or(1.0);
    const double offset = num("add_offset").value_or(0.0);
    const bool packed = var.attributes.find("scale_factor") || var.attributes.find("add_offset");
    // NaN never compares equal, so an absent sentinel matches nothing
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double fill_raw = fill ? in_type_domain(var.type, *fill) : nan;
    const double missing_raw = missing_value ? in_type_domain(var.type, *missing_value) : nan;

    walk_slab(source, file, var, start, count, [&](std::uint64_t i, double raw) {
        if (std::isnan(raw) || raw == fill_raw || raw == missing_raw) {
            slab.missing[i] = 1;
            return;
        }
        slab.values[i] = packed ? raw * scale + offset : raw;
    });
    return slab;
}

Slab read_variable(const ByteSource& source, const NcFile& file, std::string_view name) {
    const auto& var = file.variable(name);
    auto shape = file.shape(var);
    std::vector<std::uint64_t> start(shape.size(), 0);
    return read_slab(source, file, name, start, shape);
}

std::vector<double> read_raw(const ByteSource& source, const NcFile& file, std::string_view name,
                             std::span<const std::uint64_t> start, std::span<const std::uint64_t> count) {
    const auto& var = file.variable(name);
    std::uint64_t total = 1;
    for (auto c : count) total *= c;
    std::vector<double> out(start.size() == count.size() ? total : 0);
    walk_slab(source, file, var, start, count, [&](std::uint64_t i, double raw) { out[i] = raw; });
    return out;
}

std::string read_text(const ByteSource& source, const NcFile& file, std::string_view name) {
    const auto& var = file.variable(name);
    if (var.type != Type::Char)
        throw NetcdfError(Errc::TypeMismatch, "'" + var.name + "' is not a char variable");
    auto shape = file.shape(var);
    std::vector<std::uint64_t> start(shape.size(), 0);
    std::string text;
    std::uint64_t total = 1;
    for (auto c : shape) total *= c;
    text.resize(total);
    walk_slab(source, file, var, start, shape,
              [&](std::uint64_t i, double raw) { text[i] = static_cast<char>(static_cast<unsigned char>(raw)); });
    while (!text.empty() && text.back() == '\0') text.pop_back();
    return text;
}

} // namespace dcpviz::nc

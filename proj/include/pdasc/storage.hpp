#pragma once

/// \file storage.hpp
/// Binary file formats (all integers and floats little-endian):
///
///   dataset  "PDV1" u8 dtype, u32 n, u32 d, row-major payload
///            (f32 rows; bitset rows of ceil(d/8) bytes, LSB first; f64 lat/lon rows)
///   truth    "PDG1" u32 nq, u32 k, nq*k x (u32 id, f64 distance)
///   index    "PDX1" u32 version, u32 kind, u32 nNodes, u32 gl, u32 np, u64 seed,
///            u32 max_swaps, u32 dataset_n, u64 dataset_fingerprint, then per shard:
///            u32 n_ids, n_ids x u32 id, u32 n_levels, per level: u32 count,
///            count x (u32 global_id, u32 child_start, u32 child_len)
///
/// plus CSV import of raw vectors and the results table of a parameter sweep.

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pdasc/dataset.hpp"
#include "pdasc/error.hpp"
#include "pdasc/msa.hpp"
#include "pdasc/nsa.hpp"

namespace pdasc {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

namespace io {

class ByteWriter {
public:
    void bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + len);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    std::size_t size() const { return buf_.size(); }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::string what)
        : data_(data), what_(std::move(what)) {}

    void need(std::size_t len) const {
        if (data_.size() - pos_ < len) {
            throw FormatError(what_ + ": truncated at byte " + std::to_string(pos_));
        }
    }
    std::span<const std::uint8_t> bytes(std::size_t len) {
        need(len);
        auto out = data_.subspan(pos_, len);
        pos_ += len;
        return out;
    }
    std::uint8_t u8() { return bytes(1)[0]; }
    std::uint32_t u32() {
        const auto b = bytes(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | b[static_cast<std::size_t>(i)];
        }
        return v;
    }
    std::uint64_t u64() {
        const auto b = bytes(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = (v << 8) | b[static_cast<std::size_t>(i)];
        }
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void magic(std::string_view expected) {
        need(expected.size());
        if (std::memcmp(data_.data() + pos_, expected.data(), expected.size()) != 0) {
            throw FormatError(what_ + ": bad magic (expected " + std::string(expected) + ")");
        }
        pos_ += expected.size();
    }
    void expect_end() const {
        if (pos_ != data_.size()) {
            throw FormatError(what_ + ": " + std::to_string(data_.size() - pos_) +
                              " trailing bytes");
        }
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string what_;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot create " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path);
    }
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw ParameterError(std::string(what) + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

} // namespace io

// ---------------------------------------------------------------- datasets

inline std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
    io::ByteWriter w;
    w.bytes("PDV1", 4);
    w.u8(static_cast<std::uint8_t>(data.dtype()));
    w.u32(io::checked_u32(data.size(), "dataset size"));
    w.u32(io::checked_u32(data.dim(), "dataset dim"));
    switch (data.dtype()) {
    case DataType::DenseF32:
        for (const float v : data.dense_values()) {
            w.f32(v);
        }
        break;
    case DataType::Bitset:
        w.bytes(data.bitset_bytes().data(), data.bitset_bytes().size());
        break;
    case DataType::GeoF64:
        for (const double v : data.geo_values()) {
            w.f64(v);
        }
        break;
    }
    return w.buffer();
}

/// Parses a dataset image. Row validation errors (non-finite values, geo ranges)
/// name the offending row.
inline Dataset decode_dataset(std::span<const std::uint8_t> bytes, const std::string& what = "dataset") {
    io::ByteReader r(bytes, what);
    r.magic("PDV1");
    const auto tag = r.u8();
    if (tag > 2) {
        throw FormatError(what + ": unknown dtype " + std::to_string(tag));
    }
    const auto dtype = static_cast<DataType>(tag);
    const std::size_t n = r.u32();
    const std::size_t d = r.u32();
    if (d == 0) {
        throw FormatError(what + ": dimension 0");
    }
    if (dtype == DataType::GeoF64 && d != 2) {
        throw FormatError(what + ": geo rows must have d=2");
    }
    std::size_t row_bytes = 0;
    switch (dtype) {
    case DataType::DenseF32: row_bytes = 4 * d; break;
    case DataType::Bitset: row_bytes = (d + 7) / 8; break;
    case DataType::GeoF64: row_bytes = 16; break;
    }
    if (r.remaining() != n * row_bytes) {
        throw FormatError(what + ": payload is " + std::to_string(r.remaining()) +
                          " bytes, expected " + std::to_string(n * row_bytes));
    }
    try {
        switch (dtype) {
        case DataType::DenseF32: {
            std::vector<float> values(n * d);
            for (auto& v : values) {
                v = r.f32();
            }
            return Dataset::dense(d, std::move(values));
        }
        case DataType::Bitset: {
            const auto raw = r.bytes(n * row_bytes);
            return Dataset::bitset(d, std::vector<std::uint8_t>(raw.begin(), raw.end()));
        }
        case DataType::GeoF64: {
            std::vector<double> values(n * 2);
            for (auto& v : values) {
                v = r.f64();
            }
            return Dataset::geo(std::move(values));
        }
        }
    } catch (const DomainError& e) {
        throw FormatError(what + ": " + e.what());
    }
    return {};
}

inline void save_dataset(const std::string& path, const Dataset& data) {
    io::write_file(path, encode_dataset(data));
}

/// Loads a dataset; when `kind` is given the rows must also be usable with it.
inline Dataset load_dataset(const std::string& path, std::optional<DistanceKind> kind = std::nullopt) {
    const auto bytes = io::read_file(path);
    Dataset data = decode_dataset(bytes, path);
    if (kind) {
        try {
            data.validate_for(*kind);
        } catch (const DomainError& e) {
            throw FormatError(path + ": " + e.what());
        }
    }
    return data;
}

/// One vector per non-empty line, comma separated. Bitset fields are '0' or '1';
/// geo rows are "lat,lon" in degrees. Errors cite the 1-based line number.
inline Dataset import_csv(std::istream& in, DataType dtype) {
    std::vector<float> dense;
    std::vector<double> geo;
    std::vector<std::uint8_t> bits;
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;

    auto fail = [&line_no](const std::string& why) -> FormatError {
        return FormatError("line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            auto field = rest.substr(0, comma);
            while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
            while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
            fields.push_back(field);
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            dim = fields.size();
        } else if (fields.size() != dim) {
            throw fail("expected " + std::to_string(dim) + " fields, found " +
                       std::to_string(fields.size()));
        }

        if (dtype == DataType::Bitset) {
            const std::size_t stride = (dim + 7) / 8;
            const std::size_t base = bits.size();
            bits.resize(base + stride, 0);
            for (std::size_t j = 0; j < dim; ++j) {
                if (fields[j] == "1") {
                    bits[base + j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
                } else if (fields[j] != "0") {
                    throw fail("bad bit '" + std::string(fields[j]) + "'");
                }
            }
        } else {
            if (dtype == DataType::GeoF64 && dim != 2) {
                throw fail("geo rows need exactly 2 fields (lat,lon)");
            }
            std::vector<double> values(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                const auto f = fields[j];
                const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[j]);
                if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() ||
                    !std::isfinite(values[j])) {
                    throw fail("bad number '" + std::string(f) + "'");
                }
            }
            if (dtype == DataType::GeoF64) {
                if (!valid_geo(GeoPoint{values[0], values[1]})) {
                    throw fail("coordinates out of range");
                }
                geo.insert(geo.end(), values.begin(), values.end());
            } else {
                for (const double v : values) {
                    const auto f = static_cast<float>(v);
                    if (!std::isfinite(f)) {
                        throw fail("value overflows float32");
                    }
                    dense.push_back(f);
                }
            }
        }
        ++rows;
    }
    if (rows == 0) {
        throw FormatError("no rows");
    }
    switch (dtype) {
    case DataType::DenseF32: return Dataset::dense(dim, std::move(dense));
    case DataType::Bitset: return Dataset::bitset(dim, std::move(bits));
    case DataType::GeoF64: return Dataset::geo(std::move(geo));
    }
    return {};
}

inline Dataset import_csv(const std::string& path, DataType dtype) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    try {
        return import_csv(in, dtype);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

// ------------------------------------------------------------ ground truth

struct GroundTruth {
    std::size_t k = 0;
    std::vector<std::vector<Neighbour>> rows;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

inline std::vector<std::uint8_t> encode_ground_truth(const GroundTruth& gt) {
    io::ByteWriter w;
    w.bytes("PDG1", 4);
    w.u32(io::checked_u32(gt.rows.size(), "query count"));
    w.u32(io::checked_u32(gt.k, "k"));
    for (const auto& row : gt.rows) {
        if (row.size() != gt.k) {
            throw ParameterError("ground truth row does not hold k entries");
        }
        for (const auto& nb : row) {
            w.u32(nb.id);
            w.f64(nb.distance);
        }
    }
    return w.buffer();
}

inline GroundTruth decode_ground_truth(std::span<const std::uint8_t> bytes,
                                       const std::string& what = "ground truth") {
    io::ByteReader r(bytes, what);
    r.magic("PDG1");
    GroundTruth gt;
    const std::size_t nq = r.u32();
    gt.k = r.u32();
    if (r.remaining() != nq * gt.k * 12) {
        throw FormatError(what + ": payload size does not match nq*k");
    }
    gt.rows.resize(nq);
    for (auto& row : gt.rows) {
        row.resize(gt.k);
        for (auto& nb : row) {
            nb.id = r.u32();
            nb.distance = r.f64();
        }
        for (std::size_t i = 1; i < row.size(); ++i) {
            if (neighbour_less(row[i], row[i - 1])) {
                throw FormatError(what + ": row not sorted by (distance, id)");
            }
        }
    }
    return gt;
}

inline void save_ground_truth(const std::string& path, const GroundTruth& gt) {
    io::write_file(path, encode_ground_truth(gt));
}

inline GroundTruth load_ground_truth(const std::string& path) {
    return decode_ground_truth(io::read_file(path), path);
}

// ------------------------------------------------------------------- index

/// Bytes taken by magic, version, parameters and dataset identity.
inline constexpr std::size_t kIndexHeaderBytes = 4 + 4 + 4 * 4 + 8 + 4 + 4 + 8;

/// Serialised size of one shard's block; this is the per-node index size.
inline std::size_t shard_serialized_bytes(const ShardIndex& shard) {
    std::size_t bytes = 4 + 4 * shard.global_ids.size() + 4;
    for (const auto& level : shard.levels) {
        bytes += 4 + 12 * level.size();
    }
    return bytes;
}

inline std::vector<std::uint8_t> encode_index(const PdascIndex& index) {
    io::ByteWriter w;
    w.bytes("PDX1", 4);
    w.u32(kIndexFormatVersion);
    w.u32(static_cast<std::uint32_t>(index.params.kind));
    w.u32(index.params.n_nodes);
    w.u32(index.params.gl);
    w.u32(index.params.np);
    w.u64(index.params.seed);
    w.u32(index.params.max_swaps);
    w.u32(index.dataset_size);
    w.u64(index.dataset_fingerprint);
    for (const auto& shard : index.shards) {
        w.u32(io::checked_u32(shard.global_ids.size(), "shard size"));
        for (const auto id : shard.global_ids) {
            w.u32(id);
        }
        w.u32(io::checked_u32(shard.levels.size(), "level count"));
        for (const auto& level : shard.levels) {
            w.u32(io::checked_u32(level.size(), "level size"));
            for (const auto& e : level) {
                w.u32(e.global_id);
                w.u32(e.child_start);
                w.u32(e.child_len);
            }
        }
    }
    return w.buffer();
}

/// Parses and fully validates an index image (spans, partition, coverage).
inline PdascIndex decode_index(std::span<const std::uint8_t> bytes, const std::string& what = "index") {
    io::ByteReader r(bytes, what);
    r.magic("PDX1");
    const auto version = r.u32();
    if (version != kIndexFormatVersion) {
        throw FormatError(what + ": unsupported version " + std::to_string(version));
    }
    PdascIndex index;
    const auto kind = r.u32();
    if (kind > 3) {
        throw FormatError(what + ": unknown distance tag " + std::to_string(kind));
    }
    index.params.kind = static_cast<DistanceKind>(kind);
    index.params.n_nodes = r.u32();
    index.params.gl = r.u32();
    index.params.np = r.u32();
    index.params.seed = r.u64();
    index.params.max_swaps = r.u32();
    index.dataset_size = r.u32();
    index.dataset_fingerprint = r.u64();
    try {
        index.params.validate();
    } catch (const ParameterError& e) {
        throw FormatError(what + ": " + e.what());
    }
    if (index.params.n_nodes > index.dataset_size) {
        throw FormatError(what + ": more shards than points");
    }
    index.shards.resize(index.params.n_nodes);
    for (auto& shard : index.shards) {
        const std::size_t n_ids = r.u32();
        r.need(4 * n_ids);
        shard.global_ids.resize(n_ids);
        for (auto& id : shard.global_ids) {
            id = r.u32();
        }
        const std::size_t n_levels = r.u32();
        if (n_levels == 0 || n_levels > n_ids + 1) {
            throw FormatError(what + ": implausible level count " + std::to_string(n_levels));
        }
        shard.levels.resize(n_levels);
        for (auto& level : shard.levels) {
            const std::size_t count = r.u32();
            r.need(12 * count);
            level.resize(count);
            for (auto& e : level) {
                e.global_id = r.u32();
                e.child_start = r.u32();
                e.child_len = r.u32();
            }
        }
    }
    r.expect_end();
    std::size_t total_ids = 0;
    for (const auto& shard : index.shards) {
        total_ids += shard.global_ids.size();
    }
    if (total_ids != index.dataset_size) {
        throw FormatError(what + ": shards hold " + std::to_string(total_ids) + " ids, header says " +
                          std::to_string(index.dataset_size));
    }
    if (auto problem = check_index(index)) {
        throw FormatError(what + ": " + *problem);
    }
    return index;
}

inline void save_index(const std::string& path, const PdascIndex& index) {
    io::write_file(path, encode_index(index));
}

/// Loads an index and checks that it was built from `data`.
inline PdascIndex load_index(const std::string& path, const Dataset& data) {
    PdascIndex index = decode_index(io::read_file(path), path);
    if (index.dataset_size != data.size() || index.dataset_fingerprint != dataset_fingerprint(data)) {
        throw FormatError(path + ": index was built from a different dataset");
    }
    return index;
}

// ------------------------------------------------------------ results table

struct SweepRow {
    std::string dataset;
    std::string distance;
    std::uint32_t n_nodes = 0;
    std::uint32_t gl = 0;
    std::uint32_t np = 0;
    double ratio = 0.0;
    double radius = 0.0;
    std::uint32_t k = 0;
    double recall = 0.0;
    double mean_ndc_per_node = 0.0;
    double max_ndc_per_node = 0.0;
    double mean_index_bytes_per_node = 0.0;
    std::uint64_t max_index_bytes_per_node = 0;
    std::uint32_t n_queries = 0;
};

inline constexpr std::string_view kResultsHeader =
    "dataset,distance,nNodes,gl,np,ratio,r,k,recall,mean_ndc_per_node,max_ndc_per_node,"
    "mean_index_bytes_per_node,max_index_bytes_per_node,n_queries";

namespace io {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// Shortest text that reads back to the same double; "inf" for +infinity.
inline std::string exact_real(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parse_real(std::string_view s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw FormatError("bad number '" + std::string(s) + "'");
    }
    return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw FormatError("bad integer '" + std::string(s) + "'");
    }
    return v;
}

} // namespace io

/// One line per row. Reals are printed with six decimals, except the radius,
/// which is printed exactly so a run can be replayed.
inline std::string format_results_csv(std::span<const SweepRow> rows) {
    std::string out(kResultsHeader);
    out += '\n';
    for (const auto& row : rows) {
        out += row.dataset + ',' + row.distance + ',' + std::to_string(row.n_nodes) + ',' +
               std::to_string(row.gl) + ',' + std::to_string(row.np) + ',' + io::fixed6(row.ratio) +
               ',' + io::exact_real(row.radius) + ',' + std::to_string(row.k) + ',' +
               io::fixed6(row.recall) + ',' + io::fixed6(row.mean_ndc_per_node) + ',' +
               io::fixed6(row.max_ndc_per_node) + ',' + io::fixed6(row.mean_index_bytes_per_node) +
               ',' + std::to_string(row.max_index_bytes_per_node) + ',' +
               std::to_string(row.n_queries) + '\n';
    }
    return out;
}

inline void write_results_csv(const std::string& path, std::span<const SweepRow> rows) {
    const auto text = format_results_csv(rows);
    io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::vector<SweepRow> parse_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) {
        throw FormatError("results: missing or unexpected header");
    }
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            f.push_back(cell);
        }
        if (f.size() != 14) {
            throw FormatError("results: expected 14 columns, got " + std::to_string(f.size()));
        }
        SweepRow row;
        row.dataset = f[0];
        row.distance = f[1];
        row.n_nodes = static_cast<std::uint32_t>(io::parse_uint(f[2]));
        row.gl = static_cast<std::uint32_t>(io::parse_uint(f[3]));
        row.np = static_cast<std::uint32_t>(io::parse_uint(f[4]));
        row.ratio = io::parse_real(f[5]);
        row.radius = io::parse_real(f[6]);
        row.k = static_cast<std::uint32_t>(io::parse_uint(f[7]));
        row.recall = io::parse_real(f[8]);
        row.mean_ndc_per_node = io::parse_real(f[9]);
        row.max_ndc_per_node = io::parse_real(f[10]);
        row.mean_index_bytes_per_node = io::parse_real(f[11]);
        row.max_index_bytes_per_node = io::parse_uint(f[12]);
        row.n_queries = static_cast<std::uint32_t>(io::parse_uint(f[13]));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace pdasc

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdasc/distance.hpp"
#include "pdasc/error.hpp"

namespace pdasc {

/// On-disk element type tag of a dataset.
enum class DataType : std::uint8_t {
    DenseF32 = 0,
    Bitset = 1,
    GeoF64 = 2,
};

inline std::string_view to_string(DataType t) {
    switch (t) {
    case DataType::DenseF32: return "f32";
    case DataType::Bitset: return "bitset";
    case DataType::GeoF64: return "geo";
    }
    return "unknown";
}

inline DataType parse_data_type(std::string_view name) {
    if (name == "f32") return DataType::DenseF32;
    if (name == "bitset") return DataType::Bitset;
    if (name == "geo") return DataType::GeoF64;
    throw ParameterError("unknown dtype '" + std::string(name) + "'");
}

inline DataType data_type_for(DistanceKind kind) {
    switch (kind) {
    case DistanceKind::Euclidean:
    case DistanceKind::Cosine: return DataType::DenseF32;
    case DistanceKind::Jaccard: return DataType::Bitset;
    case DistanceKind::Haversine: return DataType::GeoF64;
    }
    return DataType::DenseF32;
}

/// Immutable collection of n objects of one data type, addressed by id 0..n-1.
class Dataset {
public:
    Dataset() = default;

    /// Row-major float vectors. All components must be finite.
    static Dataset dense(std::size_t dim, std::vector<float> values) {
        if (dim == 0) {
            throw ParameterError("dense dataset needs dim >= 1");
        }
        if (values.size() % dim != 0) {
            throw DimensionError("dense payload is not a multiple of dim");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i])) {
                throw DomainError("non-finite component in row " + std::to_string(i / dim));
            }
        }
        Dataset ds;
        ds.dtype_ = DataType::DenseF32;
        ds.dim_ = dim;
        ds.size_ = values.size() / dim;
        ds.dense_ = std::move(values);
        return ds;
    }

    /// Packed bit rows of ceil(bits/8) bytes each.
    static Dataset bitset(std::size_t bits, std::vector<std::uint8_t> packed) {
        if (bits == 0) {
            throw ParameterError("bitset dataset needs at least one bit");
        }
        const std::size_t stride = (bits + 7) / 8;
        if (packed.size() % stride != 0) {
            throw DimensionError("bitset payload is not a multiple of the row stride");
        }
        Dataset ds;
        ds.dtype_ = DataType::Bitset;
        ds.dim_ = bits;
        ds.size_ = packed.size() / stride;
        ds.bits_ = std::move(packed);
        return ds;
    }

    /// Interleaved (lat, lon) pairs in degrees.
    static Dataset geo(std::vector<double> latlon) {
        if (latlon.size() % 2 != 0) {
            throw DimensionError("geo payload must hold (lat, lon) pairs");
        }
        for (std::size_t i = 0; i < latlon.size(); i += 2) {
            if (!valid_geo(GeoPoint{latlon[i], latlon[i + 1]})) {
                throw DomainError("geo coordinates out of range in row " + std::to_string(i / 2));
            }
        }
        Dataset ds;
        ds.dtype_ = DataType::GeoF64;
        ds.dim_ = 2;
        ds.size_ = latlon.size() / 2;
        ds.geo_ = std::move(latlon);
        return ds;
    }

    DataType dtype() const { return dtype_; }
    std::size_t size() const { return size_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return size_ == 0; }

    std::size_t bitset_stride() const { return (dim_ + 7) / 8; }

    Point point(std::size_t i) const {
        switch (dtype_) {
        case DataType::DenseF32:
            return std::span<const float>(dense_.data() + i * dim_, dim_);
        case DataType::Bitset: {
            const std::size_t stride = bitset_stride();
            return BitsetView{std::span<const std::uint8_t>(bits_.data() + i * stride, stride),
                              dim_};
        }
        case DataType::GeoF64:
            return GeoPoint{geo_[2 * i], geo_[2 * i + 1]};
        }
        return GeoPoint{};
    }

    std::span<const float> dense_values() const { return dense_; }
    std::span<const std::uint8_t> bitset_bytes() const { return bits_; }
    std::span<const double> geo_values() const { return geo_; }

    /// Copies the given rows, in order, into a new dataset.
    Dataset subset(std::span<const std::uint32_t> ids) const {
        Dataset out;
        out.dtype_ = dtype_;
        out.dim_ = dim_;
        out.size_ = ids.size();
        for (const auto id : ids) {
            if (id >= size_) {
                throw ParameterError("subset id " + std::to_string(id) + " out of range");
            }
        }
        switch (dtype_) {
        case DataType::DenseF32:
            out.dense_.reserve(ids.size() * dim_);
            for (const auto id : ids) {
                const auto* row = dense_.data() + static_cast<std::size_t>(id) * dim_;
                out.dense_.insert(out.dense_.end(), row, row + dim_);
            }
            break;
        case DataType::Bitset: {
            const std::size_t stride = bitset_stride();
            out.bits_.reserve(ids.size() * stride);
            for (const auto id : ids) {
                const auto* row = bits_.data() + static_cast<std::size_t>(id) * stride;
                out.bits_.insert(out.bits_.end(), row, row + stride);
            }
            break;
        }
        case DataType::GeoF64:
            out.geo_.reserve(ids.size() * 2);
            for (const auto id : ids) {
                out.geo_.push_back(geo_[2 * static_cast<std::size_t>(id)]);
                out.geo_.push_back(geo_[2 * static_cast<std::size_t>(id) + 1]);
            }
            break;
        }
        return out;
    }

    /// Throws DomainError unless every row can be fed to `kind`. Cosine additionally
    /// rejects zero vectors, naming the first offending row.
    void validate_for(DistanceKind kind) const {
        if (dtype_ != data_type_for(kind)) {
            throw DomainError("distance " + std::string(to_string(kind)) +
                              " is incompatible with dtype " + std::string(to_string(dtype_)));
        }
        if (kind == DistanceKind::Cosine) {
            for (std::size_t i = 0; i < size_; ++i) {
                bool nonzero = false;
                for (std::size_t j = 0; j < dim_ && !nonzero; ++j) {
                    nonzero = dense_[i * dim_ + j] != 0.0f;
                }
                if (!nonzero) {
                    throw DomainError("row " + std::to_string(i) +
                                      " has zero norm and cannot be used with cosine");
                }
            }
        }
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    DataType dtype_ = DataType::DenseF32;
    std::size_t dim_ = 0;
    std::size_t size_ = 0;
    std::vector<float> dense_;
    std::vector<std::uint8_t> bits_;
    std::vector<double> geo_;
};

} // namespace pdasc

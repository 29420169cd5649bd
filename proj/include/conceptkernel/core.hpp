#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ck {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr const char* kVersion = "0.1.0";

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, records, dimensions).
class DataError : public Error {
  public:
    using Error::Error;
};

/// Violated precondition on an argument.
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// A numerical procedure could not produce a finite or defined result.
class NumericError : public Error {
  public:
    using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Rounds every component to the nearest 32-bit float (the on-disk precision).
inline Vector quantize_f32(const Vector& v) {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<double>(static_cast<float>(v[i]));
    return out;
}

inline void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
    if (v.size() != dim) {
        throw DataError(std::string(what) + ": dimension mismatch (expected " + std::to_string(dim) + ", got " +
                        std::to_string(v.size()) + ")");
    }
}

/// Sorted set of concept indices.
class ConceptSet {
  public:
    ConceptSet() = default;
    ConceptSet(std::initializer_list<std::size_t> ids) : ids_(ids) { normalize(); }
    explicit ConceptSet(std::vector<std::size_t> ids) : ids_(std::move(ids)) { normalize(); }

    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return ids_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] bool empty() const noexcept { return ids_.empty(); }
    [[nodiscard]] auto begin() const noexcept { return ids_.begin(); }
    [[nodiscard]] auto end() const noexcept { return ids_.end(); }

    [[nodiscard]] bool contains(std::size_t i) const { return std::binary_search(ids_.begin(), ids_.end(), i); }

    [[nodiscard]] ConceptSet unite(const ConceptSet& other) const {
        ConceptSet out;
        std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(), std::back_inserter(out.ids_));
        return out;
    }
    [[nodiscard]] ConceptSet minus(const ConceptSet& other) const {
        ConceptSet out;
        std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                            std::back_inserter(out.ids_));
        return out;
    }
    [[nodiscard]] ConceptSet intersect(const ConceptSet& other) const {
        ConceptSet out;
        std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                              std::back_inserter(out.ids_));
        return out;
    }
    [[nodiscard]] bool is_subset_of(const ConceptSet& other) const {
        return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
    }
    [[nodiscard]] std::size_t max_index_plus_one() const noexcept { return ids_.empty() ? 0 : ids_.back() + 1; }

    friend bool operator==(const ConceptSet&, const ConceptSet&) = default;

  private:
    void normalize() {
        std::sort(ids_.begin(), ids_.end());
        ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    }

    std::vector<std::size_t> ids_;
};

}  // namespace ck

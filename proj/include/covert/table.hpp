#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace covert {

/// Dense row-major table of doubles. Used for policy parameters, policy
/// probabilities, gradients and emission rows.
class Table {
public:
    Table() = default;
    Table(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Table& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Table& operator+=(const Table& other);
    Table& operator-=(const Table& other);
    Table& operator*=(double k);

    /// this += k * other
    void add_scaled(const Table& other, double k);

    double max_abs() const;
    bool all_finite() const;

    friend bool operator==(const Table&, const Table&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Table operator+(Table a, const Table& b);
Table operator-(Table a, const Table& b);
Table operator*(Table a, double k);
Table operator*(double k, Table a);

}  // namespace covert

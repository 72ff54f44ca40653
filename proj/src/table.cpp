#include "covert/table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace covert {

namespace {
void require_same_shape(const Table& a, const Table& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("table shape mismatch");
    }
}
}  // namespace

Table& Table::operator+=(const Table& other) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Table& Table::operator-=(const Table& other) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Table& Table::operator*=(double k) {
    for (auto& v : data_) v *= k;
    return *this;
}

void Table::add_scaled(const Table& other, double k) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += k * other.data_[i];
}

double Table::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

bool Table::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Table operator+(Table a, const Table& b) { return a += b; }
Table operator-(Table a, const Table& b) { return a -= b; }
Table operator*(Table a, double k) { return a *= k; }
Table operator*(double k, Table a) { return a *= k; }

}  // namespace covert

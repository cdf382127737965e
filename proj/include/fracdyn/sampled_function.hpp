#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fracdyn {

/// A function [0, horizon] -> R^d sampled on a uniform grid theta_i = i * step.
/// Values are stored row-major, one row of d entries per grid point.
class SampledFunction {
public:
    SampledFunction() = default;
    SampledFunction(double step, std::size_t dimension, std::vector<double> values);

    /// Samples `fn` at i * step for i = 0..n.
    static SampledFunction from_function(double step, std::size_t n, std::size_t dimension,
                                         const std::function<void(double, std::span<double>)>& fn);
    static SampledFunction constant(std::span<const double> value, double step, std::size_t n);

    double step() const noexcept { return step_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return dimension_ == 0 ? 0 : values_.size() / dimension_; }
    double horizon() const noexcept { return size() == 0 ? 0.0 : step_ * static_cast<double>(size() - 1); }
    double theta(std::size_t i) const noexcept { return step_ * static_cast<double>(i); }

    double at(std::size_t i, std::size_t c) const { return values_[i * dimension_ + c]; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * dimension_, dimension_}; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Linear interpolation; beyond the horizon the last sample is held.
    void value_at(double theta, std::span<double> out) const;

    /// Linear-interpolation resample onto i * step for i = 0..n.
    SampledFunction resample(double step, std::size_t n) const;

private:
    double step_ = 0.0;
    std::size_t dimension_ = 0;
    std::vector<double> values_;
};

}  // namespace fracdyn

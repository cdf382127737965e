#include "fracdyn/sampled_function.hpp"

#include <cmath>
#include <string>

#include "fracdyn/errors.hpp"

namespace fracdyn {

SampledFunction::SampledFunction(double step, std::size_t dimension, std::vector<double> values)
    : step_(step), dimension_(dimension), values_(std::move(values)) {
    if (!(step_ > 0.0) || !std::isfinite(step_)) throw PreconditionError("grid step must be positive");
    if (dimension_ == 0) throw PreconditionError("dimension must be positive");
    if (values_.empty() || values_.size() % dimension_ != 0)
        throw PreconditionError("sample count is not a multiple of the dimension");
    for (double v : values_)
        if (!std::isfinite(v)) throw PreconditionError("sampled values must be finite");
}

SampledFunction SampledFunction::from_function(double step, std::size_t n, std::size_t dimension,
                                               const std::function<void(double, std::span<double>)>& fn) {
    std::vector<double> values((n + 1) * dimension);
    for (std::size_t i = 0; i <= n; ++i)
        fn(step * static_cast<double>(i), std::span<double>(values.data() + i * dimension, dimension));
    return SampledFunction(step, dimension, std::move(values));
}

SampledFunction SampledFunction::constant(std::span<const double> value, double step, std::size_t n) {
    std::vector<double> values;
    values.reserve((n + 1) * value.size());
    for (std::size_t i = 0; i <= n; ++i) values.insert(values.end(), value.begin(), value.end());
    return SampledFunction(step, value.size(), std::move(values));
}

void SampledFunction::value_at(double theta, std::span<double> out) const {
    const std::size_t n = size();
    if (out.size() != dimension_) throw PreconditionError("output length does not match dimension");
    if (theta <= 0.0 || n == 1) {
        for (std::size_t c = 0; c < dimension_; ++c) out[c] = at(0, c);
        return;
    }
    const double pos = theta / step_;
    if (pos >= static_cast<double>(n - 1)) {
        for (std::size_t c = 0; c < dimension_; ++c) out[c] = at(n - 1, c);
        return;
    }
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(i);
    for (std::size_t c = 0; c < dimension_; ++c) {
        const double a = at(i, c);
        out[c] = w == 0.0 ? a : a + w * (at(i + 1, c) - a);
    }
}

SampledFunction SampledFunction::resample(double step, std::size_t n) const {
    if (step == step_ && n + 1 <= size()) {
        return SampledFunction(step, dimension_,
                               std::vector<double>(values_.begin(), values_.begin() + (n + 1) * dimension_));
    }
    return from_function(step, n, dimension_, [this](double t, std::span<double> out) { value_at(t, out); });
}

}  // namespace fracdyn

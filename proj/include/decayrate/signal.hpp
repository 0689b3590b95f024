#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace decayrate {

/// Uniformly sampled real-valued sequence. Non-empty, finite, positive rate.
class SampledSignal {
public:
    SampledSignal(std::vector<double> samples, double sample_rate_hz);

    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
    [[nodiscard]] double sample_rate_hz() const noexcept { return sample_rate_hz_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return samples_[i]; }

    /// Copy of samples [begin, end).
    [[nodiscard]] SampledSignal slice(std::size_t begin, std::size_t end) const;

    /// Mean of the squared samples.
    [[nodiscard]] double mean_power() const noexcept;

    friend bool operator==(const SampledSignal&, const SampledSignal&) = default;

private:
    std::vector<double> samples_;
    double sample_rate_hz_;
};

}  // namespace decayrate

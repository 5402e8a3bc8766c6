// signal.hpp - complex baseband sample container
#pragma once

#include <complex>
#include <cstdint>
#include <string_view>
#include <vector>

namespace snow {

using Complex = std::complex<double>;
using Bits = std::vector<std::uint8_t>;  // one bit per element, 0 or 1

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 2.998e8;

namespace phy {

struct BasebandSignal {
    std::vector<Complex> samples;
    double sample_rate = 0.0;  // samples/s
    double t0 = 0.0;           // start time, s

    BasebandSignal() = default;
    BasebandSignal(std::vector<Complex> s, double fs, double start = 0.0)
        : samples(std::move(s)), sample_rate(fs), t0(start) {}

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration() const;
    double energy() const;     // sum |x|^2
    double avg_power() const;  // mean |x|^2
    double peak_power() const;

    // throws std::invalid_argument naming `what` when empty or fs <= 0
    void require_valid(std::string_view what) const;
};

}  // namespace phy
}  // namespace snow

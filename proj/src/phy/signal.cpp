#include "snow/phy/signal.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace snow::phy {

double BasebandSignal::duration() const
{
    if (sample_rate <= 0.0) return 0.0;
    return static_cast<double>(samples.size()) / sample_rate;
}

double BasebandSignal::energy() const
{
    double e = 0.0;
    for (const auto& s : samples) e += std::norm(s);
    return e;
}

double BasebandSignal::avg_power() const
{
    if (samples.empty()) return 0.0;
    return energy() / static_cast<double>(samples.size());
}

double BasebandSignal::peak_power() const
{
    double p = 0.0;
    for (const auto& s : samples) p = std::max(p, std::norm(s));
    return p;
}

void BasebandSignal::require_valid(std::string_view what) const
{
    if (!(sample_rate > 0.0))
        throw std::invalid_argument(std::string(what) + ": sample rate must be positive");
    if (samples.empty())
        throw std::invalid_argument(std::string(what) + ": empty signal");
}

}  // namespace snow::phy

#include "snow/estimation/cfo.hpp"

#include <cmath>
#include <string>

#include "snow/channel/impairments.hpp"

namespace snow::estimation {

namespace {
// a coarse estimate this close to the edge of its range may have wrapped
constexpr double kEdgeMargin = 0.95;
}

double PreambleSplit::short_lag_s() const
{
    return static_cast<double>(short_lag) / short_part.sample_rate;
}

double PreambleSplit::long_lag_s() const
{
    return static_cast<double>(long_lag) / long_part.sample_rate;
}

PreambleSplit split_preamble(const phy::BasebandSignal& received_preamble, double symbol_rate)
{
    received_preamble.require_valid("split_preamble");
    if (!(symbol_rate > 0.0)) throw std::invalid_argument("split_preamble: symbol rate must be positive");
    const double sps = received_preamble.sample_rate / symbol_rate;
    PreambleSplit s;
    s.short_lag = static_cast<std::size_t>(std::llround(sps / 2.0));
    s.long_lag = static_cast<std::size_t>(std::llround(2.0 * sps));
    const std::size_t m = received_preamble.size();
    const std::size_t ns = m / 4;
    if (s.short_lag < 1 || ns <= s.short_lag || m - ns <= s.long_lag)
        throw std::invalid_argument("split_preamble: too few samples per symbol");
    const auto& x = received_preamble.samples;
    s.short_part = phy::BasebandSignal(std::vector<Complex>(x.begin(), x.begin() + ns), received_preamble.sample_rate,
                                       received_preamble.t0);
    s.long_part = phy::BasebandSignal(std::vector<Complex>(x.begin() + ns, x.end()), received_preamble.sample_rate,
                                      received_preamble.t0 + static_cast<double>(ns) / received_preamble.sample_rate);
    return s;
}

double lag_correlation_offset(const phy::BasebandSignal& part, std::size_t lag)
{
    part.require_valid("cfo estimate");
    if (lag == 0 || lag >= part.size()) throw std::invalid_argument("cfo estimate: lag out of range");
    Complex acc{};
    for (std::size_t n = lag; n < part.size(); ++n) acc += part.samples[n - lag] * std::conj(part.samples[n]);
    if (!(std::abs(acc) > 0.0)) throw std::invalid_argument("cfo estimate: zero-energy input");
    const double tau = static_cast<double>(lag) / part.sample_rate;
    return -std::arg(acc) / (2.0 * kPi * tau);
}

double ambiguity_limit_hz(const phy::BasebandSignal& part, std::size_t lag)
{
    return part.sample_rate / (2.0 * static_cast<double>(lag));
}

double estimate_cfo_coarse(const PreambleSplit& split)
{
    const double est = lag_correlation_offset(split.short_part, split.short_lag);
    const double lim = ambiguity_limit_hz(split.short_part, split.short_lag);
    if (std::abs(est) >= kEdgeMargin * lim)
        throw AmbiguityError("coarse CFO estimate " + std::to_string(est) + " Hz at the edge of the +-" +
                             std::to_string(lim) + " Hz range");
    return est;
}

double estimate_cfo_fine(const PreambleSplit& split, double coarse_hz)
{
    const phy::BasebandSignal corrected = channel::apply_cfo(split.long_part, -coarse_hz);
    return coarse_hz + lag_correlation_offset(corrected, split.long_lag);
}

CfoEstimate ppm_and_subcarrier_cfo(double fine_hz, double join_hz, const phy::SpectrumPlan& plan)
{
    if (!(join_hz > 0.0)) throw std::invalid_argument("ppm extrapolation: join frequency must be positive");
    CfoEstimate e;
    e.fine_hz = fine_hz;
    e.ppm_bs = 1e6 * fine_hz / join_hz;
    for (int k = 1; k <= plan.num_subcarriers; ++k)
        e.per_subcarrier_hz[k] = plan.center_hz(k) * (fine_hz / join_hz);
    return e;
}

phy::BasebandSignal proactive_correction(const phy::BasebandSignal& node_tx, double delta_f_i, double delta_f_d)
{
    return channel::apply_cfo(node_tx, -(delta_f_i + delta_f_d));
}

double snr_loss_factor(double delta_f_hz, double symbol_period_s, double es_over_n0)
{
    if (!(symbol_period_s > 0.0)) throw std::invalid_argument("snr_loss_factor: symbol period must be positive");
    const double x = kPi * delta_f_hz * symbol_period_s;
    return 1.0 + (x * x / 3.0) * es_over_n0;
}

}  // namespace snow::estimation

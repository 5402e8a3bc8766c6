// cfo.hpp - two-stage preamble CFO estimation, ppm extrapolation, proactive correction
#pragma once

#include <map>
#include <stdexcept>

#include "snow/phy/signal.hpp"
#include "snow/phy/spectrum_plan.hpp"

namespace snow::estimation {

struct AmbiguityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// short_part covers the first quarter of the preamble (8 of 32 bits),
// long_part the remaining three quarters. Lags are in samples.
struct PreambleSplit {
    phy::BasebandSignal short_part;
    phy::BasebandSignal long_part;
    std::size_t short_lag = 0;
    std::size_t long_lag = 0;

    double short_lag_s() const;
    double long_lag_s() const;
};

// Short lag: half a symbol. Long lag: two symbols, one period of the
// alternating preamble pattern.
PreambleSplit split_preamble(const phy::BasebandSignal& received_preamble, double symbol_rate);

// -angle(sum_n y[n-L] y*[n]) / (2 pi L/fs) over every pair inside the part
double lag_correlation_offset(const phy::BasebandSignal& part, std::size_t lag);

double ambiguity_limit_hz(const phy::BasebandSignal& part, std::size_t lag);

double estimate_cfo_coarse(const PreambleSplit& split);
// corrects long_part by coarse_hz and returns coarse_hz + residual
double estimate_cfo_fine(const PreambleSplit& split, double coarse_hz);

struct CfoEstimate {
    double coarse_hz = 0.0;
    double fine_hz = 0.0;
    double ppm_bs = 0.0;
    std::map<int, double> per_subcarrier_hz;
    double doppler_hz = 0.0;
};

CfoEstimate ppm_and_subcarrier_cfo(double fine_hz, double join_hz, const phy::SpectrumPlan& plan);

phy::BasebandSignal proactive_correction(const phy::BasebandSignal& node_tx, double delta_f_i, double delta_f_d);

double snr_loss_factor(double delta_f_hz, double symbol_period_s, double es_over_n0);

}  // namespace snow::estimation

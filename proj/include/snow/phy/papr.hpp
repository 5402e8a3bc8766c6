// papr.hpp - peak-to-average power statistics of composite signals
#pragma once

#include <random>
#include <utility>
#include <vector>

#include "snow/phy/signal.hpp"
#include "snow/phy/spectrum_plan.hpp"

namespace snow::phy {

struct PaprReport {
    double papr_db = 0.0;
    double peak_power = 0.0;
    double avg_power = 0.0;
    std::vector<std::pair<double, double>> ccdf;  // (threshold_db, P[PAPR > threshold])
    double hpa_efficiency = 0.0;
};

PaprReport compute_papr(const BasebandSignal& signal);

// real-valued DAC drive of a complex frame: Re{x}
BasebandSignal real_part(const BasebandSignal& signal);

std::vector<double> default_ccdf_grid();  // 0..20 dB in 0.25 dB steps

PaprReport papr_ccdf(const std::vector<BasebandSignal>& frames, const std::vector<double>& grid_db);
// same CCDF from precomputed per-frame PAPR values
std::vector<std::pair<double, double>> ccdf_from_values(const std::vector<double>& papr_db,
                                                        const std::vector<double>& grid_db);

// smallest PAPR value x among the samples with P[PAPR > x] <= p
double ccdf_threshold(std::vector<double> papr_db, double exceed_probability);

double hpa_efficiency(double papr_db);

// one OFDM symbol with an independent +-1 on every subcarrier of `plan`
BasebandSignal random_bpsk_frame(const SpectrumPlan& plan, std::mt19937_64& rng);

}  // namespace snow::phy

// spectrum_plan.hpp - subcarrier layout of the BS wideband channel
#pragma once

#include <vector>

namespace snow::phy {

// Subcarrier ids are 1-based. Center of id k is
//   band_start + spacing * k      (spacing = bw * (1 - overlap))
// which for 50% overlap is band_start + bw/2 + (k-1)*spacing.
// lo_hz is the frequency mixed down to DC at the BS; every subcarrier
// sits on an exact bin of the fft_size-point G-FFT.
struct SpectrumPlan {
    double band_start_hz = 0.0;
    double band_end_hz = 0.0;
    int num_subcarriers = 0;
    double subcarrier_bandwidth_hz = 0.0;
    double overlap_fraction = 0.0;
    int join_index = 0;
    int downlink_index = 0;
    std::vector<int> backup_indices;
    std::vector<int> guard_indices;
    double lo_hz = 0.0;
    double sample_rate_hz = 0.0;  // wideband rate at the BS

    // 500-506 MHz, 29 x 400 kHz, 50% overlap, join 28, downlink 26,
    // guards 27/29, LO at the center of subcarrier 15, 8.4 Msps.
    static SpectrumPlan snow_default();

    // n contiguous subcarriers with f_k = k * spacing, LO at 0 Hz and an
    // n-point FFT. No reserved roles. Used for PAPR and OFDM analysis.
    static SpectrumPlan analysis(int n, double spacing_hz);

    double spacing_hz() const;
    double center_hz(int id) const;
    double baseband_offset_hz(int id) const;  // center - lo
    int fft_size() const;
    int bin(int id) const;                    // in [0, fft_size)
    bool valid_id(int id) const;
    bool is_reserved(int id) const;           // join, downlink, backup or guard
    bool is_data(int id) const;
    std::vector<int> data_subcarriers() const;
    std::vector<int> all_subcarriers() const;

    // throws std::invalid_argument when the layout breaks an invariant
    void validate() const;
};

}  // namespace snow::phy

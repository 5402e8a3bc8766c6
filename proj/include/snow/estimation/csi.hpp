// csi.hpp - least-squares flat-fading channel estimate from the known preamble
#pragma once

#include "snow/phy/signal.hpp"

namespace snow::phy {
struct ModulationScheme;
}

namespace snow::estimation {

struct CsiEstimate {
    Complex h_gain{1.0, 0.0};
    double noise_variance = 0.0;  // per-sample residual variance (white W = sigma^2 I)
    int n_parts = 4;
};

// The received preamble is cut into n_parts equal segments Y = [y_1..y_n],
// the reference P = [p_1..p_n] is the known preamble at the same sample
// grid, and H solves min |Y - H P|^2. Reference levels follow `scheme`
// (OOK by default). Sample m maps to preamble bit floor(m * B / M).
CsiEstimate estimate_csi(const phy::BasebandSignal& received_preamble, const Bits& known_preamble,
                         int n_parts = 4);
CsiEstimate estimate_csi(const phy::BasebandSignal& received_preamble, const Bits& known_preamble,
                         int n_parts, const phy::ModulationScheme& scheme);

}  // namespace snow::estimation

#include "snow/estimation/csi.hpp"

#include <cmath>
#include <stdexcept>

#include "snow/phy/modulation.hpp"

namespace snow::estimation {

CsiEstimate estimate_csi(const phy::BasebandSignal& received_preamble, const Bits& known_preamble, int n_parts)
{
    return estimate_csi(received_preamble, known_preamble, n_parts, phy::ModulationScheme{});
}

CsiEstimate estimate_csi(const phy::BasebandSignal& received_preamble, const Bits& known_preamble, int n_parts,
                         const phy::ModulationScheme& scheme)
{
    received_preamble.require_valid("estimate_csi");
    if (known_preamble.empty()) throw std::invalid_argument("estimate_csi: empty known preamble");
    if (n_parts < 1) throw std::invalid_argument("estimate_csi: n_parts must be positive");
    const std::size_t m = received_preamble.size();
    if (m % static_cast<std::size_t>(n_parts) != 0)
        throw std::invalid_argument("estimate_csi: preamble length not divisible by n_parts");

    const std::size_t b = known_preamble.size();
    const std::size_t seg = m / n_parts;
    // per segment p_j^H y_j and p_j^H p_j; the scalar LS over the stack is
    // the ratio of the sums
    Complex num{};
    double den = 0.0;
    for (int j = 0; j < n_parts; ++j) {
        Complex pj_y{};
        double pj_p = 0.0;
        for (std::size_t i = j * seg; i < (j + 1) * seg; ++i) {
            const double p = scheme.level(known_preamble[i * b / m]);
            pj_y += p * received_preamble.samples[i];
            pj_p += p * p;
        }
        num += pj_y;
        den += pj_p;
    }
    if (!(den > 0.0)) throw std::invalid_argument("estimate_csi: zero-energy known preamble");

    CsiEstimate est;
    est.n_parts = n_parts;
    est.h_gain = num / den;
    double res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = scheme.level(known_preamble[i * b / m]);
        res += std::norm(received_preamble.samples[i] - est.h_gain * p);
    }
    est.noise_variance = m > 1 ? res / static_cast<double>(m - 1) : 0.0;
    return est;
}

}  // namespace snow::estimation

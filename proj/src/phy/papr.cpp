#include "snow/phy/papr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "snow/phy/dofdm.hpp"

namespace snow::phy {

PaprReport compute_papr(const BasebandSignal& signal)
{
    signal.require_valid("compute_papr");
    PaprReport r;
    r.avg_power = signal.avg_power();
    if (!(r.avg_power > 0.0)) throw std::invalid_argument("compute_papr: all-zero signal");
    r.peak_power = signal.peak_power();
    r.papr_db = std::max(0.0, 10.0 * std::log10(r.peak_power / r.avg_power));
    r.hpa_efficiency = hpa_efficiency(r.papr_db);
    return r;
}

BasebandSignal real_part(const BasebandSignal& signal)
{
    BasebandSignal out = signal;
    for (auto& s : out.samples) s = Complex(s.real(), 0.0);
    return out;
}

std::vector<double> default_ccdf_grid()
{
    std::vector<double> g;
    for (int i = 0; i <= 80; ++i) g.push_back(0.25 * i);
    return g;
}

std::vector<std::pair<double, double>> ccdf_from_values(const std::vector<double>& papr_db,
                                                        const std::vector<double>& grid_db)
{
    std::vector<double> sorted = papr_db;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> grid = grid_db;
    std::sort(grid.begin(), grid.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(sorted.size());
    for (double g : grid) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), g);
        const double above = static_cast<double>(sorted.end() - it);
        out.emplace_back(g, n > 0 ? above / n : 0.0);
    }
    return out;
}

PaprReport papr_ccdf(const std::vector<BasebandSignal>& frames, const std::vector<double>& grid_db)
{
    if (frames.empty()) throw std::invalid_argument("papr_ccdf: no frames");
    std::vector<double> values;
    values.reserve(frames.size());
    PaprReport r;
    double peak = 0.0, avg = 0.0;
    for (const auto& f : frames) {
        const PaprReport one = compute_papr(f);
        values.push_back(one.papr_db);
        peak = std::max(peak, one.peak_power);
        avg += one.avg_power;
    }
    r.ccdf = ccdf_from_values(values, grid_db);
    r.papr_db = *std::max_element(values.begin(), values.end());
    r.peak_power = peak;
    r.avg_power = avg / static_cast<double>(frames.size());
    r.hpa_efficiency = hpa_efficiency(r.papr_db);
    return r;
}

double ccdf_threshold(std::vector<double> papr_db, double exceed_probability)
{
    if (papr_db.empty()) throw std::invalid_argument("ccdf_threshold: no values");
    std::sort(papr_db.begin(), papr_db.end());
    const double n = static_cast<double>(papr_db.size());
    // need count(> x) <= p*n, i.e. x at sorted index ceil(n - p*n) - 1
    const double allowed = std::floor(exceed_probability * n + 1e-9);
    long idx = static_cast<long>(n - allowed) - 1;
    idx = std::clamp(idx, 0L, static_cast<long>(papr_db.size()) - 1);
    return papr_db[static_cast<std::size_t>(idx)];
}

double hpa_efficiency(double papr_db)
{
    if (papr_db < 0.0) throw std::invalid_argument("hpa_efficiency: negative PAPR");
    return 0.5 / std::pow(10.0, papr_db / 10.0);
}

BasebandSignal random_bpsk_frame(const SpectrumPlan& plan, std::mt19937_64& rng)
{
    std::bernoulli_distribution coin(0.5);
    std::map<int, std::vector<Complex>> sym;
    for (int k = 1; k <= plan.num_subcarriers; ++k)
        sym[k] = {Complex(coin(rng) ? 1.0 : -1.0, 0.0)};
    return dofdm_encode(sym, plan);
}

}  // namespace snow::phy

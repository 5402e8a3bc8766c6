#include "snow/phy/spectrum_plan.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace snow::phy {

SpectrumPlan SpectrumPlan::snow_default()
{
    SpectrumPlan p;
    p.band_start_hz = 500e6;
    p.band_end_hz = 506e6;
    p.num_subcarriers = 29;
    p.subcarrier_bandwidth_hz = 400e3;
    p.overlap_fraction = 0.5;
    p.join_index = 28;
    p.downlink_index = 26;
    p.guard_indices = {27, 29};
    p.backup_indices = {};
    p.lo_hz = p.center_hz(15);  // 503 MHz
    p.sample_rate_hz = 8.4e6;
    return p;
}

SpectrumPlan SpectrumPlan::analysis(int n, double spacing_hz)
{
    if (n < 1 || !(spacing_hz > 0.0))
        throw std::invalid_argument("analysis plan: need n >= 1 and spacing > 0");
    SpectrumPlan p;
    p.band_start_hz = 0.0;
    p.band_end_hz = (n + 1) * spacing_hz;
    p.num_subcarriers = n;
    p.subcarrier_bandwidth_hz = 2.0 * spacing_hz;
    p.overlap_fraction = 0.5;
    p.join_index = 0;
    p.downlink_index = 0;
    p.lo_hz = 0.0;
    p.sample_rate_hz = n * spacing_hz;
    return p;
}

double SpectrumPlan::spacing_hz() const
{
    return subcarrier_bandwidth_hz * (1.0 - overlap_fraction);
}

double SpectrumPlan::center_hz(int id) const
{
    return band_start_hz + spacing_hz() * id;
}

double SpectrumPlan::baseband_offset_hz(int id) const
{
    return center_hz(id) - lo_hz;
}

int SpectrumPlan::fft_size() const
{
    return static_cast<int>(std::lround(sample_rate_hz / spacing_hz()));
}

int SpectrumPlan::bin(int id) const
{
    const int n = fft_size();
    long k = std::lround(baseband_offset_hz(id) / spacing_hz());
    k %= n;
    if (k < 0) k += n;
    return static_cast<int>(k);
}

bool SpectrumPlan::valid_id(int id) const
{
    return id >= 1 && id <= num_subcarriers;
}

bool SpectrumPlan::is_reserved(int id) const
{
    if (id == join_index || id == downlink_index) return true;
    auto in = [id](const std::vector<int>& v) {
        return std::find(v.begin(), v.end(), id) != v.end();
    };
    return in(backup_indices) || in(guard_indices);
}

bool SpectrumPlan::is_data(int id) const
{
    return valid_id(id) && !is_reserved(id);
}

std::vector<int> SpectrumPlan::data_subcarriers() const
{
    std::vector<int> out;
    for (int k = 1; k <= num_subcarriers; ++k)
        if (is_data(k)) out.push_back(k);
    return out;
}

std::vector<int> SpectrumPlan::all_subcarriers() const
{
    std::vector<int> out;
    for (int k = 1; k <= num_subcarriers; ++k) out.push_back(k);
    return out;
}

void SpectrumPlan::validate() const
{
    auto fail = [](const std::string& m) { throw std::invalid_argument("spectrum plan: " + m); };
    if (num_subcarriers < 1) fail("no subcarriers");
    if (!(subcarrier_bandwidth_hz > 0.0)) fail("subcarrier bandwidth must be positive");
    if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) fail("overlap must lie in [0,1)");
    if (!(band_end_hz > band_start_hz)) fail("empty band");
    if (!(sample_rate_hz > 0.0)) fail("sample rate must be positive");

    const double sp = spacing_hz();
    const double ratio = sample_rate_hz / sp;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
        fail("sample rate is not a multiple of the subcarrier spacing");
    const int n = fft_size();
    if (n < num_subcarriers) fail("fft smaller than the number of subcarriers");

    std::set<int> bins;
    for (int k = 1; k <= num_subcarriers; ++k) {
        const double c = center_hz(k);
        if (c < band_start_hz || c > band_end_hz) fail("subcarrier center outside the band");
        const double off = baseband_offset_hz(k) / sp;
        if (std::abs(off - std::round(off)) > 1e-6) fail("subcarrier not on an fft bin");
        if (std::abs(baseband_offset_hz(k)) > sample_rate_hz) fail("subcarrier outside the sampled band");
        if (!bins.insert(bin(k)).second) fail("two subcarriers map to the same bin");
    }

    // roles only matter when the plan reserves a join subcarrier
    if (join_index == 0) return;
    if (!valid_id(join_index)) fail("join index out of range");
    if (!valid_id(downlink_index)) fail("downlink index out of range");
    if (join_index == downlink_index) fail("join and downlink coincide");
    for (int b : backup_indices) {
        if (!valid_id(b)) fail("backup index out of range");
        if (b == join_index) fail("join subcarrier listed as backup");
    }
    for (int g : guard_indices)
        if (!valid_id(g)) fail("guard index out of range");
    for (int nb : {join_index - 1, join_index + 1}) {
        if (!valid_id(nb)) continue;
        if (std::find(guard_indices.begin(), guard_indices.end(), nb) == guard_indices.end())
            fail("join subcarrier neighbour " + std::to_string(nb) + " is not a guard");
    }
}

}  // namespace snow::phy

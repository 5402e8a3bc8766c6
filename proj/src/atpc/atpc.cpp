#include "snow/atpc/atpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace snow::atpc {

PowerVector PowerVector::range(int lo_dbm, int hi_dbm)
{
    PowerVector p;
    for (int v = lo_dbm; v <= hi_dbm; ++v) p.levels.push_back(v);
    p.validate();
    return p;
}

void PowerVector::validate() const
{
    if (levels.size() < 2) throw std::invalid_argument("power vector needs at least two levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (!(levels[i] > levels[i - 1])) throw std::invalid_argument("power vector must be strictly increasing");
}

AtpcModel fit_initial(const PdrSamples& samples, double pdr_threshold)
{
    if (!(pdr_threshold > 0.0 && pdr_threshold <= 1.0))
        throw std::invalid_argument("atpc: threshold must lie in (0,1]");
    const double m = static_cast<double>(samples.pairs.size());
    double st = 0.0, sl = 0.0, stt = 0.0, slt = 0.0;
    for (const auto& [tp, l] : samples.pairs) {
        if (l < 0.0 || l > 1.0) throw std::invalid_argument("atpc: pdr outside [0,1]");
        st += tp;
        sl += l;
        stt += tp * tp;
        slt += l * tp;
    }
    const double den = m * stt - st * st;
    // relative test: den is a scaled variance of the power levels
    if (samples.pairs.size() < 2 || !(std::abs(den) > 1e-12 * std::max(1.0, m * stt)))
        throw std::invalid_argument("atpc: singular fit, need at least two distinct power levels");
    AtpcModel out;
    out.a_hat = (m * slt - sl * st) / den;
    out.b_hat = (sl * stt - slt * st) / den;
    out.pdr_threshold = pdr_threshold;
    return out;
}

double select_power(const AtpcModel& model, const PowerVector& tp_vector)
{
    tp_vector.validate();
    if (std::abs(model.a_hat) < 1e-12) throw std::invalid_argument("atpc: zero slope, power cannot be selected");
    const double raw = (model.pdr_threshold - model.b_hat) / model.a_hat;
    const auto& lv = tp_vector.levels;
    if (raw <= lv.front()) return lv.front();
    if (raw >= lv.back()) return lv.back();
    double best = lv.front();
    double dist = std::numeric_limits<double>::infinity();
    for (double v : lv) {
        const double d = std::abs(v - raw);
        if (d < dist) {
            dist = d;
            best = v;
        }
    }
    return best;
}

AtpcModel update_intercept(const AtpcModel& model, const PdrSamples& readings)
{
    if (readings.pairs.empty()) throw std::invalid_argument("atpc: empty feedback window");
    double mean = 0.0;
    for (const auto& r : readings.pairs) mean += r.second;
    mean /= static_cast<double>(readings.pairs.size());
    AtpcModel out = model;
    const double delta = model.pdr_threshold - mean;
    out.b_hat = model.b_hat - delta;
    return out;
}

double predict_pdr(const AtpcModel& model, double tp_dbm)
{
    return std::clamp(model.a_hat * tp_dbm + model.b_hat, 0.0, 1.0);
}

}  // namespace snow::atpc

#include "snow/channel/path_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace snow::channel {

double free_space_db(double distance_m, double carrier_hz)
{
    if (!(distance_m > 0.0) || !(carrier_hz > 0.0))
        throw std::invalid_argument("path loss: distance and carrier must be positive");
    return 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_hz) - 147.55;
}

double path_loss_db(const PathLossModel& model, double distance_m, double carrier_hz)
{
    if (!(distance_m > 0.0) || !(carrier_hz > 0.0))
        throw std::invalid_argument("path loss: distance and carrier must be positive");
    switch (model.kind) {
    case PathLossKind::free_space: return free_space_db(distance_m, carrier_hz);
    case PathLossKind::log_distance:
        if (!(model.reference_m > 0.0)) throw std::invalid_argument("path loss: reference distance must be positive");
        // inside the anchor distance: free space
        if (distance_m < model.reference_m) return free_space_db(distance_m, carrier_hz);
        return free_space_db(model.reference_m, carrier_hz) +
               10.0 * model.exponent * std::log10(distance_m / model.reference_m);
    case PathLossKind::fixed: return model.fixed_db;
    }
    throw std::invalid_argument("path loss: unknown model");
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw)
{
    if (!(mw > 0.0)) throw std::invalid_argument("power must be positive for dBm");
    return 10.0 * std::log10(mw);
}

}  // namespace snow::channel

// path_loss.hpp - large-scale propagation loss
#pragma once

namespace snow::channel {

enum class PathLossKind { free_space, log_distance, fixed };

struct PathLossModel {
    PathLossKind kind = PathLossKind::log_distance;
    double exponent = 3.5;
    double reference_m = 100.0;  // log-distance anchor; free space up to this distance
    double fixed_db = 0.0;       // kind == fixed

    static PathLossModel free_space() { return {PathLossKind::free_space, 2.0, 1.0, 0.0}; }
    static PathLossModel log_distance(double n, double d0) { return {PathLossKind::log_distance, n, d0, 0.0}; }
    static PathLossModel fixed(double db) { return {PathLossKind::fixed, 2.0, 1.0, db}; }
};

double free_space_db(double distance_m, double carrier_hz);
double path_loss_db(const PathLossModel& model, double distance_m, double carrier_hz);

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

}  // namespace snow::channel

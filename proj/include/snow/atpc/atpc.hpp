// atpc.hpp - linear PDR-vs-power model, power selection and intercept feedback
#pragma once

#include <utility>
#include <vector>

namespace snow::atpc {

struct PowerVector {
    std::vector<double> levels;  // dBm, strictly increasing

    static PowerVector range(int lo_dbm, int hi_dbm);  // integers lo..hi
    void validate() const;
};

struct PdrSamples {
    std::vector<std::pair<double, double>> pairs;  // (tp dBm, pdr fraction)
    int window_k = 0;                             // readings per feedback period
};

struct AtpcModel {
    double a_hat = 0.0;
    double b_hat = 0.0;
    double pdr_threshold = 0.9;
};

AtpcModel fit_initial(const PdrSamples& samples, double pdr_threshold = 0.9);
double select_power(const AtpcModel& model, const PowerVector& tp_vector);
AtpcModel update_intercept(const AtpcModel& model, const PdrSamples& readings);
double predict_pdr(const AtpcModel& model, double tp_dbm);

}  // namespace snow::atpc

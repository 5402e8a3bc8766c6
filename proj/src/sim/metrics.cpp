#include "snow/sim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace snow::sim {

double NodeMetrics::prr() const { return sent > 0 ? static_cast<double>(decoded) / sent : 0.0; }
double NodeMetrics::pdr() const { return sent > 0 ? static_cast<double>(acked) / sent : 0.0; }
double NodeMetrics::throughput_bps() const { return airtime_s > 0.0 ? decoded_frame_bits / airtime_s : 0.0; }
double NodeMetrics::mean_delay_s() const { return delay_count > 0 ? delay_sum_s / delay_count : 0.0; }
double NodeMetrics::energy_per_bit_j() const
{
    return decoded_payload_bits > 0.0 ? energy_j / decoded_payload_bits : 0.0;
}

namespace {
template <class F>
double sum_regular(const std::vector<NodeMetrics>& nodes, F f)
{
    double s = 0.0;
    for (const auto& n : nodes)
        if (!n.continuous) s += f(n);
    return s;
}
}  // namespace

int Metrics::sent() const { return static_cast<int>(sum_regular(nodes, [](auto& n) { return n.sent; })); }
int Metrics::decoded() const { return static_cast<int>(sum_regular(nodes, [](auto& n) { return n.decoded; })); }
int Metrics::acked() const { return static_cast<int>(sum_regular(nodes, [](auto& n) { return n.acked; })); }
double Metrics::prr() const { return sent() > 0 ? static_cast<double>(decoded()) / sent() : 0.0; }
double Metrics::pdr() const { return sent() > 0 ? static_cast<double>(acked()) / sent() : 0.0; }
double Metrics::throughput_bps() const
{
    return sum_regular(nodes, [](auto& n) { return n.throughput_bps(); });
}
double Metrics::mean_delay_s() const
{
    const double cnt = sum_regular(nodes, [](auto& n) { return n.delay_count; });
    return cnt > 0 ? sum_regular(nodes, [](auto& n) { return n.delay_sum_s; }) / cnt : 0.0;
}
double Metrics::energy_j() const { return sum_regular(nodes, [](auto& n) { return n.energy_j; }); }
double Metrics::energy_per_bit_j() const
{
    const double bits = sum_regular(nodes, [](auto& n) { return n.decoded_payload_bits; });
    return bits > 0.0 ? energy_j() / bits : 0.0;
}
double Metrics::mean_node_throughput_bps() const
{
    const double cnt = sum_regular(nodes, [](auto&) { return 1.0; });
    return cnt > 0 ? throughput_bps() / cnt : 0.0;
}

std::string fmt(double v, int decimals)
{
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // no "-0.000"
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

void write_metrics_header(std::ostream& os)
{
    os << "run,node,subcarrier,distance_m,tx_power_dbm,sent,decoded,lost,acked,delivered,dropped,"
          "prr,pdr,throughput_kbps,e2e_delay_ms,energy_mj,energy_per_bit_uj\n";
}

void write_metrics_rows(std::ostream& os, const std::string& run_label, const Metrics& m)
{
    for (const auto& n : m.nodes) {
        os << run_label << ',' << n.node << ',' << n.subcarrier << ',' << fmt(n.distance_m, 1) << ','
           << fmt(n.final_power_dbm, 1) << ',' << n.sent << ',' << n.decoded << ',' << n.lost << ',' << n.acked
           << ',' << n.delivered << ',' << n.dropped << ',' << fmt(n.prr()) << ',' << fmt(n.pdr()) << ','
           << fmt(n.throughput_bps() / 1e3, 3) << ',' << fmt(n.mean_delay_s() * 1e3, 3) << ','
           << fmt(n.energy_j * 1e3, 4) << ',' << fmt(n.energy_per_bit_j() * 1e6, 3) << '\n';
    }
}

LineFit fit_line(const std::vector<std::pair<double, double>>& xy)
{
    if (xy.size() < 2) throw std::invalid_argument("fit_line: need at least 2 points");
    const double n = static_cast<double>(xy.size());
    double sx = 0, sy = 0;
    for (auto [x, y] : xy) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (auto [x, y] : xy) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: all x equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace snow::sim

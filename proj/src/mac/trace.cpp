#include "snow/mac/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace snow::mac {

void TraceLog::add(std::int64_t time_us, std::string entity, std::string event, int subcarrier, std::string detail)
{
    if (detail.find(',') != std::string::npos || detail.find('\n') != std::string::npos)
        throw std::invalid_argument("trace detail may not contain ',' or newlines");
    records_.push_back({time_us, std::move(entity), std::move(event), subcarrier, std::move(detail)});
}

void TraceLog::write(std::ostream& os) const
{
    os << "time_us,entity,event,subcarrier,detail\n";
    for (const auto& r : records_)
        os << r.time_us << ',' << r.entity << ',' << r.event << ',' << r.subcarrier << ',' << r.detail << '\n';
}

TraceLog TraceLog::parse(std::istream& is)
{
    TraceLog log;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("time_us,", 0) == 0) continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 5) throw std::runtime_error("trace: malformed line: " + line);
        log.records_.push_back({std::stoll(f[0]), f[1], f[2], std::stoi(f[3]), f[4]});
    }
    return log;
}

std::optional<std::string> detail_get(const std::string& detail, const std::string& key)
{
    std::size_t pos = 0;
    while (pos <= detail.size()) {
        const std::size_t end = detail.find(';', pos);
        const std::string kv = detail.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        const std::size_t eq = kv.find('=');
        if (eq != std::string::npos && kv.compare(0, eq, key) == 0 && eq == key.size()) return kv.substr(eq + 1);
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    return std::nullopt;
}

}  // namespace snow::mac

// trace.hpp - line-oriented protocol trace: time_us,entity,event,subcarrier,detail
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace snow::mac {

struct TraceRecord {
    std::int64_t time_us = 0;
    std::string entity;   // "bs", "node3", "interferer"
    std::string event;
    int subcarrier = 0;   // 0 when not tied to a subcarrier
    std::string detail;   // key=value pairs separated by ';'
};

class TraceLog {
public:
    void add(std::int64_t time_us, std::string entity, std::string event, int subcarrier, std::string detail = {});
    const std::vector<TraceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    void write(std::ostream& os) const;  // header line first
    static TraceLog parse(std::istream& is);

private:
    std::vector<TraceRecord> records_;
};

std::optional<std::string> detail_get(const std::string& detail, const std::string& key);

}  // namespace snow::mac

#ifndef SAS_LOGIO_HPP
#define SAS_LOGIO_HPP

#include <filesystem>
#include <fstream>
#include <vector>

#include "sas/es.hpp"

namespace sas {

struct MetricsRecord {
    int iteration = 0;
    double mean_return = 0.0;
    double std_return = 0.0;
    double max_return = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
};

// Append-only columnar text logs; read_* parses them back losslessly.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path);
    void append(const MetricsRecord& record);

private:
    std::ofstream out_;
};

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

class ReplayWriter {
public:
    explicit ReplayWriter(const std::filesystem::path& path);
    void append(const ReplayRecord& record);

private:
    std::ofstream out_;
};

std::vector<ReplayRecord> read_replay(const std::filesystem::path& path);

}  // namespace sas

#endif

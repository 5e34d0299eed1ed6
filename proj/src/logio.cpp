#include "sas/logio.hpp"

#include <iomanip>
#include <sstream>

#include "sas/errors.hpp"

namespace sas {

namespace {

bool needs_header(const std::filesystem::path& path) {
    std::error_code ec;
    return !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
}

}  // namespace

MetricsWriter::MetricsWriter(const std::filesystem::path& path) {
    const bool header = needs_header(path);
    out_.open(path, std::ios::app);
    if (!out_) throw IoError("cannot open metrics log " + path.string());
    out_ << std::setprecision(17);
    if (header) out_ << "iteration,mean_return,std_return,max_return,grad_norm,wall_ms\n";
}

void MetricsWriter::append(const MetricsRecord& r) {
    out_ << r.iteration << ',' << r.mean_return << ',' << r.std_return << ',' << r.max_return << ','
         << r.grad_norm << ',' << r.wall_ms << '\n';
    out_.flush();
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics log " + path.string());
    std::vector<MetricsRecord> records;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricsRecord r;
        char comma;
        std::istringstream row(line);
        row >> r.iteration >> comma >> r.mean_return >> comma >> r.std_return >> comma >>
            r.max_return >> comma >> r.grad_norm >> comma >> r.wall_ms;
        if (row.fail()) throw ParseError("bad metrics row: " + line);
        records.push_back(r);
    }
    return records;
}

ReplayWriter::ReplayWriter(const std::filesystem::path& path) {
    const bool header = needs_header(path);
    out_.open(path, std::ios::app);
    if (!out_) throw IoError("cannot open replay log " + path.string());
    out_ << std::setprecision(17);
    if (header) out_ << "step,action_index,reward,risk,done,k,survivors,predicted_risk,fallback\n";
}

void ReplayWriter::append(const ReplayRecord& r) {
    out_ << r.step << ',' << r.action_index << ',' << r.reward << ',' << r.risk << ','
         << (r.done ? 1 : 0) << ',' << r.k << ',' << r.survivors << ',' << r.predicted_risk << ','
         << (r.fallback ? 1 : 0) << '\n';
}

std::vector<ReplayRecord> read_replay(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open replay log " + path.string());
    std::vector<ReplayRecord> records;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ReplayRecord r;
        int done = 0, fallback = 0;
        char comma;
        std::istringstream row(line);
        row >> r.step >> comma >> r.action_index >> comma >> r.reward >> comma >> r.risk >> comma >>
            done >> comma >> r.k >> comma >> r.survivors >> comma >> r.predicted_risk >> comma >>
            fallback;
        if (row.fail()) throw ParseError("bad replay row: " + line);
        r.done = done != 0;
        r.fallback = fallback != 0;
        records.push_back(r);
    }
    return records;
}

}  // namespace sas

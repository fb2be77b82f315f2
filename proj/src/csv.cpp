#include "rsmc/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rsmc {

namespace {

constexpr const char* kHeader =
    "n_samples,estimator,mean,band_low,band_high,q_low,q_high,true_value,"
    "reference_biased_value,poisoned_count";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string study_to_csv(const StudyReport& report) {
    std::ostringstream os;
    os << kHeader << "\n";
    const double true_value =
        report.has_true_value ? report.true_value : std::nan("");
    const double biased =
        report.has_biased_reference ? report.biased_reference : std::nan("");
    for (std::size_t li = 0; li < report.levels.size(); ++li) {
        for (const EstimatorStudy& est : report.estimators) {
            const LevelSummary& level = est.levels[li];
            os << level.n_samples << "," << est.name << "," << fmt(level.average) << ","
               << fmt(level.band_low) << "," << fmt(level.band_high) << ","
               << fmt(level.q_low) << "," << fmt(level.q_high) << "," << fmt(true_value)
               << "," << fmt(biased) << "," << level.poisoned_count << "\n";
        }
    }
    return os.str();
}

void emit_csv(const StudyReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("emit_csv: cannot open \"" + path + "\"");
    out << study_to_csv(report);
    if (!out) throw std::runtime_error("emit_csv: write failed for \"" + path + "\"");
}

std::vector<CsvRow> parse_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse_csv: empty input");
    if (line != kHeader) throw std::runtime_error("parse_csv: unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        CsvRow row;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) {
                throw std::runtime_error("parse_csv: short row \"" + line + "\"");
            }
            return field;
        };
        row.n_samples = std::stoull(next());
        row.estimator = next();
        row.mean = std::stod(next());
        row.band_low = std::stod(next());
        row.band_high = std::stod(next());
        row.q_low = std::stod(next());
        row.q_high = std::stod(next());
        row.true_value = std::stod(next());
        row.reference_biased_value = std::stod(next());
        row.poisoned_count = std::stoull(next());
        rows.push_back(row);
    }
    return rows;
}

std::vector<CsvRow> load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_csv: cannot open \"" + path + "\"");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_csv(os.str());
}

}  // namespace rsmc

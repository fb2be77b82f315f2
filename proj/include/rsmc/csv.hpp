#pragma once

#include <string>
#include <vector>

#include "rsmc/montecarlo.hpp"

namespace rsmc {

// One emitted row of a study: the per-level aggregate for one estimator.
struct CsvRow {
    std::uint64_t n_samples = 0;
    std::string estimator;
    double mean = 0.0;
    double band_low = 0.0;
    double band_high = 0.0;
    double q_low = 0.0;
    double q_high = 0.0;
    double true_value = 0.0;
    double reference_biased_value = 0.0;
    std::uint64_t poisoned_count = 0;
};

// UTF-8, LF line endings, '.' decimal separator, 17 significant digits.
// Missing references are emitted as nan.
std::string study_to_csv(const StudyReport& report);
void emit_csv(const StudyReport& report, const std::string& path);

std::vector<CsvRow> load_csv(const std::string& path);
std::vector<CsvRow> parse_csv(const std::string& text);

}  // namespace rsmc

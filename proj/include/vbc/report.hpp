#ifndef VBC_REPORT_HPP
#define VBC_REPORT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vbc {

// One row per latent index of the augmented field: predictors first
// (block "eta"), then the effect blocks. `within` is 1-based.
struct LatentRecord {
    int index = 0;  // 1-based augmented index
    std::string block;
    int within = 0;
    double mean_ga = 0.0;
    double sd_ga = 0.0;
    std::optional<double> mean_vbc;
    std::optional<double> mean_mcmc;

    bool operator==(const LatentRecord&) const = default;
};

// Machine-readable result of one CLI run. Written both as newline-delimited
// JSON (meta record first, then one record per latent index) and as a CSV
// summary; both carry the configuration echo.
struct RunReport {
    std::string command;
    nlohmann::json config_echo;
    std::map<std::string, double> timing;   // *_seconds per stage
    nlohmann::json convergence;
    std::map<std::string, double> metrics;  // e.g. mae_ga_vs_mcmc
    std::vector<LatentRecord> records;

    bool operator==(const RunReport&) const = default;
};

void write_report_ndjson(const std::string& path, const RunReport& report);
RunReport read_report_ndjson(const std::string& path);
void write_report_csv(const std::string& path, const RunReport& report);

// Fixed-effect (or whole-field) posterior-mean table, one method per column.
std::string format_comparison_table(const RunReport& report);

}  // namespace vbc

#endif

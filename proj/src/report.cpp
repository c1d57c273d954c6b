#include "vbc/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

using nlohmann::json;

json to_json(const LatentRecord& r) {
    json j{{"record", "latent"}, {"index", r.index},   {"block", r.block},
           {"within", r.within}, {"mean_ga", r.mean_ga}, {"sd_ga", r.sd_ga}};
    if (r.mean_vbc) j["mean_vbc"] = *r.mean_vbc;
    if (r.mean_mcmc) j["mean_mcmc"] = *r.mean_mcmc;
    return j;
}

LatentRecord record_from_json(const json& j) {
    LatentRecord r;
    r.index = j.at("index").get<int>();
    r.block = j.at("block").get<std::string>();
    r.within = j.at("within").get<int>();
    r.mean_ga = j.at("mean_ga").get<double>();
    r.sd_ga = j.at("sd_ga").get<double>();
    if (j.contains("mean_vbc")) r.mean_vbc = j.at("mean_vbc").get<double>();
    if (j.contains("mean_mcmc")) r.mean_mcmc = j.at("mean_mcmc").get<double>();
    return r;
}

}  // namespace

void write_report_ndjson(const std::string& path, const RunReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open report file " + path);
    json meta{{"record", "meta"},
              {"command", report.command},
              {"config", report.config_echo},
              {"timing", report.timing},
              {"convergence", report.convergence},
              {"metrics", report.metrics}};
    out << meta.dump() << "\n";
    for (const LatentRecord& r : report.records) {
        out << to_json(r).dump() << "\n";
    }
}

RunReport read_report_ndjson(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open report file " + path);
    RunReport report;
    std::string line;
    bool have_meta = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string kind = j.value("record", "");
        if (kind == "meta") {
            report.command = j.at("command").get<std::string>();
            report.config_echo = j.at("config");
            report.timing = j.at("timing").get<std::map<std::string, double>>();
            report.convergence = j.at("convergence");
            report.metrics = j.at("metrics").get<std::map<std::string, double>>();
            have_meta = true;
        } else if (kind == "latent") {
            report.records.push_back(record_from_json(j));
        } else {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown record kind");
        }
    }
    if (!have_meta) throw ConfigError(path + ": missing meta record");
    return report;
}

void write_report_csv(const std::string& path, const RunReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open report file " + path);
    out << "index,block,within,mean_ga,sd_ga,mean_vbc,mean_mcmc\n";
    out << std::setprecision(17);
    for (const LatentRecord& r : report.records) {
        out << r.index << ',' << r.block << ',' << r.within << ',' << r.mean_ga << ','
            << r.sd_ga << ',';
        if (r.mean_vbc) out << *r.mean_vbc;
        out << ',';
        if (r.mean_mcmc) out << *r.mean_mcmc;
        out << '\n';
    }
}

std::string format_comparison_table(const RunReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(18) << "index" << std::right << std::setw(12) << "GA";
    bool any_vbc = false, any_mcmc = false;
    for (const auto& r : report.records) {
        any_vbc |= r.mean_vbc.has_value();
        any_mcmc |= r.mean_mcmc.has_value();
    }
    if (any_vbc) os << std::setw(12) << "VBC";
    if (any_mcmc) os << std::setw(12) << "MCMC";
    os << "\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : report.records) {
        if (r.block == "eta") continue;
        os << std::left << std::setw(18) << (r.block + "[" + std::to_string(r.within) + "]")
           << std::right << std::setw(12) << r.mean_ga;
        if (any_vbc) {
            os << std::setw(12);
            if (r.mean_vbc) os << *r.mean_vbc; else os << "";
        }
        if (any_mcmc) {
            os << std::setw(12);
            if (r.mean_mcmc) os << *r.mean_mcmc; else os << "";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace vbc

#include "vbc/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "vbc/errors.hpp"

namespace vbc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding spaces
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

DataTable parse_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(origin + ": empty file");
    }
    const std::vector<std::string> header = split_line(line);
    if (header.empty()) throw ConfigError(origin + ": empty header row");
    std::vector<std::vector<double>> columns(header.size());

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            const auto res =
                std::from_chars(fields[c].data(), fields[c].data() + fields[c].size(), v);
            if (res.ec != std::errc() || res.ptr != fields[c].data() + fields[c].size()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": column '" +
                                  header[c] + "': cannot parse '" + fields[c] + "' as a number");
            }
            columns[c].push_back(v);
        }
    }

    DataTable table;
    for (std::size_t c = 0; c < header.size(); ++c) {
        table.add_column(header[c],
                         Eigen::Map<Eigen::VectorXd>(columns[c].data(),
                                                     static_cast<Eigen::Index>(columns[c].size())));
    }
    return table;
}

DataTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open data file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

void write_csv(const std::string& path, const DataTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file " + path);
    out.precision(17);
    const auto& names = table.names();
    for (std::size_t c = 0; c < names.size(); ++c) {
        out << (c ? "," : "") << names[c];
    }
    out << "\n";
    for (Eigen::Index r = 0; r < table.n_rows(); ++r) {
        for (std::size_t c = 0; c < names.size(); ++c) {
            out << (c ? "," : "") << table.column(names[c])[r];
        }
        out << "\n";
    }
}

}  // namespace vbc

#ifndef VBC_CSV_HPP
#define VBC_CSV_HPP

#include <string>

#include "vbc/model.hpp"

namespace vbc {

// Numeric CSV with a header row, comma separated, decimal point.
DataTable read_csv(const std::string& path);
DataTable parse_csv(const std::string& text, const std::string& origin);
void write_csv(const std::string& path, const DataTable& table);

}  // namespace vbc

#endif

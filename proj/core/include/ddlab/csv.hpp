#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ddlab::csv {

// 17 significant digits: enough for an exact IEEE double round trip.
std::string format(double value);

class Writer {
 public:
  Writer(std::ostream& out, std::vector<std::string> header);
  Writer& row(std::initializer_list<double> values);
  Writer& row(const std::vector<double>& values);

 private:
  std::ostream& out_;
  std::size_t columns_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

// Numeric CSV with one header line. Throws IoError on malformed input.
Table read(std::istream& in);
Table read_file(const std::string& path);

}  // namespace ddlab::csv

#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace symscribe::csv {

// RFC 4180 reader: quoted fields may hold commas, doubled quotes and newlines.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next record, or nullopt at end of input. `line()` is the 1-based line the
  // record started on.
  std::optional<std::vector<std::string>> next();
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

std::vector<std::vector<std::string>> parse(std::string_view content);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

}  // namespace symscribe::csv

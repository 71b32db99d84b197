#pragma once

#include <stdexcept>
#include <string>

namespace siftom {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed scenario, goal or data file. `where` names the faulty field.
class ConfigError : public Error {
 public:
  ConfigError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace siftom

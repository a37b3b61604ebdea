#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

namespace varfit {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or malformed input data (dimension mismatch, ragged CSV, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of its iteration or proposal budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& msg) {
    std::cerr << "varfit: warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

}  // namespace detail

/// Replace the warning handler (stderr by default). Passing an empty function silences warnings.
inline void set_warning_handler(std::function<void(const std::string&)> handler) {
  detail::warning_sink() = std::move(handler);
}

}  // namespace varfit

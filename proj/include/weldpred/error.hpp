#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weldpred {

enum class Errc {
  invalid_argument,
  parse,
  io,
  training,
  bad_model,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Layout-grammar parse failure; carries the offending term and its byte offset.
class LayoutParseError : public Error {
 public:
  LayoutParseError(std::string term, std::size_t offset, const std::string& what)
      : Error(Errc::parse, what), term_(std::move(term)), offset_(offset) {}
  const std::string& term() const { return term_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string term_;
  std::size_t offset_;
};

}  // namespace weldpred

#pragma once

#include <stdexcept>
#include <string>

namespace psychat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Corpus or vocabulary input that violates the record schema or a dialogue invariant.
class CorpusError : public Error {
  public:
    CorpusError(std::size_t line, const std::string &what)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    /// 1-based line number of the offending record, 0 when not line-bound.
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// An inference backend was unreachable or answered outside its contract.
class BackendError : public Error {
  public:
    using Error::Error;
};

/// Index file could not be read back.
class IndexFileError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace psychat

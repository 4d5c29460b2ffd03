#pragma once

#include <stdexcept>
#include <string>

namespace mftune {

enum class ErrorKind {
    Config,        // bad configuration / unknown name
    Domain,        // argument outside its admissible range
    Evaluation,    // model produced a non-finite output
    Constraint,    // sampling-scheme relation violated
    Infeasible,    // budget cannot fund the requested computation
    DegenerateStats,
    Singular,
    Numerical,
    Assembly,
    Io,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

} // namespace mftune

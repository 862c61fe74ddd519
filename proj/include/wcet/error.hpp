#pragma once

#include <stdexcept>
#include <string>

namespace wcet {

/// Base error for everything the analyzer reports. `module()` names the
/// pipeline stage that raised it (ir, cfgkit, encode, solve, omt, bench, cli).
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Syntax, type, or unsupported-construct error in an input document.
/// Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error("ir", format(what, line, column)), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, int line, int column) {
        if (line <= 0) return what;
        return std::to_string(line) + ":" + std::to_string(column) + ": " + what;
    }

    int line_;
    int column_;
};

}  // namespace wcet

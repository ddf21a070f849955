#pragma once

#include <stdexcept>
#include <string>

namespace zn {

/* All engine failures carry a stable machine-readable code alongside the
   human message; the CLI maps codes to exit classes. */
struct Error : std::runtime_error {
    std::string code;
    Error(std::string c, const std::string& msg)
        : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
    throw Error(code, msg);
}

/* Input / configuration problems (CLI exit 2). */
bool is_input_error(const std::string& code);
/* Convergence / precision problems (CLI exit 3). */
bool is_convergence_error(const std::string& code);

} // namespace zn

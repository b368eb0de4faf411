#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bdiconc/spec.hpp"
#include "bdiconc/term.hpp"

namespace bdiconc {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, std::vector<std::string> expected, std::string found);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    // Sorted, deduplicated.
    const std::vector<std::string>& expected() const { return expected_; }
    const std::string& found() const { return found_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::vector<std::string> expected_;
    std::string found_;
};

// Grammar (whitespace-insensitive, `//` line comments):
//
//   spec  := agent+
//   agent := "agent" IDENT ("*" INT)? "{" item* "}"
//   item  := "belief" term "." | "goal" "!" term "." | plan
//   plan  := "plan" trigger (":" cond ("&" cond)*)? "<-" step (";" step)* "."
//
// Syntax only; run validate() on the result before executing it.
MasSpec parse_spec(std::string_view source);

// A single term as it may appear in an argument position (arithmetic
// allowed). The whole input must be consumed.
Term parse_term(std::string_view source);

} // namespace bdiconc

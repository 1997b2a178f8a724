#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sd/diagram.hpp"
#include "sd/shuffle.hpp"
#include "sd/signature.hpp"

namespace sd {

struct Statement {
    std::string generator;
    std::vector<std::string> args;
    std::vector<std::string> binders;

    bool operator==(const Statement&) const = default;
};

struct DoProgram {
    std::string name;
    // Parameter types are optional annotations in the surface syntax; check()
    // infers the missing ones from usage.
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<Statement> statements;
    std::vector<std::string> returns;
};

// Surface grammar:
//   program := ident "(" params ")" ":" stmt* ret
//   param   := ident (":" ident)?
//   stmt    := ident "(" vars ")" "->" vars-or-parens      (newline-terminated)
//   ret     := "return" "(" vars ")"
// "->"/"→" are interchangeable; "#" starts a comment.
DoProgram parse_do(const std::string& text,
                   const std::string& origin = "<string>");

// A checked program: variables SSA-renamed so rebinding disappears, every
// variable typed, linearity and arities verified.
struct TypedProgram {
    DoProgram program; // SSA form
    std::vector<std::string> param_types;
    std::vector<std::string> return_types;
    PolygraphRef polygraph;
};

TypedProgram check(const DoProgram& program, PolygraphRef sig);

// One node per statement, wires are variables; boundary follows params and
// returns. Interchange-related programs elaborate to is_equal diagrams.
Diagram elaborate(const TypedProgram& program);

// Number of insertions of n items into an ordered m-item list, computed by
// the recurrence Ins(0, m) = 1, Ins(n+1, m) = (m+1) * Ins(n, m+1).
BigInt insertion_count(int n, int m);

std::string pretty_print(const DoProgram& program);

// True when the two adjacent statements bind/consume disjoint variables, so
// swapping them preserves the elaboration.
bool independent_statements(const Statement& a, const Statement& b);

} // namespace sd

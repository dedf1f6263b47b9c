#pragma once

#include "daut/automata.hpp"

#include <string>
#include <string_view>

namespace daut {

// A network and its observer as read from a model file:
//
//   param D : int;
//   globals v;
//   automaton A1 {
//     vars x : int, v : int;
//     alphabet init, a1;
//     init q0;
//     final q1;
//     q0 -> q1 : init, (and (= x' 0) (= v' 1));
//   }
//   observer B { ... same body ... }
//
// `#` starts a comment. Variables default to sort rat.
struct Model {
    Network net;
    DataAutomaton observer;
};

// Throws ParseError (line, column) on syntax and validation errors.
Model parse_model(std::string_view text);
Model load_model(const std::string& path);

std::string print_model(const Model& m);
std::string print_automaton(const DataAutomaton& a, const std::string& keyword = "automaton");

bool structurally_equal(const DataAutomaton& a, const DataAutomaton& b);
bool structurally_equal(const Model& a, const Model& b);

} // namespace daut

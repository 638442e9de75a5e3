#pragma once

#include <string>

#include "lqropt/lqr.hpp"

namespace lqropt {

// Problem files are JSON objects with keys "A", "B", "C", "Q", "R", "Sigma"
// (row-major nested arrays) and an optional "kind" ("SLQR" | "OLQR").
// Reals are written with 17 significant digits so files round-trip
// bit-exactly. An optional "meta" object carries generator provenance and is
// ignored on read.
std::string problem_to_json(const LqrProblem& P, const std::string& meta = "");
void write_problem(const LqrProblem& P, const std::string& path,
                   const std::string& meta = "");

LqrProblem problem_from_json(const std::string& text);
LqrProblem read_problem(const std::string& path);

}  // namespace lqropt

#pragma once

// Model files are JSON:
//
// {
//   "types": ["a", "b"],
//   "mean": [[1, 1], [1, 2]],                  // optional if kernel implies it
//   "kernel": {"family": "poisson"},           // optional; families below
//   "tau": {"finite": [0.5, 0.5]},             // or {"geometric": 0.25}
//   "initial_memory": {"constant": "a"}        // optional; defaults to first type
// }
//
// Kernel families:
//   {"family": "poisson"}                      rates = mean matrix
//   {"family": "deterministic"}                counts = mean matrix (integers)
//   {"family": "finite", "atoms": [ per-type [ {"counts": [..], "prob": p} .. ] ]}
// Initial memory rules:
//   {"constant": "a"} | {"periodic": ["a","b"]} |
//   {"iid": {"probs": [0.5, 0.5], "seed": 7}}
//
// Structural problems raise ParseError; semantic ones raise ValidationError.

#include <string>

#include "atavism/model.hpp"

namespace atavism {

ModelSpec model_from_json(const std::string& text);
ModelSpec load_model(const std::string& path);

}  // namespace atavism

#pragma once

#include <span>
#include <vector>

#include "bcfl/learners.hpp"

namespace bcfl::detail {

// Scratch buffers reused across samples so the hot loops do not allocate.
struct Workspace {
  std::vector<double> gates;   // L x 4H activated gates (i, f, g, o)
  std::vector<double> cells;   // (L + 1) x H, row 0 is the zero initial state
  std::vector<double> hidden;  // (L + 1) x H
  std::vector<double> tanh_c;  // L x H
  std::vector<double> da;      // 4H
  std::vector<double> dh, dc, dh_prev;
};

// Forward pass in normalized target units.
double forward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
               Workspace& ws);

// Accumulates scale * d(output)/d(w) into grad; requires a preceding
// forward() on the same workspace for the same input.
void backward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
              double scale, Workspace& ws, std::span<double> grad);

}  // namespace bcfl::detail

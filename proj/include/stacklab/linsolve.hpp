#pragma once

#include <vector>

namespace stacklab {

// Dense LU with partial pivoting for the small (<= ~8x8) systems that come out
// of the stationarity assemblers.
struct LinearSolveResult {
    std::vector<double> x;
    double condition;   // 1-norm condition estimate, inf on (near-)singular
    bool singular;
    int pivot;          // offending pivot column when singular, -1 otherwise
};

// Solves a*x = b, row-major a of size dim x dim. Does not throw; callers turn
// `singular` into the domain error appropriate for their context.
LinearSolveResult lu_solve(std::vector<double> a, std::vector<double> b, int dim);

} // namespace stacklab

#include "stacklab/linsolve.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace stacklab {

namespace {

// In-place LU factorization with row pivoting; returns false on a zero pivot.
bool lu_factor(std::vector<double>& a, std::vector<int>& perm, int dim, int* bad_pivot) {
    perm.resize(dim);
    std::iota(perm.begin(), perm.end(), 0);
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        double best = std::fabs(a[perm[col] * dim + col]);
        for (int row = col + 1; row < dim; ++row) {
            double v = std::fabs(a[perm[row] * dim + col]);
            if (v > best) {
                best = v;
                piv = row;
            }
        }
        if (best == 0.0) {
            if (bad_pivot) *bad_pivot = col;
            return false;
        }
        std::swap(perm[col], perm[piv]);
        const int prow = perm[col];
        for (int row = col + 1; row < dim; ++row) {
            const int r = perm[row];
            const double f = a[r * dim + col] / a[prow * dim + col];
            a[r * dim + col] = f;
            for (int k = col + 1; k < dim; ++k) a[r * dim + k] -= f * a[prow * dim + k];
        }
    }
    return true;
}

void lu_apply(const std::vector<double>& lu, const std::vector<int>& perm, int dim,
              const double* b, double* x) {
    std::vector<double> y(dim);
    for (int i = 0; i < dim; ++i) {
        double s = b[perm[i]];
        for (int k = 0; k < i; ++k) s -= lu[perm[i] * dim + k] * y[k];
        y[i] = s;
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < dim; ++k) s -= lu[perm[i] * dim + k] * x[k];
        x[i] = s / lu[perm[i] * dim + i];
    }
}

double norm1(const std::vector<double>& a, int dim) {
    double best = 0.0;
    for (int col = 0; col < dim; ++col) {
        double s = 0.0;
        for (int row = 0; row < dim; ++row) s += std::fabs(a[row * dim + col]);
        best = std::max(best, s);
    }
    return best;
}

} // namespace

LinearSolveResult lu_solve(std::vector<double> a, std::vector<double> b, int dim) {
    LinearSolveResult res;
    res.singular = false;
    res.pivot = -1;
    res.condition = 0.0;

    const std::vector<double> a_orig = a;
    std::vector<int> perm;
    int bad = -1;
    if (!lu_factor(a, perm, dim, &bad)) {
        res.singular = true;
        res.pivot = bad;
        res.condition = std::numeric_limits<double>::infinity();
        return res;
    }

    res.x.assign(dim, 0.0);
    lu_apply(a, perm, dim, b.data(), res.x.data());

    // ||A||_1 * ||A^-1||_1 via explicit inverse columns; dim is tiny.
    std::vector<double> col(dim), inv_col(dim);
    double inv_norm = 0.0;
    for (int j = 0; j < dim; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        lu_apply(a, perm, dim, col.data(), inv_col.data());
        double s = 0.0;
        for (double v : inv_col) s += std::fabs(v);
        inv_norm = std::max(inv_norm, s);
    }
    res.condition = norm1(a_orig, dim) * inv_norm;
    if (!std::isfinite(res.condition)) {
        res.singular = true;
        res.condition = std::numeric_limits<double>::infinity();
    }
    return res;
}

} // namespace stacklab

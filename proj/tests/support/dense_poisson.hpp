#ifndef BLOCKFLOW_TESTS_DENSE_POISSON_HPP_
#define BLOCKFLOW_TESTS_DENSE_POISSON_HPP_
// Test-only oracle: assembles the folded seven-point operator of the
// flat-equivalent uniform grid as an explicit matrix and solves it by direct
// LU factorisation. Independent of the block/ghost machinery under test.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "blockflow/types.hpp"

namespace blockflow::testing {

struct FlatPoisson {
    Int3 dims;                 // global cells per axis
    Real3 spacing;
    std::array<bool, 6> dirichlet{};                            // per face: true = Dirichlet
    std::function<double(Face, const Real3&)> boundary_value;   // null = 0
    std::function<bool(const Real3&)> solid;                    // null = all fluid

    std::int64_t cells() const { return dims.x * dims.y * dims.z; }
    std::int64_t cell_index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return (k * dims.y + j) * dims.x + i;
    }
    Real3 center(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return {(i + 0.5) * spacing.x, (j + 0.5) * spacing.y, (k + 0.5) * spacing.z};
    }
    bool is_solid(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return solid && solid(center(i, j, k));
    }

    // Homogeneous part of the operator (Dirichlet folded into the diagonal)
    // plus the boundary contribution vector: A p = rhs - bterm.
    void assemble(Eigen::MatrixXd& A, Eigen::VectorXd& bterm) const {
        const std::int64_t n = cells();
        A = Eigen::MatrixXd::Zero(n, n);
        bterm = Eigen::VectorXd::Zero(n);
        const double c[3] = {1.0 / (spacing.x * spacing.x), 1.0 / (spacing.y * spacing.y),
                             1.0 / (spacing.z * spacing.z)};
        for (std::int64_t k = 0; k < dims.z; ++k)
            for (std::int64_t j = 0; j < dims.y; ++j)
                for (std::int64_t i = 0; i < dims.x; ++i) {
                    const auto row = cell_index(i, j, k);
                    if (is_solid(i, j, k)) continue;
                    for (int a = 0; a < 3; ++a)
                        for (int dir = -1; dir <= 1; dir += 2) {
                            std::int64_t ni = i, nj = j, nk = k;
                            (a == 0 ? ni : a == 1 ? nj : nk) += dir;
                            const std::int64_t nc = a == 0 ? ni : a == 1 ? nj : nk;
                            if (nc < 0 || nc >= dims[a]) {
                                const Face f = make_face(a, dir);
                                if (dirichlet[static_cast<int>(f)]) {
                                    A(row, row) -= 2.0 * c[a];
                                    double g = 0.0;
                                    if (boundary_value) {
                                        Real3 pos = center(i, j, k);
                                        pos.set(a, pos[a] + 0.5 * dir * spacing[a]);
                                        g = boundary_value(f, pos);
                                    }
                                    bterm(row) += 2.0 * c[a] * g;
                                }
                                continue;
                            }
                            if (is_solid(ni, nj, nk)) continue;
                            A(row, row) -= c[a];
                            A(row, cell_index(ni, nj, nk)) += c[a];
                        }
                }
    }

    // Direct solve of A p = rhs - bterm (Dirichlet problems only; the matrix
    // must be nonsingular).
    Eigen::VectorXd direct_solve(const Eigen::VectorXd& rhs) const {
        Eigen::MatrixXd A;
        Eigen::VectorXd bterm;
        assemble(A, bterm);
        return A.partialPivLu().solve(rhs - bterm);
    }

    // A p + bterm (the affine operator, for residual oracles).
    Eigen::VectorXd apply(const Eigen::VectorXd& p) const {
        Eigen::MatrixXd A;
        Eigen::VectorXd bterm;
        assemble(A, bterm);
        return A * p + bterm;
    }
};

} // namespace blockflow::testing

#endif // BLOCKFLOW_TESTS_DENSE_POISSON_HPP_

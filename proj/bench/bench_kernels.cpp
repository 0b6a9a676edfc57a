// Benchmark of the OpenMP kernels against their serial references. Each
// kernel pair computes identical results (asserted here); the table reports
// wall times and the speedup on this machine.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "regimenet/constitutive.hpp"
#include "regimenet/grid.hpp"
#include "regimenet/matrix.hpp"
#include "regimenet/rng.hpp"
#include "regimenet/solver.hpp"

using namespace regimenet;

namespace {

double time_s(const std::function<void()>& fn, int repeats) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() /
           repeats;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix M(r, c);
    for (double& v : M.raw()) v = rng.normal(0.0, 1.0);
    return M;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

void report(const std::string& name, double serial_s, double parallel_s, double diff) {
    std::printf("%-34s %10.3f %10.3f %8.2fx %10.2e\n", name.c_str(), serial_s * 1e3,
                parallel_s * 1e3, serial_s / parallel_s, diff);
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("Built without OpenMP; parallel kernels run serially.\n\n");
#endif
    std::printf("%-34s %10s %10s %9s %10s\n", "kernel", "serial ms", "omp ms", "speedup",
                "max diff");

    Rng rng(1);

    {
        // forward-pass shape of the desk-scale network
        const Matrix W = random_matrix(400, 128, rng);
        const Matrix A = random_matrix(128, 2048, rng);
        Matrix out_s, out_p;
        const double ts = time_s([&] { out_s = matmul_serial(W, A); }, 5);
        const double tp = time_s([&] { out_p = matmul(W, A); }, 5);
        report("matmul 400x128 * 128x2048", ts, tp, max_abs_diff(out_s.raw(), out_p.raw()));
    }
    {
        // gradient shape dW = delta * A^T
        const Matrix D = random_matrix(400, 2048, rng);
        const Matrix A = random_matrix(128, 2048, rng);
        Matrix out_s, out_p;
        const double ts = time_s([&] { out_s = matmul_transposed_b_serial(D, A); }, 5);
        const double tp = time_s([&] { out_p = matmul_transposed_b(D, A); }, 5);
        report("matmul_tB 400x2048 * (128x2048)^T", ts, tp,
               max_abs_diff(out_s.raw(), out_p.raw()));
    }
    {
        // backpropagated delta shape W^T * delta
        const Matrix W = random_matrix(400, 128, rng);
        const Matrix D = random_matrix(400, 2048, rng);
        Matrix out_s, out_p;
        const double ts = time_s([&] { out_s = matmul_transposed_a_serial(W, D); }, 5);
        const double tp = time_s([&] { out_p = matmul_transposed_a(W, D); }, 5);
        report("matmul_tA (400x128)^T * 400x2048", ts, tp,
               max_abs_diff(out_s.raw(), out_p.raw()));
    }
    {
        // TPFA matrix-vector product; the parallel path engages on meshes
        // past the small-system guard
        const StructuredGrid2D grid(300, 300, 0.01, 0.01);
        const std::size_t n = static_cast<std::size_t>(grid.cell_count());
        CellField lambda(n);
        for (double& v : lambda.values) v = std::exp(rng.uniform(-2.0, 6.0));
        const CellField q(n, 0.0);
        BoundarySpec bcs;
        bcs.left = BoundaryCondition::pressure(1.0);
        const LinearSystem sys = assemble_linear_system(grid, lambda, bcs, q, BodyForce{});
        std::vector<double> x(n), ys(n), yp(n);
        for (double& v : x) v = rng.normal(0.0, 1.0);
        const double ts = time_s([&] { sys.apply_serial(x, ys); }, 400);
        const double tp = time_s([&] { sys.apply(x, yp); }, 400);
        report("spmv 90000-cell 5-point", ts, tp, max_abs_diff(ys, yp));
    }
    {
        const StructuredGrid2D grid(600, 600, 0.01, 0.01);
        FaceField faces(grid);
        for (double& v : faces.xflux) v = rng.normal(0.0, 1.0);
        for (double& v : faces.yflux) v = rng.normal(0.0, 1.0);
        CellField out_s, out_p;
        const double ts = time_s([&] { out_s = cell_flux_magnitude_serial(faces, grid); }, 20);
        const double tp = time_s([&] { out_p = cell_flux_magnitude(faces, grid); }, 20);
        report("cell_flux_magnitude 600x600", ts, tp,
               max_abs_diff(out_s.values, out_p.values));
    }
    {
        // mollified-law table build (parallel over table nodes)
        const CellParams cell{1e-9, 0.5, 1e-3, 1e-6, 2.0};
        RegularizationConfig reg;
        reg.table_points = 1024;
        MollifiedLawTable table_s, table_p;
#ifdef _OPENMP
        const int threads = omp_get_max_threads();
        omp_set_num_threads(1);
#endif
        const double ts =
            time_s([&] { table_s = build_mollified_table(cell, 1.0, reg, 4.0); }, 3);
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
        const double tp =
            time_s([&] { table_p = build_mollified_table(cell, 1.0, reg, 4.0); }, 3);
        report("mollified table 1024 nodes", ts, tp,
               max_abs_diff(table_s.lambda_eps, table_p.lambda_eps));
    }
    return 0;
}

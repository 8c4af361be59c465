#pragma once

// Brute-force nodal-analysis oracle for PDN input impedance, independent of
// the ladder recursion in pdn_sim: stamp a full complex admittance matrix
// and solve it with Gaussian elimination. The solve runs in long double so
// oracle round-off stays far below the 1e-9 comparison tolerance even for
// badly conditioned element mixes.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "pdnscan/pdn_sim.hpp"

namespace pdnscan::testing {

using ComplexL = std::complex<long double>;

inline ComplexL branch_impedance_l(const RlcBranch& b, long double omega) {
    ComplexL z(static_cast<long double>(b.r_ohms),
               omega * static_cast<long double>(b.l_henries));
    if (b.c_farads)
        z += ComplexL(0.0L, -1.0L / (omega * static_cast<long double>(*b.c_farads)));
    return z;
}

// Solve A x = rhs by Gaussian elimination with partial pivoting.
inline std::vector<ComplexL> solve_dense(std::vector<std::vector<ComplexL>> a,
                                         std::vector<ComplexL> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const ComplexL factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<ComplexL> x(n);
    for (std::size_t i = n; i-- > 0;) {
        ComplexL acc = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

// Input impedance at the probe node: inject 1 A, read the probe voltage.
// Stages without a series branch share the node of the previous stage.
inline Complex nodal_input_impedance(const PdnModel& model, double f_hz) {
    const long double omega = 2.0L * std::numbers::pi_v<long double> * f_hz;

    std::vector<int> stage_node(model.stages.size());
    int n_nodes = 1; // node 0 = probe
    {
        int prev = 0;
        for (std::size_t i = 0; i < model.stages.size(); ++i) {
            if (model.stages[i].series) stage_node[i] = n_nodes++;
            else stage_node[i] = prev;
            prev = stage_node[i];
        }
    }

    std::vector<std::vector<ComplexL>> y(n_nodes, std::vector<ComplexL>(n_nodes, ComplexL{}));
    auto stamp_shunt = [&](int node, ComplexL admittance) { y[node][node] += admittance; };
    auto stamp_series = [&](int a, int b, ComplexL admittance) {
        y[a][a] += admittance;
        y[b][b] += admittance;
        y[a][b] -= admittance;
        y[b][a] -= admittance;
    };

    int prev = 0;
    for (std::size_t i = 0; i < model.stages.size(); ++i) {
        const auto& st = model.stages[i];
        const int node = stage_node[i];
        if (st.series) stamp_series(prev, node, 1.0L / branch_impedance_l(*st.series, omega));
        if (st.shunt) stamp_shunt(node, 1.0L / branch_impedance_l(*st.shunt, omega));
        prev = node;
    }
    if (model.powered && model.die_on_branch)
        stamp_shunt(stage_node.back(), 1.0L / branch_impedance_l(*model.die_on_branch, omega));

    std::vector<ComplexL> rhs(n_nodes, ComplexL{});
    rhs[0] = ComplexL(1.0L, 0.0L);
    const ComplexL v0 = solve_dense(std::move(y), std::move(rhs))[0];
    return Complex(static_cast<double>(v0.real()), static_cast<double>(v0.imag()));
}

} // namespace pdnscan::testing

// Test-only reference implementations, independent of the library code paths
// they check: naive loop-nest convolution, finite differences, brute-force
// dominance, quadrature. Kept deliberately simple and slow.
#ifndef MCUNAS_TESTS_ORACLES_HPP
#define MCUNAS_TESTS_ORACLES_HPP

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <mcunas/net/weights.hpp>
#include <mcunas/tensor.hpp>

namespace oracles {

using mcunas::Padding;
using mcunas::Shape;
using mcunas::Tensor;

/// Naive convolution: quadruple loop, no im2col, no Eigen products.
template <typename S>
Tensor<S> conv2d_reference(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b,
                           Padding padding)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const int oc = w.extent(0), k = w.extent(2);
    const int oh = padding == Padding::Same ? h : h - k + 1;
    const int ow = padding == Padding::Same ? wd : wd - k + 1;
    const int pad = padding == Padding::Same ? (k - 1) / 2 : 0;
    Tensor<S> y({n, oc, oh, ow});
    for (int s = 0; s < n; ++s)
        for (int o = 0; o < oc; ++o)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = static_cast<double>(b(o));
                    for (int ci = 0; ci < c; ++ci)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy + ky - pad;
                                const int ix = ox + kx - pad;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd)
                                    continue;
                                acc += static_cast<double>(w(o, ci, ky, kx))
                                       * static_cast<double>(x(s, ci, iy, ix));
                            }
                    y(s, o, oy, ox) = static_cast<S>(acc);
                }
    return y;
}

struct FdReport {
    double max_rel_err = 0.0;
    int64_t checked = 0;
};

/// Central finite differences of `loss()` w.r.t. every parameter tensor in the
/// store against the provided analytic gradients. Pairs that agree within the
/// FD roundoff noise (|diff| <= abs_tol, e.g. exactly-zero gradients) count as
/// exact; everything else is compared relatively.
inline FdReport finite_difference_check(mcunas::net::WeightStore<double>& store,
                                        const mcunas::net::WeightStore<double>& analytic,
                                        const std::function<double()>& loss,
                                        double step = 1e-5, double abs_tol = 1e-9)
{
    FdReport rep;
    for (auto& [id, nw] : store.by_node)
        for (auto& [name, t] : nw.tensors) {
            if (mcunas::net::is_buffer_tensor(name))
                continue;
            const Tensor<double>* g = analytic.at(id).find(name);
            if (!g)
                continue;
            for (int64_t i = 0; i < t.size(); ++i) {
                const double orig = t.at(i);
                t.at(i) = orig + step;
                const double fp = loss();
                t.at(i) = orig - step;
                const double fm = loss();
                t.at(i) = orig;
                const double num = (fp - fm) / (2 * step);
                const double ana = g->at(i);
                const double diff = std::abs(num - ana);
                const double rel =
                    diff <= abs_tol ? 0.0 : diff / std::max(std::abs(num), std::abs(ana));
                rep.max_rel_err = std::max(rep.max_rel_err, rel);
                ++rep.checked;
            }
        }
    return rep;
}

/// O(n^2) pairwise dominance filter (minimization).
inline std::vector<int> pareto_bruteforce(const std::vector<std::vector<double>>& pts)
{
    std::vector<int> front;
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i) {
        bool dominated = false;
        for (int j = 0; j < n && !dominated; ++j) {
            if (i == j)
                continue;
            bool all_le = true, one_lt = false;
            for (size_t k = 0; k < pts[static_cast<size_t>(i)].size(); ++k) {
                all_le = all_le
                         && pts[static_cast<size_t>(j)][k] <= pts[static_cast<size_t>(i)][k];
                one_lt = one_lt
                         || pts[static_cast<size_t>(j)][k] < pts[static_cast<size_t>(i)][k];
            }
            dominated = all_le && one_lt;
        }
        if (!dominated)
            front.push_back(i);
    }
    return front;
}

/// E_{eps~N(0,1)} log|1 + sqrt(a) eps| by piecewise Gauss-Legendre with the
/// integrable log singularity handled analytically on a small interval.
double expected_log_abs(double alpha);

/// Exact (quadrature) normal-Jeffreys KL, normalized to vanish as alpha->inf.
inline double kl_normal_jeffreys_quadrature(double log_alpha)
{
    const double alpha = std::exp(log_alpha);
    // KL(a) = -0.5 log a + E log|1+sqrt(a) e| - E log|e|
    const double euler_gamma = 0.57721566490153286;
    const double e_log_abs_normal = -(euler_gamma + std::log(2.0)) / 2.0;
    return -0.5 * log_alpha + expected_log_abs(alpha) - e_log_abs_normal;
}

} // namespace oracles

#endif

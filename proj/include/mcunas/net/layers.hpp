/*
 * Copyright 2026 The mcunas Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MCUNAS_NET_LAYERS_HPP
#define MCUNAS_NET_LAYERS_HPP

#include <Eigen/Core>

#include "../graph.hpp"
#include "../tensor.hpp"
#include "shapes.hpp"

namespace mcunas {
namespace net {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Batched tensors are [N, C, H, W] for maps and [N, F] for vectors, row-major.

inline int pad_before(int kernel, Padding padding)
{
    return padding == Padding::Same ? (kernel - 1) / 2 : 0;
}

template <typename Scalar>
void im2col(const Scalar* x, int c, int h, int w, int k, int pad, int oh, int ow,
            RowMat<Scalar>& col)
{
    col.setZero(c * k * k, oh * ow);
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const int row = (ci * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy + ky - pad;
                    if (iy < 0 || iy >= h)
                        continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox + kx - pad;
                        if (ix < 0 || ix >= w)
                            continue;
                        col(row, oy * ow + ox) = x[(static_cast<int64_t>(ci) * h + iy) * w + ix];
                    }
                }
            }
}

template <typename Scalar>
void col2im_add(const RowMat<Scalar>& col, int c, int h, int w, int k, int pad, int oh, int ow,
                Scalar* dx)
{
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const int row = (ci * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy + ky - pad;
                    if (iy < 0 || iy >= h)
                        continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox + kx - pad;
                        if (ix < 0 || ix >= w)
                            continue;
                        dx[(static_cast<int64_t>(ci) * h + iy) * w + ix] += col(row, oy * ow + ox);
                    }
                }
            }
}

/// y = conv(x, w) + b over the batch; x [N,C,H,W], w [OC,C,k,k], b [OC].
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& w,
                              const Tensor<Scalar>& b, Padding padding)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const int oc = w.extent(0), k = w.extent(2);
    if (w.extent(1) != c)
        throw ShapeError("conv channel mismatch: weights expect " + std::to_string(w.extent(1))
                         + " input channels, got " + std::to_string(c));
    const int oh = conv_out_extent(h, k, padding);
    const int ow = conv_out_extent(wd, k, padding);
    const int pad = pad_before(k, padding);

    Tensor<Scalar> y({n, oc, oh, ow});
    Eigen::Map<const RowMat<Scalar>> wm(w.data(), oc, c * k * k);
    RowMat<Scalar> col;
    for (int s = 0; s < n; ++s) {
        im2col(x.data() + static_cast<int64_t>(s) * c * h * wd, c, h, wd, k, pad, oh, ow, col);
        Eigen::Map<RowMat<Scalar>> ym(y.data() + static_cast<int64_t>(s) * oc * oh * ow, oc,
                                      oh * ow);
        ym.noalias() = wm * col;
        for (int o = 0; o < oc; ++o)
            ym.row(o).array() += b(o);
    }
    return y;
}

template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& dy,
                     Padding padding, Tensor<Scalar>& dx, Tensor<Scalar>& dw, Tensor<Scalar>& db)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), wd = x.extent(3);
    const int oc = w.extent(0), k = w.extent(2);
    const int oh = dy.extent(2), ow = dy.extent(3);
    const int pad = pad_before(k, padding);

    dx = Tensor<Scalar>(x.shape());
    dw = Tensor<Scalar>(w.shape());
    db = Tensor<Scalar>({oc});
    Eigen::Map<const RowMat<Scalar>> wm(w.data(), oc, c * k * k);
    Eigen::Map<RowMat<Scalar>> dwm(dw.data(), oc, c * k * k);
    RowMat<Scalar> col, dcol;
    for (int s = 0; s < n; ++s) {
        const Scalar* xs = x.data() + static_cast<int64_t>(s) * c * h * wd;
        Eigen::Map<const RowMat<Scalar>> dym(dy.data() + static_cast<int64_t>(s) * oc * oh * ow,
                                             oc, oh * ow);
        im2col(xs, c, h, wd, k, pad, oh, ow, col);
        dwm.noalias() += dym * col.transpose();
        for (int o = 0; o < oc; ++o)
            db(o) += dym.row(o).sum();
        dcol.noalias() = wm.transpose() * dym;
        col2im_add(dcol, c, h, wd, k, pad, oh, ow,
                   dx.data() + static_cast<int64_t>(s) * c * h * wd);
    }
}

/// Depthwise convolution: each input channel convolved with its own kernel.
template <typename Scalar>
Tensor<Scalar> depthwise_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& dwt,
                                 Padding padding)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int k = dwt.extent(1);
    const int oh = conv_out_extent(h, k, padding);
    const int ow = conv_out_extent(w, k, padding);
    const int pad = pad_before(k, padding);
    Tensor<Scalar> y({n, c, oh, ow});
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar* xs = x.data() + (static_cast<int64_t>(s) * c + ci) * h * w;
            Scalar* ys = y.data() + (static_cast<int64_t>(s) * c + ci) * oh * ow;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    Scalar acc = 0;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy + ky - pad;
                        if (iy < 0 || iy >= h)
                            continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox + kx - pad;
                            if (ix < 0 || ix >= w)
                                continue;
                            acc += dwt(ci, ky, kx) * xs[static_cast<int64_t>(iy) * w + ix];
                        }
                    }
                    ys[static_cast<int64_t>(oy) * ow + ox] = acc;
                }
        }
    return y;
}

template <typename Scalar>
void depthwise_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dwt,
                        const Tensor<Scalar>& dy, Padding padding, Tensor<Scalar>& dx,
                        Tensor<Scalar>& ddw)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int k = dwt.extent(1);
    const int oh = dy.extent(2), ow = dy.extent(3);
    const int pad = pad_before(k, padding);
    dx = Tensor<Scalar>(x.shape());
    ddw = Tensor<Scalar>(dwt.shape());
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar* xs = x.data() + (static_cast<int64_t>(s) * c + ci) * h * w;
            Scalar* dxs = dx.data() + (static_cast<int64_t>(s) * c + ci) * h * w;
            const Scalar* dys = dy.data() + (static_cast<int64_t>(s) * c + ci) * oh * ow;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    const Scalar g = dys[static_cast<int64_t>(oy) * ow + ox];
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy + ky - pad;
                        if (iy < 0 || iy >= h)
                            continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox + kx - pad;
                            if (ix < 0 || ix >= w)
                                continue;
                            ddw(ci, ky, kx) += g * xs[static_cast<int64_t>(iy) * w + ix];
                            dxs[static_cast<int64_t>(iy) * w + ix] += g * dwt(ci, ky, kx);
                        }
                    }
                }
        }
}

/// 1x1 convolution expressed as a channel-mixing matrix; pw [OC, C].
template <typename Scalar>
Tensor<Scalar> pointwise_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& pw,
                                 const Tensor<Scalar>* b)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int oc = pw.extent(0);
    if (pw.extent(1) != c)
        throw ShapeError("pointwise channel mismatch: expected " + std::to_string(pw.extent(1))
                         + ", got " + std::to_string(c));
    Tensor<Scalar> y({n, oc, h, w});
    Eigen::Map<const RowMat<Scalar>> pm(pw.data(), oc, c);
    for (int s = 0; s < n; ++s) {
        Eigen::Map<const RowMat<Scalar>> xm(x.data() + static_cast<int64_t>(s) * c * h * w, c,
                                            h * w);
        Eigen::Map<RowMat<Scalar>> ym(y.data() + static_cast<int64_t>(s) * oc * h * w, oc, h * w);
        ym.noalias() = pm * xm;
        if (b)
            for (int o = 0; o < oc; ++o)
                ym.row(o).array() += (*b)(o);
    }
    return y;
}

template <typename Scalar>
void pointwise_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& pw,
                        const Tensor<Scalar>& dy, Tensor<Scalar>& dx, Tensor<Scalar>& dpw,
                        Tensor<Scalar>* db)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int oc = pw.extent(0);
    dx = Tensor<Scalar>(x.shape());
    dpw = Tensor<Scalar>(pw.shape());
    Eigen::Map<const RowMat<Scalar>> pm(pw.data(), oc, c);
    Eigen::Map<RowMat<Scalar>> dpm(dpw.data(), oc, c);
    for (int s = 0; s < n; ++s) {
        Eigen::Map<const RowMat<Scalar>> xm(x.data() + static_cast<int64_t>(s) * c * h * w, c,
                                            h * w);
        Eigen::Map<const RowMat<Scalar>> dym(dy.data() + static_cast<int64_t>(s) * oc * h * w, oc,
                                             h * w);
        Eigen::Map<RowMat<Scalar>> dxm(dx.data() + static_cast<int64_t>(s) * c * h * w, c, h * w);
        dpm.noalias() += dym * xm.transpose();
        dxm.noalias() += pm.transpose() * dym;
        if (db)
            for (int o = 0; o < oc; ++o)
                (*db)(o) += dym.row(o).sum();
    }
}

template <typename Scalar>
Tensor<Scalar> fully_connected_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& w,
                                       const Tensor<Scalar>& b)
{
    const int n = x.extent(0);
    const int64_t f = x.size() / n;
    const int out = w.extent(0);
    if (w.extent(1) != f)
        throw ShapeError("fully-connected fan-in mismatch: weights expect "
                         + std::to_string(w.extent(1)) + ", got " + std::to_string(f));
    Tensor<Scalar> y({n, out});
    Eigen::Map<const RowMat<Scalar>> xm(x.data(), n, f);
    Eigen::Map<const RowMat<Scalar>> wm(w.data(), out, f);
    Eigen::Map<RowMat<Scalar>> ym(y.data(), n, out);
    ym.noalias() = xm * wm.transpose();
    ym.rowwise() += Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(b.data(), out);
    return y;
}

template <typename Scalar>
void fully_connected_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& w,
                              const Tensor<Scalar>& dy, Tensor<Scalar>& dx, Tensor<Scalar>& dw,
                              Tensor<Scalar>& db)
{
    const int n = x.extent(0);
    const int64_t f = x.size() / n;
    const int out = w.extent(0);
    dx = Tensor<Scalar>(x.shape());
    dw = Tensor<Scalar>(w.shape());
    db = Tensor<Scalar>({out});
    Eigen::Map<const RowMat<Scalar>> xm(x.data(), n, f);
    Eigen::Map<const RowMat<Scalar>> wm(w.data(), out, f);
    Eigen::Map<const RowMat<Scalar>> dym(dy.data(), n, out);
    Eigen::Map<RowMat<Scalar>> dxm(dx.data(), n, f);
    Eigen::Map<RowMat<Scalar>> dwm(dw.data(), out, f);
    dxm.noalias() = dym * wm;
    dwm.noalias() = dym.transpose() * xm;
    Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(db.data(), out) = dym.colwise().sum();
}

template <typename Scalar>
Tensor<Scalar> maxpool_forward(const Tensor<Scalar>& x, int p)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int oh = h / p, ow = w / p;
    if (oh < 1 || ow < 1)
        throw ShapeError("max-pool window " + std::to_string(p) + " larger than input "
                         + std::to_string(h) + "x" + std::to_string(w));
    Tensor<Scalar> y({n, c, oh, ow});
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar* xs = x.data() + (static_cast<int64_t>(s) * c + ci) * h * w;
            Scalar* ys = y.data() + (static_cast<int64_t>(s) * c + ci) * oh * ow;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    Scalar m = xs[static_cast<int64_t>(oy * p) * w + ox * p];
                    for (int ky = 0; ky < p; ++ky)
                        for (int kx = 0; kx < p; ++kx)
                            m = std::max(m, xs[static_cast<int64_t>(oy * p + ky) * w + ox * p + kx]);
                    ys[static_cast<int64_t>(oy) * ow + ox] = m;
                }
        }
    return y;
}

/// Routes gradient to the first (row-major) maximum of each window, matching
/// the forward tie order.
template <typename Scalar>
Tensor<Scalar> maxpool_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, int p)
{
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const int oh = dy.extent(2), ow = dy.extent(3);
    Tensor<Scalar> dx(x.shape());
    for (int s = 0; s < n; ++s)
        for (int ci = 0; ci < c; ++ci) {
            const Scalar* xs = x.data() + (static_cast<int64_t>(s) * c + ci) * h * w;
            Scalar* dxs = dx.data() + (static_cast<int64_t>(s) * c + ci) * h * w;
            const Scalar* dys = dy.data() + (static_cast<int64_t>(s) * c + ci) * oh * ow;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    int64_t best = static_cast<int64_t>(oy * p) * w + ox * p;
                    for (int ky = 0; ky < p; ++ky)
                        for (int kx = 0; kx < p; ++kx) {
                            const int64_t idx = static_cast<int64_t>(oy * p + ky) * w + ox * p + kx;
                            if (xs[idx] > xs[best])
                                best = idx;
                        }
                    dxs[best] += dys[static_cast<int64_t>(oy) * ow + ox];
                }
        }
    return dx;
}

} // namespace net
} // namespace mcunas

#endif

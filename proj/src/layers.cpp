#include "pg/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pg {

Tensor activation_forward(const Tensor& x, const ActivationRule& rule) {
    const double s = rule.forward_slope;
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x[i];
        const double sv = s * v;
        out[i] = v > sv ? v : sv;
    }
    return Tensor::from_data(x.shape(), std::move(out));
}

Tensor activation_backward(const Tensor& x, const Tensor& upstream,
                           const ActivationRule& rule) {
    if (!x.same_shape(upstream)) {
        throw std::invalid_argument("activation_backward: upstream shape " +
                                    shape_str(upstream.shape()) +
                                    " does not match cached input " +
                                    shape_str(x.shape()));
    }
    const double s = rule.backward_slope;
    std::vector<double> out(x.numel());
    // x < 0 gets the slope factor; x == 0 gets 1.
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] < 0.0 ? s * upstream[i] : upstream[i];
    }
    return Tensor::from_data(x.shape(), std::move(out));
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
    int n, c, h, w;
    int oc, ic, kh, kw;
    int oh, ow;
    int pad_h, pad_w;
    int stride;
};

ConvDims conv_dims(const std::vector<int>& xs, const std::vector<int>& ks,
                   const Conv2dAttrs& attrs) {
    if (xs.size() != 4) throw std::invalid_argument("conv2d: input must be 4-D (N,C,H,W)");
    if (ks.size() != 4) throw std::invalid_argument("conv2d: kernel must be 4-D (OC,IC,kH,kW)");
    if (attrs.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    ConvDims d{};
    d.n = xs[0]; d.c = xs[1]; d.h = xs[2]; d.w = xs[3];
    d.oc = ks[0]; d.ic = ks[1]; d.kh = ks[2]; d.kw = ks[3];
    d.stride = attrs.stride;
    if (d.ic != d.c) {
        throw std::invalid_argument("conv2d: kernel expects " + std::to_string(d.ic) +
                                    " input channels, input has " + std::to_string(d.c));
    }
    if (attrs.same_pad) {
        if (d.kh % 2 == 0 || d.kw % 2 == 0)
            throw std::invalid_argument("conv2d: same padding requires odd kernel extents");
        d.pad_h = (d.kh - 1) / 2;
        d.pad_w = (d.kw - 1) / 2;
    } else {
        d.pad_h = d.pad_w = 0;
    }
    const int eff_h = d.h + 2 * d.pad_h;
    const int eff_w = d.w + 2 * d.pad_w;
    if (eff_h < d.kh || eff_w < d.kw)
        throw std::invalid_argument("conv2d: kernel larger than (padded) input");
    d.oh = (eff_h - d.kh) / d.stride + 1;
    d.ow = (eff_w - d.kw) / d.stride + 1;
    return d;
}

} // namespace

std::vector<int> conv2d_output_shape(const std::vector<int>& x_shape,
                                     const std::vector<int>& k_shape,
                                     const Conv2dAttrs& attrs) {
    const ConvDims d = conv_dims(x_shape, k_shape, attrs);
    return {d.n, d.oc, d.oh, d.ow};
}

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, const Tensor* bias,
                      const Conv2dAttrs& attrs) {
    const ConvDims d = conv_dims(x.shape(), kernel.shape(), attrs);
    if (bias && !(bias->ndim() == 1 && bias->extent(0) == d.oc))
        throw std::invalid_argument("conv2d: bias must have shape (OC)");

    Tensor y = Tensor::zeros({d.n, d.oc, d.oh, d.ow});
    const double* xp = x.data();
    const double* kp = kernel.data();
    double* yp = y.data();

    for (int n = 0; n < d.n; ++n) {
        for (int oc = 0; oc < d.oc; ++oc) {
            const double b = bias ? (*bias)[static_cast<std::size_t>(oc)] : 0.0;
            for (int oh = 0; oh < d.oh; ++oh) {
                for (int ow = 0; ow < d.ow; ++ow) {
                    double acc = b;
                    const int ih0 = oh * d.stride - d.pad_h;
                    const int iw0 = ow * d.stride - d.pad_w;
                    for (int ic = 0; ic < d.c; ++ic) {
                        for (int kh = 0; kh < d.kh; ++kh) {
                            const int ih = ih0 + kh;
                            if (ih < 0 || ih >= d.h) continue;
                            const double* xrow =
                                xp + ((static_cast<std::size_t>(n) * d.c + ic) * d.h + ih) * d.w;
                            const double* krow =
                                kp + ((static_cast<std::size_t>(oc) * d.c + ic) * d.kh + kh) * d.kw;
                            for (int kw = 0; kw < d.kw; ++kw) {
                                const int iw = iw0 + kw;
                                if (iw < 0 || iw >= d.w) continue;
                                acc += xrow[iw] * krow[kw];
                            }
                        }
                    }
                    yp[((static_cast<std::size_t>(n) * d.oc + oc) * d.oh + oh) * d.ow + ow] = acc;
                }
            }
        }
    }
    y.ensure_finite("conv2d_forward");
    return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& kernel,
                            const Conv2dAttrs& attrs, const Tensor& upstream,
                            bool need_bias) {
    const ConvDims d = conv_dims(x.shape(), kernel.shape(), attrs);
    if (upstream.shape() != std::vector<int>{d.n, d.oc, d.oh, d.ow})
        throw std::invalid_argument("conv2d_backward: upstream shape mismatch");

    Conv2dGrads g;
    g.dx = Tensor::zeros(x.shape());
    g.dkernel = Tensor::zeros(kernel.shape());
    if (need_bias) g.dbias = Tensor::zeros({d.oc});

    const double* xp = x.data();
    const double* kp = kernel.data();
    const double* up = upstream.data();
    double* dxp = g.dx.data();
    double* dkp = g.dkernel.data();

    for (int n = 0; n < d.n; ++n) {
        for (int oc = 0; oc < d.oc; ++oc) {
            for (int oh = 0; oh < d.oh; ++oh) {
                for (int ow = 0; ow < d.ow; ++ow) {
                    const double u =
                        up[((static_cast<std::size_t>(n) * d.oc + oc) * d.oh + oh) * d.ow + ow];
                    if (need_bias) g.dbias[static_cast<std::size_t>(oc)] += u;
                    const int ih0 = oh * d.stride - d.pad_h;
                    const int iw0 = ow * d.stride - d.pad_w;
                    for (int ic = 0; ic < d.c; ++ic) {
                        for (int kh = 0; kh < d.kh; ++kh) {
                            const int ih = ih0 + kh;
                            if (ih < 0 || ih >= d.h) continue;
                            const std::size_t xbase =
                                ((static_cast<std::size_t>(n) * d.c + ic) * d.h + ih) * d.w;
                            const std::size_t kbase =
                                ((static_cast<std::size_t>(oc) * d.c + ic) * d.kh + kh) * d.kw;
                            for (int kw = 0; kw < d.kw; ++kw) {
                                const int iw = iw0 + kw;
                                if (iw < 0 || iw >= d.w) continue;
                                dxp[xbase + iw] += u * kp[kbase + kw];
                                dkp[kbase + kw] += u * xp[xbase + iw];
                            }
                        }
                    }
                }
            }
        }
    }
    g.dx.ensure_finite("conv2d_backward dx");
    g.dkernel.ensure_finite("conv2d_backward dkernel");
    return g;
}

// ---------------------------------------------------------------------------
// batch norm
// ---------------------------------------------------------------------------

namespace {

void check_bn_shapes(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
    if (x.ndim() != 4)
        throw std::invalid_argument("batchnorm: input must be 4-D (N,C,H,W)");
    const int c = x.extent(1);
    if (gamma.ndim() != 1 || gamma.extent(0) != c || beta.ndim() != 1 ||
        beta.extent(0) != c)
        throw std::invalid_argument("batchnorm: gamma/beta must have shape (C)");
}

} // namespace

BnForwardCache batchnorm_forward_train(const Tensor& x, const Tensor& gamma,
                                       const Tensor& beta, double eps) {
    check_bn_shapes(x, gamma, beta);
    if (eps <= 0.0) throw std::invalid_argument("batchnorm: eps must be > 0");
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    if (n < 2)
        throw std::invalid_argument("batchnorm: training mode requires batch size >= 2");
    const std::size_t spatial = static_cast<std::size_t>(h) * w;
    const std::size_t m = static_cast<std::size_t>(n) * spatial;

    BnForwardCache cache;
    cache.batch_mean = Tensor::zeros({c});
    cache.batch_var = Tensor::zeros({c});
    cache.batch_invstd = Tensor::zeros({c});
    cache.xhat = Tensor::zeros(x.shape());
    cache.y = Tensor::zeros(x.shape());

    const double* xp = x.data();
    for (int ci = 0; ci < c; ++ci) {
        double sum = 0.0, sq = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const double* p = xp + (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                sum += p[i];
                sq += p[i] * p[i];
            }
        }
        const double mean = sum / static_cast<double>(m);
        double var = sq / static_cast<double>(m) - mean * mean;
        if (var < 0.0) var = 0.0; // rounding guard
        cache.batch_mean[static_cast<std::size_t>(ci)] = mean;
        cache.batch_var[static_cast<std::size_t>(ci)] = var;
        cache.batch_invstd[static_cast<std::size_t>(ci)] = 1.0 / std::sqrt(var + eps);
    }

    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const double mean = cache.batch_mean[static_cast<std::size_t>(ci)];
            const double invstd = cache.batch_invstd[static_cast<std::size_t>(ci)];
            const double g = gamma[static_cast<std::size_t>(ci)];
            const double b = beta[static_cast<std::size_t>(ci)];
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                const double xh = (xp[base + i] - mean) * invstd;
                cache.xhat[base + i] = xh;
                cache.y[base + i] = g * xh + b;
            }
        }
    }
    cache.y.ensure_finite("batchnorm_forward_train");
    return cache;
}

Tensor batchnorm_forward_infer(const Tensor& x, const Tensor& gamma,
                               const Tensor& beta, const Tensor& running_mean,
                               const Tensor& running_var, double eps) {
    check_bn_shapes(x, gamma, beta);
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const std::size_t spatial = static_cast<std::size_t>(h) * w;
    Tensor y = Tensor::zeros(x.shape());
    const double* xp = x.data();
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const double rv = running_var[static_cast<std::size_t>(ci)];
            if (rv < 0.0) throw std::invalid_argument("batchnorm: running var < 0");
            const double invstd = 1.0 / std::sqrt(rv + eps);
            const double mean = running_mean[static_cast<std::size_t>(ci)];
            const double g = gamma[static_cast<std::size_t>(ci)];
            const double b = beta[static_cast<std::size_t>(ci)];
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i)
                y[base + i] = g * (xp[base + i] - mean) * invstd + b;
        }
    }
    y.ensure_finite("batchnorm_forward_infer");
    return y;
}

BnGrads batchnorm_backward_train(const Tensor& x, const BnForwardCache& cache,
                                 const Tensor& gamma, const Tensor& upstream) {
    if (!x.same_shape(upstream))
        throw std::invalid_argument("batchnorm_backward: upstream shape mismatch");
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const std::size_t spatial = static_cast<std::size_t>(h) * w;
    const double m = static_cast<double>(static_cast<std::size_t>(n) * spatial);

    BnGrads g;
    g.dx = Tensor::zeros(x.shape());
    g.dgamma = Tensor::zeros({c});
    g.dbeta = Tensor::zeros({c});

    const double* up = upstream.data();
    const double* xh = cache.xhat.data();

    // Standard batch-statistics derivative:
    //   dx = (gamma * invstd / m) * (m*up - sum(up) - xhat * sum(up*xhat))
    for (int ci = 0; ci < c; ++ci) {
        double sum_up = 0.0, sum_up_xhat = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                sum_up += up[base + i];
                sum_up_xhat += up[base + i] * xh[base + i];
            }
        }
        g.dgamma[static_cast<std::size_t>(ci)] = sum_up_xhat;
        g.dbeta[static_cast<std::size_t>(ci)] = sum_up;

        const double coef = gamma[static_cast<std::size_t>(ci)] *
                            cache.batch_invstd[static_cast<std::size_t>(ci)] / m;
        for (int ni = 0; ni < n; ++ni) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                g.dx[base + i] = coef * (m * up[base + i] - sum_up -
                                         xh[base + i] * sum_up_xhat);
            }
        }
    }
    g.dx.ensure_finite("batchnorm_backward_train dx");
    return g;
}

BnGrads batchnorm_backward_infer(const Tensor& gamma, const Tensor& running_mean,
                                 const Tensor& running_var, double eps,
                                 const Tensor& x, const Tensor& upstream) {
    if (!x.same_shape(upstream))
        throw std::invalid_argument("batchnorm_backward: upstream shape mismatch");
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    const std::size_t spatial = static_cast<std::size_t>(h) * w;

    BnGrads g;
    g.dx = Tensor::zeros(x.shape());
    g.dgamma = Tensor::zeros({c});
    g.dbeta = Tensor::zeros({c});
    const double* up = upstream.data();
    const double* xp = x.data();

    for (int ci = 0; ci < c; ++ci) {
        const double invstd = 1.0 / std::sqrt(running_var[static_cast<std::size_t>(ci)] + eps);
        const double mean = running_mean[static_cast<std::size_t>(ci)];
        const double gm = gamma[static_cast<std::size_t>(ci)];
        for (int ni = 0; ni < n; ++ni) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) {
                g.dx[base + i] = up[base + i] * gm * invstd;
                g.dgamma[static_cast<std::size_t>(ci)] +=
                    up[base + i] * (xp[base + i] - mean) * invstd;
                g.dbeta[static_cast<std::size_t>(ci)] += up[base + i];
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// dense
// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor* bias) {
    if (x.ndim() != 2) throw std::invalid_argument("dense: input must be 2-D (N,F)");
    if (weight.ndim() != 2) throw std::invalid_argument("dense: weight must be 2-D (K,F)");
    const int n = x.extent(0), f = x.extent(1), k = weight.extent(0);
    if (weight.extent(1) != f)
        throw std::invalid_argument("dense: weight expects " +
                                    std::to_string(weight.extent(1)) +
                                    " features, input has " + std::to_string(f));
    if (bias && !(bias->ndim() == 1 && bias->extent(0) == k))
        throw std::invalid_argument("dense: bias must have shape (K)");

    Tensor y = Tensor::zeros({n, k});
    for (int ni = 0; ni < n; ++ni) {
        const double* xrow = x.data() + static_cast<std::size_t>(ni) * f;
        for (int ki = 0; ki < k; ++ki) {
            const double* wrow = weight.data() + static_cast<std::size_t>(ki) * f;
            double acc = bias ? (*bias)[static_cast<std::size_t>(ki)] : 0.0;
            for (int fi = 0; fi < f; ++fi) acc += xrow[fi] * wrow[fi];
            y[static_cast<std::size_t>(ni) * k + ki] = acc;
        }
    }
    y.ensure_finite("dense_forward");
    return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& weight,
                          const Tensor& upstream, bool need_bias) {
    const int n = x.extent(0), f = x.extent(1), k = weight.extent(0);
    if (upstream.shape() != std::vector<int>{n, k})
        throw std::invalid_argument("dense_backward: upstream shape mismatch");

    DenseGrads g;
    g.dx = Tensor::zeros(x.shape());
    g.dweight = Tensor::zeros(weight.shape());
    if (need_bias) g.dbias = Tensor::zeros({k});

    for (int ni = 0; ni < n; ++ni) {
        const double* xrow = x.data() + static_cast<std::size_t>(ni) * f;
        const double* urow = upstream.data() + static_cast<std::size_t>(ni) * k;
        double* dxrow = g.dx.data() + static_cast<std::size_t>(ni) * f;
        for (int ki = 0; ki < k; ++ki) {
            const double u = urow[ki];
            const double* wrow = weight.data() + static_cast<std::size_t>(ki) * f;
            double* dwrow = g.dweight.data() + static_cast<std::size_t>(ki) * f;
            for (int fi = 0; fi < f; ++fi) {
                dxrow[fi] += u * wrow[fi];
                dwrow[fi] += u * xrow[fi];
            }
            if (need_bias) g.dbias[static_cast<std::size_t>(ki)] += u;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// pooling
// ---------------------------------------------------------------------------

MaxPoolCache maxpool2d_forward(const Tensor& x, int size) {
    if (x.ndim() != 4) throw std::invalid_argument("maxpool2d: input must be 4-D");
    if (size < 1) throw std::invalid_argument("maxpool2d: size must be >= 1");
    const int n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    if (h < size || w < size)
        throw std::invalid_argument("maxpool2d: window larger than input");
    const int oh = h / size, ow = w / size;

    MaxPoolCache cache;
    cache.y = Tensor::zeros({n, c, oh, ow});
    cache.argmax.resize(cache.y.numel());

    const double* xp = x.data();
    std::size_t oi = 0;
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) *
                                     static_cast<std::size_t>(h) * w;
            for (int ohh = 0; ohh < oh; ++ohh) {
                for (int oww = 0; oww < ow; ++oww) {
                    double best = -1.0 / 0.0;
                    std::size_t best_idx = 0;
                    for (int dh = 0; dh < size; ++dh) {
                        for (int dw = 0; dw < size; ++dw) {
                            const std::size_t src =
                                base + static_cast<std::size_t>(ohh * size + dh) * w +
                                static_cast<std::size_t>(oww * size + dw);
                            if (xp[src] > best) {
                                best = xp[src];
                                best_idx = src;
                            }
                        }
                    }
                    cache.y[oi] = best;
                    cache.argmax[oi] = best_idx;
                    ++oi;
                }
            }
        }
    }
    return cache;
}

Tensor maxpool2d_backward(const std::vector<int>& x_shape,
                          const MaxPoolCache& cache, const Tensor& upstream) {
    if (upstream.numel() != cache.argmax.size())
        throw std::invalid_argument("maxpool2d_backward: upstream size mismatch");
    Tensor dx = Tensor::zeros(x_shape);
    for (std::size_t i = 0; i < cache.argmax.size(); ++i)
        dx[cache.argmax[i]] += upstream[i];
    return dx;
}

Tensor global_avg_pool_forward(const Tensor& x) {
    if (x.ndim() != 4) throw std::invalid_argument("global_avg_pool: input must be 4-D");
    const int n = x.extent(0), c = x.extent(1);
    const std::size_t spatial =
        static_cast<std::size_t>(x.extent(2)) * static_cast<std::size_t>(x.extent(3));
    Tensor y = Tensor::zeros({n, c});
    const double* xp = x.data();
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            double acc = 0.0;
            for (std::size_t i = 0; i < spatial; ++i) acc += xp[base + i];
            y[static_cast<std::size_t>(ni) * c + ci] = acc / static_cast<double>(spatial);
        }
    }
    return y;
}

Tensor global_avg_pool_backward(const std::vector<int>& x_shape,
                                const Tensor& upstream) {
    const int n = x_shape[0], c = x_shape[1];
    const std::size_t spatial =
        static_cast<std::size_t>(x_shape[2]) * static_cast<std::size_t>(x_shape[3]);
    if (upstream.shape() != std::vector<int>{n, c})
        throw std::invalid_argument("global_avg_pool_backward: upstream shape mismatch");
    Tensor dx = Tensor::zeros(x_shape);
    const double inv = 1.0 / static_cast<double>(spatial);
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const double u = upstream[static_cast<std::size_t>(ni) * c + ci] * inv;
            const std::size_t base = (static_cast<std::size_t>(ni) * c + ci) * spatial;
            for (std::size_t i = 0; i < spatial; ++i) dx[base + i] = u;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy
// ---------------------------------------------------------------------------

CrossEntropyCache softmax_cross_entropy(const Tensor& logits,
                                        const std::vector<int>& labels) {
    if (logits.ndim() != 2)
        throw std::invalid_argument("cross_entropy: logits must be 2-D (N,K)");
    const int n = logits.extent(0), k = logits.extent(1);
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("cross_entropy: need one label per row");

    CrossEntropyCache cache;
    cache.probs = Tensor::zeros({n, k});
    double loss = 0.0;
    for (int ni = 0; ni < n; ++ni) {
        if (labels[static_cast<std::size_t>(ni)] < 0 ||
            labels[static_cast<std::size_t>(ni)] >= k)
            throw std::invalid_argument("cross_entropy: label out of range");
        const double* row = logits.data() + static_cast<std::size_t>(ni) * k;
        double mx = row[0];
        for (int ki = 1; ki < k; ++ki) mx = row[ki] > mx ? row[ki] : mx;
        double denom = 0.0;
        for (int ki = 0; ki < k; ++ki) denom += std::exp(row[ki] - mx);
        const double log_denom = std::log(denom);
        for (int ki = 0; ki < k; ++ki)
            cache.probs[static_cast<std::size_t>(ni) * k + ki] =
                std::exp(row[ki] - mx) / denom;
        const int lbl = labels[static_cast<std::size_t>(ni)];
        loss += log_denom - (row[lbl] - mx);
    }
    cache.loss = loss / static_cast<double>(n);
    if (!std::isfinite(cache.loss))
        throw std::domain_error("non-finite cross-entropy loss");
    return cache;
}

Tensor softmax_cross_entropy_backward(const CrossEntropyCache& cache,
                                      const std::vector<int>& labels,
                                      double upstream) {
    const int n = cache.probs.extent(0), k = cache.probs.extent(1);
    Tensor d = Tensor::zeros({n, k});
    const double coef = upstream / static_cast<double>(n);
    for (int ni = 0; ni < n; ++ni) {
        for (int ki = 0; ki < k; ++ki) {
            const std::size_t idx = static_cast<std::size_t>(ni) * k + ki;
            const double onehot = ki == labels[static_cast<std::size_t>(ni)] ? 1.0 : 0.0;
            d[idx] = coef * (cache.probs[idx] - onehot);
        }
    }
    return d;
}

} // namespace pg

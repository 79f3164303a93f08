#include "ihdr/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ihdr/error.hpp"

namespace ihdr::nn {

namespace {

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* op) {
    if (!(a.shape() == b.shape()))
        throw_usage(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

// Valid output range [lo, hi) for a kernel tap at offset d over length n.
inline int tap_lo(int d) { return std::max(0, -d); }
inline int tap_hi(int n, int d) { return std::min(n, n - d); }

}  // namespace

Var conv2d(Tape& t, Var x, Var w, std::optional<Var> bias, const std::string& name) {
    const Tensor4& X = t.value(x);
    const Tensor4& W = t.value(w);
    const Shape xs = X.shape(), ws = W.shape();
    if (ws.c != xs.c) throw_usage(t.qualified(name) + ": weight expects " + std::to_string(ws.c) + " input channels, got " +
                                  std::to_string(xs.c));
    if (ws.h != ws.w || ws.h % 2 == 0) throw_usage(t.qualified(name) + ": kernel must be square and odd");
    const int cout = ws.n, cin = ws.c, k = ws.h, pad = k / 2, H = xs.h, Wd = xs.w;
    if (bias && t.value(*bias).numel() != static_cast<std::size_t>(cout)) throw_usage(t.qualified(name) + ": bias size");

    Tensor4 Y(Shape{xs.n, cout, H, Wd});
    for (int n = 0; n < xs.n; ++n) {
        for (int co = 0; co < cout; ++co) {
            double* yp = Y.plane(n, co);
            if (bias) std::fill(yp, yp + Y.shape().plane(), t.value(*bias)[co]);
            for (int ci = 0; ci < cin; ++ci) {
                const double* xp = X.plane(n, ci);
                for (int ky = 0; ky < k; ++ky) {
                    const int dy = ky - pad;
                    for (int kx = 0; kx < k; ++kx) {
                        const int dx = kx - pad;
                        const double wv = W.at(co, ci, ky, kx);
                        const int x0 = tap_lo(dx), x1 = tap_hi(Wd, dx);
                        for (int y = tap_lo(dy); y < tap_hi(H, dy); ++y) {
                            const double* xr = xp + static_cast<std::size_t>(y + dy) * Wd + dx;
                            double* yr = yp + static_cast<std::size_t>(y) * Wd;
                            for (int xx = x0; xx < x1; ++xx) yr[xx] += wv * xr[xx];
                        }
                    }
                }
            }
        }
    }
    t.count_macs(name, static_cast<std::uint64_t>(xs.n) * H * Wd * k * k * cin * cout);

    const int xid = x.id, wid = w.id, bid = bias ? bias->id : -1;
    return t.push(std::move(Y), name, [xid, wid, bid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        const Tensor4& W = tp.value_of(wid);
        Tensor4& dX = tp.grad_buffer(xid);
        Tensor4& dW = tp.grad_buffer(wid);
        const Shape xs = X.shape(), ws = W.shape();
        const int cout = ws.n, cin = ws.c, k = ws.h, pad = k / 2, H = xs.h, Wd = xs.w;
        for (int n = 0; n < xs.n; ++n) {
            for (int co = 0; co < cout; ++co) {
                const double* gp = G.plane(n, co);
                for (int ci = 0; ci < cin; ++ci) {
                    const double* xp = X.plane(n, ci);
                    double* dxp = dX.plane(n, ci);
                    for (int ky = 0; ky < k; ++ky) {
                        const int dy = ky - pad;
                        for (int kx = 0; kx < k; ++kx) {
                            const int dx = kx - pad;
                            const double wv = W.at(co, ci, ky, kx);
                            const int x0 = tap_lo(dx), x1 = tap_hi(Wd, dx);
                            double acc = 0.0;
                            for (int y = tap_lo(dy); y < tap_hi(H, dy); ++y) {
                                const std::size_t off = static_cast<std::size_t>(y + dy) * Wd + dx;
                                const double* xr = xp + off;
                                double* dxr = dxp + off;
                                const double* gr = gp + static_cast<std::size_t>(y) * Wd;
                                for (int xx = x0; xx < x1; ++xx) {
                                    acc += gr[xx] * xr[xx];
                                    dxr[xx] += wv * gr[xx];
                                }
                            }
                            dW.at(co, ci, ky, kx) += acc;
                        }
                    }
                }
            }
        }
        if (bid >= 0) {
            Tensor4& dB = tp.grad_buffer(bid);
            for (int n = 0; n < xs.n; ++n)
                for (int co = 0; co < cout; ++co) {
                    const double* gp = G.plane(n, co);
                    double s = 0.0;
                    for (std::size_t i = 0; i < G.shape().plane(); ++i) s += gp[i];
                    dB[static_cast<std::size_t>(co)] += s;
                }
        }
    });
}

Var depthwise_conv2d(Tape& t, Var x, Var w, const std::string& name) {
    const Tensor4& X = t.value(x);
    const Tensor4& W = t.value(w);
    const Shape xs = X.shape(), ws = W.shape();
    if (ws.n != xs.c || ws.c != 1 || ws.h != ws.w || ws.h % 2 == 0)
        throw_usage(t.qualified(name) + ": depthwise weight must be Cx1xkxk with odd k, got " + ws.str());
    const int C = xs.c, k = ws.h, pad = k / 2, H = xs.h, Wd = xs.w;

    Tensor4 Y(xs);
    for (int n = 0; n < xs.n; ++n)
        for (int c = 0; c < C; ++c) {
            const double* xp = X.plane(n, c);
            double* yp = Y.plane(n, c);
            for (int ky = 0; ky < k; ++ky) {
                const int dy = ky - pad;
                for (int kx = 0; kx < k; ++kx) {
                    const int dx = kx - pad;
                    const double wv = W.at(c, 0, ky, kx);
                    const int x0 = tap_lo(dx), x1 = tap_hi(Wd, dx);
                    for (int y = tap_lo(dy); y < tap_hi(H, dy); ++y) {
                        const double* xr = xp + static_cast<std::size_t>(y + dy) * Wd + dx;
                        double* yr = yp + static_cast<std::size_t>(y) * Wd;
                        for (int xx = x0; xx < x1; ++xx) yr[xx] += wv * xr[xx];
                    }
                }
            }
        }
    t.count_macs(name, static_cast<std::uint64_t>(xs.n) * H * Wd * k * k * C);

    const int xid = x.id, wid = w.id;
    return t.push(std::move(Y), name, [xid, wid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        const Tensor4& W = tp.value_of(wid);
        Tensor4& dX = tp.grad_buffer(xid);
        Tensor4& dW = tp.grad_buffer(wid);
        const Shape xs = X.shape();
        const int C = xs.c, k = W.shape().h, pad = k / 2, H = xs.h, Wd = xs.w;
        for (int n = 0; n < xs.n; ++n)
            for (int c = 0; c < C; ++c) {
                const double* xp = X.plane(n, c);
                const double* gp = G.plane(n, c);
                double* dxp = dX.plane(n, c);
                for (int ky = 0; ky < k; ++ky) {
                    const int dy = ky - pad;
                    for (int kx = 0; kx < k; ++kx) {
                        const int dx = kx - pad;
                        const double wv = W.at(c, 0, ky, kx);
                        const int x0 = tap_lo(dx), x1 = tap_hi(Wd, dx);
                        double acc = 0.0;
                        for (int y = tap_lo(dy); y < tap_hi(H, dy); ++y) {
                            const std::size_t off = static_cast<std::size_t>(y + dy) * Wd + dx;
                            const double* gr = gp + static_cast<std::size_t>(y) * Wd;
                            for (int xx = x0; xx < x1; ++xx) {
                                acc += gr[xx] * xp[off + xx];
                                dxp[off + xx] += wv * gr[xx];
                            }
                        }
                        dW.at(c, 0, ky, kx) += acc;
                    }
                }
            }
    });
}

Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps, const std::string& name) {
    const Tensor4& X = t.value(x);
    const Tensor4& Ga = t.value(gamma);
    const Tensor4& Be = t.value(beta);
    const Shape s = X.shape();
    if (Ga.numel() != static_cast<std::size_t>(s.c) || Be.numel() != static_cast<std::size_t>(s.c))
        throw_usage(t.qualified(name) + ": affine parameters must have one entry per channel");
    const std::size_t P = s.plane();
    Tensor4 Y(s);
    for (int n = 0; n < s.n; ++n)
        for (std::size_t p = 0; p < P; ++p) {
            double mean = 0.0;
            for (int c = 0; c < s.c; ++c) mean += X.plane(n, c)[p];
            mean /= s.c;
            double var = 0.0;
            for (int c = 0; c < s.c; ++c) {
                const double d = X.plane(n, c)[p] - mean;
                var += d * d;
            }
            var /= s.c;
            const double inv = 1.0 / std::sqrt(var + eps);
            for (int c = 0; c < s.c; ++c) Y.plane(n, c)[p] = (X.plane(n, c)[p] - mean) * inv * Ga[c] + Be[c];
        }

    const int xid = x.id, gid = gamma.id, bid = beta.id;
    return t.push(std::move(Y), name, [xid, gid, bid, eps](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        const Tensor4& Ga = tp.value_of(gid);
        Tensor4& dX = tp.grad_buffer(xid);
        Tensor4& dG = tp.grad_buffer(gid);
        Tensor4& dB = tp.grad_buffer(bid);
        const Shape s = X.shape();
        const std::size_t P = s.plane();
        std::vector<double> xhat(static_cast<std::size_t>(s.c)), dxhat(static_cast<std::size_t>(s.c));
        for (int n = 0; n < s.n; ++n)
            for (std::size_t p = 0; p < P; ++p) {
                double mean = 0.0;
                for (int c = 0; c < s.c; ++c) mean += X.plane(n, c)[p];
                mean /= s.c;
                double var = 0.0;
                for (int c = 0; c < s.c; ++c) {
                    const double d = X.plane(n, c)[p] - mean;
                    var += d * d;
                }
                var /= s.c;
                const double inv = 1.0 / std::sqrt(var + eps);
                double m1 = 0.0, m2 = 0.0;
                for (int c = 0; c < s.c; ++c) {
                    const double g = G.plane(n, c)[p];
                    xhat[c] = (X.plane(n, c)[p] - mean) * inv;
                    dxhat[c] = g * Ga[c];
                    dG[c] += g * xhat[c];
                    dB[c] += g;
                    m1 += dxhat[c];
                    m2 += dxhat[c] * xhat[c];
                }
                m1 /= s.c;
                m2 /= s.c;
                for (int c = 0; c < s.c; ++c) dX.plane(n, c)[p] += inv * (dxhat[c] - m1 - xhat[c] * m2);
            }
    });
}

Var add(Tape& t, Var a, Var b) {
    const Tensor4& A = t.value(a);
    const Tensor4& B = t.value(b);
    require_same_shape(A, B, "add");
    Tensor4 Y(A.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = A[i] + B[i];
    const int aid = a.id, bid = b.id;
    return t.push(std::move(Y), "add", [aid, bid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        Tensor4& dA = tp.grad_buffer(aid);
        for (std::size_t i = 0; i < G.numel(); ++i) dA[i] += G[i];
        Tensor4& dB = tp.grad_buffer(bid);
        for (std::size_t i = 0; i < G.numel(); ++i) dB[i] += G[i];
    });
}

Var mul(Tape& t, Var a, Var b) {
    const Tensor4& A = t.value(a);
    const Tensor4& B = t.value(b);
    require_same_shape(A, B, "mul");
    Tensor4 Y(A.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = A[i] * B[i];
    const int aid = a.id, bid = b.id;
    return t.push(std::move(Y), "mul", [aid, bid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& A = tp.value_of(aid);
        const Tensor4& B = tp.value_of(bid);
        Tensor4& dA = tp.grad_buffer(aid);
        for (std::size_t i = 0; i < G.numel(); ++i) dA[i] += G[i] * B[i];
        Tensor4& dB = tp.grad_buffer(bid);
        for (std::size_t i = 0; i < G.numel(); ++i) dB[i] += G[i] * A[i];
    });
}

Var scale(Tape& t, Var a, double s) {
    const Tensor4& A = t.value(a);
    Tensor4 Y(A.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = s * A[i];
    const int aid = a.id;
    return t.push(std::move(Y), "scale", [aid, s](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        Tensor4& dA = tp.grad_buffer(aid);
        for (std::size_t i = 0; i < G.numel(); ++i) dA[i] += s * G[i];
    });
}

Var concat_channels(Tape& t, const std::vector<Var>& parts) {
    if (parts.empty()) throw_usage("concat_channels: no inputs");
    const Shape s0 = t.value(parts.front()).shape();
    int total = 0;
    for (Var p : parts) {
        const Shape s = t.value(p).shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
            throw_usage("concat_channels: spatial mismatch " + s.str() + " vs " + s0.str());
        total += s.c;
    }
    Tensor4 Y(Shape{s0.n, total, s0.h, s0.w});
    const std::size_t P = s0.plane();
    for (int n = 0; n < s0.n; ++n) {
        int c0 = 0;
        for (Var p : parts) {
            const Tensor4& X = t.value(p);
            for (int c = 0; c < X.shape().c; ++c) std::copy(X.plane(n, c), X.plane(n, c) + P, Y.plane(n, c0 + c));
            c0 += X.shape().c;
        }
    }
    std::vector<int> ids;
    for (Var p : parts) ids.push_back(p.id);
    return t.push(std::move(Y), "concat", [ids](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Shape gs = G.shape();
        const std::size_t P = gs.plane();
        int c0 = 0;
        for (int id : ids) {
            Tensor4& dX = tp.grad_buffer(id);
            const int cs = dX.shape().c;
            for (int n = 0; n < gs.n; ++n)
                for (int c = 0; c < cs; ++c) {
                    const double* g = G.plane(n, c0 + c);
                    double* d = dX.plane(n, c);
                    for (std::size_t i = 0; i < P; ++i) d[i] += g[i];
                }
            c0 += cs;
        }
    });
}

Var slice_channels(Tape& t, Var x, int first, int count) {
    const Tensor4& X = t.value(x);
    const Shape s = X.shape();
    if (first < 0 || count <= 0 || first + count > s.c) throw_usage("slice_channels: range out of bounds");
    Tensor4 Y(Shape{s.n, count, s.h, s.w});
    const std::size_t P = s.plane();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < count; ++c) std::copy(X.plane(n, first + c), X.plane(n, first + c) + P, Y.plane(n, c));
    const int xid = x.id;
    return t.push(std::move(Y), "slice", [xid, first, count](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        Tensor4& dX = tp.grad_buffer(xid);
        const std::size_t P = G.shape().plane();
        for (int n = 0; n < G.shape().n; ++n)
            for (int c = 0; c < count; ++c) {
                const double* g = G.plane(n, c);
                double* d = dX.plane(n, first + c);
                for (std::size_t i = 0; i < P; ++i) d[i] += g[i];
            }
    });
}

Var avg_pool2(Tape& t, Var x) {
    const Tensor4& X = t.value(x);
    const Shape s = X.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0) throw_usage("avg_pool2: odd spatial size " + s.str());
    Tensor4 Y(Shape{s.n, s.c, s.h / 2, s.w / 2});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h / 2; ++y)
                for (int xx = 0; xx < s.w / 2; ++xx)
                    Y.at(n, c, y, xx) = 0.25 * (X.at(n, c, 2 * y, 2 * xx) + X.at(n, c, 2 * y, 2 * xx + 1) +
                                                X.at(n, c, 2 * y + 1, 2 * xx) + X.at(n, c, 2 * y + 1, 2 * xx + 1));
    const int xid = x.id;
    return t.push(std::move(Y), "avg_pool2", [xid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        Tensor4& dX = tp.grad_buffer(xid);
        const Shape gs = G.shape();
        for (int n = 0; n < gs.n; ++n)
            for (int c = 0; c < gs.c; ++c)
                for (int y = 0; y < gs.h; ++y)
                    for (int xx = 0; xx < gs.w; ++xx) {
                        const double g = 0.25 * G.at(n, c, y, xx);
                        dX.at(n, c, 2 * y, 2 * xx) += g;
                        dX.at(n, c, 2 * y, 2 * xx + 1) += g;
                        dX.at(n, c, 2 * y + 1, 2 * xx) += g;
                        dX.at(n, c, 2 * y + 1, 2 * xx + 1) += g;
                    }
    });
}

Var upsample_nearest2(Tape& t, Var x) {
    const Tensor4& X = t.value(x);
    const Shape s = X.shape();
    Tensor4 Y(Shape{s.n, s.c, s.h * 2, s.w * 2});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < 2 * s.h; ++y)
                for (int xx = 0; xx < 2 * s.w; ++xx) Y.at(n, c, y, xx) = X.at(n, c, y / 2, xx / 2);
    const int xid = x.id;
    return t.push(std::move(Y), "upsample2", [xid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        Tensor4& dX = tp.grad_buffer(xid);
        const Shape gs = G.shape();
        for (int n = 0; n < gs.n; ++n)
            for (int c = 0; c < gs.c; ++c)
                for (int y = 0; y < gs.h; ++y)
                    for (int xx = 0; xx < gs.w; ++xx) dX.at(n, c, y / 2, xx / 2) += G.at(n, c, y, xx);
    });
}

Var l2_normalize_spatial(Tape& t, Var x, double eps) {
    const Tensor4& X = t.value(x);
    const Shape s = X.shape();
    const std::size_t P = s.plane();
    Tensor4 Y(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const double* xp = X.plane(n, c);
            double ss = 0.0;
            for (std::size_t i = 0; i < P; ++i) ss += xp[i] * xp[i];
            const double d = std::max(std::sqrt(ss), eps);
            double* yp = Y.plane(n, c);
            for (std::size_t i = 0; i < P; ++i) yp[i] = xp[i] / d;
        }
    const int xid = x.id;
    return t.push(std::move(Y), "l2_normalize", [xid, eps](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        Tensor4& dX = tp.grad_buffer(xid);
        const Shape s = X.shape();
        const std::size_t P = s.plane();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const double* xp = X.plane(n, c);
                const double* gp = G.plane(n, c);
                double* dp = dX.plane(n, c);
                double ss = 0.0;
                for (std::size_t i = 0; i < P; ++i) ss += xp[i] * xp[i];
                const double norm = std::sqrt(ss);
                if (norm > eps) {
                    double yg = 0.0;
                    for (std::size_t i = 0; i < P; ++i) yg += xp[i] * gp[i];
                    yg /= norm;  // yᵀg
                    for (std::size_t i = 0; i < P; ++i) dp[i] += (gp[i] - (xp[i] / norm) * yg) / norm;
                } else {
                    for (std::size_t i = 0; i < P; ++i) dp[i] += gp[i] / eps;
                }
            }
    });
}

Var transposed_attention(Tape& t, Var keys, Var queries, Var values, Var log_alpha, AttentionTrace* trace,
                         const std::string& name) {
    const Tensor4& K = t.value(keys);
    const Tensor4& Q = t.value(queries);
    const Tensor4& V = t.value(values);
    const Tensor4& LA = t.value(log_alpha);
    require_same_shape(K, Q, "transposed_attention(keys, queries)");
    require_same_shape(K, V, "transposed_attention(keys, values)");
    if (LA.numel() != 1) throw_usage("transposed_attention: log_alpha must be a scalar");
    const Shape s = K.shape();
    const int C = s.c;
    const std::size_t P = s.plane();
    const double alpha = std::exp(LA[0]);

    // Per-sample row-softmaxed attention matrices, kept for backward.
    auto attn = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * C * C);
    auto logits = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * C * C);
    Tensor4 Y(s);
    for (int n = 0; n < s.n; ++n) {
        double* M = logits->data() + static_cast<std::size_t>(n) * C * C;
        double* A = attn->data() + static_cast<std::size_t>(n) * C * C;
        for (int i = 0; i < C; ++i)
            for (int j = 0; j < C; ++j) {
                const double* kp = K.plane(n, i);
                const double* qp = Q.plane(n, j);
                double acc = 0.0;
                for (std::size_t p = 0; p < P; ++p) acc += kp[p] * qp[p];
                M[i * C + j] = acc / alpha;
            }
        for (int i = 0; i < C; ++i) {
            double mx = M[i * C];
            for (int j = 1; j < C; ++j) mx = std::max(mx, M[i * C + j]);
            double z = 0.0;
            for (int j = 0; j < C; ++j) z += A[i * C + j] = std::exp(M[i * C + j] - mx);
            for (int j = 0; j < C; ++j) A[i * C + j] /= z;
        }
        for (int j = 0; j < C; ++j) {
            double* yp = Y.plane(n, j);
            for (int i = 0; i < C; ++i) {
                const double a = A[i * C + j];
                const double* vp = V.plane(n, i);
                for (std::size_t p = 0; p < P; ++p) yp[p] += vp[p] * a;
            }
        }
    }
    if (trace) {
        trace->logits = Tensor4(Shape{1, 1, C, C});
        trace->attention = Tensor4(Shape{1, 1, C, C});
        std::copy(logits->begin(), logits->begin() + C * C, trace->logits.data().begin());
        std::copy(attn->begin(), attn->begin() + C * C, trace->attention.data().begin());
    }
    t.count_macs(name, 2ULL * s.n * P * C * C);

    const int kid = keys.id, qid = queries.id, vid = values.id, aid = log_alpha.id;
    return t.push(std::move(Y), name, [kid, qid, vid, aid, attn, logits](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& K = tp.value_of(kid);
        const Tensor4& Q = tp.value_of(qid);
        const Tensor4& V = tp.value_of(vid);
        const double alpha = std::exp(tp.value_of(aid)[0]);
        Tensor4& dK = tp.grad_buffer(kid);
        Tensor4& dQ = tp.grad_buffer(qid);
        Tensor4& dV = tp.grad_buffer(vid);
        Tensor4& dLA = tp.grad_buffer(aid);
        const Shape s = K.shape();
        const int C = s.c;
        const std::size_t P = s.plane();
        std::vector<double> dA(static_cast<std::size_t>(C) * C), dS(static_cast<std::size_t>(C) * C);
        for (int n = 0; n < s.n; ++n) {
            const double* A = attn->data() + static_cast<std::size_t>(n) * C * C;
            const double* M = logits->data() + static_cast<std::size_t>(n) * C * C;
            for (int i = 0; i < C; ++i) {
                const double* vp = V.plane(n, i);
                double* dvp = dV.plane(n, i);
                for (int j = 0; j < C; ++j) {
                    const double* gp = G.plane(n, j);
                    const double a = A[i * C + j];
                    double acc = 0.0;
                    for (std::size_t p = 0; p < P; ++p) {
                        acc += vp[p] * gp[p];
                        dvp[p] += a * gp[p];
                    }
                    dA[i * C + j] = acc;
                }
            }
            double dlog_alpha = 0.0;
            for (int i = 0; i < C; ++i) {
                double dot = 0.0;
                for (int j = 0; j < C; ++j) dot += A[i * C + j] * dA[i * C + j];
                for (int j = 0; j < C; ++j) {
                    const double dm = A[i * C + j] * (dA[i * C + j] - dot);  // d/dM
                    dlog_alpha -= dm * M[i * C + j];
                    dS[i * C + j] = dm / alpha;  // d/d(raw product)
                }
            }
            dLA[0] += dlog_alpha;
            for (int i = 0; i < C; ++i) {
                const double* kp = K.plane(n, i);
                double* dkp = dK.plane(n, i);
                for (int j = 0; j < C; ++j) {
                    const double ds = dS[i * C + j];
                    const double* qp = Q.plane(n, j);
                    double* dqp = dQ.plane(n, j);
                    for (std::size_t p = 0; p < P; ++p) {
                        dkp[p] += ds * qp[p];
                        dqp[p] += ds * kp[p];
                    }
                }
            }
        }
    });
}

Var tanh_act(Tape& t, Var x) {
    const Tensor4& X = t.value(x);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = std::tanh(X[i]);
    const int xid = x.id;
    return t.push(std::move(Y), "tanh", [xid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& Y = tp.value_of(self);
        Tensor4& dX = tp.grad_buffer(xid);
        for (std::size_t i = 0; i < G.numel(); ++i) dX[i] += G[i] * (1.0 - Y[i] * Y[i]);
    });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;
}  // namespace

Var gelu(Tape& t, Var x) {
    const Tensor4& X = t.value(x);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = 0.5 * X[i] * std::erfc(-X[i] * kInvSqrt2);
    const int xid = x.id;
    return t.push(std::move(Y), "gelu", [xid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        Tensor4& dX = tp.grad_buffer(xid);
        constexpr double kInvSqrt2Pi = 0.3989422804014327;
        for (std::size_t i = 0; i < G.numel(); ++i) {
            const double v = X[i];
            dX[i] += G[i] * (0.5 * std::erfc(-v * kInvSqrt2) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v));
        }
    });
}

double softplus(double x, double beta) {
    const double z = beta * x;
    return (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)))) / beta;
}

Var softplus(Tape& t, Var x, double beta) {
    const Tensor4& X = t.value(x);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = softplus(X[i], beta);
    const int xid = x.id;
    return t.push(std::move(Y), "softplus", [xid, beta](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        Tensor4& dX = tp.grad_buffer(xid);
        for (std::size_t i = 0; i < G.numel(); ++i) {
            const double z = beta * X[i];
            // logistic(z), evaluated without overflow
            const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            dX[i] += G[i] * s;
        }
    });
}

double smooth_relu(double x, double delta) {
    if (x <= -delta) return 0.0;
    if (x >= delta) return x;
    return (x + delta) * (x + delta) / (4.0 * delta);
}

Var smooth_relu(Tape& t, Var x, double delta) {
    const Tensor4& X = t.value(x);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = smooth_relu(X[i], delta);
    const int xid = x.id;
    return t.push(std::move(Y), "smooth_relu", [xid, delta](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        Tensor4& dX = tp.grad_buffer(xid);
        for (std::size_t i = 0; i < G.numel(); ++i) {
            const double v = X[i];
            const double d = v <= -delta ? 0.0 : (v >= delta ? 1.0 : (v + delta) / (2.0 * delta));
            dX[i] += G[i] * d;
        }
    });
}

Var clamp_unit(Tape& t, Var x) {
    const Tensor4& X = t.value(x);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = std::clamp(X[i], 0.0, 1.0);
    const int xid = x.id;
    return t.push(std::move(Y), "clamp", [xid](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        Tensor4& dX = tp.grad_buffer(xid);
        for (std::size_t i = 0; i < G.numel(); ++i)
            if (X[i] > 0.0 && X[i] < 1.0) dX[i] += G[i];
    });
}

Var mu_law(Tape& t, Var x, double mu) {
    const Tensor4& X = t.value(x);
    const double denom = std::log1p(mu);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = std::log1p(mu * X[i]) / denom;
    const int xid = x.id;
    return t.push(std::move(Y), "mu_law", [xid, mu, denom](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        Tensor4& dX = tp.grad_buffer(xid);
        for (std::size_t i = 0; i < G.numel(); ++i) dX[i] += G[i] * mu / ((1.0 + mu * X[i]) * denom);
    });
}

Var power_tonemap(Tape& t, Var x, double c, double gamma) {
    const Tensor4& X = t.value(x);
    Tensor4 Y(X.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) {
        const double u = c * X[i];
        Y[i] = u <= 0.0 ? 0.0 : std::min(1.0, std::pow(u, 1.0 / gamma));
    }
    const int xid = x.id;
    return t.push(std::move(Y), "power_tonemap", [xid, c, gamma](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        const Tensor4& X = tp.value_of(xid);
        const Tensor4& Y = tp.value_of(self);
        Tensor4& dX = tp.grad_buffer(xid);
        for (std::size_t i = 0; i < G.numel(); ++i) {
            const double u = c * X[i];
            if (u <= 0.0 || Y[i] >= 1.0) continue;
            // d/dx (c x)^(1/γ) = y / (γ x)
            dX[i] += G[i] * Y[i] / (gamma * X[i]);
        }
    });
}

Var l1_mean(Tape& t, Var a, Var b) {
    const Tensor4& A = t.value(a);
    const Tensor4& B = t.value(b);
    require_same_shape(A, B, "l1_mean");
    double s = 0.0;
    for (std::size_t i = 0; i < A.numel(); ++i) s += std::abs(A[i] - B[i]);
    Tensor4 Y(Shape{1, 1, 1, 1}, s / static_cast<double>(A.numel()));
    const int aid = a.id, bid = b.id;
    return t.push(std::move(Y), "l1_mean", [aid, bid](Tape& tp, int self) {
        const double g = (*tp.grad_if_any(self))[0];
        const Tensor4& A = tp.value_of(aid);
        const Tensor4& B = tp.value_of(bid);
        const double k = g / static_cast<double>(A.numel());
        Tensor4& dA = tp.grad_buffer(aid);
        for (std::size_t i = 0; i < A.numel(); ++i) {
            const double d = A[i] - B[i];
            dA[i] += d > 0.0 ? k : (d < 0.0 ? -k : 0.0);
        }
        Tensor4& dB = tp.grad_buffer(bid);
        for (std::size_t i = 0; i < A.numel(); ++i) {
            const double d = A[i] - B[i];
            dB[i] -= d > 0.0 ? k : (d < 0.0 ? -k : 0.0);
        }
    });
}

Var weighted_sum(Tape& t, Var a, double wa, Var b, double wb) {
    const Tensor4& A = t.value(a);
    const Tensor4& B = t.value(b);
    require_same_shape(A, B, "weighted_sum");
    Tensor4 Y(A.shape());
    for (std::size_t i = 0; i < Y.numel(); ++i) Y[i] = wa * A[i] + wb * B[i];
    const int aid = a.id, bid = b.id;
    return t.push(std::move(Y), "weighted_sum", [aid, bid, wa, wb](Tape& tp, int self) {
        const Tensor4& G = *tp.grad_if_any(self);
        Tensor4& dA = tp.grad_buffer(aid);
        for (std::size_t i = 0; i < G.numel(); ++i) dA[i] += wa * G[i];
        Tensor4& dB = tp.grad_buffer(bid);
        for (std::size_t i = 0; i < G.numel(); ++i) dB[i] += wb * G[i];
    });
}

}  // namespace ihdr::nn

#pragma once

// Composite private operations built from the basic ones: ReLU, logistic
// (forward-Euler and piecewise), reciprocal/division and sqrt via
// Newton-Raphson, exp via repeated squaring, log via a Mercator series, abs.
//
// Exactness classes: relu/abs (and mux-based selections) are bit-exact
// against the fixed-point oracle; the iterative routines match a cleartext
// fixed-point reference running the identical schedule within
// iter_cnt * 3 * 2^-d.

#include "quadshare/tensor_ops.hpp"

namespace quadshare {

// Iteration count and the public normalization scale for the approximation
// routines.  Domains (before scaling) are documented per function.
struct IterParams {
    int iter_cnt = 15;
    double scale = 1.0;
};

// max(0, x), exact: sign bit of -x selects x or 0.
inline ShareTensor relu(Engine& eng, const ShareTensor& x) {
    ShareTensor neg = negate_shares(eng, x);
    BitTensor positive = eng.options().use_ppa ? extract_bit_ppa(eng, neg, eng.cfg().n)
                                               : extract_bit(eng, neg, eng.cfg().n);
    return ot_select(eng, positive, x);
}

// |x|, exact: sign bit of x selects -x or x.
inline ShareTensor abs(Engine& eng, const ShareTensor& x) {
    BitTensor negative = eng.options().use_ppa ? extract_bit_ppa(eng, x, eng.cfg().n)
                                               : extract_bit(eng, x, eng.cfg().n);
    return mux(eng, negative, negate_shares(eng, x), x);
}

// Forward-Euler integration of f' = f(1-f) from f(0) = 1/2, |x| clamped to 8
// where the few-step recurrence still tracks the sigmoid.
inline ShareTensor logistic(Engine& eng, const ShareTensor& x, const IterParams& params = {.iter_cnt = 100}) {
    if (params.iter_cnt < 1) throw DomainError("logistic needs iter_cnt >= 1");
    ShareTensor xc = clip(eng, x, -8.0, 8.0);
    std::vector<double> halves(x.size(), 0.5);
    ShareTensor result = from_public(eng, halves, x.shape);
    ShareTensor delta = mul_public(eng, xc, 1.0 / double(params.iter_cnt));
    for (int i = 0; i < params.iter_cnt; ++i) {
        ShareTensor derivate = mul_fixed(eng, result, sub_from_public(eng, 1.0, result));
        result = add_shares(eng, result, mul_fixed(eng, delta, derivate));
    }
    return result;
}

// Three-segment alternative: 0 below -1/2, x + 1/2 in between, 1 above 1/2.
inline ShareTensor logistic_piecewise(Engine& eng, const ShareTensor& x) {
    std::vector<double> lo(x.size(), -0.5), hi(x.size(), 0.5), ones(x.size(), 1.0);
    ShareTensor lo_t = from_public(eng, lo, x.shape);
    ShareTensor hi_t = from_public(eng, hi, x.shape);
    ShareTensor one_t = from_public(eng, ones, x.shape);
    BitTensor below = less_than(eng, x, lo_t);
    BitTensor above = less_than(eng, hi_t, x);
    ShareTensor mid = add_public(eng, x, 0.5);
    ShareTensor r = mux(eng, above, one_t, mid);
    return mux(eng, below, shares_zeros(x.shape), r);
}

// Newton-Raphson reciprocal.  The caller normalizes x/scale into [0.5, 1);
// the seed is the linear estimate 48/17 - (32/17)(x/scale).
inline ShareTensor reciprocal(Engine& eng, const ShareTensor& x, const IterParams& params = {}) {
    if (!(params.scale > 0.0)) throw DomainError("reciprocal needs a positive public scale");
    if (params.iter_cnt < 1) throw DomainError("reciprocal needs iter_cnt >= 1");
    ShareTensor xn = mul_public(eng, x, 1.0 / params.scale);
    ShareTensor z = add_public(eng, mul_public(eng, xn, -32.0 / 17.0), 48.0 / 17.0);
    for (int i = 0; i < params.iter_cnt; ++i)
        z = mul_fixed(eng, z, sub_from_public(eng, 2.0, mul_fixed(eng, xn, z)));
    return mul_public(eng, z, 1.0 / params.scale);
}

inline ShareTensor divide(Engine& eng, const ShareTensor& y, const ShareTensor& x,
                          const IterParams& params = {}) {
    Shape out = broadcast_shape(y.shape, x.shape);
    return mul_fixed(eng, broadcast_to(y, out), broadcast_to(reciprocal(eng, x, params), out));
}

// Inverse square root Newton iteration y <- y(3 - x y^2)/2 on x/scale in
// [0.5, 2); sqrt(x) = scale_root * (x/scale) * rsqrt(x/scale).  scale must be
// an even power of two times the unit interval for exact public roots, or
// any positive value the caller can take the root of.
inline ShareTensor sqrt(Engine& eng, const ShareTensor& x, const IterParams& params = {}) {
    if (!(params.scale > 0.0)) throw DomainError("sqrt needs a positive public scale");
    if (params.iter_cnt < 1) throw DomainError("sqrt needs iter_cnt >= 1");
    double root = std::sqrt(params.scale);
    ShareTensor xn = mul_public(eng, x, 1.0 / params.scale);
    ShareTensor y = add_public(eng, mul_public(eng, xn, -0.4714), 1.6499);
    for (int i = 0; i < params.iter_cnt; ++i) {
        ShareTensor ysq = mul_fixed(eng, y, y);
        ShareTensor corr = sub_from_public(eng, 3.0, mul_fixed(eng, xn, ysq));
        y = mul_public(eng, mul_fixed(eng, y, corr), 0.5);
    }
    return mul_public(eng, mul_fixed(eng, xn, y), root);
}

// exp(x) = (1 + x/2^m)^(2^m) via m squarings; domain |x| <= 8.
inline ShareTensor exp(Engine& eng, const ShareTensor& x, const IterParams& params = {.iter_cnt = 16}) {
    if (params.iter_cnt < 1 || params.iter_cnt > 24) throw DomainError("exp needs iter_cnt in [1, 24]");
    double m = std::ldexp(1.0, params.iter_cnt);
    ShareTensor z = add_public(eng, mul_public(eng, x, 1.0 / m), 1.0);
    for (int i = 0; i < params.iter_cnt; ++i) z = mul_fixed(eng, z, z);
    return z;
}

// ln(x) for x/scale in [0.5, 1.5]: Mercator series around 1 evaluated by
// Horner, plus the public ln(scale).
inline ShareTensor log(Engine& eng, const ShareTensor& x, const IterParams& params = {.iter_cnt = 32}) {
    if (!(params.scale > 0.0)) throw DomainError("log needs a positive public scale");
    if (params.iter_cnt < 2) throw DomainError("log needs iter_cnt >= 2");
    ShareTensor u = add_public(eng, mul_public(eng, x, 1.0 / params.scale), -1.0);
    int terms = params.iter_cnt;
    double c = (terms % 2 == 0 ? -1.0 : 1.0) / double(terms);
    std::vector<double> init(x.size(), c);
    ShareTensor p = from_public(eng, init, x.shape);
    for (int j = terms - 1; j >= 1; --j) {
        double coeff = (j % 2 == 0 ? -1.0 : 1.0) / double(j);
        p = add_public(eng, mul_fixed(eng, u, p), coeff);
    }
    return add_public(eng, mul_fixed(eng, u, p), std::log(params.scale));
}

} // namespace quadshare

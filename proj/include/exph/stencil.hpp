#ifndef EXPH_STENCIL_HPP
#define EXPH_STENCIL_HPP

// Centered antisymmetric difference stencils on periodic axes, orders 2/4/6.
// Antisymmetry matters: it makes the discrete derivative exactly skew-adjoint
// under the plain node sum, which the energy-gradient assembly relies on.

#include "core.hpp"

namespace exph {

struct Stencil {
  int order = 2;
  int taps = 1;                      // one-sided reach
  std::array<double, 3> w{};        // weights for offsets +1..+taps (unit h)

  static Stencil make(int order) {
    Stencil s;
    s.order = order;
    switch (order) {
      case 2:
        s.taps = 1;
        s.w = {0.5, 0.0, 0.0};
        break;
      case 4:
        s.taps = 2;
        s.w = {2.0 / 3.0, -1.0 / 12.0, 0.0};
        break;
      case 6:
        s.taps = 3;
        s.w = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
        break;
      default:
        throw ConfigError("stencil_order: must be 2, 4, or 6, got " +
                          std::to_string(order));
    }
    return s;
  }

  // Fourier symbol factor: the discrete derivative maps exp(ikx) to
  // i*k*symbol(k*h)*exp(ikx). Used by tests to predict exact grid values.
  double symbol(double kh) const {
    double s = 0.0;
    for (int t = 1; t <= taps; ++t) s += 2.0 * w[t - 1] * std::sin(t * kh);
    return s == 0.0 && kh == 0.0 ? 1.0 : s / kh;
  }
};

// out(node,c) = sum_k w_k (in(node + k e_axis, c) - in(node - k e_axis, c))/h.
// On axes shorter than the full stencil the taps fold periodically; the
// operator stays antisymmetric, so axis-constant fields still map to zero
// exactly (the property the degenerate-axis fixtures rely on).
inline void axis_derivative(const Grid& g, const Stencil& st, int axis,
                            const double* in, int C, double* out) {
  const Index dim = g.dims[axis];
  const Index stride = g.strides[axis];
  const Index block = dim * stride;
  const Index lines = g.nodes / dim;
  const double inv_h = 1.0 / g.spacing[axis];
  parallel_for(lines, [&](Index lo, Index hi) {
    for (Index line = lo; line < hi; ++line) {
      const Index base = (line / stride) * block + (line % stride);
      for (Index j = 0; j < dim; ++j) {
        const Index node = base + j * stride;
        double* o = out + node * C;
        for (int c = 0; c < C; ++c) o[c] = 0.0;
        for (int t = 1; t <= st.taps; ++t) {
          const Index jp = (j + t) % dim;
          const Index jm = (j - t + dim) % dim;
          const double* p = in + (base + jp * stride) * C;
          const double* m = in + (base + jm * stride) * C;
          const double wk = st.w[t - 1] * inv_h;
          for (int c = 0; c < C; ++c) o[c] += wk * (p[c] - m[c]);
        }
      }
    }
  });
}

// out(node,c) += scale * D_axis(in)(node,c). Same operator as above in
// accumulate form, used to assemble divergence-shaped gradients.
inline void add_axis_derivative(const Grid& g, const Stencil& st, int axis,
                                const double* in, int C, double scale,
                                double* out) {
  const Index dim = g.dims[axis];
  const Index stride = g.strides[axis];
  const Index block = dim * stride;
  const Index lines = g.nodes / dim;
  const double inv_h = scale / g.spacing[axis];
  parallel_for(lines, [&](Index lo, Index hi) {
    for (Index line = lo; line < hi; ++line) {
      const Index base = (line / stride) * block + (line % stride);
      for (Index j = 0; j < dim; ++j) {
        const Index node = base + j * stride;
        double* o = out + node * C;
        for (int t = 1; t <= st.taps; ++t) {
          const Index jp = (j + t) % dim;
          const Index jm = (j - t + dim) % dim;
          const double* p = in + (base + jp * stride) * C;
          const double* m = in + (base + jm * stride) * C;
          const double wk = st.w[t - 1] * inv_h;
          for (int c = 0; c < C; ++c) o[c] += wk * (p[c] - m[c]);
        }
      }
    }
  });
}

// In-place 3-point low-pass per axis: (1,2,1)/4, symbol (1+cos kh)/2. SPD
// with a kernel exactly on the alternating (Nyquist) mode; the flow uses it
// to keep descent directions out of the subspace centered differences
// cannot see.
inline void smooth_axis(const Grid& g, int axis, int C, std::vector<double>& data,
                        std::vector<double>& scratch) {
  const Index dim = g.dims[axis];
  const Index stride = g.strides[axis];
  const Index block = dim * stride;
  const Index lines = g.nodes / dim;
  scratch.resize(data.size());
  parallel_for(lines, [&](Index lo, Index hi) {
    for (Index line = lo; line < hi; ++line) {
      const Index base = (line / stride) * block + (line % stride);
      for (Index j = 0; j < dim; ++j) {
        const Index node = base + j * stride;
        const double* mid = data.data() + node * C;
        const double* p = data.data() + (base + ((j + 1) % dim) * stride) * C;
        const double* m = data.data() + (base + ((j + dim - 1) % dim) * stride) * C;
        double* o = scratch.data() + node * C;
        for (int c = 0; c < C; ++c) o[c] = 0.25 * (m[c] + 2.0 * mid[c] + p[c]);
      }
    }
  });
  data.swap(scratch);
}

}  // namespace exph

#endif  // EXPH_STENCIL_HPP

#include "logcvx/operators.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace logcvx {

Section Section::zero(const TorusGrid& grid, int fiber_dim, int rank) {
  Section s;
  s.grid = grid;
  s.fiber_dim = fiber_dim;
  s.rank = rank;
  int count = 1;
  for (int r = 0; r < rank; ++r) count *= grid.dim;
  s.comps.assign(count, Mat::Zero(grid.size(), fiber_dim));
  return s;
}

Section Section::from(const TorusGrid& grid, Mat values) {
  if (values.rows() != grid.size()) throw DimensionError("Section::from: row count does not match grid");
  if (values.cols() < 1 || values.cols() > kMaxFiber)
    throw DimensionError("Section::from: fiber dimension must be in [1, " + std::to_string(kMaxFiber) + "]");
  Section s;
  s.grid = grid;
  s.fiber_dim = int(values.cols());
  s.rank = 0;
  s.comps.push_back(std::move(values));
  return s;
}

void Section::validate() const {
  int count = 1;
  for (int r = 0; r < rank; ++r) count *= grid.dim;
  if (int(comps.size()) != count)
    throw DimensionError("section of rank " + std::to_string(rank) + " must have " + std::to_string(count) +
                         " components");
  for (const Mat& c : comps) {
    if (c.rows() != grid.size() || c.cols() != fiber_dim) throw DimensionError("section component shape mismatch");
    if (!c.allFinite()) throw InvariantViolation("section contains non-finite values");
  }
}

namespace {

void require_compatible(const Section& a, const Section& b, const char* what) {
  require_same_grid(a.grid, b.grid, what);
  if (a.fiber_dim != b.fiber_dim || a.rank != b.rank || a.comps.size() != b.comps.size())
    throw DimensionError(std::string(what) + ": section shape mismatch");
}

void require_geometry(const Section& X, const GeometrySample& geo, const char* what) {
  require_same_grid(X.grid, geo.grid, what);
  if (X.fiber_dim != geo.fiber_dim)
    throw DimensionError(std::string(what) + ": fiber dimension " + std::to_string(X.fiber_dim) +
                         " does not match bundle fiber dimension " + std::to_string(geo.fiber_dim));
}

Mat derivative(const GeometrySample& geo, const Mat& f, int axis, Backend backend) {
  if (backend == Backend::finite_difference) return fd_derivative(geo.grid, f, axis);
  return geo.spectral->derivative(f, axis);
}

// rows of f multiplied on the right by A_p^T, i.e. the fiber action x -> A x
void add_connection(Mat& out, const Mat& f, const GeometrySample& geo, int axis) {
  if (geo.connection.empty()) return;
  for (Index p = 0; p < f.rows(); ++p) out.row(p) += f.row(p) * geo.connection[p][axis].transpose();
}

}  // namespace

Section& Section::operator+=(const Section& o) {
  require_compatible(*this, o, "section +");
  for (std::size_t i = 0; i < comps.size(); ++i) comps[i] += o.comps[i];
  return *this;
}

Section& Section::operator-=(const Section& o) {
  require_compatible(*this, o, "section -");
  for (std::size_t i = 0; i < comps.size(); ++i) comps[i] -= o.comps[i];
  return *this;
}

Section& Section::operator*=(double c) {
  for (Mat& m : comps) m *= c;
  return *this;
}

Section operator+(Section a, const Section& b) { return a += b; }
Section operator-(Section a, const Section& b) { return a -= b; }
Section operator*(double c, Section a) { return a *= c; }

Mat fd_derivative(const TorusGrid& grid, const Mat& f, int axis) {
  const int n = grid.n;
  const double inv2h = 1.0 / (2.0 * grid.spacing());
  Mat out(f.rows(), f.cols());
  for (Index k = 0; k < grid.size(); ++k) {
    const int ix = int(k % n);
    const int iy = grid.dim == 1 ? 0 : int(k / n);
    Index fwd, bwd;
    if (axis == 0) {
      fwd = grid.index((ix + 1) % n, iy);
      bwd = grid.index((ix + n - 1) % n, iy);
    } else {
      fwd = grid.index(ix, (iy + 1) % n);
      bwd = grid.index(ix, (iy + n - 1) % n);
    }
    out.row(k) = (f.row(fwd) - f.row(bwd)) * inv2h;
  }
  return out;
}

Section grad_hat(const Section& X, const GeometrySample& geo, Backend backend) {
  require_geometry(X, geo, "grad_hat");
  const int d = geo.dim();
  if (X.rank == 0) {
    Section out = Section::zero(X.grid, X.fiber_dim, 1);
    for (int i = 0; i < d; ++i) {
      out.comps[i] = derivative(geo, X.value(), i, backend);
      add_connection(out.comps[i], X.value(), geo, i);
    }
    return out;
  }
  if (X.rank == 1) {
    Section out = Section::zero(X.grid, X.fiber_dim, 2);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        Mat& c = out.comps[i + d * j];
        c = derivative(geo, X.comps[j], i, backend);
        add_connection(c, X.comps[j], geo, i);
        if (!geo.christoffel.empty()) {
          for (Index p = 0; p < c.rows(); ++p)
            for (int k = 0; k < d; ++k) c.row(p) -= geo.christoffel[p][k](i, j) * X.comps[k].row(p);
        }
      }
    }
    return out;
  }
  throw UnsupportedRank("grad_hat supports covariant rank 0 or 1, got " + std::to_string(X.rank));
}

Section elliptic_apply(const Section& X, const GeometrySample& geo, Backend backend) {
  require_geometry(X, geo, "elliptic_apply");
  if (X.rank != 0) throw UnsupportedRank("elliptic_apply expects a rank-0 section");
  const int d = geo.dim();
  const Section first = grad_hat(X, geo, backend);
  const Section second = grad_hat(first, geo, backend);
  Section out = Section::zero(X.grid, X.fiber_dim, 0);
  Mat& r = out.value();
  for (Index p = 0; p < r.rows(); ++p) {
    const SpaceMat& lam = geo.lambda[p];
    const SpaceVec& div = geo.div_lambda[p];
    for (int j = 0; j < d; ++j) {
      r.row(p) += div[j] * first.comps[j].row(p);
      for (int i = 0; i < d; ++i) r.row(p) += lam(i, j) * second.comps[i + d * j].row(p);
    }
  }
  return out;
}

Section l_backward(const Section& X, const Section& dtau_X, const GeometrySample& geo) {
  require_compatible(X, dtau_X, "l_backward");
  return dtau_X + elliptic_apply(X, geo);
}

Section l_forward(const Section& X, const Section& dtau_X, const GeometrySample& geo) {
  require_compatible(X, dtau_X, "l_forward");
  return dtau_X - elliptic_apply(X, geo);
}

Section laplace_power(const Section& X, int k, int max_power) {
  if (k < 1 || k > max_power)
    throw OutOfRange("laplace_power: k = " + std::to_string(k) + " outside [1, " + std::to_string(max_power) + "]");
  if (X.rank != 0) throw UnsupportedRank("laplace_power expects a rank-0 section");
  const Spectral sp(X.grid);
  return Section::from(X.grid, sp.laplacian_power(X.value(), k));
}

namespace {

double fiber_pair(const Eigen::Ref<const Eigen::RowVectorXd>& u, const Eigen::Ref<const Eigen::RowVectorXd>& v,
                  const GeometrySample& geo, Index p) {
  if (geo.gamma_identity) return u.dot(v);
  return (u * geo.gamma[p] * v.transpose())(0, 0);
}

}  // namespace

double inner(const Section& U, const Section& V, const GeometrySample& geo) {
  require_compatible(U, V, "inner");
  require_geometry(U, geo, "inner");
  const int d = geo.dim();
  double total = 0.0;
  const Index np = U.points();
  if (U.rank == 0) {
    for (Index p = 0; p < np; ++p) total += geo.density[p] * fiber_pair(U.value().row(p), V.value().row(p), geo, p);
  } else if (U.rank == 1) {
    for (Index p = 0; p < np; ++p) {
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          if (geo.g_inv[p](i, j) != 0.0) s += geo.g_inv[p](i, j) * fiber_pair(U.comps[i].row(p), V.comps[j].row(p), geo, p);
      total += geo.density[p] * s;
    }
  } else if (U.rank == 2) {
    for (Index p = 0; p < np; ++p) {
      const SpaceMat& gi = geo.g_inv[p];
      double s = 0.0;
      for (int a = 0; a < d * d; ++a)
        for (int b = 0; b < d * d; ++b) {
          const double w = gi(a % d, b % d) * gi(a / d, b / d);
          if (w != 0.0) s += w * fiber_pair(U.comps[a].row(p), V.comps[b].row(p), geo, p);
        }
      total += geo.density[p] * s;
    }
  } else {
    throw UnsupportedRank("inner supports rank <= 2");
  }
  return total * geo.cell();
}

double norm2(const Section& U, const GeometrySample& geo) { return inner(U, U, geo); }

double lambda_energy(const Section& grad, const GeometrySample& geo) {
  require_geometry(grad, geo, "lambda_energy");
  if (grad.rank != 1) throw UnsupportedRank("lambda_energy expects a rank-1 gradient");
  const int d = geo.dim();
  double total = 0.0;
  for (Index p = 0; p < grad.points(); ++p) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double l = geo.lambda[p](i, j);
        if (l != 0.0) s += l * fiber_pair(grad.comps[i].row(p), grad.comps[j].row(p), geo, p);
      }
    total += geo.density[p] * s;
  }
  return total * geo.cell();
}

double ibp_residual(const Section& X, const GeometrySample& geo) {
  const double F = lambda_energy(grad_hat(X, geo), geo);
  const double ell = inner(elliptic_apply(X, geo), X, geo);
  return std::abs(ell + F) / std::max(F, std::numeric_limits<double>::epsilon());
}

Vec pointwise_norm(const Section& U, const GeometrySample& geo) {
  require_geometry(U, geo, "pointwise_norm");
  const int d = geo.dim();
  Vec out(U.points());
  for (Index p = 0; p < U.points(); ++p) {
    double s = 0.0;
    if (U.rank == 0) {
      s = fiber_pair(U.value().row(p), U.value().row(p), geo, p);
    } else if (U.rank == 1) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s += geo.g_inv[p](i, j) * fiber_pair(U.comps[i].row(p), U.comps[j].row(p), geo, p);
    } else if (U.rank == 2) {
      const SpaceMat& gi = geo.g_inv[p];
      for (int a = 0; a < d * d; ++a)
        for (int b = 0; b < d * d; ++b)
          s += gi(a % d, b % d) * gi(a / d, b / d) * fiber_pair(U.comps[a].row(p), U.comps[b].row(p), geo, p);
    } else {
      throw UnsupportedRank("pointwise_norm supports rank <= 2");
    }
    out[p] = std::sqrt(std::max(s, 0.0));
  }
  return out;
}

}  // namespace logcvx

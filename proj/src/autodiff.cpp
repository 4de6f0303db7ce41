#include "ucad/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ucad {
namespace {

constexpr double kCosEps = 1e-8;   // added to each norm; zero vectors -> cos 0
constexpr double kLnEps = 1e-5;

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.shape_str() + " vs " + b.shape_str());
  }
}

// C[m,n] = A[m,k] * B[k,n]
std::vector<double> mm(const double* a, int64_t m, int64_t k, const double* b,
                       int64_t n) {
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

// C[m,n] = A[m,k] * B[n,k]^T
std::vector<double> mm_nt(const double* a, int64_t m, int64_t k, const double* b,
                          int64_t n) {
  std::vector<double> out(static_cast<size_t>(m * n));
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
  return out;
}

// C[m,n] = A[r,m]^T * B[r,n]
std::vector<double> mm_tn(const double* a, int64_t r, int64_t m, const double* b,
                          int64_t n) {
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  for (int64_t i = 0; i < r; ++i) {
    const double* arow = a + i * m;
    const double* brow = b + i * n;
    for (int64_t p = 0; p < m; ++p) {
      const double av = arow[p];
      double* orow = out.data() + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

}  // namespace

Tensor Var::value() const { return tape_->node(id_).value; }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::param(Tensor value) {
  if (!value.all_finite()) throw std::invalid_argument("param: non-finite value");
  nodes_.push_back(Node{"param", std::move(value), Tensor{}, true, {}, nullptr});
  return Var(this, static_cast<int32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw std::invalid_argument("constant: non-finite value");
  nodes_.push_back(Node{"constant", std::move(value), Tensor{}, false, {}, nullptr});
  return Var(this, static_cast<int32_t>(nodes_.size() - 1));
}

Var Tape::emit(const char* op, Tensor value, std::vector<Var> parents,
               std::function<void(Tape&, const Node&)> pull) {
  if (!value.all_finite()) {
    throw std::runtime_error(std::string(op) + ": non-finite result");
  }
  bool requires = false;
  std::vector<int32_t> parent_ids;
  parent_ids.reserve(parents.size());
  for (const Var& p : parents) {
    if (p.tape() != this) throw std::logic_error(std::string(op) + ": input from another tape");
    parent_ids.push_back(p.id());
    requires = requires || p.requires_grad();
  }
  nodes_.push_back(Node{op, std::move(value), Tensor{}, requires,
                        std::move(parent_ids), requires ? std::move(pull) : nullptr});
  return Var(this, static_cast<int32_t>(nodes_.size() - 1));
}

void Tape::accumulate(int32_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!g.all_finite()) {
    throw std::runtime_error(std::string(n.op) + ": non-finite gradient");
  }
  check_same_shape("accumulate", n.value, g);
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  std::vector<double> out(n.grad.data());
  const auto& add = g.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += add[i];
  n.grad = Tensor::from_data_unchecked(n.grad.shape(), std::move(out));
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::logic_error("backward: loss from another tape");
  const Node& last = nodes_[loss.id()];
  if (last.value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                last.value.shape_str());
  }
  accumulate(loss.id(), Tensor::full(last.value.shape(), 1.0));
  for (int32_t i = static_cast<int32_t>(nodes_.size()) - 1; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.pull && !n.grad.empty()) n.pull(*this, n);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor::zeros(n.value.shape());
  return n.grad;
}

Var add(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor av = a.value(), bv = b.value();
  check_same_shape("add", av, bv);
  std::vector<double> out(av.data());
  for (int64_t i = 0; i < av.size(); ++i) out[i] += bv.at(i);
  return t.emit("add", Tensor::from_data_unchecked(av.shape(), std::move(out)),
                {a, b}, [](Tape& t, const Tape::Node& n) {
                  t.accumulate(n.parents[0], n.grad);
                  t.accumulate(n.parents[1], n.grad);
                });
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor av = a.value(), bv = b.value();
  check_same_shape("sub", av, bv);
  std::vector<double> out(av.data());
  for (int64_t i = 0; i < av.size(); ++i) out[i] -= bv.at(i);
  return t.emit("sub", Tensor::from_data_unchecked(av.shape(), std::move(out)),
                {a, b}, [](Tape& t, const Tape::Node& n) {
                  t.accumulate(n.parents[0], n.grad);
                  std::vector<double> neg(n.grad.data());
                  for (double& v : neg) v = -v;
                  t.accumulate(n.parents[1],
                               Tensor::from_data_unchecked(n.grad.shape(), std::move(neg)));
                });
}

Var mul(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor av = a.value(), bv = b.value();
  check_same_shape("mul", av, bv);
  std::vector<double> out(av.data());
  for (int64_t i = 0; i < av.size(); ++i) out[i] *= bv.at(i);
  return t.emit("mul", Tensor::from_data_unchecked(av.shape(), std::move(out)),
                {a, b}, [](Tape& t, const Tape::Node& n) {
                  const Tensor av = t.node(n.parents[0]).value;
                  const Tensor bv = t.node(n.parents[1]).value;
                  const auto& g = n.grad.data();
                  std::vector<double> da(g.size()), db(g.size());
                  for (size_t i = 0; i < g.size(); ++i) {
                    da[i] = g[i] * bv.at(static_cast<int64_t>(i));
                    db[i] = g[i] * av.at(static_cast<int64_t>(i));
                  }
                  t.accumulate(n.parents[0],
                               Tensor::from_data_unchecked(av.shape(), std::move(da)));
                  t.accumulate(n.parents[1],
                               Tensor::from_data_unchecked(bv.shape(), std::move(db)));
                });
}

Var scale(Var a, double c) {
  Tape& t = *a.tape();
  const Tensor av = a.value();
  std::vector<double> out(av.data());
  for (double& v : out) v *= c;
  return t.emit("scale", Tensor::from_data_unchecked(av.shape(), std::move(out)),
                {a}, [c](Tape& t, const Tape::Node& n) {
                  std::vector<double> da(n.grad.data());
                  for (double& v : da) v *= c;
                  t.accumulate(n.parents[0],
                               Tensor::from_data_unchecked(n.grad.shape(), std::move(da)));
                });
}

Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor av = a.value(), bv = b.value();
  if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows()) {
    throw std::invalid_argument("matmul: incompatible shapes " + av.shape_str() +
                                " x " + bv.shape_str());
  }
  const int64_t m = av.rows(), k = av.cols(), n = bv.cols();
  return t.emit(
      "matmul", Tensor::from_data_unchecked({m, n}, mm(av.ptr(), m, k, bv.ptr(), n)),
      {a, b}, [m, k, n](Tape& t, const Tape::Node& node) {
        const Tensor av = t.node(node.parents[0]).value;
        const Tensor bv = t.node(node.parents[1]).value;
        if (t.node(node.parents[0]).requires_grad) {
          t.accumulate(node.parents[0],
                       Tensor::from_data_unchecked(
                           {m, k}, mm_nt(node.grad.ptr(), m, n, bv.ptr(), k)));
        }
        if (t.node(node.parents[1]).requires_grad) {
          t.accumulate(node.parents[1],
                       Tensor::from_data_unchecked(
                           {k, n}, mm_tn(av.ptr(), m, k, node.grad.ptr(), n)));
        }
      });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor av = a.value(), bv = b.value();
  if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.cols()) {
    throw std::invalid_argument("matmul_nt: incompatible shapes " + av.shape_str() +
                                " x " + bv.shape_str() + "^T");
  }
  const int64_t m = av.rows(), k = av.cols(), n = bv.rows();
  return t.emit(
      "matmul_nt",
      Tensor::from_data_unchecked({m, n}, mm_nt(av.ptr(), m, k, bv.ptr(), n)),
      {a, b}, [m, k, n](Tape& t, const Tape::Node& node) {
        const Tensor av = t.node(node.parents[0]).value;
        const Tensor bv = t.node(node.parents[1]).value;
        if (t.node(node.parents[0]).requires_grad) {
          t.accumulate(node.parents[0],
                       Tensor::from_data_unchecked(
                           {m, k}, mm(node.grad.ptr(), m, n, bv.ptr(), k)));
        }
        if (t.node(node.parents[1]).requires_grad) {
          t.accumulate(node.parents[1],
                       Tensor::from_data_unchecked(
                           {n, k}, mm_tn(node.grad.ptr(), m, n, av.ptr(), k)));
        }
      });
}

Var broadcast_add_row(Var x, Var v) {
  Tape& t = *x.tape();
  const Tensor xv = x.value(), vv = v.value();
  if (xv.ndim() != 2 || vv.ndim() != 1 || vv.shape()[0] != xv.cols()) {
    throw std::invalid_argument("broadcast_add_row: shapes " + xv.shape_str() +
                                " + " + vv.shape_str());
  }
  const int64_t n = xv.rows(), c = xv.cols();
  std::vector<double> out(xv.data());
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < c; ++j) out[i * c + j] += vv.at(j);
  }
  return t.emit("broadcast_add_row",
                Tensor::from_data_unchecked(xv.shape(), std::move(out)), {x, v},
                [n, c](Tape& t, const Tape::Node& node) {
                  t.accumulate(node.parents[0], node.grad);
                  if (t.node(node.parents[1]).requires_grad) {
                    std::vector<double> dv(static_cast<size_t>(c), 0.0);
                    const auto& g = node.grad.data();
                    for (int64_t i = 0; i < n; ++i) {
                      for (int64_t j = 0; j < c; ++j) dv[j] += g[i * c + j];
                    }
                    t.accumulate(node.parents[1],
                                 Tensor::from_data_unchecked({c}, std::move(dv)));
                  }
                });
}

Var softmax_rows(Var x) {
  Tape& t = *x.tape();
  const Tensor xv = x.value();
  if (xv.ndim() != 2) throw std::invalid_argument("softmax_rows: need matrix");
  const int64_t n = xv.rows(), c = xv.cols();
  std::vector<double> out(static_cast<size_t>(n * c));
  for (int64_t i = 0; i < n; ++i) {
    const double* row = xv.ptr() + i * c;
    double mx = row[0];
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp(row[j] - mx);
      denom += out[i * c + j];
    }
    for (int64_t j = 0; j < c; ++j) out[i * c + j] /= denom;
  }
  return t.emit("softmax_rows",
                Tensor::from_data_unchecked(xv.shape(), std::move(out)), {x},
                [n, c](Tape& t, const Tape::Node& node) {
                  // dx = y * (g - <g, y>) per row
                  const auto& y = node.value.data();
                  const auto& g = node.grad.data();
                  std::vector<double> dx(y.size());
                  for (int64_t i = 0; i < n; ++i) {
                    double dot = 0.0;
                    for (int64_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
                    for (int64_t j = 0; j < c; ++j) {
                      dx[i * c + j] = y[i * c + j] * (g[i * c + j] - dot);
                    }
                  }
                  t.accumulate(node.parents[0],
                               Tensor::from_data_unchecked(node.value.shape(), std::move(dx)));
                });
}

Var layer_norm_rows(Var x, Var gain, Var bias) {
  Tape& t = *x.tape();
  const Tensor xv = x.value(), gv = gain.value(), bv = bias.value();
  if (xv.ndim() != 2 || gv.ndim() != 1 || bv.ndim() != 1 ||
      gv.shape()[0] != xv.cols() || bv.shape()[0] != xv.cols()) {
    throw std::invalid_argument("layer_norm_rows: shapes " + xv.shape_str());
  }
  const int64_t n = xv.rows(), c = xv.cols();
  std::vector<double> out(static_cast<size_t>(n * c));
  std::vector<double> inv_std(static_cast<size_t>(n));
  std::vector<double> xhat(static_cast<size_t>(n * c));
  for (int64_t i = 0; i < n; ++i) {
    const double* row = xv.ptr() + i * c;
    double mean = 0.0;
    for (int64_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std[i] = is;
    for (int64_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mean) * is;
      out[i * c + j] = xhat[i * c + j] * gv.at(j) + bv.at(j);
    }
  }
  return t.emit(
      "layer_norm_rows", Tensor::from_data_unchecked(xv.shape(), std::move(out)),
      {x, gain, bias},
      [n, c, inv_std = std::move(inv_std), xhat = std::move(xhat)](
          Tape& t, const Tape::Node& node) {
        const Tensor gv = t.node(node.parents[1]).value;
        const auto& g = node.grad.data();
        if (t.node(node.parents[0]).requires_grad) {
          std::vector<double> dx(g.size());
          for (int64_t i = 0; i < n; ++i) {
            double mean_gh = 0.0, mean_ghx = 0.0;
            for (int64_t j = 0; j < c; ++j) {
              const double gh = g[i * c + j] * gv.at(j);
              mean_gh += gh;
              mean_ghx += gh * xhat[i * c + j];
            }
            mean_gh /= static_cast<double>(c);
            mean_ghx /= static_cast<double>(c);
            for (int64_t j = 0; j < c; ++j) {
              const double gh = g[i * c + j] * gv.at(j);
              dx[i * c + j] = inv_std[i] * (gh - mean_gh - xhat[i * c + j] * mean_ghx);
            }
          }
          t.accumulate(node.parents[0],
                       Tensor::from_data_unchecked({n, c}, std::move(dx)));
        }
        if (t.node(node.parents[1]).requires_grad) {
          std::vector<double> dg(static_cast<size_t>(c), 0.0);
          for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < c; ++j) dg[j] += g[i * c + j] * xhat[i * c + j];
          }
          t.accumulate(node.parents[1], Tensor::from_data_unchecked({c}, std::move(dg)));
        }
        if (t.node(node.parents[2]).requires_grad) {
          std::vector<double> db(static_cast<size_t>(c), 0.0);
          for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < c; ++j) db[j] += g[i * c + j];
          }
          t.accumulate(node.parents[2], Tensor::from_data_unchecked({c}, std::move(db)));
        }
      });
}

Var gelu(Var x) {
  Tape& t = *x.tape();
  const Tensor xv = x.value();
  std::vector<double> out(xv.data());
  for (double& v : out) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  return t.emit("gelu", Tensor::from_data_unchecked(xv.shape(), std::move(out)),
                {x}, [](Tape& t, const Tape::Node& node) {
                  const Tensor xv = t.node(node.parents[0]).value;
                  const auto& g = node.grad.data();
                  std::vector<double> dx(g.size());
                  constexpr double kInvSqrt2Pi = 0.3989422804014327;
                  for (size_t i = 0; i < g.size(); ++i) {
                    const double v = xv.at(static_cast<int64_t>(i));
                    const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
                    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                    dx[i] = g[i] * (cdf + v * pdf);
                  }
                  t.accumulate(node.parents[0],
                               Tensor::from_data_unchecked(xv.shape(), std::move(dx)));
                });
}

Var tanh_act(Var x) {
  Tape& t = *x.tape();
  const Tensor xv = x.value();
  std::vector<double> out(xv.data());
  for (double& v : out) v = std::tanh(v);
  return t.emit("tanh", Tensor::from_data_unchecked(xv.shape(), std::move(out)),
                {x}, [](Tape& t, const Tape::Node& node) {
                  const auto& y = node.value.data();
                  const auto& g = node.grad.data();
                  std::vector<double> dx(g.size());
                  for (size_t i = 0; i < g.size(); ++i) dx[i] = g[i] * (1.0 - y[i] * y[i]);
                  t.accumulate(node.parents[0],
                               Tensor::from_data_unchecked(node.value.shape(), std::move(dx)));
                });
}

Var sum(Var x) {
  Tape& t = *x.tape();
  const Tensor xv = x.value();
  double acc = 0.0;
  for (double v : xv.data()) acc += v;
  return t.emit("sum", Tensor::from_data_unchecked({1}, {acc}), {x},
                [](Tape& t, const Tape::Node& node) {
                  const Tensor xv = t.node(node.parents[0]).value;
                  t.accumulate(node.parents[0],
                               Tensor::full(xv.shape(), node.grad.at(0)));
                });
}

Var row_normalize(Var x) {
  Tape& t = *x.tape();
  const Tensor xv = x.value();
  if (xv.ndim() != 2) throw std::invalid_argument("row_normalize: need matrix");
  const int64_t n = xv.rows(), c = xv.cols();
  std::vector<double> out(static_cast<size_t>(n * c));
  std::vector<double> norms(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double* row = xv.ptr() + i * c;
    double sq = 0.0;
    for (int64_t j = 0; j < c; ++j) sq += row[j] * row[j];
    norms[i] = std::sqrt(sq);
    const double s = norms[i] + kCosEps;
    for (int64_t j = 0; j < c; ++j) out[i * c + j] = row[j] / s;
  }
  return t.emit(
      "row_normalize", Tensor::from_data_unchecked(xv.shape(), std::move(out)),
      {x}, [n, c, norms = std::move(norms)](Tape& t, const Tape::Node& node) {
        const Tensor xv = t.node(node.parents[0]).value;
        const auto& g = node.grad.data();
        std::vector<double> dx(g.size());
        for (int64_t i = 0; i < n; ++i) {
          const double* row = xv.ptr() + i * c;
          const double s = norms[i] + kCosEps;
          double dot = 0.0;
          for (int64_t j = 0; j < c; ++j) dot += g[i * c + j] * row[j];
          const double corr = norms[i] > 0.0 ? dot / (s * s * norms[i]) : 0.0;
          for (int64_t j = 0; j < c; ++j) {
            dx[i * c + j] = g[i * c + j] / s - row[j] * corr;
          }
        }
        t.accumulate(node.parents[0],
                     Tensor::from_data_unchecked(xv.shape(), std::move(dx)));
      });
}

Var cosine_similarity(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor av = a.value(), bv = b.value();
  if (av.ndim() != 1 || bv.ndim() != 1 || av.size() != bv.size()) {
    throw std::invalid_argument("cosine_similarity: need equal-length vectors");
  }
  const int64_t c = av.size();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (int64_t i = 0; i < c; ++i) {
    dot += av.at(i) * bv.at(i);
    na2 += av.at(i) * av.at(i);
    nb2 += bv.at(i) * bv.at(i);
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double sa = na + kCosEps, sb = nb + kCosEps;
  const double y = dot / (sa * sb);
  return t.emit(
      "cosine_similarity", Tensor::from_data_unchecked({1}, {y}), {a, b},
      [c, dot, na, nb, sa, sb](Tape& t, const Tape::Node& node) {
        const Tensor av = t.node(node.parents[0]).value;
        const Tensor bv = t.node(node.parents[1]).value;
        const double g = node.grad.at(0);
        std::vector<double> da(static_cast<size_t>(c)), db(static_cast<size_t>(c));
        const double ca = na > 0.0 ? dot / (sa * sa * sb * na) : 0.0;
        const double cb = nb > 0.0 ? dot / (sa * sb * sb * nb) : 0.0;
        for (int64_t i = 0; i < c; ++i) {
          da[i] = g * (bv.at(i) / (sa * sb) - av.at(i) * ca);
          db[i] = g * (av.at(i) / (sa * sb) - bv.at(i) * cb);
        }
        t.accumulate(node.parents[0], Tensor::from_data_unchecked({c}, std::move(da)));
        t.accumulate(node.parents[1], Tensor::from_data_unchecked({c}, std::move(db)));
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts[0].tape();
  const int64_t n = parts[0].value().rows();
  int64_t total = 0;
  std::vector<int64_t> widths;
  for (const Var& p : parts) {
    const Tensor v = p.value();
    if (v.ndim() != 2 || v.rows() != n) {
      throw std::invalid_argument("concat_cols: row mismatch");
    }
    widths.push_back(v.cols());
    total += v.cols();
  }
  std::vector<double> out(static_cast<size_t>(n * total));
  int64_t off = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const Tensor v = parts[p].value();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < widths[p]; ++j) {
        out[i * total + off + j] = v.at(i, j);
      }
    }
    off += widths[p];
  }
  return t.emit("concat_cols", Tensor::from_data_unchecked({n, total}, std::move(out)),
                parts, [n, total, widths](Tape& t, const Tape::Node& node) {
                  const auto& g = node.grad.data();
                  int64_t off = 0;
                  for (size_t p = 0; p < node.parents.size(); ++p) {
                    if (t.node(node.parents[p]).requires_grad) {
                      std::vector<double> dp(static_cast<size_t>(n * widths[p]));
                      for (int64_t i = 0; i < n; ++i) {
                        for (int64_t j = 0; j < widths[p]; ++j) {
                          dp[i * widths[p] + j] = g[i * total + off + j];
                        }
                      }
                      t.accumulate(node.parents[p],
                                   Tensor::from_data_unchecked({n, widths[p]}, std::move(dp)));
                    }
                    off += widths[p];
                  }
                });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = *parts[0].tape();
  const int64_t c = parts[0].value().cols();
  int64_t total = 0;
  std::vector<int64_t> heights;
  for (const Var& p : parts) {
    const Tensor v = p.value();
    if (v.ndim() != 2 || v.cols() != c) {
      throw std::invalid_argument("concat_rows: column mismatch");
    }
    heights.push_back(v.rows());
    total += v.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(total * c));
  for (const Var& p : parts) {
    const auto& d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return t.emit("concat_rows", Tensor::from_data_unchecked({total, c}, std::move(out)),
                parts, [c, heights](Tape& t, const Tape::Node& node) {
                  const auto& g = node.grad.data();
                  int64_t off = 0;
                  for (size_t p = 0; p < node.parents.size(); ++p) {
                    if (t.node(node.parents[p]).requires_grad) {
                      std::vector<double> dp(g.begin() + off * c,
                                             g.begin() + (off + heights[p]) * c);
                      t.accumulate(node.parents[p],
                                   Tensor::from_data_unchecked({heights[p], c}, std::move(dp)));
                    }
                    off += heights[p];
                  }
                });
}

Var slice_rows(Var x, int64_t start, int64_t count) {
  Tape& t = *x.tape();
  const Tensor xv = x.value();
  if (xv.ndim() != 2 || start < 0 || count < 0 || start + count > xv.rows()) {
    throw std::invalid_argument("slice_rows: range out of bounds");
  }
  const int64_t c = xv.cols(), n = xv.rows();
  std::vector<double> out(xv.data().begin() + start * c,
                          xv.data().begin() + (start + count) * c);
  return t.emit("slice_rows", Tensor::from_data_unchecked({count, c}, std::move(out)),
                {x}, [start, count, n, c](Tape& t, const Tape::Node& node) {
                  std::vector<double> dx(static_cast<size_t>(n * c), 0.0);
                  const auto& g = node.grad.data();
                  std::copy(g.begin(), g.end(), dx.begin() + start * c);
                  t.accumulate(node.parents[0],
                               Tensor::from_data_unchecked({n, c}, std::move(dx)));
                });
}

std::vector<Tensor> grad(const LossFn& loss_fn, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.param(p));
  Var loss = loss_fn(tape, vars);
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(vars.size());
  for (const Var& v : vars) grads.push_back(tape.grad(v));
  return grads;
}

double eval_loss(const LossFn& loss_fn, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  Var loss = loss_fn(tape, vars);
  const Tensor v = loss.value();
  if (v.size() != 1) {
    throw std::invalid_argument("eval_loss: loss must be scalar, got " + v.shape_str());
  }
  return v.at(0);
}

std::vector<Tensor> finite_diff_grad(const LossFn& loss_fn,
                                     const std::vector<Tensor>& params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (size_t pi = 0; pi < params.size(); ++pi) {
    std::vector<double> g(static_cast<size_t>(params[pi].size()));
    for (int64_t j = 0; j < params[pi].size(); ++j) {
      std::vector<Tensor> plus = params, minus = params;
      std::vector<double> dp(params[pi].data()), dm(params[pi].data());
      dp[j] += h;
      dm[j] -= h;
      plus[pi] = Tensor::from_data_unchecked(params[pi].shape(), std::move(dp));
      minus[pi] = Tensor::from_data_unchecked(params[pi].shape(), std::move(dm));
      g[j] = (eval_loss(loss_fn, plus) - eval_loss(loss_fn, minus)) / (2.0 * h);
    }
    grads.push_back(Tensor::from_data_unchecked(params[pi].shape(), std::move(g)));
  }
  return grads;
}

}  // namespace ucad

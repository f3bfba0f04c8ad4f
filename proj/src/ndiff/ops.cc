#include "canseg/ndiff/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "canseg/errors.h"

namespace canseg::ndiff {

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                   " and " + shape_string(b.shape()));
}

void require_rank1(const char* op, const Tensor& a) {
  if (a.rank() != 1)
    throw ShapeError(std::string(op) + ": expected a vector, got shape " +
                     shape_string(a.shape()));
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw InvalidArgument("operation on an empty Var");
  return *a.tape();
}

template <typename F>
Var unary_elementwise(Var a, F forward, double (*derivative)(double in, double out)) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (size_t i = 0; i < x.size(); ++i) out[i] = forward(x[i]);
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, derivative](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(ia);
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || A.cols() != B.rows()) shape_mismatch("matmul", A, B);
  Tensor out = B.rank() == 1 ? Tensor({A.rows()}) : Tensor({A.rows(), B.cols()});
  out.matrix().noalias() = A.matrix() * B.matrix();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia))
      t.grad(ia).matrix().noalias() += g.matrix() * t.value(ib).matrix().transpose();
    if (t.requires_grad(ib))
      t.grad(ib).matrix().noalias() += t.value(ia).matrix().transpose() * g.matrix();
  });
}

Var affine(Var w, Var x, Var b) {
  Tape& t = tape_of(w);
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  const Tensor& B = b.value();
  if (W.rank() != 2 || X.rank() != 1 || W.cols() != X.rows()) shape_mismatch("affine", W, X);
  if (B.rank() != 1 || B.rows() != W.rows()) shape_mismatch("affine", W, B);
  Tensor out({W.rows()});
  out.flat().noalias() = W.matrix() * X.flat() + B.flat();
  const int iw = w.id(), ix = x.id(), ib = b.id();
  return t.push(std::move(out), {w, x, b}, [iw, ix, ib](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(iw))
      t.grad(iw).matrix().noalias() += g.flat() * t.value(ix).flat().transpose();
    if (t.requires_grad(ix))
      t.grad(ix).flat().noalias() += t.value(iw).matrix().transpose() * g.flat();
    if (t.requires_grad(ib)) t.grad(ib).flat() += g.flat();
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const int ia = a.id(), ib = b.id();
  if (A.same_shape(B)) {
    Tensor out = A;
    out.flat() += B.flat();
    return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(ia)) t.grad(ia).flat() += g.flat();
      if (t.requires_grad(ib)) t.grad(ib).flat() += g.flat();
    });
  }
  if (A.rank() == 2 && B.rank() == 1 && A.cols() == B.rows()) {
    Tensor out = A;
    out.matrix().rowwise() += B.flat().transpose();
    return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
      const Tensor& g = t.grad(self);
      if (t.requires_grad(ia)) t.grad(ia).flat() += g.flat();
      if (t.requires_grad(ib))
        t.grad(ib).flat() += g.matrix().colwise().sum().transpose();
    });
  }
  shape_mismatch("add", A, B);
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_mismatch("sub", A, B);
  Tensor out = A;
  out.flat() -= B.flat();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).flat() += g.flat();
    if (t.requires_grad(ib)) t.grad(ib).flat() -= g.flat();
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_mismatch("mul", A, B);
  Tensor out = A;
  out.flat().array() *= B.flat().array();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia))
      t.grad(ia).flat().array() += g.flat().array() * t.value(ib).flat().array();
    if (t.requires_grad(ib))
      t.grad(ib).flat().array() += g.flat().array() * t.value(ia).flat().array();
  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  out.flat() *= factor;
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, factor](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia).flat() += factor * t.grad(self).flat();
  });
}

Var scale_by(Var a, Var s) {
  Tape& t = tape_of(a);
  const Tensor& S = s.value();
  if (S.size() != 1) shape_mismatch("scale_by", a.value(), S);
  Tensor out = a.value();
  out.flat() *= S[0];
  const int ia = a.id(), is = s.id();
  return t.push(std::move(out), {a, s}, [ia, is](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia).flat() += t.value(is)[0] * g.flat();
    if (t.requires_grad(is)) t.grad(is)[0] += g.flat().dot(t.value(ia).flat());
  });
}

Var one_minus(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.values()) v = 1.0 - v;
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia).flat() -= t.grad(self).flat();
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw InvalidArgument("add_n of no terms");
  Tape& t = tape_of(terms.front());
  Tensor out = terms.front().value();
  for (size_t i = 1; i < terms.size(); ++i) {
    if (!terms[i].value().same_shape(out)) shape_mismatch("add_n", out, terms[i].value());
    out.flat() += terms[i].value().flat();
  }
  std::vector<int> ids;
  ids.reserve(terms.size());
  for (const Var& v : terms) ids.push_back(v.id());
  return t.push(std::move(out), terms, [ids = std::move(ids)](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (int id : ids)
      if (t.requires_grad(id)) t.grad(id).flat() += g.flat();
  });
}

Var tanh(Var a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary_elementwise(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var log(Var a) {
  return unary_elementwise(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("concat of no parts");
  Tape& t = tape_of(parts.front());
  int total = 0;
  for (const Var& p : parts) {
    require_rank1("concat", p.value());
    total += p.value().rows();
  }
  Tensor out({total});
  std::vector<int> ids, offsets;
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data(), v.data() + v.size(), out.data() + off);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.rows();
  }
  return t.push(std::move(out), parts,
                [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, int self) {
                  const Tensor& g = t.grad(self);
                  for (size_t k = 0; k < ids.size(); ++k) {
                    if (!t.requires_grad(ids[k])) continue;
                    Tensor& gp = t.grad(ids[k]);
                    for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
                  }
                });
}

Var slice(Var a, int start, int length) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  require_rank1("slice", A);
  if (start < 0 || length <= 0 || start + length > A.rows()) {
    throw ShapeError("slice [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") of shape " +
                     shape_string(A.shape()));
  }
  Tensor out({length});
  std::copy(A.data() + start, A.data() + start + length, out.data());
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, start](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (size_t i = 0; i < g.size(); ++i) ga[start + i] += g[i];
  });
}

Var row(Var a, int index) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  if (A.rank() != 2 || index < 0 || index >= A.rows()) {
    throw ShapeError("row " + std::to_string(index) + " of shape " + shape_string(A.shape()));
  }
  const int cols = A.cols();
  Tensor out({cols});
  std::copy(A.data() + static_cast<size_t>(index) * cols,
            A.data() + static_cast<size_t>(index + 1) * cols, out.data());
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, index, cols](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    double* dst = t.grad(ia).data() + static_cast<size_t>(index) * cols;
    for (int i = 0; i < cols; ++i) dst[i] += g[static_cast<size_t>(i)];
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw InvalidArgument("stack_rows of no rows");
  Tape& t = tape_of(rows.front());
  const int cols = rows.front().value().rows();
  for (const Var& r : rows) {
    require_rank1("stack_rows", r.value());
    if (r.value().rows() != cols) shape_mismatch("stack_rows", rows.front().value(), r.value());
  }
  Tensor out({static_cast<int>(rows.size()), cols});
  std::vector<int> ids;
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].value().data(), rows[i].value().data() + cols,
              out.data() + i * static_cast<size_t>(cols));
    ids.push_back(rows[i].id());
  }
  return t.push(std::move(out), rows, [ids = std::move(ids), cols](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!t.requires_grad(ids[i])) continue;
      Tensor& gr = t.grad(ids[i]);
      for (int j = 0; j < cols; ++j) gr[static_cast<size_t>(j)] += g[i * cols + j];
    }
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  if (A.rank() != 2) throw ShapeError("transpose of shape " + shape_string(A.shape()));
  Tensor out({A.cols(), A.rows()});
  out.matrix() = A.matrix().transpose();
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia).matrix() += t.grad(self).matrix().transpose();
  });
}

namespace {

Var softmax_impl(Var a, const std::vector<bool>* mask) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  require_rank1("softmax", A);
  if (mask && mask->size() != A.size())
    throw ShapeError("softmax mask of length " + std::to_string(mask->size()) +
                     " for shape " + shape_string(A.shape()));
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < A.size(); ++i)
    if (!mask || (*mask)[i]) mx = std::max(mx, A[i]);
  if (!std::isfinite(mx)) throw InvalidArgument("softmax with every entry masked");
  Tensor out(A.shape());
  double z = 0;
  for (size_t i = 0; i < A.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    out[i] = std::exp(A[i] - mx);
    z += out[i];
  }
  out.flat() /= z;
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const double dot = g.flat().dot(y.flat());
    Tensor& ga = t.grad(ia);
    // Masked entries have y == 0 and receive no gradient.
    for (size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - dot);
  });
}

}  // namespace

Var softmax(Var a) { return softmax_impl(a, nullptr); }
Var softmax(Var a, const std::vector<bool>& mask) { return softmax_impl(a, &mask); }

Var logsumexp(Var a, std::span<const int> indices) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  require_rank1("logsumexp", A);
  if (indices.empty()) throw InvalidArgument("logsumexp over an empty index set");
  double mx = -std::numeric_limits<double>::infinity();
  for (int i : indices) {
    if (i < 0 || i >= A.rows()) throw ShapeError("logsumexp index out of range");
    mx = std::max(mx, A[static_cast<size_t>(i)]);
  }
  double z = 0;
  for (int i : indices) z += std::exp(A[static_cast<size_t>(i)] - mx);
  Tensor out = Tensor::scalar(mx + std::log(z));
  std::vector<int> idx(indices.begin(), indices.end());
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const double g = t.grad(self)[0];
    const double lse = t.value(self)[0];
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad(ia);
    for (int i : idx) ga[static_cast<size_t>(i)] += g * std::exp(x[static_cast<size_t>(i)] - lse);
  });
}

Var pick(Var a, int index) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  if (index < 0 || static_cast<size_t>(index) >= A.size())
    throw ShapeError("pick " + std::to_string(index) + " of shape " + shape_string(A.shape()));
  const int ia = a.id();
  return t.push(Tensor::scalar(A[static_cast<size_t>(index)]), {a},
                [ia, index](Tape& t, int self) {
                  if (t.requires_grad(ia)) t.grad(ia)[static_cast<size_t>(index)] += t.grad(self)[0];
                });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(Tensor::scalar(a.value().flat().sum()), {a}, [ia](Tape& t, int self) {
    if (t.requires_grad(ia)) t.grad(ia).flat().array() += t.grad(self)[0];
  });
}

Var cross_entropy(Var probs, int target, double floor) {
  Tape& t = tape_of(probs);
  const Tensor& P = probs.value();
  require_rank1("cross_entropy", P);
  if (target < 0 || target >= P.rows())
    throw ShapeError("cross_entropy target " + std::to_string(target) + " for shape " +
                     shape_string(P.shape()));
  const double p = P[static_cast<size_t>(target)];
  const bool floored = p < floor;
  const int ip = probs.id();
  return t.push(Tensor::scalar(-std::log(floored ? floor : p)), {probs},
                [ip, target, floored](Tape& t, int self) {
                  if (floored || !t.requires_grad(ip)) return;
                  const double p = t.value(ip)[static_cast<size_t>(target)];
                  t.grad(ip)[static_cast<size_t>(target)] -= t.grad(self)[0] / p;
                });
}

Var scatter_add(Var a, std::span<const int> indices, int size) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  require_rank1("scatter_add", A);
  if (indices.size() != A.size())
    throw ShapeError("scatter_add: " + std::to_string(indices.size()) + " indices for shape " +
                     shape_string(A.shape()));
  Tensor out({size});
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= size) throw ShapeError("scatter_add index out of range");
    out[static_cast<size_t>(indices[i])] += A[i];
  }
  std::vector<int> idx(indices.begin(), indices.end());
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (size_t i = 0; i < idx.size(); ++i) ga[i] += g[static_cast<size_t>(idx[i])];
  });
}

Var dropout_mask_apply(Var a, const Tensor& mask) {
  Tape& t = tape_of(a);
  const Tensor& A = a.value();
  if (!A.same_shape(mask)) shape_mismatch("dropout_mask_apply", A, mask);
  Tensor out = A;
  out.flat().array() *= mask.flat().array();
  const int ia = a.id();
  return t.push(std::move(out), {a}, [ia, mask](Tape& t, int self) {
    if (t.requires_grad(ia))
      t.grad(ia).flat().array() += t.grad(self).flat().array() * mask.flat().array();
  });
}

Tensor dropout_mask(const Shape& shape, double drop_probability, Rng& rng) {
  if (drop_probability < 0 || drop_probability >= 1)
    throw InvalidArgument("drop probability must be in [0, 1)");
  Tensor mask(shape);
  const double keep = 1.0 - drop_probability;
  for (double& v : mask.values()) v = rng.uniform01() < keep ? 1.0 / keep : 0.0;
  return mask;
}

Var dropout(Var a, double drop_probability, Rng* rng) {
  if (drop_probability <= 0 || rng == nullptr) return a;
  return dropout_mask_apply(a, dropout_mask(a.value().shape(), drop_probability, *rng));
}

}  // namespace canseg::ndiff

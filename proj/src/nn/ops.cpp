#include "tessera/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tessera/error.hpp"

namespace tessera::nn {

namespace {

Graph& graph_of(Expr e) {
  require(e.graph != nullptr, "expression without a graph");
  return *e.graph;
}

void same_graph(Expr a, Expr b) { require(a.graph == b.graph, "expressions from different graphs"); }

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

template <typename F, typename D>
Expr unary(Expr x, F f, D dfdx_from_y) {
  Graph& g = graph_of(x);
  const auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const int xi = x.id;
  return g.node(std::move(out), x.rows(), x.cols(), [xi, dfdx_from_y](Graph& gr, int self) {
    const auto y = gr.value(self);
    const auto gy = gr.grad(self);
    const auto xv2 = gr.value(xi);
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += gy[i] * dfdx_from_y(xv2[i], y[i]);
  });
}

}  // namespace

Expr matvec(Expr w, Expr x) {
  same_graph(w, x);
  Graph& g = graph_of(w);
  const std::size_t r = w.rows();
  const std::size_t c = w.cols();
  require(x.size() == c, "matvec: dimension mismatch (" + std::to_string(c) + " vs " +
                             std::to_string(x.size()) + ")");
  const auto wv = w.value();
  const auto xv = x.value();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = wv.data() + i * c;
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += row[j] * xv[j];
    out[i] = s;
  }
  const int wi = w.id, xi = x.id;
  return g.node(std::move(out), r, 1, [wi, xi, r, c](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    const auto wv2 = gr.value(wi);
    const auto xv2 = gr.value(xi);
    auto gw = gr.grad(wi);
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < r; ++i) {
      const double gi = gy[i];
      if (gi == 0.0) continue;
      const double* row = wv2.data() + i * c;
      double* grow = gw.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) {
        grow[j] += gi * xv2[j];
        gx[j] += gi * row[j];
      }
    }
  });
}

Expr affine(Expr w, Expr x, Expr b) { return add(matvec(w, x), b); }

Expr add(Expr a, Expr b) {
  same_graph(a, b);
  require(a.size() == b.size(), "add: size mismatch");
  const auto av = a.value();
  const auto bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  const int ai = a.id, bi = b.id;
  return graph_of(a).node(std::move(out), a.rows(), a.cols(), [ai, bi](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    auto ga = gr.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    auto gb = gr.grad(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
  });
}

Expr sub(Expr a, Expr b) {
  same_graph(a, b);
  require(a.size() == b.size(), "sub: size mismatch");
  const auto av = a.value();
  const auto bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  const int ai = a.id, bi = b.id;
  return graph_of(a).node(std::move(out), a.rows(), a.cols(), [ai, bi](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    auto ga = gr.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    auto gb = gr.grad(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
  });
}

Expr cmul(Expr a, Expr b) {
  same_graph(a, b);
  require(a.size() == b.size(), "cmul: size mismatch");
  const auto av = a.value();
  const auto bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const int ai = a.id, bi = b.id;
  return graph_of(a).node(std::move(out), a.rows(), a.cols(), [ai, bi](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    const auto av2 = gr.value(ai);
    const auto bv2 = gr.value(bi);
    auto ga = gr.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv2[i];
    auto gb = gr.grad(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av2[i];
  });
}

Expr scale(Expr a, double c) {
  const auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  const int ai = a.id;
  return graph_of(a).node(std::move(out), a.rows(), a.cols(), [ai, c](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    auto ga = gr.grad(ai);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * c;
  });
}

Expr sum(const std::vector<Expr>& xs) {
  require(!xs.empty(), "sum of no expressions");
  Graph& g = graph_of(xs[0]);
  const std::size_t n = xs[0].size();
  std::vector<double> out(n, 0.0);
  std::vector<int> ids;
  ids.reserve(xs.size());
  for (const Expr& x : xs) {
    same_graph(x, xs[0]);
    require(x.size() == n, "sum: size mismatch");
    const auto v = x.value();
    for (std::size_t i = 0; i < n; ++i) out[i] += v[i];
    ids.push_back(x.id);
  }
  return g.node(std::move(out), xs[0].rows(), xs[0].cols(), [ids](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    for (int id : ids) {
      auto gx = gr.grad(id);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
  });
}

Expr tanh(Expr x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Expr sigmoid(Expr x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Expr relu(Expr x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Expr concat(const std::vector<Expr>& xs) {
  require(!xs.empty(), "concat of no expressions");
  Graph& g = graph_of(xs[0]);
  std::vector<double> out;
  std::vector<std::pair<int, std::size_t>> parts;
  for (const Expr& x : xs) {
    same_graph(x, xs[0]);
    const auto v = x.value();
    parts.emplace_back(x.id, out.size());
    out.insert(out.end(), v.begin(), v.end());
  }
  const std::size_t n = out.size();
  return g.node(std::move(out), n, 1, [parts](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    for (const auto& [id, offset] : parts) {
      auto gx = gr.grad(id);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[offset + i];
    }
  });
}

Expr stack(const std::vector<Expr>& rows) {
  require(!rows.empty(), "stack of no rows");
  const std::size_t k = rows[0].size();
  for (const Expr& r : rows) require(r.size() == k, "stack: rows differ in size");
  Expr flat = concat(rows);
  Graph& g = graph_of(flat);
  std::vector<double> value(flat.value().begin(), flat.value().end());
  const int fi = flat.id;
  return g.node(std::move(value), rows.size(), k, [fi](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    auto gx = gr.grad(fi);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
}

Expr slice(Expr x, std::size_t begin, std::size_t length) {
  require(begin + length <= x.size(), "slice out of range");
  const auto v = x.value();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin),
                          v.begin() + static_cast<std::ptrdiff_t>(begin + length));
  const int xi = x.id;
  return graph_of(x).node(std::move(out), length, 1, [xi, begin](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[begin + i] += gy[i];
  });
}

Expr sum_elements(Expr x) {
  double s = 0.0;
  for (double v : x.value()) s += v;
  const int xi = x.id;
  return graph_of(x).node({s}, 1, 1, [xi](Graph& gr, int self) {
    const double gy = gr.grad(self)[0];
    for (double& gx : gr.grad(xi)) gx += gy;
  });
}

Expr dot(Expr a, Expr b) {
  same_graph(a, b);
  require(a.size() == b.size(), "dot: size mismatch");
  const auto av = a.value();
  const auto bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const int ai = a.id, bi = b.id;
  return graph_of(a).node({s}, 1, 1, [ai, bi](Graph& gr, int self) {
    const double gy = gr.grad(self)[0];
    const auto av2 = gr.value(ai);
    const auto bv2 = gr.value(bi);
    auto ga = gr.grad(ai);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy * bv2[i];
    auto gb = gr.grad(bi);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy * av2[i];
  });
}

Expr pick(Expr x, std::size_t index) {
  require(index < x.size(), "pick index out of range");
  const int xi = x.id;
  return graph_of(x).node({x.value()[index]}, 1, 1, [xi, index](Graph& gr, int self) {
    gr.grad(xi)[index] += gr.grad(self)[0];
  });
}

Expr softmax(Expr x) {
  const auto v = x.value();
  require(!v.empty(), "softmax of empty vector");
  const double lse = log_sum_exp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - lse);
  const int xi = x.id;
  return graph_of(x).node(std::move(out), x.rows(), x.cols(), [xi](Graph& gr, int self) {
    const auto y = gr.value(self);
    const auto gy = gr.grad(self);
    double inner = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) inner += gy[i] * y[i];
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (gy[i] - inner);
  });
}

Expr log_softmax(Expr x) {
  const auto v = x.value();
  require(!v.empty(), "log_softmax of empty vector");
  const double lse = log_sum_exp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
  const int xi = x.id;
  return graph_of(x).node(std::move(out), x.rows(), x.cols(), [xi](Graph& gr, int self) {
    const auto y = gr.value(self);
    const auto gy = gr.grad(self);
    double total = 0.0;
    for (double gi : gy) total += gi;
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += gy[i] - std::exp(y[i]) * total;
  });
}

Expr logsumexp(Expr x) {
  const auto v = x.value();
  require(!v.empty(), "logsumexp of empty vector");
  const double lse = log_sum_exp(v);
  const int xi = x.id;
  return graph_of(x).node({lse}, 1, 1, [xi](Graph& gr, int self) {
    const double gy = gr.grad(self)[0];
    const double y = gr.value(self)[0];
    const auto xv = gr.value(xi);
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += gy * std::exp(xv[i] - y);
  });
}

Expr softmax_cross_entropy(Expr logits, std::size_t gold) {
  const auto v = logits.value();
  require(gold < v.size(), "gold index out of range");
  const double lse = log_sum_exp(v);
  const int xi = logits.id;
  return graph_of(logits).node({lse - v[gold]}, 1, 1, [xi, gold, lse](Graph& gr, int self) {
    const double gy = gr.grad(self)[0];
    const auto xv = gr.value(xi);
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += gy * std::exp(xv[i] - lse);
    gx[gold] -= gy;
  });
}

Expr logistic_loss(Expr logit, bool positive) {
  require(logit.size() == 1, "logistic_loss expects a scalar logit");
  const double z = logit.value()[0];
  // -log sigmoid(s) with s = z for the positive class, -z otherwise.
  const double s = positive ? z : -z;
  const double loss = s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  const int xi = logit.id;
  return graph_of(logit).node({loss}, 1, 1, [xi, positive](Graph& gr, int self) {
    const double gy = gr.grad(self)[0];
    const double zz = gr.value(xi)[0];
    const double p = zz >= 0 ? 1.0 / (1.0 + std::exp(-zz)) : std::exp(zz) / (1.0 + std::exp(zz));
    gr.grad(xi)[0] += gy * (p - (positive ? 1.0 : 0.0));
  });
}

Expr biaffine(Expr x, Expr y, Expr u, Expr w, Expr b) {
  same_graph(x, y);
  same_graph(x, u);
  same_graph(x, w);
  same_graph(x, b);
  const std::size_t dx = x.size();
  const std::size_t dy = y.size();
  const std::size_t k = b.size();
  require(u.size() == k * dx * dy, "biaffine: U must have shape {K, dx, dy}");
  require(w.size() == k * (dx + dy), "biaffine: W must have shape {K, dx + dy}");
  const auto xv = x.value();
  const auto yv = y.value();
  const auto uv = u.value();
  const auto wv = w.value();
  const auto bv = b.value();
  std::vector<double> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double* uc = uv.data() + c * dx * dy;
    const double* wc = wv.data() + c * (dx + dy);
    double s = bv[c];
    for (std::size_t i = 0; i < dx; ++i) {
      const double* ui = uc + i * dy;
      double inner = 0.0;
      for (std::size_t j = 0; j < dy; ++j) inner += ui[j] * yv[j];
      s += xv[i] * (inner + wc[i]);
    }
    for (std::size_t j = 0; j < dy; ++j) s += wc[dx + j] * yv[j];
    out[c] = s;
  }
  const int xi = x.id, yi = y.id, ui_id = u.id, wi = w.id, bi = b.id;
  return graph_of(x).node(std::move(out), k, 1, [=](Graph& gr, int self) {
    const auto gs = gr.grad(self);
    const auto xv2 = gr.value(xi);
    const auto yv2 = gr.value(yi);
    const auto uv2 = gr.value(ui_id);
    const auto wv2 = gr.value(wi);
    auto gx = gr.grad(xi);
    auto gyv = gr.grad(yi);
    auto gu = gr.grad(ui_id);
    auto gw = gr.grad(wi);
    auto gb = gr.grad(bi);
    for (std::size_t c = 0; c < k; ++c) {
      const double g = gs[c];
      if (g == 0.0) continue;
      const double* uc = uv2.data() + c * dx * dy;
      double* guc = gu.data() + c * dx * dy;
      const double* wc = wv2.data() + c * (dx + dy);
      double* gwc = gw.data() + c * (dx + dy);
      for (std::size_t i = 0; i < dx; ++i) {
        const double* ui = uc + i * dy;
        double* gui = guc + i * dy;
        double inner = 0.0;
        const double gxi = g * xv2[i];
        for (std::size_t j = 0; j < dy; ++j) {
          inner += ui[j] * yv2[j];
          gyv[j] += gxi * ui[j];
          gui[j] += gxi * yv2[j];
        }
        gx[i] += g * (inner + wc[i]);
        gwc[i] += gxi;
      }
      for (std::size_t j = 0; j < dy; ++j) {
        gyv[j] += g * wc[dx + j];
        gwc[dx + j] += g * yv2[j];
      }
      gb[c] += g;
    }
  });
}

Expr weighted_sum(Expr weights, const std::vector<Expr>& values) {
  require(!values.empty(), "weighted_sum of no values");
  require(weights.size() == values.size(), "weighted_sum: one weight per value required");
  const std::size_t d = values[0].size();
  const auto wv = weights.value();
  std::vector<double> out(d, 0.0);
  std::vector<int> ids;
  for (std::size_t i = 0; i < values.size(); ++i) {
    same_graph(weights, values[i]);
    require(values[i].size() == d, "weighted_sum: values differ in size");
    const auto v = values[i].value();
    for (std::size_t j = 0; j < d; ++j) out[j] += wv[i] * v[j];
    ids.push_back(values[i].id);
  }
  const int wi = weights.id;
  return graph_of(weights).node(std::move(out), d, 1, [wi, ids](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    const auto wv2 = gr.value(wi);
    auto gw = gr.grad(wi);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto v = gr.value(ids[i]);
      auto gv = gr.grad(ids[i]);
      double s = 0.0;
      for (std::size_t j = 0; j < gy.size(); ++j) {
        s += gy[j] * v[j];
        gv[j] += gy[j] * wv2[i];
      }
      gw[i] += s;
    }
  });
}

Expr dropout(Expr x, double p) {
  Graph& g = graph_of(x);
  if (!g.training() || p <= 0.0) return x;
  require(p < 1.0, "dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const auto v = x.value();
  std::vector<double> mask(v.size());
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    mask[i] = keep(g.rng()) ? 1.0 / (1.0 - p) : 0.0;
    out[i] = v[i] * mask[i];
  }
  const int xi = x.id;
  return g.node(std::move(out), x.rows(), x.cols(), [xi, mask](Graph& gr, int self) {
    const auto gy = gr.grad(self);
    auto gx = gr.grad(xi);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
  });
}

}  // namespace tessera::nn

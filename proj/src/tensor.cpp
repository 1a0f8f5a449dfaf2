#include "anasizer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace anasizer::ad {

namespace {

using NodePtr = std::shared_ptr<Tensor::Node>;

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void mismatch(const char* op, const Matrix& a, const Matrix& b) {
    throw ShapeMismatch(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

Matrix& grad_of(Tensor::Node& n) {
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

/// Wraps `value` as the output of an op over `parents`; records `fn` only when
/// some parent needs a gradient.
Tensor make(Matrix value, std::vector<NodePtr> parents, std::function<void(Tensor::Node&)> fn) {
    auto n = std::make_shared<Tensor::Node>();
    n->value = std::move(value);
    const bool track = std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
    if (track) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward = std::move(fn);
    }
    return Tensor(std::move(n));
}

template <class F>
Tensor unary(const Tensor& a, Matrix value, F dfn) {
    auto pa = a.node();
    return make(std::move(value), {pa}, [pa, dfn](Tensor::Node& self) {
        if (pa->requires_grad) grad_of(*pa).array() += dfn(pa->value, self.value, self.grad).array();
    });
}

}  // namespace

Tensor Tensor::constant(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Tensor(std::move(n));
}

Tensor Tensor::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Tensor Tensor::variable(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Tensor(std::move(n));
}

const Matrix& Tensor::value() const {
    if (!node_) throw std::logic_error("Tensor: undefined");
    return node_->value;
}

const Matrix& Tensor::grad() const {
    if (!node_) throw std::logic_error("Tensor: undefined");
    return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw ShapeMismatch("item: tensor is " + shape(v));
    return v(0, 0);
}

void Tensor::zero_grad() {
    if (node_) node_->grad.resize(0, 0);
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) mismatch("matmul", a.value(), b.value());
    auto pa = a.node(), pb = b.node();
    Matrix out = pa->value * pb->value;
    return make(std::move(out), {pa, pb}, [pa, pb](Tensor::Node& self) {
        if (pa->requires_grad) grad_of(*pa).noalias() += self.grad * pb->value.transpose();
        if (pb->requires_grad) grad_of(*pb).noalias() += pa->value.transpose() * self.grad;
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch("add", a.value(), b.value());
    auto pa = a.node(), pb = b.node();
    return make(pa->value + pb->value, {pa, pb}, [pa, pb](Tensor::Node& self) {
        if (pa->requires_grad) grad_of(*pa) += self.grad;
        if (pb->requires_grad) grad_of(*pb) += self.grad;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch("sub", a.value(), b.value());
    auto pa = a.node(), pb = b.node();
    return make(pa->value - pb->value, {pa, pb}, [pa, pb](Tensor::Node& self) {
        if (pa->requires_grad) grad_of(*pa) += self.grad;
        if (pb->requires_grad) grad_of(*pb) -= self.grad;
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch("mul", a.value(), b.value());
    auto pa = a.node(), pb = b.node();
    Matrix out = pa->value.cwiseProduct(pb->value);
    return make(std::move(out), {pa, pb}, [pa, pb](Tensor::Node& self) {
        if (pa->requires_grad) grad_of(*pa) += self.grad.cwiseProduct(pb->value);
        if (pb->requires_grad) grad_of(*pb) += self.grad.cwiseProduct(pa->value);
    });
}

Tensor scale(const Tensor& a, double s) {
    return unary(a, a.value() * s, [s](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g * s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(a, (a.value().array() + s).matrix(), [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g; });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) mismatch("add_row", a.value(), row.value());
    auto pa = a.node(), pr = row.node();
    Matrix out = pa->value;
    out.rowwise() += pr->value.row(0);
    return make(std::move(out), {pa, pr}, [pa, pr](Tensor::Node& self) {
        if (pa->requires_grad) grad_of(*pa) += self.grad;
        if (pr->requires_grad) grad_of(*pr) += self.grad.colwise().sum();
    });
}

Tensor repeat_rows(const Tensor& row, Eigen::Index n) {
    if (row.rows() != 1) throw ShapeMismatch("repeat_rows: expected a row, got " + shape(row.value()));
    auto pr = row.node();
    Matrix out = pr->value.replicate(n, 1);
    return make(std::move(out), {pr}, [pr](Tensor::Node& self) { grad_of(*pr) += self.grad.colwise().sum(); });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_rows: no inputs");
    const Eigen::Index c = parts[0].cols();
    Eigen::Index r = 0;
    std::vector<NodePtr> ps;
    for (const auto& p : parts) {
        if (p.cols() != c) mismatch("concat_rows", parts[0].value(), p.value());
        r += p.rows();
        ps.push_back(p.node());
    }
    Matrix out(r, c);
    Eigen::Index off = 0;
    for (const auto& p : ps) {
        out.middleRows(off, p->value.rows()) = p->value;
        off += p->value.rows();
    }
    return make(std::move(out), ps, [ps](Tensor::Node& self) {
        Eigen::Index o = 0;
        for (const auto& p : ps) {
            if (p->requires_grad) grad_of(*p) += self.grad.middleRows(o, p->value.rows());
            o += p->value.rows();
        }
    });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
    const Eigen::Index r = parts[0].rows();
    Eigen::Index c = 0;
    std::vector<NodePtr> ps;
    for (const auto& p : parts) {
        if (p.rows() != r) mismatch("concat_cols", parts[0].value(), p.value());
        c += p.cols();
        ps.push_back(p.node());
    }
    Matrix out(r, c);
    Eigen::Index off = 0;
    for (const auto& p : ps) {
        out.middleCols(off, p->value.cols()) = p->value;
        off += p->value.cols();
    }
    return make(std::move(out), ps, [ps](Tensor::Node& self) {
        Eigen::Index o = 0;
        for (const auto& p : ps) {
            if (p->requires_grad) grad_of(*p) += self.grad.middleCols(o, p->value.cols());
            o += p->value.cols();
        }
    });
}

// ---------------------------------------------------------------------------

Tensor relu(const Tensor& a) {
    return unary(a, a.value().cwiseMax(0.0), [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return (x.array() > 0.0).select(g, 0.0);
    });
}

Tensor tanh(const Tensor& a) {
    return unary(a, a.value().array().tanh().matrix(), [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return (g.array() * (1.0 - y.array().square())).matrix();
    });
}

Tensor leaky_relu(const Tensor& a, double alpha) {
    Matrix out = (a.value().array() > 0.0).select(a.value(), alpha * a.value());
    return unary(a, std::move(out), [alpha](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return (x.array() > 0.0).select(g, alpha * g);
    });
}

Tensor elu(const Tensor& a, double alpha) {
    Matrix out = (a.value().array() > 0.0).select(a.value(), (alpha * (a.value().array().exp() - 1.0)).matrix());
    return unary(a, std::move(out), [alpha](const Matrix& x, const Matrix& y, const Matrix& g) -> Matrix {
        return (x.array() > 0.0).select(g, (g.array() * (y.array() + alpha)).matrix());
    });
}

Tensor exp(const Tensor& a) {
    return unary(a, a.value().array().exp().matrix(), [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return g.cwiseProduct(y);
    });
}

Tensor log(const Tensor& a) {
    return unary(a, a.value().array().log().matrix(), [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.cwiseQuotient(x);
    });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary(a, a.value().cwiseMax(lo).cwiseMin(hi), [lo, hi](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return (x.array() >= lo && x.array() <= hi).select(g, 0.0);
    });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch("minimum", a.value(), b.value());
    auto pa = a.node(), pb = b.node();
    Matrix out = pa->value.cwiseMin(pb->value);
    return make(std::move(out), {pa, pb}, [pa, pb](Tensor::Node& self) {
        const auto take_a = (pa->value.array() <= pb->value.array());
        if (pa->requires_grad) grad_of(*pa) += take_a.select(self.grad, 0.0);
        if (pb->requires_grad) grad_of(*pb) += take_a.select(Matrix::Zero(self.grad.rows(), self.grad.cols()), self.grad);
    });
}

// ---------------------------------------------------------------------------

Tensor row_softmax(const Tensor& a) {
    Matrix y = a.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        y.row(r).array() -= y.row(r).maxCoeff();
        y.row(r) = y.row(r).array().exp();
        y.row(r) /= y.row(r).sum();
    }
    return unary(a, std::move(y), [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        Matrix dx = y.cwiseProduct(g);
        const Eigen::VectorXd s = dx.rowwise().sum();
        dx -= y.cwiseProduct(s.replicate(1, y.cols()));
        return dx;
    });
}

Tensor row_log_softmax(const Tensor& a) {
    Matrix y = a.value();
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double m = y.row(r).maxCoeff();
        const double lse = m + std::log((y.row(r).array() - m).exp().sum());
        y.row(r).array() -= lse;
    }
    return unary(a, std::move(y), [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        const Eigen::VectorXd s = g.rowwise().sum();
        return g - y.array().exp().matrix().cwiseProduct(s.replicate(1, y.cols()));
    });
}

Tensor mean_rows(const Tensor& a) {
    const auto n = static_cast<double>(a.rows());
    auto pa = a.node();
    Matrix out = pa->value.colwise().mean();
    return make(std::move(out), {pa}, [pa, n](Tensor::Node& self) {
        grad_of(*pa).rowwise() += self.grad.row(0) / n;
    });
}

Tensor sum(const Tensor& a) {
    auto pa = a.node();
    return make(Matrix::Constant(1, 1, pa->value.sum()), {pa}, [pa](Tensor::Node& self) {
        grad_of(*pa).array() += self.grad(0, 0);
    });
}

Tensor mean(const Tensor& a) {
    const auto n = static_cast<double>(a.value().size());
    return scale(sum(a), 1.0 / n);
}

Tensor gather_rows(const Tensor& a, std::span<const int> rows) {
    auto pa = a.node();
    std::vector<int> idx(rows.begin(), rows.end());
    Matrix out(static_cast<Eigen::Index>(idx.size()), pa->value.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= pa->value.rows()) throw ShapeMismatch("gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(k)) = pa->value.row(idx[k]);
    }
    return make(std::move(out), {pa}, [pa, idx](Tensor::Node& self) {
        Matrix& g = grad_of(*pa);
        for (std::size_t k = 0; k < idx.size(); ++k) g.row(idx[k]) += self.grad.row(static_cast<Eigen::Index>(k));
    });
}

Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != a.value().size())
        throw ShapeMismatch("reshape: cannot view " + shape(a.value()) + " as " + std::to_string(rows) + "x" +
                            std::to_string(cols));
    auto pa = a.node();
    Matrix out = Eigen::Map<const Matrix>(pa->value.data(), rows, cols);
    return make(std::move(out), {pa}, [pa](Tensor::Node& self) {
        grad_of(*pa) += Eigen::Map<const Matrix>(self.grad.data(), pa->value.rows(), pa->value.cols());
    });
}

Tensor pick(const Tensor& a, std::span<const int> cols) {
    if (static_cast<Eigen::Index>(cols.size()) != a.rows()) throw ShapeMismatch("pick: need one column per row");
    auto pa = a.node();
    std::vector<int> idx(cols.begin(), cols.end());
    Matrix out(a.rows(), 1);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const int c = idx[static_cast<std::size_t>(r)];
        if (c < 0 || c >= a.cols()) throw ShapeMismatch("pick: column out of range");
        out(r, 0) = pa->value(r, c);
    }
    return make(std::move(out), {pa}, [pa, idx](Tensor::Node& self) {
        Matrix& g = grad_of(*pa);
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, idx[static_cast<std::size_t>(r)]) += self.grad(r, 0);
    });
}

Tensor attention(const Tensor& src, const Tensor& dst, const Matrix& mask, double alpha) {
    const Eigen::Index n = src.rows();
    if (src.cols() != 1 || dst.cols() != 1 || dst.rows() != n || mask.rows() != n || mask.cols() != n)
        throw ShapeMismatch("attention: expected n x 1 scores and an n x n mask");
    auto ps = src.node(), pd = dst.node();
    Matrix pre(n, n);  // leaky_relu input
    Matrix att = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            pre(i, j) = ps->value(i, 0) + pd->value(j, 0);
            if (mask(i, j) != 0.0) {
                const double e = pre(i, j) > 0.0 ? pre(i, j) : alpha * pre(i, j);
                att(i, j) = e;
                mx = std::max(mx, e);
            }
        }
        if (!std::isfinite(mx)) throw ShapeMismatch("attention: empty neighbourhood");
        double z = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (mask(i, j) != 0.0) {
                att(i, j) = std::exp(att(i, j) - mx);
                z += att(i, j);
            }
        att.row(i) /= z;
    }
    return make(att, {ps, pd}, [ps, pd, pre, mask, alpha](Tensor::Node& self) {
        const Matrix& y = self.value;
        const Eigen::Index m = y.rows();
        // d e_ij through the masked softmax, then through leaky_relu.
        Matrix de = y.cwiseProduct(self.grad);
        const Eigen::VectorXd s = de.rowwise().sum();
        de -= y.cwiseProduct(s.replicate(1, m));
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                de(i, j) = mask(i, j) != 0.0 ? (pre(i, j) > 0.0 ? de(i, j) : alpha * de(i, j)) : 0.0;
        if (ps->requires_grad) grad_of(*ps) += de.rowwise().sum();
        if (pd->requires_grad) grad_of(*pd) += de.colwise().sum().transpose();
    });
}

// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1)
        throw ShapeMismatch("backward: loss must be 1x1");
    auto root = loss.node();
    if (!root->requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Tensor::Node*> order;
    std::unordered_set<Tensor::Node*> seen;
    std::vector<std::pair<Tensor::Node*, std::size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Tensor::Node* p = n->parents[i++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    grad_of(*root).array() += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor::Node* n = *it;
        if (n->backward && n->grad.size() != 0) n->backward(*n);
    }
}

}  // namespace anasizer::ad

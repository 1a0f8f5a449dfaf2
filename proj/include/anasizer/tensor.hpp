#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace anasizer {
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

/// Rank-2 reverse-mode automatic differentiation over f64 matrices.
///
/// A Tensor is an immutable handle to a node in a computation graph. Operations
/// record their parents only when some input requires a gradient, so inference
/// through constants builds no graph. `backward(loss)` accumulates d loss / d x
/// into every reachable variable's grad().
namespace anasizer::ad {

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Tensor {
public:
    struct Node;

    Tensor() = default;

    static Tensor constant(Matrix value);
    static Tensor constant(double value);
    /// Leaf that receives a gradient.
    static Tensor variable(Matrix value);

    bool defined() const { return static_cast<bool>(node_); }
    const Matrix& value() const;
    /// Empty (0x0) until a backward pass reaches this node.
    const Matrix& grad() const;
    bool requires_grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    /// Value of a 1x1 tensor.
    double item() const;

    void zero_grad();

    const std::shared_ptr<Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<Node> node_;
};

struct Tensor::Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;
};

// Linear algebra and elementwise arithmetic.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// a (n x c) plus row (1 x c) added to every row.
Tensor add_row(const Tensor& a, const Tensor& row);
/// Repeats a 1 x c row n times.
Tensor repeat_rows(const Tensor& row, Eigen::Index n);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
inline Tensor concat_rows(std::initializer_list<Tensor> parts) { return concat_rows(std::span<const Tensor>(parts.begin(), parts.size())); }
inline Tensor concat_cols(std::initializer_list<Tensor> parts) { return concat_cols(std::span<const Tensor>(parts.begin(), parts.size())); }

// Nonlinearities.
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double alpha);
Tensor elu(const Tensor& a, double alpha = 1.0);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
/// Elementwise clamp; the gradient is zero where the input was clipped.
Tensor clamp(const Tensor& a, double lo, double hi);
/// Elementwise minimum; ties send the gradient to `a`.
Tensor minimum(const Tensor& a, const Tensor& b);

// Row-wise distributions.
Tensor row_softmax(const Tensor& a);
Tensor row_log_softmax(const Tensor& a);

// Reductions and indexing.
Tensor mean_rows(const Tensor& a);  // n x c -> 1 x c
Tensor sum(const Tensor& a);        // -> 1 x 1
Tensor mean(const Tensor& a);       // -> 1 x 1
Tensor gather_rows(const Tensor& a, std::span<const int> rows);
/// Row-major reshape to rows x cols (same element count).
Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols);
/// out(r, 0) = a(r, cols[r]).
Tensor pick(const Tensor& a, std::span<const int> cols);

/// Masked graph attention: e_ij = leaky_relu(src_i + dst_j, alpha) over mask(i, j) != 0,
/// softmax across j. src and dst are n x 1; every row of the mask needs an entry.
Tensor attention(const Tensor& src, const Tensor& dst, const Matrix& mask, double alpha);

/// Reverse pass from a 1x1 loss. Throws ShapeMismatch for non-scalar losses.
void backward(const Tensor& loss);

}  // namespace anasizer::ad

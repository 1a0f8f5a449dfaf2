#include "anasizer/adam.hpp"

#include <cmath>

namespace anasizer {

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
    if (params.size() != grads.size()) throw ad::ShapeMismatch("Adam: parameter/gradient count mismatch");
    if (m_.empty()) {
        for (const Matrix* p : params) {
            m_.push_back(Matrix::Zero(p->rows(), p->cols()));
            v_.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }
    if (m_.size() != params.size()) throw ad::ShapeMismatch("Adam: parameter count changed");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
            m_[i].rows() != grads[i].rows() || m_[i].cols() != grads[i].cols())
            throw ad::ShapeMismatch("Adam: shape mismatch for parameter " + std::to_string(i));

    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseProduct(grads[i]);
        params[i]->array() -=
            cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
    }
}

void Adam::restore(long t, std::vector<Matrix> m, std::vector<Matrix> v) {
    if (m.size() != v.size()) throw ad::ShapeMismatch("Adam::restore: moment count mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace anasizer

#include "ac/mlp.hpp"

#include <cmath>

#include "ac/errors.hpp"
#include "ac/rng.hpp"

namespace ac {

namespace {

using linalg::Matrix;

bool vec_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    Matrix out = linalg::matmul_bt(x, layer.w);  // x . w^T
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += layer.b[j];
    return out;
}

// Training-mode batchnorm: population batch statistics, running update with
// momentum. Returns gamma * xhat + beta and fills the cache.
Matrix bn_forward_train(BatchNormLayer& bn, const Matrix& x, BnCache& cache) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    cache.xhat = Matrix(n, d);
    cache.inv_std.resize(d);
    Matrix out(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mu) * (x(i, j) - mu);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + bn.eps);
        cache.inv_std[j] = inv;
        for (std::size_t i = 0; i < n; ++i) {
            cache.xhat(i, j) = (x(i, j) - mu) * inv;
            out(i, j) = bn.gamma[j] * cache.xhat(i, j) + bn.beta[j];
        }
        bn.running_mean[j] = (1.0 - bn.momentum) * bn.running_mean[j] + bn.momentum * mu;
        bn.running_var[j] = (1.0 - bn.momentum) * bn.running_var[j] + bn.momentum * var;
    }
    return out;
}

Matrix bn_forward_eval(const BatchNormLayer& bn, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const double inv = 1.0 / std::sqrt(bn.running_var[j] + bn.eps);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            out(i, j) = bn.gamma[j] * (x(i, j) - bn.running_mean[j]) * inv + bn.beta[j];
        }
    }
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            if (out(i, j) < 0.0) out(i, j) = 0.0;
        }
    return out;
}

// dL/dx of a dense layer, plus parameter gradients.
Matrix dense_backward(const DenseLayer& layer, const Matrix& input, const Matrix& grad_out,
                      Matrix& dw, std::vector<double>& db) {
    dw = linalg::matmul(linalg::transpose(grad_out), input);
    db.assign(layer.b.size(), 0.0);
    for (std::size_t i = 0; i < grad_out.rows(); ++i)
        for (std::size_t j = 0; j < grad_out.cols(); ++j) db[j] += grad_out(i, j);
    return linalg::matmul(grad_out, layer.w);
}

// Batchnorm backward through the batch statistics used in training mode.
Matrix bn_backward(const BatchNormLayer& bn, const BnCache& cache, const Matrix& grad_out,
                   std::vector<double>& dgamma, std::vector<double>& dbeta) {
    const std::size_t n = grad_out.rows();
    const std::size_t d = grad_out.cols();
    dgamma.assign(d, 0.0);
    dbeta.assign(d, 0.0);
    Matrix dx(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        double gsum = 0.0;
        double gxsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dgamma[j] += grad_out(i, j) * cache.xhat(i, j);
            dbeta[j] += grad_out(i, j);
            gsum += grad_out(i, j) * bn.gamma[j];
            gxsum += grad_out(i, j) * bn.gamma[j] * cache.xhat(i, j);
        }
        const double gmean = gsum / static_cast<double>(n);
        const double gxmean = gxsum / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ghat = grad_out(i, j) * bn.gamma[j];
            dx(i, j) = (ghat - gmean - cache.xhat(i, j) * gxmean) * cache.inv_std[j];
        }
    }
    return dx;
}

Matrix relu_backward(const Matrix& pre_act, const Matrix& grad_out) {
    Matrix dx = grad_out;
    for (std::size_t i = 0; i < dx.rows(); ++i)
        for (std::size_t j = 0; j < dx.cols(); ++j) {
            if (pre_act(i, j) <= 0.0) dx(i, j) = 0.0;
        }
    return dx;
}

}  // namespace

bool MlpModel::all_finite() const {
    return fc1.w.all_finite() && fc2.w.all_finite() && fc3.w.all_finite() &&
           vec_finite(fc1.b) && vec_finite(fc2.b) && vec_finite(fc3.b) &&
           vec_finite(bn1.gamma) && vec_finite(bn1.beta) && vec_finite(bn1.running_mean) &&
           vec_finite(bn1.running_var) && vec_finite(bn2.gamma) && vec_finite(bn2.beta) &&
           vec_finite(bn2.running_mean) && vec_finite(bn2.running_var);
}

MlpModel mlp_init(std::size_t in_dim, std::size_t h1, std::size_t h2, std::size_t out_dim,
                  std::uint64_t seed) {
    if (in_dim < 1 || h1 < 1 || h2 < 1 || out_dim < 1) {
        throw ConfigError("model dimensions must be at least 1");
    }
    Rng rng(seed);
    MlpModel m;
    m.in_dim = in_dim;
    m.h1 = h1;
    m.h2 = h2;
    m.out_dim = out_dim;

    auto init_dense = [&rng](std::size_t out, std::size_t in) {
        DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
        const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < in; ++j) layer.w(i, j) = std_dev * rng.gaussian();
        return layer;
    };
    auto init_bn = [](std::size_t d) {
        BatchNormLayer bn;
        bn.gamma.assign(d, 1.0);
        bn.beta.assign(d, 0.0);
        bn.running_mean.assign(d, 0.0);
        bn.running_var.assign(d, 1.0);
        return bn;
    };

    m.fc1 = init_dense(h1, in_dim);
    m.bn1 = init_bn(h1);
    m.fc2 = init_dense(h2, h1);
    m.bn2 = init_bn(h2);
    m.fc3 = init_dense(out_dim, h2);
    return m;
}

linalg::Matrix mlp_forward(MlpModel& model, const Matrix& x, bool training, ForwardCache* cache) {
    if (x.cols() != model.in_dim) {
        throw DimensionMismatchError("input width does not match model input dimension");
    }
    if (training && x.rows() < 2) {
        throw BatchTooSmallError("training-mode forward needs at least 2 rows");
    }

    BnCache bn1_cache, bn2_cache;
    const Matrix lin1 = dense_forward(model.fc1, x);
    const Matrix n1 = training ? bn_forward_train(model.bn1, lin1, bn1_cache)
                               : bn_forward_eval(model.bn1, lin1);
    const Matrix act1 = relu(n1);
    const Matrix lin2 = dense_forward(model.fc2, act1);
    const Matrix n2 = training ? bn_forward_train(model.bn2, lin2, bn2_cache)
                               : bn_forward_eval(model.bn2, lin2);
    const Matrix act2 = relu(n2);
    Matrix out = dense_forward(model.fc3, act2);

    if (cache != nullptr) {
        if (!training) {
            throw ConfigError("backward cache requires a training-mode forward");
        }
        cache->input = x;
        cache->lin1 = lin1;
        cache->lin2 = lin2;
        cache->bn1 = std::move(bn1_cache);
        cache->bn2 = std::move(bn2_cache);
        cache->act1 = act1;
        cache->act2 = act2;
    }
    return out;
}

MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                          const Matrix& grad_out) {
    MlpGradients g;
    Matrix d_act2 = dense_backward(model.fc3, cache.act2, grad_out, g.dw3, g.db3);
    Matrix d_n2 = relu_backward(cache.act2, d_act2);
    Matrix d_lin2 = bn_backward(model.bn2, cache.bn2, d_n2, g.dgamma2, g.dbeta2);
    Matrix d_act1 = dense_backward(model.fc2, cache.act1, d_lin2, g.dw2, g.db2);
    Matrix d_n1 = relu_backward(cache.act1, d_act1);
    Matrix d_lin1 = bn_backward(model.bn1, cache.bn1, d_n1, g.dgamma1, g.dbeta1);
    dense_backward(model.fc1, cache.input, d_lin1, g.dw1, g.db1);
    return g;
}

void sgd_update(MlpModel& model, const MlpGradients& grads, double lr) {
    auto step_mat = [lr](Matrix& w, const Matrix& dw) {
        for (std::size_t i = 0; i < w.rows(); ++i)
            for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) -= lr * dw(i, j);
    };
    auto step_vec = [lr](std::vector<double>& v, const std::vector<double>& dv) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * dv[i];
    };
    step_mat(model.fc1.w, grads.dw1);
    step_vec(model.fc1.b, grads.db1);
    step_vec(model.bn1.gamma, grads.dgamma1);
    step_vec(model.bn1.beta, grads.dbeta1);
    step_mat(model.fc2.w, grads.dw2);
    step_vec(model.fc2.b, grads.db2);
    step_vec(model.bn2.gamma, grads.dgamma2);
    step_vec(model.bn2.beta, grads.dbeta2);
    step_mat(model.fc3.w, grads.dw3);
    step_vec(model.fc3.b, grads.db3);
}

std::vector<double*> parameter_pointers(MlpModel& model) {
    std::vector<double*> out;
    auto add_mat = [&out](Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) out.push_back(&m(i, j));
    };
    auto add_vec = [&out](std::vector<double>& v) {
        for (double& x : v) out.push_back(&x);
    };
    add_mat(model.fc1.w);
    add_vec(model.fc1.b);
    add_vec(model.bn1.gamma);
    add_vec(model.bn1.beta);
    add_mat(model.fc2.w);
    add_vec(model.fc2.b);
    add_vec(model.bn2.gamma);
    add_vec(model.bn2.beta);
    add_mat(model.fc3.w);
    add_vec(model.fc3.b);
    return out;
}

std::vector<double> flatten_gradients(const MlpGradients& grads) {
    std::vector<double> out;
    auto add_mat = [&out](const Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    };
    auto add_vec = [&out](const std::vector<double>& v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    add_mat(grads.dw1);
    add_vec(grads.db1);
    add_vec(grads.dgamma1);
    add_vec(grads.dbeta1);
    add_mat(grads.dw2);
    add_vec(grads.db2);
    add_vec(grads.dgamma2);
    add_vec(grads.dbeta2);
    add_mat(grads.dw3);
    add_vec(grads.db3);
    return out;
}

}  // namespace ac

#include "etpa/mlp.hpp"

#include <cmath>

#include "etpa/errors.hpp"

namespace etpa::nn {

namespace {

struct Offsets {
    Eigen::Index hidden_w = 0, hidden_b = 0, output_w = 0, output_b = 0;
};

Offsets offsets(const MlpShape& s) {
    Offsets o;
    o.hidden_b = Eigen::Index{s.hidden} * s.inputs;
    o.output_w = o.hidden_b + s.hidden;
    o.output_b = o.output_w + Eigen::Index{s.outputs} * s.hidden;
    return o;
}

void check_shape(const MlpShape& s) {
    if (s.inputs < 1 || s.hidden < 1 || s.outputs < 1)
        throw ValidationError("mlp: dimensions must be positive");
}

using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

struct Views {
    ConstMatrixMap w1;
    ConstVectorMap b1;
    ConstMatrixMap w2;
    ConstVectorMap b2;
};

Views views(const MlpShape& s, const double* data) {
    const auto o = offsets(s);
    return {ConstMatrixMap(data + o.hidden_w, s.hidden, s.inputs),
            ConstVectorMap(data + o.hidden_b, s.hidden),
            ConstMatrixMap(data + o.output_w, s.outputs, s.hidden),
            ConstVectorMap(data + o.output_b, s.outputs)};
}

void softmax_rows(Eigen::MatrixXd& z) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        row.array() -= row.maxCoeff();
        row = row.array().exp();
        row /= row.sum();
    }
}

void check_batch(const MlpShape& s, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t) {
    if (x.rows() == 0)
        throw ValidationError("mlp: empty batch");
    if (x.cols() != s.inputs)
        throw ValidationError("mlp: batch has " + std::to_string(x.cols()) + " features, network expects " +
                              std::to_string(s.inputs));
    if (t.rows() != x.rows() || t.cols() != s.outputs)
        throw ValidationError("mlp: target matrix shape mismatch");
}

} // namespace

MlpParams::MlpParams(MlpShape shape)
    : shape_(shape) {
    check_shape(shape_);
    values_ = Eigen::VectorXd::Zero(shape_.parameter_count());
}

MlpParams::MlpParams(MlpShape shape, Eigen::VectorXd values)
    : shape_(shape), values_(std::move(values)) {
    check_shape(shape_);
    if (values_.size() != shape_.parameter_count())
        throw ValidationError("mlp: expected " + std::to_string(shape_.parameter_count()) +
                              " parameters, got " + std::to_string(values_.size()));
}

Eigen::Map<const RowMajorMatrix> MlpParams::hidden_weights() const {
    return {values_.data() + offsets(shape_).hidden_w, shape_.hidden, shape_.inputs};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::hidden_biases() const {
    return {values_.data() + offsets(shape_).hidden_b, shape_.hidden};
}
Eigen::Map<const RowMajorMatrix> MlpParams::output_weights() const {
    return {values_.data() + offsets(shape_).output_w, shape_.outputs, shape_.hidden};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::output_biases() const {
    return {values_.data() + offsets(shape_).output_b, shape_.outputs};
}
Eigen::Map<RowMajorMatrix> MlpParams::hidden_weights() {
    return {values_.data() + offsets(shape_).hidden_w, shape_.hidden, shape_.inputs};
}
Eigen::Map<Eigen::VectorXd> MlpParams::hidden_biases() {
    return {values_.data() + offsets(shape_).hidden_b, shape_.hidden};
}
Eigen::Map<RowMajorMatrix> MlpParams::output_weights() {
    return {values_.data() + offsets(shape_).output_w, shape_.outputs, shape_.hidden};
}
Eigen::Map<Eigen::VectorXd> MlpParams::output_biases() {
    return {values_.data() + offsets(shape_).output_b, shape_.outputs};
}

MlpParams init_params(int hidden, int inputs, int outputs, Rng& rng) {
    MlpParams p(MlpShape{inputs, hidden, outputs});
    auto fill = [&](auto&& m, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = u(rng);
    };
    fill(p.hidden_weights(), inputs);
    fill(p.output_weights(), hidden);
    return p;
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
    Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
    return p / p.sum();
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& features) {
    const auto& s = params.shape();
    if (features.cols() != s.inputs)
        throw ValidationError("mlp: input has " + std::to_string(features.cols()) +
                              " features, network expects " + std::to_string(s.inputs));
    const auto v = views(s, params.values().data());
    Eigen::MatrixXd hidden = features * v.w1.transpose();
    hidden.rowwise() += v.b1.transpose();
    hidden = (1.0 + (-hidden.array()).exp()).inverse().matrix();
    Eigen::MatrixXd out = hidden * v.w2.transpose();
    out.rowwise() += v.b2.transpose();
    softmax_rows(out);
    return out;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
    Eigen::MatrixXd row = x.transpose();
    return forward_batch(params, row).row(0).transpose();
}

double loss_and_gradient(const MlpShape& s, const Eigen::VectorXd& values,
                         const Eigen::MatrixXd& x, const Eigen::MatrixXd& t,
                         Eigen::VectorXd* gradient) {
    check_batch(s, x, t);
    const auto v = views(s, values.data());
    const double n = static_cast<double>(x.rows());

    Eigen::MatrixXd a1 = x * v.w1.transpose();
    a1.rowwise() += v.b1.transpose();
    a1 = (1.0 + (-a1.array()).exp()).inverse().matrix();
    Eigen::MatrixXd p = a1 * v.w2.transpose();
    p.rowwise() += v.b2.transpose();
    softmax_rows(p);

    const double loss = -(t.array() * (p.array() + log_clip).log()).sum() / n;
    if (!gradient)
        return loss;

    // dL/dz_k = p_k (g_k - sum_c p_c g_c), g_c = -t_c / (n (p_c + clip))
    const Eigen::ArrayXXd g = -t.array() / (n * (p.array() + log_clip));
    const Eigen::ArrayXd pg = (p.array() * g).rowwise().sum();
    const Eigen::MatrixXd dz2 = (p.array() * (g.colwise() - pg)).matrix();

    const Eigen::MatrixXd dz1 = ((dz2 * v.w2).array() * a1.array() * (1.0 - a1.array())).matrix();

    gradient->resize(values.size());
    const auto o = offsets(s);
    Eigen::Map<RowMajorMatrix>(gradient->data() + o.hidden_w, s.hidden, s.inputs).noalias() =
        dz1.transpose() * x;
    Eigen::Map<Eigen::VectorXd>(gradient->data() + o.hidden_b, s.hidden) = dz1.colwise().sum().transpose();
    Eigen::Map<RowMajorMatrix>(gradient->data() + o.output_w, s.outputs, s.hidden).noalias() =
        dz2.transpose() * a1;
    Eigen::Map<Eigen::VectorXd>(gradient->data() + o.output_b, s.outputs) = dz2.colwise().sum().transpose();
    return loss;
}

LossGradient loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& features,
                               const Eigen::MatrixXd& targets) {
    LossGradient out;
    out.loss = loss_and_gradient(params.shape(), params.values(), features, targets, &out.gradient);
    return out;
}

double cross_entropy(const MlpParams& params, const Eigen::MatrixXd& features,
                     const Eigen::MatrixXd& targets) {
    return loss_and_gradient(params.shape(), params.values(), features, targets, nullptr);
}

namespace {

// Loss evaluation in extended precision for the central differences, so that
// round-off in (E+ - E-) stays well below the gradients being checked. Hidden
// pre-activations are cached; a perturbation only touches what it affects.
class ExtendedLoss {
public:
    using Matrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

    ExtendedLoss(const MlpParams& params, const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets)
        : shape_(params.shape()), x_(features.cast<long double>()), t_(targets.cast<long double>()),
          w1_(params.hidden_weights().cast<long double>()), b1_(params.hidden_biases().cast<long double>()),
          w2_(params.output_weights().cast<long double>()), b2_(params.output_biases().cast<long double>()) {
        pre_ = x_ * w1_.transpose();
        pre_.rowwise() += b1_.transpose();
        hidden_ = pre_.unaryExpr([](long double a) { return 1.0L / (1.0L + std::exp(-a)); });
    }

    // Loss with parameter `index` (flat layout) shifted by `delta`.
    long double shifted(Eigen::Index index, long double delta) const {
        const Eigen::Index d = shape_.inputs, h = shape_.hidden, c = shape_.outputs;
        const Eigen::Index n_w1 = h * d, n_b1 = h, n_w2 = c * h;
        if (index < n_w1 + n_b1) {
            const Eigen::Index unit = index < n_w1 ? index / d : index - n_w1;
            Matrix hidden = hidden_;
            for (Eigen::Index r = 0; r < x_.rows(); ++r) {
                const long double a = pre_(r, unit) + delta * (index < n_w1 ? x_(r, index % d) : 1.0L);
                hidden(r, unit) = 1.0L / (1.0L + std::exp(-a));
            }
            return loss(hidden, w2_, b2_);
        }
        Matrix w2 = w2_;
        Eigen::Matrix<long double, Eigen::Dynamic, 1> b2 = b2_;
        const Eigen::Index k = index - n_w1 - n_b1;
        if (k < n_w2)
            w2(k / h, k % h) += delta;
        else
            b2[k - n_w2] += delta;
        return loss(hidden_, w2, b2);
    }

private:
    long double loss(const Matrix& hidden, const Matrix& w2,
                     const Eigen::Matrix<long double, Eigen::Dynamic, 1>& b2) const {
        long double total = 0.0L;
        for (Eigen::Index r = 0; r < hidden.rows(); ++r) {
            Eigen::Matrix<long double, Eigen::Dynamic, 1> z = w2 * hidden.row(r).transpose() + b2;
            const long double m = z.maxCoeff();
            z = (z.array() - m).exp();
            const long double sum = z.sum();
            for (Eigen::Index k = 0; k < z.size(); ++k)
                total -= t_(r, k) * std::log(z[k] / sum + static_cast<long double>(log_clip));
        }
        return total / static_cast<long double>(hidden.rows());
    }

    MlpShape shape_;
    Matrix x_, t_, w1_;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> b1_;
    Matrix w2_;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> b2_;
    Matrix pre_, hidden_;
};

} // namespace

Eigen::VectorXd gradient_errors(const MlpParams& params, const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& targets, double h,
                                const GradientFn& analytic) {
    if (!(h > 0.0))
        throw ValidationError("finite difference step must be positive");
    const Eigen::VectorXd g_an = analytic ? analytic(params)
                                          : loss_and_gradient(params, features, targets).gradient;
    if (g_an.size() != params.values().size())
        throw ValidationError("finite difference: analytic gradient has wrong size");
    if (features.rows() != targets.rows() || features.cols() != params.shape().inputs ||
        targets.cols() != params.shape().outputs)
        throw ValidationError("finite difference: batch does not match the network shape");

    const ExtendedLoss extended(params, features, targets);
    const long double step = h;
    Eigen::VectorXd errors(g_an.size());
    for (Eigen::Index i = 0; i < g_an.size(); ++i) {
        const auto g_fd = static_cast<double>((extended.shifted(i, step) - extended.shifted(i, -step)) / (2.0L * step));
        errors[i] = std::abs(g_fd - g_an[i]) / (std::abs(g_fd) + std::abs(g_an[i]) + 1e-12);
    }
    return errors;
}

double finite_diff_check(const MlpParams& params, const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& targets, double h, const GradientFn& analytic) {
    return gradient_errors(params, features, targets, h, analytic).maxCoeff();
}

int Evaluation::total() const {
    int sum = 0;
    for (const auto& row : confusion)
        for (int c : row)
            sum += c;
    return sum;
}

int predict_class(const Eigen::Ref<const Eigen::VectorXd>& probabilities) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probabilities.size(); ++c)
        if (probabilities[c] > probabilities[best])
            best = c;
    return static_cast<int>(best) + 1;
}

Evaluation evaluate_model(const MlpParams& params, const Batch& subset) {
    if (subset.empty())
        throw ValidationError("evaluate: empty subset");
    if (params.shape().outputs != class_count)
        throw ValidationError("evaluate: network must have 4 outputs");
    const Eigen::MatrixXd probs = forward_batch(params, subset.features);
    Evaluation e;
    int correct = 0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const int truth = subset.labels[static_cast<std::size_t>(r)];
        const int predicted = predict_class(probs.row(r).transpose());
        ++e.confusion[static_cast<std::size_t>(truth - 1)][static_cast<std::size_t>(predicted - 1)];
        if (predicted == truth)
            ++correct;
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(probs.rows());
    return e;
}

} // namespace etpa::nn

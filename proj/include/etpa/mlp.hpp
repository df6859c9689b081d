#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "etpa/batch.hpp"
#include "etpa/random.hpp"

namespace etpa::nn {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MlpShape {
    int inputs = 500;
    int hidden = 5;
    int outputs = class_count;

    Eigen::Index parameter_count() const {
        return Eigen::Index{hidden} * inputs + hidden + Eigen::Index{outputs} * hidden + outputs;
    }
    bool operator==(const MlpShape&) const = default;
};

/// One-hidden-layer perceptron: sigmoid hidden units, softmax outputs.
///
/// All weights live in one flat vector laid out as
/// [hidden weights (H x D, row-major) | hidden biases | output weights (C x H, row-major) | output biases]
/// so optimizers can treat the network as a point in R^n.
class MlpParams {
public:
    MlpParams() = default;
    /// Zero-initialized network of the given shape.
    explicit MlpParams(MlpShape shape);
    MlpParams(MlpShape shape, Eigen::VectorXd values);

    const MlpShape& shape() const { return shape_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }

    Eigen::Map<const RowMajorMatrix> hidden_weights() const;
    Eigen::Map<const Eigen::VectorXd> hidden_biases() const;
    Eigen::Map<const RowMajorMatrix> output_weights() const;
    Eigen::Map<const Eigen::VectorXd> output_biases() const;

    Eigen::Map<RowMajorMatrix> hidden_weights();
    Eigen::Map<Eigen::VectorXd> hidden_biases();
    Eigen::Map<RowMajorMatrix> output_weights();
    Eigen::Map<Eigen::VectorXd> output_biases();

    bool all_finite() const { return values_.allFinite(); }

    bool operator==(const MlpParams& other) const {
        return shape_ == other.shape_ && values_ == other.values_;
    }

private:
    MlpShape shape_;
    Eigen::VectorXd values_;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
MlpParams init_params(int hidden, int inputs, int outputs, Rng& rng);

/// Class probabilities for one input vector.
Eigen::VectorXd forward(const MlpParams& params, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Row-wise class probabilities for a batch (n x d in, n x C out).
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& features);

/// Softmax of one row of pre-activations, max-shifted.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

inline constexpr double log_clip = 1e-12;

/// Mean cross-entropy -1/n sum t ln(p + 1e-12).
double cross_entropy(const MlpParams& params, const Eigen::MatrixXd& features,
                     const Eigen::MatrixXd& targets);

struct LossGradient {
    double loss = 0.0;
    Eigen::VectorXd gradient; // same layout as MlpParams::values()
};

/// Cross-entropy and its exact full-batch gradient (including the clip term).
LossGradient loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& features,
                               const Eigen::MatrixXd& targets);

/// Same as loss_and_gradient but on a raw flat parameter vector; writes the
/// gradient into `gradient` when non-null. Used as the optimizer objective.
double loss_and_gradient(const MlpShape& shape, const Eigen::VectorXd& values,
                         const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                         Eigen::VectorXd* gradient);

using GradientFn = std::function<Eigen::VectorXd(const MlpParams&)>;

/// Per-coordinate |g_fd - g_an| / (|g_fd| + |g_an| + 1e-12) against central differences.
Eigen::VectorXd gradient_errors(const MlpParams& params, const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& targets, double h,
                                const GradientFn& analytic = {});

/// Max of gradient_errors.
double finite_diff_check(const MlpParams& params, const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& targets, double h,
                         const GradientFn& analytic = {});

using ConfusionMatrix = std::array<std::array<int, class_count>, class_count>;

struct Evaluation {
    double accuracy = 0.0;
    ConfusionMatrix confusion{}; // [true class - 1][predicted class - 1]
    int total() const;
};

/// 1-based argmax, ties to the lowest class.
int predict_class(const Eigen::Ref<const Eigen::VectorXd>& probabilities);

Evaluation evaluate_model(const MlpParams& params, const Batch& subset);

} // namespace etpa::nn

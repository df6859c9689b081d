#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "etpa/batch.hpp"
#include "etpa/mlp.hpp"

namespace etpa::nn {

/// Returns E(w); writes dE/dw into `gradient` when it is non-null.
using Objective = std::function<double(const Eigen::VectorXd& w, Eigen::VectorXd* gradient)>;

struct ScgOptions {
    double sigma = 5e-5;        // curvature probe length, divided by |p|
    double lambda_init = 5e-7;  // initial Levenberg-Marquardt scale
    double gradient_tolerance = 1e-12;
    // Reset to steepest descent every this many iterations; 0 means the
    // number of parameters.
    std::size_t restart_interval = 0;
};

enum class ScgStep { accepted, rejected, gradient_vanished };

/// Moller's scaled conjugate gradient, one iteration per step().
///
/// Curvature along p comes from a gradient difference at w + sigma_k p; the
/// scale lambda is raised whenever that curvature is not positive and adapted
/// from the ratio of actual to predicted decrease. A step is only taken if it
/// strictly lowers E.
class ScgOptimizer {
public:
    ScgOptimizer(Objective objective, Eigen::VectorXd start, ScgOptions options = {});

    /// Performs one iteration. After gradient_vanished, further calls are no-ops
    /// that return gradient_vanished again.
    ScgStep step();

    const Eigen::VectorXd& weights() const { return w_; }
    double loss() const { return loss_; }
    double gradient_norm() const { return r_.norm(); }
    double lambda() const { return lambda_; }
    std::size_t iterations() const { return k_; }
    bool gradient_vanished() const { return vanished_; }

private:
    Objective objective_;
    ScgOptions options_;
    std::size_t restart_;
    Eigen::VectorXd w_;
    Eigen::VectorXd r_; // negative gradient at w_
    Eigen::VectorXd p_; // search direction
    Eigen::VectorXd scratch_;
    double loss_ = 0.0;
    double lambda_ = 0.0;
    double lambda_bar_ = 0.0;
    double delta_ = 0.0;
    bool success_ = true;
    bool vanished_ = false;
    std::size_t k_ = 0;
};

struct MinimizeResult {
    Eigen::VectorXd weights;
    double loss = 0.0;
    std::size_t iterations = 0;
    bool gradient_vanished = false;
    std::vector<double> accepted_losses; // loss after each accepted step
};

MinimizeResult scg_minimize(const Objective& objective, Eigen::VectorXd start,
                            std::size_t max_iterations, ScgOptions options = {});

struct TrainConfig {
    int max_epochs = 1000;
    int validation_fail_limit = 6;
    double scg_sigma = 5e-5;
    double scg_lambda_init = 5e-7;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class StopReason { validation_stall, max_epochs, gradient_vanished };

std::string_view to_string(StopReason reason);

struct TrainReport {
    int epochs_run = 0;
    std::vector<double> training_loss;   // after each epoch
    std::vector<double> validation_loss; // after each epoch
    std::vector<bool> accepted;          // whether the epoch's SCG step was taken
    double initial_training_loss = 0.0;
    double initial_validation_loss = 0.0;
    StopReason stop_reason = StopReason::max_epochs;
    int best_epoch = 0; // 0 means the initial parameters
    double best_validation_loss = 0.0;
};

struct TrainResult {
    MlpParams params; // parameters at best_epoch
    TrainReport report;
};

/// Full-batch SCG on `train` with early stopping on `validation`. An epoch is
/// one SCG iteration. The validation failure counter grows when the loss is
/// above the best seen, resets on a new best, and stops training at the limit.
TrainResult scg_train(const MlpParams& initial, const Batch& train, const Batch& validation,
                      const TrainConfig& config);

} // namespace etpa::nn

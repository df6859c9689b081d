#include "etpa/scg.hpp"

#include <cmath>
#include <limits>

#include "etpa/errors.hpp"

namespace etpa::nn {

ScgOptimizer::ScgOptimizer(Objective objective, Eigen::VectorXd start, ScgOptions options)
    : objective_(std::move(objective)), options_(options), w_(std::move(start)) {
    if (!(options_.sigma > 0.0) || !(options_.lambda_init > 0.0))
        throw ValidationError("scg: sigma and lambda must be positive");
    restart_ = options_.restart_interval ? options_.restart_interval
                                         : static_cast<std::size_t>(w_.size());
    Eigen::VectorXd g;
    loss_ = objective_(w_, &g);
    r_ = -g;
    p_ = r_;
    lambda_ = options_.lambda_init;
    vanished_ = r_.norm() < options_.gradient_tolerance;
}

ScgStep ScgOptimizer::step() {
    if (vanished_)
        return ScgStep::gradient_vanished;
    ++k_;

    double p2 = p_.squaredNorm();
    if (p_.dot(r_) <= 0.0) {
        // lost descent through round-off; fall back to steepest descent
        p_ = r_;
        p2 = p_.squaredNorm();
        success_ = true;
    }

    if (success_) {
        const double sigma_k = options_.sigma / std::sqrt(p2);
        scratch_ = w_ + sigma_k * p_;
        Eigen::VectorXd g_probe;
        objective_(scratch_, &g_probe);
        // s = (E'(w + sigma_k p) - E'(w)) / sigma_k, E'(w) = -r
        delta_ = p_.dot(g_probe + r_) / sigma_k;
    }

    delta_ += (lambda_ - lambda_bar_) * p2;
    if (delta_ <= 0.0) {
        lambda_bar_ = 2.0 * (lambda_ - delta_ / p2);
        delta_ = -delta_ + lambda_ * p2;
        lambda_ = lambda_bar_;
    }

    const double mu = p_.dot(r_);
    const double alpha = mu / delta_;
    scratch_ = w_ + alpha * p_;
    Eigen::VectorXd g_new;
    const double loss_new = objective_(scratch_, &g_new);

    double comparison = 2.0 * delta_ * (loss_ - loss_new) / (mu * mu);
    if (!std::isfinite(comparison))
        comparison = 0.0;

    ScgStep result = ScgStep::rejected;
    if (std::isfinite(loss_new) && loss_new < loss_) {
        w_.swap(scratch_);
        loss_ = loss_new;
        const Eigen::VectorXd r_old = r_;
        r_ = -g_new;
        lambda_bar_ = 0.0;
        success_ = true;
        if (k_ % restart_ == 0) {
            p_ = r_;
        } else {
            const double beta = (r_.squaredNorm() - r_.dot(r_old)) / mu;
            p_ = r_ + beta * p_;
        }
        if (comparison >= 0.75)
            lambda_ *= 0.25;
        result = ScgStep::accepted;
    } else {
        lambda_bar_ = lambda_;
        success_ = false;
    }

    if (comparison < 0.25)
        lambda_ += delta_ * (1.0 - comparison) / p2;

    if (result == ScgStep::accepted && r_.norm() < options_.gradient_tolerance) {
        vanished_ = true;
        return ScgStep::gradient_vanished;
    }
    return result;
}

MinimizeResult scg_minimize(const Objective& objective, Eigen::VectorXd start,
                            std::size_t max_iterations, ScgOptions options) {
    ScgOptimizer opt(objective, std::move(start), options);
    MinimizeResult out;
    while (!opt.gradient_vanished() && opt.iterations() < max_iterations) {
        const auto s = opt.step();
        if (s != ScgStep::rejected)
            out.accepted_losses.push_back(opt.loss());
    }
    out.weights = opt.weights();
    out.loss = opt.loss();
    out.iterations = opt.iterations();
    out.gradient_vanished = opt.gradient_vanished();
    return out;
}

void TrainConfig::validate() const {
    if (max_epochs < 1)
        throw ValidationError("train: max_epochs must be at least 1");
    if (validation_fail_limit < 1)
        throw ValidationError("train: validation fail limit must be at least 1");
    if (!(scg_sigma > 0.0) || !(scg_lambda_init > 0.0))
        throw ValidationError("train: SCG sigma and lambda must be positive");
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
    case StopReason::validation_stall: return "validation_stall";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::gradient_vanished: return "gradient_vanished";
    }
    return "?";
}

TrainResult scg_train(const MlpParams& initial, const Batch& train, const Batch& validation,
                      const TrainConfig& config) {
    config.validate();
    if (train.empty() || validation.empty())
        throw ValidationError("train: training and validation subsets must be nonempty");

    const MlpShape shape = initial.shape();
    Objective objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd* g) {
        return loss_and_gradient(shape, w, train.features, train.targets, g);
    };
    auto validation_loss = [&](const Eigen::VectorXd& w) {
        return loss_and_gradient(shape, w, validation.features, validation.targets, nullptr);
    };

    ScgOptions options;
    options.sigma = config.scg_sigma;
    options.lambda_init = config.scg_lambda_init;
    ScgOptimizer opt(objective, initial.values(), options);

    TrainResult result{initial, {}};
    auto& rep = result.report;
    rep.initial_training_loss = opt.loss();
    rep.initial_validation_loss = validation_loss(opt.weights());
    rep.best_validation_loss = rep.initial_validation_loss;

    if (opt.gradient_vanished()) {
        rep.stop_reason = StopReason::gradient_vanished;
        return result;
    }

    double current_validation = rep.initial_validation_loss;
    int fails = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const ScgStep s = opt.step();
        const bool moved = s != ScgStep::rejected;
        if (moved)
            current_validation = validation_loss(opt.weights());

        rep.epochs_run = epoch;
        rep.training_loss.push_back(opt.loss());
        rep.validation_loss.push_back(current_validation);
        rep.accepted.push_back(moved);

        if (current_validation < rep.best_validation_loss) {
            rep.best_validation_loss = current_validation;
            rep.best_epoch = epoch;
            result.params.values() = opt.weights();
            fails = 0;
        } else if (current_validation > rep.best_validation_loss) {
            ++fails;
        }

        if (s == ScgStep::gradient_vanished) {
            rep.stop_reason = StopReason::gradient_vanished;
            return result;
        }
        if (fails >= config.validation_fail_limit) {
            rep.stop_reason = StopReason::validation_stall;
            return result;
        }
    }
    rep.stop_reason = StopReason::max_epochs;
    return result;
}

} // namespace etpa::nn

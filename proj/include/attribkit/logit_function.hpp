#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "attribkit/model.hpp"
#include "attribkit/tensor.hpp"

namespace attribkit {

// A scalar function of one record-shaped input with an exact gradient. The
// attribution algorithms are written against this so they can also run on
// hand-built analytic functions and on weighted sums of models. value() and
// gradient() may use internal scratch; concurrent callers must work on
// separate clone()s.
class LogitFunction {
  public:
    virtual ~LogitFunction() = default;
    virtual int n_channels() const = 0;
    virtual int length() const = 0;
    virtual double value(const Tensor& input) = 0;
    virtual void gradient(const Tensor& input, Tensor& out) = 0;
    virtual std::unique_ptr<LogitFunction> clone() const = 0;

    void require_input(const Tensor& input, const std::string& context) const {
        if (input.rank() != 2 || static_cast<int>(input.dim(0)) != n_channels() ||
            static_cast<int>(input.dim(1)) != length()) {
            throw std::invalid_argument(context + ": input shape " + input.shape_string() +
                                        " does not match function input [" +
                                        std::to_string(n_channels()) + ", " +
                                        std::to_string(length()) + "]");
        }
    }
};

// One logit of one model. Holds a pointer only; the model must outlive it.
class ModelLogit final : public LogitFunction {
  public:
    ModelLogit(const Model& model, int class_index)
        : model_(&model), class_index_(class_index), shapes_(activation_shapes(model)) {
        detail::require_class_index(model, class_index, "ModelLogit");
    }

    int n_channels() const override { return model_->n_channels; }
    int length() const override { return model_->input_length; }

    double value(const Tensor& input) override {
        const Tensor& logits = detail::forward_pass(*model_, input, shapes_, ws_);
        return logits[class_index_];
    }

    void gradient(const Tensor& input, Tensor& out) override {
        detail::forward_pass(*model_, input, shapes_, ws_);
        if (dlogits_.empty()) dlogits_.assign(model_->n_classes, 0.0);
        dlogits_[class_index_] = 1.0;
        detail::backward_pass(*model_, shapes_, ws_, dlogits_, &out, nullptr);
        dlogits_[class_index_] = 0.0;
    }

    std::unique_ptr<LogitFunction> clone() const override {
        return std::make_unique<ModelLogit>(*model_, class_index_);
    }

  private:
    const Model* model_;
    int class_index_;
    std::vector<Shape3> shapes_;
    detail::Workspace ws_;
    std::vector<double> dlogits_;
};

// a1*f1 + a2*f2 + ... over functions with a shared input shape.
class WeightedSum final : public LogitFunction {
  public:
    WeightedSum(std::vector<double> coefficients, std::vector<const LogitFunction*> terms) {
        if (coefficients.size() != terms.size() || terms.empty()) {
            throw std::invalid_argument("WeightedSum: need matching, non-empty terms");
        }
        for (const LogitFunction* t : terms) {
            if (t->n_channels() != terms[0]->n_channels() || t->length() != terms[0]->length()) {
                throw std::invalid_argument("WeightedSum: terms disagree on input shape");
            }
        }
        coefficients_ = std::move(coefficients);
        for (const LogitFunction* t : terms) terms_.push_back(t->clone());
    }

    WeightedSum(const WeightedSum& other) : coefficients_(other.coefficients_) {
        for (const auto& t : other.terms_) terms_.push_back(t->clone());
    }

    int n_channels() const override { return terms_[0]->n_channels(); }
    int length() const override { return terms_[0]->length(); }

    double value(const Tensor& input) override {
        double acc = 0.0;
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            acc += coefficients_[i] * terms_[i]->value(input);
        }
        return acc;
    }

    void gradient(const Tensor& input, Tensor& out) override {
        if (!scratch_.same_shape(input)) scratch_ = Tensor::zeros_like(input);
        out.fill(0.0);
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            terms_[i]->gradient(input, scratch_);
            const double c = coefficients_[i];
            double* dst = out.data();
            const double* src = scratch_.data();
            for (std::size_t j = 0; j < out.size(); ++j) dst[j] += c * src[j];
        }
    }

    std::unique_ptr<LogitFunction> clone() const override {
        return std::make_unique<WeightedSum>(*this);
    }

  private:
    std::vector<double> coefficients_;
    std::vector<std::unique_ptr<LogitFunction>> terms_;
    Tensor scratch_;
};

}  // namespace attribkit

#include "cqural/tensor.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cqural {

int shape_product(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), st_(std::make_shared<Storage>()) {
    for (int d : shape_) {
        if (d < 0) throw DimensionError("tensor extent must be nonnegative, got " + shape_string(shape_));
    }
    st_->data.assign(static_cast<size_t>(shape_product(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), st_(std::make_shared<Storage>()) {
    if (shape_product(shape_) != static_cast<int>(values.size())) {
        throw DimensionError("value count " + std::to_string(values.size()) +
                             " does not match shape " + shape_string(shape_));
    }
    st_->data = std::move(values);
}

double Tensor::item() const {
    if (size() != 1) throw UsageError("item() requires a scalar tensor, shape is " + shape_string(shape_));
    return st_->data[0];
}

std::vector<double>& Tensor::grad() {
    if (st_->grad.empty()) st_->grad.assign(st_->data.size(), 0.0);
    return st_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (st_->grad.empty()) throw UsageError("gradient not populated");
    return st_->grad;
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
    if (g.size() != st_->data.size()) throw DimensionError("gradient size mismatch");
    auto& dst = grad();
    for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

bool Tensor::all_finite() const {
    for (double v : st_->data) {
        if (!std::isfinite(v)) return false;
    }
    if (!st_->grad.empty()) {
        for (double v : st_->grad) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

namespace {
unsigned long long next_tape_generation() {
    static std::atomic<unsigned long long> counter{0};
    return ++counter;
}
}  // namespace

Tape::Tape() : gen_(next_tape_generation()) {}

void Tape::clear() {
    nodes_.clear();
    gen_ = next_tape_generation();
}

int Tape::watch(Tensor& t) {
    if (t.tape_generation() == gen_ && t.node() >= 0) return t.node();
    nodes_.push_back(Node{"leaf", {}, t.storage(), nullptr});
    int id = static_cast<int>(nodes_.size()) - 1;
    t.set_node(id, gen_);
    return id;
}

int Tape::node_of(const Tensor& t) {
    return watch(const_cast<Tensor&>(t));
}

int Tape::record(std::string op, std::vector<int> inputs, Tensor& out, BackwardFn back) {
    for (int in : inputs) {
        if (in < 0 || in >= static_cast<int>(nodes_.size())) {
            throw UsageError("tape op '" + op + "' references input node " + std::to_string(in) +
                             " not on this tape");
        }
    }
    nodes_.push_back(Node{std::move(op), std::move(inputs), out.storage(), std::move(back)});
    int id = static_cast<int>(nodes_.size()) - 1;
    out.set_node(id, gen_);
    return id;
}

void Tape::backward(const Tensor& loss) {
    if (loss.tape_generation() != gen_ || loss.node() < 0 ||
        loss.node() >= static_cast<int>(nodes_.size())) {
        throw UsageError("backward requires a scalar produced on this tape");
    }
    if (loss.size() != 1) throw UsageError("backward requires a scalar loss");
    if (nodes_[static_cast<size_t>(loss.node())].out != loss.storage()) {
        throw UsageError("loss tensor does not match its tape node");
    }

    nodes_[static_cast<size_t>(loss.node())].out->grad.assign(1, 1.0);
    for (int i = loss.node(); i >= 0; --i) {
        Node& node = nodes_[static_cast<size_t>(i)];
        if (!node.back || node.out->grad.empty()) continue;
        node.back(node.out->grad);
    }
    clear();
}

}  // namespace cqural

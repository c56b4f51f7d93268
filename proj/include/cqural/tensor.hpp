#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cqural/errors.hpp"

namespace cqural {

// Dense row-major double tensor. Copies share storage (data and grad live in
// one control block), so a parameter handle kept in an optimizer list sees
// gradients deposited by a backward pass over a model-held handle.
class Tensor {
public:
    Tensor() : shape_{0}, st_(std::make_shared<Storage>()) {}
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> values);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int size() const { return static_cast<int>(st_->data.size()); }
    int dim(int axis) const { return shape_.at(static_cast<size_t>(axis)); }

    double* data() { return st_->data.data(); }
    const double* data() const { return st_->data.data(); }
    std::vector<double>& values() { return st_->data; }
    const std::vector<double>& values() const { return st_->data; }
    double item() const;

    bool has_grad() const { return !st_->grad.empty(); }
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void accumulate_grad(const std::vector<double>& g);
    void zero_grad() { st_->grad.clear(); }

    // Node ids are only meaningful for the tape generation that issued them;
    // a cleared tape invalidates them wholesale.
    int node() const { return node_; }
    unsigned long long tape_generation() const { return tape_gen_; }
    void set_node(int id, unsigned long long gen) {
        node_ = id;
        tape_gen_ = gen;
    }

    bool all_finite() const;
    bool shares_storage_with(const Tensor& other) const { return st_ == other.st_; }

    struct Storage {
        std::vector<double> data;
        std::vector<double> grad;  // empty = absent; sized like data once touched
    };
    const std::shared_ptr<Storage>& storage() const { return st_; }

private:
    std::vector<int> shape_;
    std::shared_ptr<Storage> st_;
    int node_ = -1;  // id on the issuing tape, -1 = off-tape
    unsigned long long tape_gen_ = 0;
};

int shape_product(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

// Wengert list for reverse-mode differentiation. Nodes are appended in
// execution order, so every node's inputs precede it; backward() replays the
// list once in reverse and then clears it (one tape per batch).
class Tape {
public:
    using BackwardFn = std::function<void(const std::vector<double>& out_grad)>;

    Tape();

    // Registers a parameter leaf so downstream ops can reference it.
    int watch(Tensor& t);

    // Returns the tensor's node id on this tape, watching it as a leaf if it
    // is not already recorded here.
    int node_of(const Tensor& t);

    // Records an op node. `back` receives d(loss)/d(output) and must
    // accumulate into the captured input storages.
    int record(std::string op, std::vector<int> inputs, Tensor& out, BackwardFn back);

    // Seeds d(loss)/d(loss) = 1, walks the list in reverse visiting each node
    // exactly once, then clears the tape (stale node ids are invalidated by
    // bumping the generation).
    void backward(const Tensor& loss);

    size_t node_count() const { return nodes_.size(); }
    unsigned long long generation() const { return gen_; }
    void clear();

private:
    struct Node {
        std::string op;
        std::vector<int> inputs;
        std::shared_ptr<Tensor::Storage> out;
        BackwardFn back;  // null for leaves
    };
    std::vector<Node> nodes_;
    unsigned long long gen_;
};

enum class Mode { train, eval };

}  // namespace cqural

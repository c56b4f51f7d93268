#include "cqural/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cqural {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

void validate(const ExperimentConfig& cfg) {
    const std::set<std::string> datasets{"synthetic", "mnist", "cifar10"};
    const std::set<std::string> models{"cqural", "cnn", "svm", "hybrid_svm", "qnn"};
    const std::set<std::string> head_modes{"amplitude", "angle"};
    const std::set<std::string> sources{"same", "cross"};
    if (!datasets.count(cfg.dataset)) throw ConfigError("unknown dataset '" + cfg.dataset + "'");
    if (!models.count(cfg.model)) throw ConfigError("unknown model '" + cfg.model + "'");
    if (!head_modes.count(cfg.head_mode)) throw ConfigError("unknown head_mode '" + cfg.head_mode + "'");
    if (!sources.count(cfg.injection_source)) {
        throw ConfigError("unknown injection_source '" + cfg.injection_source + "'");
    }
    if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (cfg.checkpoint_stride < 1) throw ConfigError("checkpoint_stride must be at least 1");
    if (cfg.lr <= 0.0) throw ConfigError("lr must be positive");
    if (cfg.injection_epoch < 1 || cfg.injection_epoch > cfg.epochs) {
        throw ConfigError("injection_epoch must lie in [1, epochs]");
    }
    if (cfg.injection_ratio < 0.0) throw ConfigError("injection_ratio must be nonnegative");
    if (cfg.injection_fraction < 0.0) throw ConfigError("injection_fraction must be nonnegative");
    if (cfg.samples_per_class < 2) throw ConfigError("samples_per_class must be at least 2");
    if (cfg.class_a == cfg.class_b) throw ConfigError("class_pair must name two distinct classes");
    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (cfg.shots < 0) throw ConfigError("shots must be nonnegative");
    if (cfg.dropout_p < 0.0 || cfg.dropout_p >= 1.0) throw ConfigError("dropout_p must lie in [0, 1)");
    if (cfg.replay.lambda < 0.0) throw ConfigError("replay.lambda must be nonnegative");
    if (cfg.replay.capacity_per_class < 1) throw ConfigError("replay.capacity_per_class must be positive");
    if (cfg.replay.confidence_threshold < 0.0 || cfg.replay.confidence_threshold >= 1.0) {
        throw ConfigError("replay.confidence must lie in [0, 1)");
    }
    if (cfg.explain_alpha < 0.0 || cfg.explain_alpha > 1.0) {
        throw ConfigError("explain_alpha must lie in [0, 1]");
    }
    if (cfg.dataset == "mnist" && (cfg.mnist_images.empty() || cfg.mnist_labels.empty())) {
        throw ConfigError("mnist dataset needs mnist_images and mnist_labels paths");
    }
    if (cfg.dataset == "cifar10" && cfg.cifar_batches.empty()) {
        throw ConfigError("cifar10 dataset needs cifar_batches paths");
    }
}

}  // namespace

HeadMode ExperimentConfig::head_mode_enum() const {
    return head_mode == "angle" ? HeadMode::angle : HeadMode::amplitude;
}

TrainConfig ExperimentConfig::train_config(std::uint32_t seed) const {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.checkpoint_stride = checkpoint_stride;
    tc.batch_size = batch_size;
    tc.lr = lr;
    tc.seed = seed;
    tc.injection_epoch = injection_epoch;
    tc.injection_ratio = injection_ratio;
    tc.replay = replay;
    return tc;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");

    const std::set<std::string> known{
        "dataset",        "mnist_images",   "mnist_labels",    "cifar_batches",
        "class_pair",     "samples_per_class", "injection_fraction", "injection_source",
        "model",          "epochs",         "checkpoint_stride", "batch_size",
        "lr",             "injection_epoch", "injection_ratio", "head_mode",
        "shots",          "conv1_channels", "conv2_channels",  "kernel_size",
        "fc4_width",      "dropout_p",      "replay",          "synthetic",
        "svm",            "hybrid_svm",     "seeds",           "out_dir",
        "explain",        "explain_alpha"};
    reject_unknown_keys(root, known, "");

    ExperimentConfig cfg;
    read_field(root, "dataset", cfg.dataset);
    read_field(root, "mnist_images", cfg.mnist_images);
    read_field(root, "mnist_labels", cfg.mnist_labels);
    read_field(root, "cifar_batches", cfg.cifar_batches);
    if (root.contains("class_pair")) {
        std::vector<int> pair;
        read_field(root, "class_pair", pair);
        if (pair.size() != 2) throw ConfigError("class_pair must hold exactly 2 class ids");
        cfg.class_a = pair[0];
        cfg.class_b = pair[1];
    }
    read_field(root, "samples_per_class", cfg.samples_per_class);
    read_field(root, "injection_fraction", cfg.injection_fraction);
    read_field(root, "injection_source", cfg.injection_source);
    read_field(root, "model", cfg.model);
    read_field(root, "epochs", cfg.epochs);
    read_field(root, "checkpoint_stride", cfg.checkpoint_stride);
    read_field(root, "batch_size", cfg.batch_size);
    read_field(root, "lr", cfg.lr);
    read_field(root, "injection_epoch", cfg.injection_epoch);
    read_field(root, "injection_ratio", cfg.injection_ratio);
    read_field(root, "head_mode", cfg.head_mode);
    read_field(root, "shots", cfg.shots);
    read_field(root, "conv1_channels", cfg.conv1_channels);
    read_field(root, "conv2_channels", cfg.conv2_channels);
    read_field(root, "kernel_size", cfg.kernel_size);
    read_field(root, "fc4_width", cfg.fc4_width);
    read_field(root, "dropout_p", cfg.dropout_p);
    if (root.contains("replay")) {
        const json& rep = root.at("replay");
        if (!rep.is_object()) throw ConfigError("replay must be an object");
        reject_unknown_keys(rep, {"enabled", "lambda", "confidence", "capacity_per_class",
                                  "replay_in_task_loss"},
                            "replay");
        read_field(rep, "enabled", cfg.replay.enabled);
        read_field(rep, "lambda", cfg.replay.lambda);
        read_field(rep, "confidence", cfg.replay.confidence_threshold);
        read_field(rep, "capacity_per_class", cfg.replay.capacity_per_class);
        read_field(rep, "replay_in_task_loss", cfg.replay.replay_in_task_loss);
    }
    if (root.contains("synthetic")) {
        const json& syn = root.at("synthetic");
        if (!syn.is_object()) throw ConfigError("synthetic must be an object");
        reject_unknown_keys(syn, {"height", "width", "margin"}, "synthetic");
        read_field(syn, "height", cfg.synthetic_height);
        read_field(syn, "width", cfg.synthetic_width);
        read_field(syn, "margin", cfg.synthetic_margin);
    }
    if (root.contains("svm")) {
        const json& svm = root.at("svm");
        if (!svm.is_object()) throw ConfigError("svm must be an object");
        reject_unknown_keys(svm, {"lambda", "epochs"}, "svm");
        read_field(svm, "lambda", cfg.svm_lambda);
        read_field(svm, "epochs", cfg.svm_epochs);
    }
    if (root.contains("hybrid_svm")) {
        const json& hs = root.at("hybrid_svm");
        if (!hs.is_object()) throw ConfigError("hybrid_svm must be an object");
        reject_unknown_keys(hs, {"gamma"}, "hybrid_svm");
        read_field(hs, "gamma", cfg.hybrid_svm_gamma);
    }
    read_field(root, "seeds", cfg.seeds);
    read_field(root, "out_dir", cfg.out_dir);
    read_field(root, "explain", cfg.explain);
    read_field(root, "explain_alpha", cfg.explain_alpha);

    validate(cfg);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string echo_experiment_config(const ExperimentConfig& cfg) {
    json root{
        {"dataset", cfg.dataset},
        {"mnist_images", cfg.mnist_images},
        {"mnist_labels", cfg.mnist_labels},
        {"cifar_batches", cfg.cifar_batches},
        {"class_pair", {cfg.class_a, cfg.class_b}},
        {"samples_per_class", cfg.samples_per_class},
        {"injection_fraction", cfg.injection_fraction},
        {"injection_source", cfg.injection_source},
        {"model", cfg.model},
        {"epochs", cfg.epochs},
        {"checkpoint_stride", cfg.checkpoint_stride},
        {"batch_size", cfg.batch_size},
        {"lr", cfg.lr},
        {"injection_epoch", cfg.injection_epoch},
        {"injection_ratio", cfg.injection_ratio},
        {"head_mode", cfg.head_mode},
        {"shots", cfg.shots},
        {"conv1_channels", cfg.conv1_channels},
        {"conv2_channels", cfg.conv2_channels},
        {"kernel_size", cfg.kernel_size},
        {"fc4_width", cfg.fc4_width},
        {"dropout_p", cfg.dropout_p},
        {"replay",
         {{"enabled", cfg.replay.enabled},
          {"lambda", cfg.replay.lambda},
          {"confidence", cfg.replay.confidence_threshold},
          {"capacity_per_class", cfg.replay.capacity_per_class},
          {"replay_in_task_loss", cfg.replay.replay_in_task_loss}}},
        {"synthetic",
         {{"height", cfg.synthetic_height},
          {"width", cfg.synthetic_width},
          {"margin", cfg.synthetic_margin}}},
        {"svm", {{"lambda", cfg.svm_lambda}, {"epochs", cfg.svm_epochs}}},
        {"hybrid_svm", {{"gamma", cfg.hybrid_svm_gamma}}},
        {"seeds", cfg.seeds},
        {"out_dir", cfg.out_dir},
        {"explain", cfg.explain},
        {"explain_alpha", cfg.explain_alpha},
    };
    return root.dump(2) + "\n";
}

}  // namespace cqural

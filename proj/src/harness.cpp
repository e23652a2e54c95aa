#include "fatformer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "fatformer/checkpoint.hpp"

namespace ftf {

using ordered_json = nlohmann::ordered_json;
using datagen::DatasetBundle;
using datagen::LabeledImage;

// ---------------------------------------------------------------------------
// TrainConfig
// ---------------------------------------------------------------------------

ModelConfig TrainConfig::model_config() const {
    ModelConfig m;
    m.img.image_size = image_size;
    m.img.patch_size = patch_size;
    m.img.embed_dim = embed_dim;
    m.img.heads = heads;
    if (adapter_count == 0) {
        m.img.stages = 4;
        m.img.layers = 8;
    } else {
        // one adapter per stage gap, two layers per stage
        m.img.stages = adapter_count + 1;
        m.img.layers = 2 * (adapter_count + 1);
    }
    m.text_layers = text_layers;
    m.context_count = context_count;
    m.adapter_count = adapter_count;
    m.kernel_size = kernel_size;
    m.image_branch = image_branch;
    m.freq_branch = freq_branch;
    m.interaction = interaction;
    m.prompt = prompt;
    m.condition = condition;
    m.loss_mode = loss_mode;
    return m;
}

double TrainConfig::lr_at_epoch(int epoch) const {
    return learning_rate * std::pow(lr_decay_factor, epoch / lr_decay_epochs);
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "learning_rate = " << learning_rate << "\n";
    os << "beta1 = " << beta1 << "\n";
    os << "beta2 = " << beta2 << "\n";
    os << "epochs = " << epochs << "\n";
    os << "batch_size = " << batch_size << "\n";
    os << "lr_decay_factor = " << lr_decay_factor << "\n";
    os << "lr_decay_epochs = " << lr_decay_epochs << "\n";
    os << "seed = " << seed << "\n";
    os << "image_branch = " << (image_branch ? "true" : "false") << "\n";
    os << "freq_branch = " << (freq_branch ? "true" : "false") << "\n";
    os << "interaction = " << to_string(interaction) << "\n";
    os << "prompt = " << to_string(prompt) << "\n";
    os << "condition = " << to_string(condition) << "\n";
    os << "loss_mode = " << to_string(loss_mode) << "\n";
    os << "adapter_count = " << adapter_count << "\n";
    os << "context_count = " << context_count << "\n";
    os << "kernel_size = " << kernel_size << "\n";
    os << "image_size = " << image_size << "\n";
    os << "patch_size = " << patch_size << "\n";
    os << "embed_dim = " << embed_dim << "\n";
    os << "heads = " << heads << "\n";
    os << "text_layers = " << text_layers << "\n";
    return os.str();
}

std::string TrainConfig::fingerprint() const {
    std::ostringstream os;
    os << std::hex << datagen::fnv1a64(to_text());
    return os.str();
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + v);
}

Interaction parse_interaction(const std::string& v) {
    if (v == "intra") return Interaction::Intra;
    if (v == "inter") return Interaction::Inter;
    if (v == "both") return Interaction::Both;
    throw ConfigError("config: unknown interaction mode: " + v);
}

PromptMode parse_prompt(const std::string& v) {
    if (v == "fixed") return PromptMode::Fixed;
    if (v == "auto") return PromptMode::Auto;
    throw ConfigError("config: unknown prompt mode: " + v);
}

ConditionMode parse_condition(const std::string& v) {
    if (v == "none") return ConditionMode::None;
    if (v == "cls") return ConditionMode::Cls;
    if (v == "patch") return ConditionMode::Patch;
    throw ConfigError("config: unknown condition mode: " + v);
}

LossMode parse_loss(const std::string& v) {
    if (v == "linear_probe") return LossMode::LinearProbe;
    if (v == "contra") return LossMode::Contrastive;
    if (v == "aug_contra") return LossMode::AugContrastive;
    throw ConfigError("config: unknown loss mode: " + v);
}

std::string trimmed(std::string s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace

void TrainConfig::apply_override(const std::string& key, const std::string& value) {
    if (key == "learning_rate") learning_rate = std::stod(value);
    else if (key == "beta1") beta1 = std::stod(value);
    else if (key == "beta2") beta2 = std::stod(value);
    else if (key == "epochs") epochs = std::stoi(value);
    else if (key == "batch_size") batch_size = std::stoi(value);
    else if (key == "lr_decay_factor") lr_decay_factor = std::stod(value);
    else if (key == "lr_decay_epochs") lr_decay_epochs = std::stoi(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "image_branch") image_branch = parse_bool(value, key);
    else if (key == "freq_branch") freq_branch = parse_bool(value, key);
    else if (key == "interaction") interaction = parse_interaction(value);
    else if (key == "prompt") prompt = parse_prompt(value);
    else if (key == "condition") condition = parse_condition(value);
    else if (key == "loss_mode") loss_mode = parse_loss(value);
    else if (key == "adapter_count") adapter_count = std::stoi(value);
    else if (key == "context_count") context_count = std::stoi(value);
    else if (key == "kernel_size") kernel_size = std::stoi(value);
    else if (key == "image_size") image_size = std::stoi(value);
    else if (key == "patch_size") patch_size = std::stoi(value);
    else if (key == "embed_dim") embed_dim = std::stoi(value);
    else if (key == "heads") heads = std::stoi(value);
    else if (key == "text_layers") text_layers = std::stoi(value);
    else throw ConfigError("config: unknown key: " + key);
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config: " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        cfg.apply_override(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

Tensor image_tensor(const std::vector<float>& pixels) {
    return Tensor::from({3, datagen::kImageSize, datagen::kImageSize}, pixels);
}

std::string hex64(uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

}  // namespace

std::vector<double> score_split(const Model& model, const std::vector<LabeledImage>& split) {
    NoGrad off;
    std::vector<double> scores;
    scores.reserve(split.size());
    for (const auto& img : split) scores.push_back(model.score(image_tensor(img.pixels)));
    return scores;
}

SplitResult evaluate_split(const Model& model, const std::vector<LabeledImage>& split,
                           const std::string& name) {
    if (split.empty()) throw DataError("evaluate: empty split " + name);
    const auto scores = score_split(model, split);
    std::vector<int> labels;
    labels.reserve(split.size());
    for (const auto& img : split) labels.push_back(img.label);
    SplitResult r;
    r.name = name;
    r.acc = accuracy(scores, labels);
    r.ap = average_precision(scores, labels);
    return r;
}

std::string EvalReport::to_json() const {
    ordered_json j;
    ordered_json js = ordered_json::object();
    for (const auto& s : splits) js[s.name] = ordered_json{{"acc", s.acc}, {"ap", s.ap}};
    j["splits"] = js;
    j["acc_m"] = acc_m;
    j["ap_m"] = ap_m;
    j["loss_curve"] = loss_curve;
    j["val_acc_curve"] = val_acc_curve;
    j["config_fingerprint"] = config_fingerprint;
    j["dataset_hash"] = dataset_hash;
    j["log_clamp_count"] = log_clamp_count;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

void require_oracle_precondition(const DatasetBundle& data) {
    if (data.train.empty() || data.test_in.empty() || data.test_cross.empty())
        throw DataError("dataset has empty splits");
    const auto oracle = datagen::calibrate_oracle(data.train);
    const double acc_in = datagen::oracle_accuracy(oracle, data.test_in);
    const double acc_cross = datagen::oracle_accuracy(oracle, data.test_cross);
    if (acc_in < 0.99 || acc_cross < 0.95)
        throw DataError("oracle separability gate failed: test_in " + std::to_string(acc_in) +
                        " (need >= 0.99), test_cross " + std::to_string(acc_cross) +
                        " (need >= 0.95); the dataset, not the model, is at fault");
}

namespace {

// Training-time augmentation: random crop-window translation plus a
// horizontal flip half the time; evaluation uses the centered full frame.
//
// The synthetic fields are periodic (circular construction), so both
// augmentations act on the torus and stay aligned with the 2-px sampling
// lattice: translations use even offsets and the flip mirrors about a
// lattice axis (x -> -x mod side). Resampling crops or half-lattice shifts
// would silently flip or erase the Nyquist-frequency artifacts the detector
// is supposed to learn, which is the job of the robustness perturbations,
// not of training augmentation.
std::vector<float> translate_wrap(const std::vector<float>& pixels, int dx, int dy) {
    const int side = datagen::kImageSize;
    std::vector<float> out(pixels.size());
    for (int c = 0; c < datagen::kChannels; ++c)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const int sy = ((y + dy) % side + side) % side;
                const int sx = ((x + dx) % side + side) % side;
                out[static_cast<size_t>((c * side + y) * side + x)] =
                    pixels[static_cast<size_t>((c * side + sy) * side + sx)];
            }
    return out;
}

std::vector<float> hflip_lattice(const std::vector<float>& pixels) {
    const int side = datagen::kImageSize;
    std::vector<float> out(pixels.size());
    for (int c = 0; c < datagen::kChannels; ++c)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                out[static_cast<size_t>((c * side + y) * side + x)] =
                    pixels[static_cast<size_t>((c * side + y) * side + (side - x) % side)];
    return out;
}

std::vector<float> augment(const std::vector<float>& pixels, Rng& rng) {
    const int dx = 2 * rng.uniform_int(-2, 2);
    const int dy = 2 * rng.uniform_int(-2, 2);
    std::vector<float> out =
        (dx == 0 && dy == 0) ? pixels : translate_wrap(pixels, dx, dy);
    if (rng.coin()) out = hflip_lattice(out);
    return out;
}

double param_norm(const std::vector<Tensor>& params) {
    double s = 0;
    for (const auto& p : params)
        for (float v : *p.data) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

}  // namespace

TrainOutcome train(const TrainConfig& cfg, const DatasetBundle& data) {
    require_oracle_precondition(data);

    TrainOutcome out;
    out.model.init(cfg.model_config(), cfg.seed);
    auto trainable = out.model.trainable_params();
    out.adam.init(trainable);
    out.adam.beta1 = static_cast<float>(cfg.beta1);
    out.adam.beta2 = static_cast<float>(cfg.beta2);
    const uint64_t clamps_before = log_clamp_events();

    const int n = static_cast<int>(data.train.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        out.adam.lr = static_cast<float>(cfg.lr_at_epoch(epoch));
        Rng shuffle_rng(Rng::derive(cfg.seed, {0x54FF1E, static_cast<uint64_t>(epoch)}));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)],
                      order[static_cast<size_t>(shuffle_rng.uniform_int(0, i))]);

        double epoch_loss = 0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            double batch_loss = 0;
            for (int bi = 0; bi < bsz; ++bi) {
                const int idx = order[static_cast<size_t>(start + bi)];
                const auto& img = data.train[static_cast<size_t>(idx)];
                Rng aug_rng(Rng::derive(cfg.seed, {0xA7160, static_cast<uint64_t>(epoch),
                                                   static_cast<uint64_t>(idx)}));
                auto v = out.model.forward(image_tensor(augment(img.pixels, aug_rng)), img.label);
                const double lv = v.loss.item();
                if (!std::isfinite(lv))
                    throw NumericError("NaN loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batches) + ", parameter norm " +
                                       std::to_string(param_norm(trainable)));
                batch_loss += lv;
                backward(scale(v.loss, 1.0f / static_cast<float>(bsz)));
            }
            adam_step(out.adam, trainable);
            out.model.clamp_temperature();
            epoch_loss += batch_loss / bsz;
            ++batches;
        }
        out.report.loss_curve.push_back(batches ? epoch_loss / batches : 0.0);
        out.report.val_acc_curve.push_back(evaluate_split(out.model, data.val, "val").acc);
    }
    out.epochs_run = cfg.epochs;

    out.report.splits.push_back(evaluate_split(out.model, data.val, "val"));
    out.report.splits.push_back(evaluate_split(out.model, data.test_in, "test_in"));
    out.report.splits.push_back(evaluate_split(out.model, data.test_cross, "test_cross"));
    double acc_sum = 0, ap_sum = 0;
    for (const auto& s : out.report.splits) {
        acc_sum += s.acc;
        ap_sum += s.ap;
    }
    out.report.acc_m = acc_sum / static_cast<double>(out.report.splits.size());
    out.report.ap_m = ap_sum / static_cast<double>(out.report.splits.size());
    out.report.config_fingerprint = cfg.fingerprint();
    out.report.dataset_hash = hex64(datagen::fnv1a64(datagen::manifest_text(data)));
    out.report.log_clamp_count = log_clamp_events() - clamps_before;
    return out;
}

// ---------------------------------------------------------------------------
// ablation
// ---------------------------------------------------------------------------

std::vector<std::string> ablation_axes() {
    return {"branch",     "interaction",   "loss-mode",   "prompt",
            "components", "adapter-count", "context-count", "kernel-size", "none"};
}

std::vector<std::pair<std::string, TrainConfig>> ablation_rows(const TrainConfig& base,
                                                               const std::string& axis) {
    std::vector<std::pair<std::string, TrainConfig>> rows;
    auto row = [&rows, &base](const std::string& name) -> TrainConfig& {
        rows.emplace_back(name, base);
        return rows.back().second;
    };

    if (axis == "branch") {
        row("img+freq");
        row("img_only").freq_branch = false;
        row("freq_only").image_branch = false;
    } else if (axis == "interaction") {
        row("intra").interaction = Interaction::Intra;
        row("inter").interaction = Interaction::Inter;
        row("intra+inter").interaction = Interaction::Both;
    } else if (axis == "loss-mode") {
        row("linear_probe").loss_mode = LossMode::LinearProbe;
        row("contra").loss_mode = LossMode::Contrastive;
        row("aug_contra").loss_mode = LossMode::AugContrastive;
    } else if (axis == "prompt") {
        auto& fixed = row("fixed_template");
        fixed.prompt = PromptMode::Fixed;
        fixed.condition = ConditionMode::None;
        auto& plain = row("auto_embedding");
        plain.prompt = PromptMode::Auto;
        plain.condition = ConditionMode::None;
        row("auto+cls_condition").condition = ConditionMode::Cls;
        row("auto+patch_condition").condition = ConditionMode::Patch;
    } else if (axis == "components") {
        // zero-shot structure: no adapters, no alignment, no training
        auto& none = row("none");
        none.adapter_count = 0;
        none.loss_mode = LossMode::Contrastive;
        none.prompt = PromptMode::Fixed;
        none.condition = ConditionMode::None;
        none.epochs = 0;
        row("faa").loss_mode = LossMode::LinearProbe;
        row("lga").adapter_count = 0;
        row("faa+lga");
    } else if (axis == "adapter-count") {
        for (int k : {2, 3, 4}) row(std::to_string(k)).adapter_count = k;
    } else if (axis == "context-count") {
        for (int c : {4, 8, 16}) row(std::to_string(c)).context_count = c;
    } else if (axis == "kernel-size") {
        for (int k : {1, 3, 5}) row(std::to_string(k)).kernel_size = k;
    } else if (axis == "none") {
        row("full");
    } else {
        throw ParamError("unknown ablation axis: " + axis);
    }
    return rows;
}

std::vector<AblationRow> ablate(const TrainConfig& base, const std::string& axis,
                                const DatasetBundle& data) {
    std::vector<AblationRow> out;
    for (auto& [name, cfg] : ablation_rows(base, axis)) {
        AblationRow row;
        row.setting = name;
        row.cfg = cfg;
        row.report = train(cfg, data).report;
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// robustness
// ---------------------------------------------------------------------------

namespace {

std::vector<LabeledImage> perturb_split(const std::vector<LabeledImage>& split,
                                        const datagen::PerturbationConfig& cfg, uint64_t seed,
                                        uint64_t tag) {
    std::vector<LabeledImage> out;
    out.reserve(split.size());
    for (size_t i = 0; i < split.size(); ++i)
        out.push_back(datagen::perturb(split[i], cfg,
                                       Rng::derive(seed, {tag, static_cast<uint64_t>(i)})));
    return out;
}

}  // namespace

std::vector<RobustnessRow> robustness_eval(const Model& model, const DatasetBundle& data,
                                           uint64_t seed) {
    std::vector<std::pair<std::string, datagen::PerturbationConfig>> settings;
    settings.emplace_back("clean", datagen::PerturbationConfig{});
    {
        datagen::PerturbationConfig c;
        c.crop = true;
        settings.emplace_back("crop", c);
    }
    {
        datagen::PerturbationConfig c;
        c.blur = true;
        settings.emplace_back("blur", c);
    }
    {
        datagen::PerturbationConfig c;
        c.dct_quantize = true;
        settings.emplace_back("jpeg", c);
    }
    {
        datagen::PerturbationConfig c;
        c.noise = true;
        settings.emplace_back("noise", c);
    }
    settings.emplace_back("combined", datagen::PerturbationConfig::all());

    std::vector<RobustnessRow> rows;
    uint64_t tag = 0;
    for (const auto& [name, cfg] : settings) {
        RobustnessRow row;
        row.perturbation = name;
        if (cfg.any()) {
            row.test_in = evaluate_split(model, perturb_split(data.test_in, cfg, seed, tag * 2),
                                         "test_in");
            row.test_cross = evaluate_split(
                model, perturb_split(data.test_cross, cfg, seed, tag * 2 + 1), "test_cross");
        } else {
            row.test_in = evaluate_split(model, data.test_in, "test_in");
            row.test_cross = evaluate_split(model, data.test_cross, "test_cross");
        }
        rows.push_back(row);
        ++tag;
    }
    return rows;
}

std::string robustness_json(const std::vector<RobustnessRow>& rows) {
    ordered_json j = ordered_json::object();
    for (const auto& r : rows) {
        j[r.perturbation] = ordered_json{
            {"test_in", {{"acc", r.test_in.acc}, {"ap", r.test_in.ap}}},
            {"test_cross", {{"acc", r.test_cross.acc}, {"ap", r.test_cross.ap}}},
        };
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMetaPrefix = "meta.";

std::vector<std::pair<std::string, float>> meta_entries(const TrainConfig& cfg, int epoch,
                                                        long adam_step) {
    std::vector<std::pair<std::string, float>> m;
    m.emplace_back("meta.format", 1.0f);
    m.emplace_back("meta.epoch", static_cast<float>(epoch));
    m.emplace_back("meta.adam_step", static_cast<float>(adam_step));
    m.emplace_back("meta.learning_rate", static_cast<float>(cfg.learning_rate));
    m.emplace_back("meta.beta1", static_cast<float>(cfg.beta1));
    m.emplace_back("meta.beta2", static_cast<float>(cfg.beta2));
    m.emplace_back("meta.epochs", static_cast<float>(cfg.epochs));
    m.emplace_back("meta.batch_size", static_cast<float>(cfg.batch_size));
    m.emplace_back("meta.lr_decay_factor", static_cast<float>(cfg.lr_decay_factor));
    m.emplace_back("meta.lr_decay_epochs", static_cast<float>(cfg.lr_decay_epochs));
    m.emplace_back("meta.image_branch", cfg.image_branch ? 1.0f : 0.0f);
    m.emplace_back("meta.freq_branch", cfg.freq_branch ? 1.0f : 0.0f);
    m.emplace_back("meta.interaction", static_cast<float>(static_cast<int>(cfg.interaction)));
    m.emplace_back("meta.prompt", static_cast<float>(static_cast<int>(cfg.prompt)));
    m.emplace_back("meta.condition", static_cast<float>(static_cast<int>(cfg.condition)));
    m.emplace_back("meta.loss_mode", static_cast<float>(static_cast<int>(cfg.loss_mode)));
    m.emplace_back("meta.adapter_count", static_cast<float>(cfg.adapter_count));
    m.emplace_back("meta.context_count", static_cast<float>(cfg.context_count));
    m.emplace_back("meta.kernel_size", static_cast<float>(cfg.kernel_size));
    m.emplace_back("meta.image_size", static_cast<float>(cfg.image_size));
    m.emplace_back("meta.patch_size", static_cast<float>(cfg.patch_size));
    m.emplace_back("meta.embed_dim", static_cast<float>(cfg.embed_dim));
    m.emplace_back("meta.heads", static_cast<float>(cfg.heads));
    m.emplace_back("meta.text_layers", static_cast<float>(cfg.text_layers));
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model, const AdamState& adam, int epoch,
                     const TrainConfig& cfg) {
    std::vector<NamedTensor> tensors;
    auto named = model.named_params();
    for (auto& [name, t] : named)
        tensors.push_back(NamedTensor{name, t.shape, *t.data});

    size_t slot = 0;
    for (auto& [name, t] : named) {
        if (!t.requires_grad) continue;
        if (slot >= adam.m.size()) throw ContractError("checkpoint: optimizer state too short");
        tensors.push_back(NamedTensor{"adam.m." + name, t.shape, *adam.m[slot]});
        tensors.push_back(NamedTensor{"adam.v." + name, t.shape, *adam.v[slot]});
        ++slot;
    }

    for (auto& [name, value] : meta_entries(cfg, epoch, adam.step))
        tensors.push_back(NamedTensor{name, {1}, {value}});
    // the training RNG is counter-based: (seed, epoch, index) fully determine
    // every stream, so the seed chunks are the persisted RNG state
    for (int c = 0; c < 4; ++c)
        tensors.push_back(NamedTensor{
            "meta.seed16_" + std::to_string(c),
            {1},
            {static_cast<float>((cfg.seed >> (16 * c)) & 0xFFFFULL)}});

    write_tensor_file(path, tensors);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    auto tensors = read_tensor_file(path);
    std::unordered_map<std::string, const NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;

    auto meta = [&by_name, &path](const std::string& name) -> float {
        auto it = by_name.find(kMetaPrefix + name);
        if (it == by_name.end())
            throw IoError("checkpoint " + path + " missing meta." + name);
        return it->second->values.at(0);
    };

    LoadedCheckpoint out;
    TrainConfig& cfg = out.cfg;
    cfg.learning_rate = meta("learning_rate");
    cfg.beta1 = meta("beta1");
    cfg.beta2 = meta("beta2");
    cfg.epochs = static_cast<int>(meta("epochs"));
    cfg.batch_size = static_cast<int>(meta("batch_size"));
    cfg.lr_decay_factor = meta("lr_decay_factor");
    cfg.lr_decay_epochs = static_cast<int>(meta("lr_decay_epochs"));
    cfg.image_branch = meta("image_branch") != 0.0f;
    cfg.freq_branch = meta("freq_branch") != 0.0f;
    cfg.interaction = static_cast<Interaction>(static_cast<int>(meta("interaction")));
    cfg.prompt = static_cast<PromptMode>(static_cast<int>(meta("prompt")));
    cfg.condition = static_cast<ConditionMode>(static_cast<int>(meta("condition")));
    cfg.loss_mode = static_cast<LossMode>(static_cast<int>(meta("loss_mode")));
    cfg.adapter_count = static_cast<int>(meta("adapter_count"));
    cfg.context_count = static_cast<int>(meta("context_count"));
    cfg.kernel_size = static_cast<int>(meta("kernel_size"));
    cfg.image_size = static_cast<int>(meta("image_size"));
    cfg.patch_size = static_cast<int>(meta("patch_size"));
    cfg.embed_dim = static_cast<int>(meta("embed_dim"));
    cfg.heads = static_cast<int>(meta("heads"));
    cfg.text_layers = static_cast<int>(meta("text_layers"));
    uint64_t seed = 0;
    for (int c = 0; c < 4; ++c)
        seed |= static_cast<uint64_t>(meta("seed16_" + std::to_string(c))) << (16 * c);
    cfg.seed = seed;
    out.epoch = static_cast<int>(meta("epoch"));

    out.model.init(cfg.model_config(), cfg.seed);
    auto named = out.model.named_params();
    for (auto& [name, t] : named) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw IoError("checkpoint " + path + " missing tensor " + name);
        if (it->second->shape != t.shape)
            throw IoError("checkpoint tensor " + name + " has shape mismatch");
        *t.data = it->second->values;
    }

    out.adam.init(out.model.trainable_params());
    out.adam.step = static_cast<long>(meta("adam_step"));
    out.adam.beta1 = static_cast<float>(cfg.beta1);
    out.adam.beta2 = static_cast<float>(cfg.beta2);
    size_t slot = 0;
    for (auto& [name, t] : named) {
        if (!t.requires_grad) continue;
        auto mi = by_name.find("adam.m." + name);
        auto vi = by_name.find("adam.v." + name);
        if (mi == by_name.end() || vi == by_name.end())
            throw IoError("checkpoint " + path + " missing optimizer state for " + name);
        *out.adam.m[slot] = mi->second->values;
        *out.adam.v[slot] = vi->second->values;
        ++slot;
    }
    return out;
}

}  // namespace ftf

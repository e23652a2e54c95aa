#pragma once

// Training loop, evaluation, ablation orchestration, robustness protocol and
// checkpoint persistence. Every run is a pure function of (config, seed,
// dataset): shuffles, augmentation draws and initialization all come from
// counter-derived RNG streams, so identical runs produce byte-identical
// checkpoints.
//
// One training run owns its model exclusively. Evaluation over a split is
// read-only with respect to the model.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fatformer/adam.hpp"
#include "fatformer/datagen.hpp"
#include "fatformer/metrics.hpp"
#include "fatformer/model.hpp"

namespace ftf {

struct TrainConfig {
    double learning_rate = 4e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int epochs = 25;
    int batch_size = 32;
    double lr_decay_factor = 0.9;
    int lr_decay_epochs = 10;
    uint64_t seed = 0;

    // ablation switches; defaults reproduce the full model
    bool image_branch = true;
    bool freq_branch = true;
    Interaction interaction = Interaction::Both;
    PromptMode prompt = PromptMode::Auto;
    ConditionMode condition = ConditionMode::Patch;
    LossMode loss_mode = LossMode::AugContrastive;
    int adapter_count = 3;
    int context_count = 8;
    int kernel_size = 1;

    // toy encoder geometry (fixed except where the adapter count reshapes
    // the stage split)
    int image_size = 32;
    int patch_size = 4;
    int embed_dim = 64;
    int heads = 4;
    int text_layers = 2;

    ModelConfig model_config() const;
    double lr_at_epoch(int epoch) const;  // lr * decay^(epoch / decay_epochs)
    std::string to_text() const;          // canonical key=value form
    std::string fingerprint() const;      // hash of the canonical form
    void apply_override(const std::string& key, const std::string& value);
    static TrainConfig from_file(const std::string& path);
};

struct SplitResult {
    std::string name;
    double acc = 0;
    double ap = 0;
};

struct EvalReport {
    std::vector<SplitResult> splits;
    double acc_m = 0;
    double ap_m = 0;
    std::vector<double> loss_curve;     // mean training loss per epoch
    std::vector<double> val_acc_curve;  // validation accuracy per epoch
    std::string config_fingerprint;
    std::string dataset_hash;
    uint64_t log_clamp_count = 0;

    std::string to_json() const;  // stable key order
};

// Oracle separability gate; throws DataError when the synthetic task is not
// solvable, so model claims are never tested on a broken dataset.
void require_oracle_precondition(const datagen::DatasetBundle& data);

struct TrainOutcome {
    Model model;
    AdamState adam;
    int epochs_run = 0;
    EvalReport report;
};

TrainOutcome train(const TrainConfig& cfg, const datagen::DatasetBundle& data);

// Fake-class scores for a split, in sample order.
std::vector<double> score_split(const Model& model, const std::vector<datagen::LabeledImage>& split);
SplitResult evaluate_split(const Model& model, const std::vector<datagen::LabeledImage>& split,
                           const std::string& name);

// ---------------------------------------------------------------------------
// ablation axes (one row per study setting)
// ---------------------------------------------------------------------------

struct AblationRow {
    std::string setting;
    TrainConfig cfg;
    EvalReport report;
};

std::vector<std::string> ablation_axes();
std::vector<std::pair<std::string, TrainConfig>> ablation_rows(const TrainConfig& base,
                                                               const std::string& axis);
std::vector<AblationRow> ablate(const TrainConfig& base, const std::string& axis,
                                const datagen::DatasetBundle& data);

// ---------------------------------------------------------------------------
// robustness protocol: each single perturbation plus the all-four combination
// ---------------------------------------------------------------------------

struct RobustnessRow {
    std::string perturbation;  // "clean", "crop", "blur", "jpeg", "noise", "combined"
    SplitResult test_in;
    SplitResult test_cross;
};

std::vector<RobustnessRow> robustness_eval(const Model& model, const datagen::DatasetBundle& data,
                                           uint64_t seed);
std::string robustness_json(const std::vector<RobustnessRow>& rows);

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, Model& model, const AdamState& adam, int epoch,
                     const TrainConfig& cfg);

struct LoadedCheckpoint {
    Model model;
    AdamState adam;
    int epoch = 0;
    TrainConfig cfg;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace ftf

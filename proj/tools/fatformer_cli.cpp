// Command-line front end: dataset synthesis, training, evaluation, ablation
// sweeps, the robustness protocol and the gradient-check suite.
//
// Exit codes: 0 success, 1 usage/config error, 2 dataset or oracle failure,
// 3 numerical failure (NaN loss or failed gradient check).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fatformer/gradcheck_suite.hpp"
#include "fatformer/harness.hpp"

using namespace ftf;
using ordered_json = nlohmann::ordered_json;

namespace {

TrainConfig config_from(const std::string& config_path,
                        const std::vector<std::string>& overrides) {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = TrainConfig::from_file(config_path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--ablation expects KEY=VALUE, got: " + kv);
        cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write: " + path);
    os << text << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"synthetic-image forgery detector: adapter-augmented toy ViT "
                 "with language-guided contrastive supervision"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate the synthetic forgery corpus");
    std::string synth_out = "dataset";
    int n_train = 512, n_val = 128, n_test = 512;
    uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--train", n_train, "training images (50/50 real vs gen_A)");
    synth->add_option("--val", n_val, "validation images");
    synth->add_option("--test", n_test, "images per test split");
    synth->add_option("--seed", synth_seed, "base seed");

    // train
    auto* tr = app.add_subcommand("train", "train a detector");
    std::string tr_data, tr_config, tr_out = "model.ftfc";
    std::vector<std::string> tr_overrides;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--config", tr_config, "key = value config file");
    tr->add_option("--out", tr_out, "checkpoint path");
    tr->add_option("--ablation", tr_overrides, "KEY=VALUE switch override (repeatable)");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    std::string ev_ckpt, ev_data, ev_split = "in";
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--split", ev_split, "in | cross | val")
        ->check(CLI::IsMember({"in", "cross", "val"}));

    // ablate
    auto* ab = app.add_subcommand("ablate", "train one model per setting of an axis");
    std::string ab_data, ab_axis, ab_out = "ablation", ab_config;
    std::vector<std::string> ab_overrides;
    ab->add_option("--data", ab_data, "dataset directory")->required();
    ab->add_option("--axis", ab_axis, "ablation axis")->required();
    ab->add_option("--out", ab_out, "output directory for reports");
    ab->add_option("--config", ab_config, "base config file");
    ab->add_option("--ablation", ab_overrides, "base KEY=VALUE override (repeatable)");

    // robust
    auto* rb = app.add_subcommand("robust", "perturbation robustness protocol");
    std::string rb_ckpt, rb_data;
    uint64_t rb_seed = 0;
    rb->add_option("--ckpt", rb_ckpt, "checkpoint path")->required();
    rb->add_option("--data", rb_data, "dataset directory")->required();
    rb->add_option("--seed", rb_seed, "perturbation seed");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    bool gc_full = false;
    gc->add_flag("--full", gc_full, "also check the full model loss on a 2-image batch");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (synth->parsed()) {
        auto bundle = datagen::build_splits(n_train, n_val, n_test, synth_seed);
        datagen::write_dataset(synth_out, bundle);
        const auto oracle = datagen::calibrate_oracle(bundle.train);
        const double acc_in = datagen::oracle_accuracy(oracle, bundle.test_in);
        const double acc_cross = datagen::oracle_accuracy(oracle, bundle.test_cross);
        std::printf("wrote %s: train %zu, val %zu, test_in %zu, test_cross %zu\n",
                    synth_out.c_str(), bundle.train.size(), bundle.val.size(),
                    bundle.test_in.size(), bundle.test_cross.size());
        std::printf("oracle threshold %.4e, ACC test_in %.4f, test_cross %.4f\n",
                    oracle.threshold, acc_in, acc_cross);
        if (acc_in < 0.99 || acc_cross < 0.95)
            throw DataError("oracle separability gate failed on the generated corpus");
        return 0;
    }

    if (tr->parsed()) {
        TrainConfig cfg = config_from(tr_config, tr_overrides);
        auto data = datagen::load_dataset(tr_data);
        auto out = train(cfg, data);
        save_checkpoint(tr_out, out.model, out.adam, out.epochs_run, cfg);
        const std::string report_path = tr_out + ".report.json";
        write_text(report_path, out.report.to_json());
        std::printf("checkpoint: %s\nreport: %s\n", tr_out.c_str(), report_path.c_str());
        for (const auto& s : out.report.splits)
            std::printf("%-11s ACC %.4f  AP %.4f\n", s.name.c_str(), s.acc, s.ap);
        return 0;
    }

    if (ev->parsed()) {
        auto loaded = load_checkpoint(ev_ckpt);
        auto data = datagen::load_dataset(ev_data);
        auto result = evaluate_split(loaded.model, data.split(ev_split), ev_split);
        ordered_json j;
        j["split"] = result.name;
        j["acc"] = result.acc;
        j["ap"] = result.ap;
        j["config_fingerprint"] = loaded.cfg.fingerprint();
        j["dataset_hash"] = [] (const std::string& dir) {
            std::ostringstream os;
            os << std::hex << datagen::manifest_hash(dir);
            return os.str();
        }(ev_data);
        std::printf("%s\n", j.dump(2).c_str());
        return 0;
    }

    if (ab->parsed()) {
        TrainConfig base = config_from(ab_config, ab_overrides);
        auto data = datagen::load_dataset(ab_data);
        auto rows = ablate(base, ab_axis, data);
        std::filesystem::create_directories(ab_out);
        ordered_json table = ordered_json::array();
        std::printf("%-22s %8s %8s\n", "setting", "ACC_M", "AP_M");
        for (const auto& row : rows) {
            ordered_json r;
            r["setting"] = row.setting;
            r["acc_m"] = row.report.acc_m;
            r["ap_m"] = row.report.ap_m;
            for (const auto& s : row.report.splits)
                r[s.name] = ordered_json{{"acc", s.acc}, {"ap", s.ap}};
            table.push_back(r);
            write_text(ab_out + "/" + ab_axis + "_" + row.setting + ".report.json",
                       row.report.to_json());
            std::printf("%-22s %8.4f %8.4f\n", row.setting.c_str(), row.report.acc_m,
                        row.report.ap_m);
        }
        write_text(ab_out + "/" + ab_axis + ".table.json", table.dump(2));
        return 0;
    }

    if (rb->parsed()) {
        auto loaded = load_checkpoint(rb_ckpt);
        auto data = datagen::load_dataset(rb_data);
        auto rows = robustness_eval(loaded.model, data, rb_seed);
        std::printf("%-10s %18s %18s\n", "perturb", "test_in ACC/AP", "test_cross ACC/AP");
        for (const auto& r : rows)
            std::printf("%-10s   %.4f / %.4f    %.4f / %.4f\n", r.perturbation.c_str(),
                        r.test_in.acc, r.test_in.ap, r.test_cross.acc, r.test_cross.ap);
        const std::string path = rb_ckpt + ".robustness.json";
        write_text(path, robustness_json(rows));
        std::printf("report: %s\n", path.c_str());
        return 0;
    }

    if (gc->parsed()) {
        auto result = run_gradcheck_suite(gc_full);
        for (const auto& s : result.sections)
            std::printf("%-18s tol %-7g max_rel_err %.3e  %s\n", s.name.c_str(), s.tol,
                        s.report.max_rel_err(), s.pass() ? "PASS" : "FAIL");
        if (!result.pass()) throw NumericError("gradient check failed");
        std::printf("gradcheck %s\n", gc_full ? "(full) passed" : "passed");
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const DataError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

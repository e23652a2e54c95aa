// End-to-end acceptance runner. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any fail. Later criteria
// reuse the dataset and trained model of earlier ones, so the suite runs
// top to bottom.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fatformer/gradcheck_suite.hpp"
#include "fatformer/harness.hpp"

using namespace ftf;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d (%s): %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (int i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>((*a.data)[i]) - (*b.data)[i]));
    return m;
}

}  // namespace

int main() {
    // ------------------------------------------------------------------
    // 1. gradient fidelity
    // ------------------------------------------------------------------
    {
        const double t0 = now_seconds();
        auto suite = run_gradcheck_suite(/*full=*/true);
        const double secs = now_seconds() - t0;
        std::ostringstream d;
        d << "max rel err " << suite.worst() << " over " << suite.sections.size()
          << " sections, " << secs << "s";
        report(1, "gradient fidelity", suite.pass() && secs < 120.0, d.str());
    }

    // ------------------------------------------------------------------
    // 2. wavelet identity
    // ------------------------------------------------------------------
    {
        Rng rng(20240);
        double worst_rt = 0, worst_energy = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const int h = 2 * rng.uniform_int(1, 8);
            const int w = 2 * rng.uniform_int(1, 8);
            const int d = rng.uniform_int(1, 8);
            auto x = Tensor::randn(rng, {h, w, d}, 0.2f, 1.1f);
            auto bands = dwt2d(x);
            auto back = idwt2d(bands);
            for (int i = 0; i < x.numel(); ++i)
                worst_rt = std::max(worst_rt,
                                    std::abs(static_cast<double>((*x.data)[i]) - (*back.data)[i]));
            const double ex = energy(x);
            const double eb =
                energy(bands.ll) + energy(bands.lh) + energy(bands.hl) + energy(bands.hh);
            worst_energy = std::max(worst_energy, std::abs(ex - eb) / std::max(1e-12, ex));

            FrequencyBands rb;
            rb.ll = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
            rb.lh = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
            rb.hl = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
            rb.hh = Tensor::randn(rng, {h / 2, w / 2, d}, 0.0f, 1.0f);
            auto b2 = dwt2d(idwt2d(rb));
            for (Band band : {Band::LL, Band::LH, Band::HL, Band::HH}) {
                const Tensor& want = rb.band(band);
                const Tensor& got = b2.band(band);
                for (int i = 0; i < want.numel(); ++i)
                    worst_rt = std::max(worst_rt, std::abs(static_cast<double>((*want.data)[i]) -
                                                           (*got.data)[i]));
            }
        }
        std::ostringstream d;
        d << "round-trip max abs " << worst_rt << ", energy rel " << worst_energy;
        report(2, "wavelet identity", worst_rt < 1e-5 && worst_energy < 1e-4, d.str());
    }

    // ------------------------------------------------------------------
    // 3. identity start
    // ------------------------------------------------------------------
    {
        Model m;
        m.init(ModelConfig{}, 42);  // documented initialization
        Rng rng(7);
        double worst = 0;
        for (int i = 0; i < 10; ++i) {
            Tensor img = Tensor::zeros({3, 32, 32});
            for (auto& v : *img.data) v = static_cast<float>(rng.uniform());
            NoGrad off;
            auto with = m.encode(img);
            auto without = m.encoder.run(img);
            worst = std::max(worst, max_abs_diff(with.cls, without.cls));
            worst = std::max(worst, max_abs_diff(with.patches, without.patches));
        }
        std::ostringstream d;
        d << "max |with - without| = " << worst << " over 10 images";
        report(3, "identity start", worst < 1e-5, d.str());
    }

    // ------------------------------------------------------------------
    // 4. probability contract
    // ------------------------------------------------------------------
    {
        Rng rng(99);
        bool ok = true;
        double worst_sum = 0;
        for (int i = 0; i < 1000 && ok; ++i) {
            auto s = Tensor::randn(rng, {2}, 0.0f, 1.0f);
            auto sp = Tensor::randn(rng, {2}, 0.0f, 1.0f);
            const float tau_v = static_cast<float>(rng.uniform(0.005, 1.0));
            auto tau = Tensor::from({1}, {tau_v});
            auto p = augmented_probability(s, sp, tau);
            const double sum = static_cast<double>((*p.data)[0]) + (*p.data)[1];
            worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
            if ((*p.data)[0] < 0 || (*p.data)[1] < 0) ok = false;
            const int am = (*p.data)[1] > (*p.data)[0] ? 1 : 0;

            auto tau2 = Tensor::from({1}, {tau_v * 7.5f});
            auto p2 = augmented_probability(s, sp, tau2);
            if (((*p2.data)[1] > (*p2.data)[0] ? 1 : 0) != am) ok = false;

            const float c = static_cast<float>(rng.uniform(-5.0, 5.0));
            auto p3 = augmented_probability(add_scalar(s, c), add_scalar(sp, c), tau);
            if (((*p3.data)[1] > (*p3.data)[0] ? 1 : 0) != am) ok = false;
        }
        std::ostringstream d;
        d << "worst |sum-1| = " << worst_sum << ", argmax invariances held = "
          << (ok ? "yes" : "no");
        report(4, "probability contract", ok && worst_sum < 1e-6, d.str());
    }

    // ------------------------------------------------------------------
    // 5. oracle precondition (gates the model criteria)
    // ------------------------------------------------------------------
    auto data = datagen::build_splits(512, 128, 512, 0);
    double oracle_in = 0, oracle_cross = 0;
    {
        const auto oracle = datagen::calibrate_oracle(data.train);
        oracle_in = datagen::oracle_accuracy(oracle, data.test_in);
        oracle_cross = datagen::oracle_accuracy(oracle, data.test_cross);
        std::ostringstream d;
        d << "HH-energy detector ACC test_in " << oracle_in << ", test_cross " << oracle_cross;
        report(5, "oracle precondition", oracle_in >= 0.99 && oracle_cross >= 0.95, d.str());
        if (oracle_in < 0.99 || oracle_cross < 0.95) {
            std::printf("dataset error: the synthetic task is not solvable; aborting before "
                        "model criteria\n");
            return 2;
        }
    }

    // ------------------------------------------------------------------
    // 6. scaled cross-generator protocol
    // ------------------------------------------------------------------
    TrainConfig cfg;  // defaults, seed 0
    std::optional<TrainOutcome> full_run;
    {
        const double t0 = now_seconds();
        full_run = train(cfg, data);
        const double secs = now_seconds() - t0;
        const auto& splits = full_run->report.splits;
        double acc_in = 0, ap_in = 0, acc_cross = 0, ap_cross = 0;
        for (const auto& s : splits) {
            if (s.name == "test_in") {
                acc_in = s.acc;
                ap_in = s.ap;
            }
            if (s.name == "test_cross") {
                acc_cross = s.acc;
                ap_cross = s.ap;
            }
        }
        const bool pass = acc_in >= 0.95 && acc_cross >= 0.80 && ap_in >= acc_in &&
                          ap_cross >= acc_cross && secs < 900.0;
        std::ostringstream d;
        d << "test_in ACC " << acc_in << " AP " << ap_in << "; test_cross ACC " << acc_cross
          << " AP " << ap_cross << "; " << static_cast<int>(secs) << "s";
        report(6, "cross-generator protocol", pass, d.str());
    }

    // ------------------------------------------------------------------
    // 7. supervision trend: aug-contra vs linear probe on test_cross
    // ------------------------------------------------------------------
    {
        auto cross_acc = [](const EvalReport& r) {
            for (const auto& s : r.splits)
                if (s.name == "test_cross") return s.acc;
            return 0.0;
        };
        const double full_cross = cross_acc(full_run->report);

        TrainConfig probe_cfg = cfg;
        probe_cfg.loss_mode = LossMode::LinearProbe;
        const double probe_cross = cross_acc(train(probe_cfg, data).report);

        bool pass;
        std::ostringstream d;
        if (full_cross >= probe_cross) {
            pass = true;
            d << "full " << full_cross << " >= probe " << probe_cross;
        } else if (probe_cross - full_cross <= 0.005) {
            pass = true;
            d << "tie within 0.5 points (full " << full_cross << ", probe " << probe_cross << ")";
        } else {
            // reversal at seed 0: fail only if reversed on all three seeds
            int reversals = 1;
            for (uint64_t s : {1ull, 2ull}) {
                TrainConfig fc = cfg;
                fc.seed = s;
                TrainConfig pc = probe_cfg;
                pc.seed = s;
                const double f = cross_acc(train(fc, data).report);
                const double p = cross_acc(train(pc, data).report);
                if (p - f > 0.005) ++reversals;
            }
            pass = reversals < 3;
            d << "seed-0 reversal (full " << full_cross << " < probe " << probe_cross
              << "); reversed on " << reversals << "/3 seeds";
        }
        report(7, "supervision trend", pass, d.str());
    }

    // ------------------------------------------------------------------
    // 8. ablation machinery: every switch runs, expected row counts
    // ------------------------------------------------------------------
    {
        auto micro_data = datagen::build_splits(64, 16, 32, 1);
        TrainConfig micro;
        micro.epochs = 1;
        micro.batch_size = 16;
        micro.seed = 1;
        const std::vector<std::pair<std::string, size_t>> expected = {
            {"branch", 3},       {"interaction", 3},   {"loss-mode", 3},
            {"prompt", 4},       {"components", 4},    {"adapter-count", 3},
            {"context-count", 3}, {"kernel-size", 3},
        };
        bool pass = true;
        std::ostringstream d;
        for (const auto& [axis, count] : expected) {
            auto rows = ablate(micro, axis, micro_data);
            bool axis_ok = rows.size() == count;
            if (axis == "branch") {
                // the dual-branch default row must be present
                axis_ok = axis_ok && rows[0].setting == "img+freq" &&
                          rows[0].cfg.image_branch && rows[0].cfg.freq_branch;
            }
            for (const auto& row : rows) {
                axis_ok = axis_ok && row.report.splits.size() == 3;
                for (const auto& s : row.report.splits)
                    axis_ok = axis_ok && s.acc >= 0.0 && s.acc <= 1.0 && s.ap >= 0.0 &&
                              s.ap <= 1.0;
                axis_ok = axis_ok && !row.report.config_fingerprint.empty();
            }
            if (!axis_ok) pass = false;
            d << axis << ":" << rows.size() << " ";
        }
        report(8, "ablation machinery", pass, d.str());
    }

    // ------------------------------------------------------------------
    // 9. determinism and persistence
    // ------------------------------------------------------------------
    {
        auto micro_data = datagen::build_splits(64, 16, 32, 2);
        TrainConfig micro;
        micro.epochs = 2;
        micro.batch_size = 16;
        micro.seed = 9;
        auto a = train(micro, micro_data);
        auto b = train(micro, micro_data);
        save_checkpoint("acceptance_det_a.ftfc", a.model, a.adam, a.epochs_run, micro);
        save_checkpoint("acceptance_det_b.ftfc", b.model, b.adam, b.epochs_run, micro);
        const bool identical =
            file_bytes("acceptance_det_a.ftfc") == file_bytes("acceptance_det_b.ftfc");

        auto loaded = load_checkpoint("acceptance_det_a.ftfc");
        const auto before = evaluate_split(a.model, micro_data.test_in, "test_in");
        const auto after = evaluate_split(loaded.model, micro_data.test_in, "test_in");
        const bool eval_same = before.acc == after.acc && before.ap == after.ap;
        std::ostringstream d;
        d << "byte-identical reruns = " << (identical ? "yes" : "no")
          << ", save/load evaluation identical = " << (eval_same ? "yes" : "no");
        report(9, "determinism & persistence", identical && eval_same, d.str());
    }

    // ------------------------------------------------------------------
    // 10. robustness protocol on the criterion-6 model
    // ------------------------------------------------------------------
    {
        auto rows = robustness_eval(full_run->model, data, 0);
        double clean_in = 0, blur_in = 0;
        bool have_all = rows.size() == 6;
        for (const auto& r : rows) {
            if (r.perturbation == "clean") clean_in = r.test_in.acc;
            if (r.perturbation == "blur") blur_in = r.test_in.acc;
        }
        const bool pass = have_all && blur_in < clean_in;
        std::ostringstream d;
        d << "rows " << rows.size() << "; clean test_in ACC " << clean_in
          << " vs blur-perturbed " << blur_in;
        report(10, "robustness protocol", pass, d.str());
        std::printf("%s\n", robustness_json(rows).c_str());
    }

    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 3;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}

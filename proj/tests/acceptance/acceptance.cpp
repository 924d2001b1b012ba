// Acceptance harness. Drives the seven release criteria end to end against
// the real CLI binary (argv[1]) plus the library API, and prints one verdict
// line per criterion:
//
//   criterion N: PASS — <evidence>
//   criterion N: FAIL — <what broke, with numbers>
//
// The exit code is the number of failed criteria. Experiment artifacts land
// in ./acceptance_work so a rerun can reuse finished stages via the run
// manifests.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "common/graphs.hpp"
#include "ifg/config.hpp"
#include "ifg/data.hpp"
#include "ifg/errors.hpp"
#include "ifg/eval.hpp"
#include "ifg/guidance.hpp"
#include "ifg/io.hpp"
#include "ifg/model.hpp"
#include "ifg/rng.hpp"
#include "ifg/tensor.hpp"
#include "ifg/tracker.hpp"

using namespace ifg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream out;
    out << std::setprecision(digits) << v;
    return out.str();
}

// ---------------------------------------------------------------------------
// Criterion 1 — reverse-mode gradients vs. central finite differences on 100
// random composite graphs; relative error < 1e-4, runtime < 30 s.
// ---------------------------------------------------------------------------

Verdict criterion1() {
    auto start = Clock::now();
    double worst = 0.0;
    int worst_graph = -1;
    for (int i = 0; i < 100; ++i) {
        Rng rng(derive_seed(2024, "acceptance/c1/" + std::to_string(i)));
        testing::RandomGraph g = testing::make_random_graph(rng);
        testing::FdResult r = testing::fd_check(
            [&](const std::vector<Tensor>& leaves) { return testing::eval_graph(g.ops, leaves); },
            g.leaves);
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            worst_graph = i;
        }
    }
    double secs = seconds_since(start);
    Verdict v;
    v.pass = worst < 1e-4 && secs < 30.0;
    v.detail = "max relative error " + fmt(worst, 3) + " (graph " + std::to_string(worst_graph) +
               ") over 100 graphs in " + fmt(secs, 3) + " s; limits 1e-4 and 30 s";
    return v;
}

// ---------------------------------------------------------------------------
// Criterion 2 — guidance oracles. (a) common_score equals an exhaustive
// all-pairs brute force exactly on 50 random tensors up to 6x6x8; (b) the
// intrinsic-feature weight is >= 1 on 1000 random (c, r) maps; (c) the
// self-pair identity (z_bn = z, e_bn = e => g == z) holds exactly on
// embeddings of training images under the experiment's trained debiased
// models.
// ---------------------------------------------------------------------------

struct OracleScore {
    std::vector<double> c;
    std::vector<int> pairing;
};

// Independent re-derivation: full dot matrix, global max over all pairs.
OracleScore brute_force_common(const Tensor& z, const Tensor& z_bn) {
    const Shape& sh = z.shape();
    int n = sh[0] * sh[1], ch = sh[2];
    std::vector<std::vector<double>> dots(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = 0.0;
            for (int k = 0; k < ch; ++k) d += z_bn[i * ch + k] * z[j * ch + k];
            dots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
        }
    double gm = dots[0][0];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gm = std::max(gm, dots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);

    OracleScore o;
    o.c.assign(static_cast<std::size_t>(n), 0.0);
    o.pairing.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        int best = 0;
        for (int i = 1; i < n; ++i)
            if (dots[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >
                dots[static_cast<std::size_t>(best)][static_cast<std::size_t>(j)])
                best = i;
        o.pairing[static_cast<std::size_t>(j)] = best;
    }
    if (gm <= 1e-12) {
        for (int j = 0; j < n; ++j) o.pairing[static_cast<std::size_t>(j)] = j;
        return o;
    }
    for (int j = 0; j < n; ++j)
        o.c[static_cast<std::size_t>(j)] =
            dots[static_cast<std::size_t>(o.pairing[static_cast<std::size_t>(j)])][static_cast<std::size_t>(j)] / gm;
    return o;
}

Tensor random_feature_tensor(Rng& rng, int h, int w, int ch, bool all_zero) {
    std::vector<double> vals(static_cast<std::size_t>(h * w * ch));
    for (double& v : vals) {
        v = all_zero ? 0.0 : rng.uniform(-2.0, 2.0);
        if (!all_zero && rng.uniform() < 0.15) v = 0.0;  // sprinkle exact zeros
    }
    return Tensor({h, w, ch}, std::move(vals));
}

Verdict criterion2(const fs::path& experiment_dir, bool experiment_ok) {
    // (a) exhaustive oracle equivalence, exact equality required.
    Rng rng(derive_seed(2024, "acceptance/c2"));
    int mismatches = 0;
    for (int t = 0; t < 50; ++t) {
        int h = static_cast<int>(rng.uniform_int(1, 6));
        int w = static_cast<int>(rng.uniform_int(1, 6));
        int ch = static_cast<int>(rng.uniform_int(1, 8));
        bool zero_pair = t % 10 == 9;  // exercise the degenerate branch too
        Tensor z = random_feature_tensor(rng, h, w, ch, zero_pair);
        Tensor z_bn = random_feature_tensor(rng, h, w, ch, zero_pair);
        CommonScore got = common_score(z, z_bn);
        OracleScore want = brute_force_common(z, z_bn);
        if (got.c != want.c || got.pairing != want.pairing) ++mismatches;
    }

    // (b) the weight never drops below 1.
    int below_one = 0;
    int wrong_value = 0;
    for (int t = 0; t < 1000; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 64));
        std::vector<double> c(static_cast<std::size_t>(n)), r(static_cast<std::size_t>(n));
        for (double& v : c) v = rng.uniform(0.0, 1.2);
        for (double& v : r) v = rng.uniform(0.0, 4.0);
        std::vector<double> ie = ie_weight(c, r);
        for (int k = 0; k < n; ++k) {
            if (ie[static_cast<std::size_t>(k)] < 1.0) ++below_one;
            if (ie[static_cast<std::size_t>(k)] !=
                std::max(c[static_cast<std::size_t>(k)] * r[static_cast<std::size_t>(k)], 1.0))
                ++wrong_value;
        }
    }

    // (c) self-pair identity on operational embeddings. Self-pairs occur in
    // real runs (a candidate class of size one pairs a sample with itself),
    // always on a model that has finished the unguided warm-up, so the probe
    // uses the trained checkpoints from the end-to-end experiment.
    int probed = 0, violated = 0;
    double max_ie = 1.0;
    std::string probe_note;
    if (!experiment_ok) {
        probe_note = "; self-pair probe skipped: experiment runs failed";
    } else {
        BiasedDataset ds = load_dataset((experiment_dir / "dataset.bin").string());
        for (const char* ckpt : {"full/f_d_final.ckpt", "full/f_d_best.ckpt"}) {
            ConvNet net = ConvNet::load((experiment_dir / ckpt).string());
            std::map<int, int> taken;  // label -> count
            for (const Sample& s : ds.train) {
                if (taken[s.label] >= 16) continue;
                ++taken[s.label];
                Tape tape;
                TapedNet taped = watch_net(net, tape);
                Tensor z = taped.embed(s.image);
                GuidanceMaps maps = compute_guidance(net, z, z, s.label, 2.0);
                ++probed;
                bool ok = maps.g.values() == z.values();
                for (double w : maps.ie) {
                    max_ie = std::max(max_ie, w);
                    if (w != 1.0) ok = false;
                }
                if (!ok) ++violated;
            }
        }
        probe_note = "; self-pair identity exact on " + std::to_string(probed - violated) + "/" +
                     std::to_string(probed) + " embeddings" +
                     (violated > 0 ? " (max ie " + fmt(max_ie, 6) + ")" : "");
    }

    Verdict v;
    v.pass = mismatches == 0 && below_one == 0 && wrong_value == 0 && experiment_ok && violated == 0;
    v.detail = "brute-force oracle mismatches " + std::to_string(mismatches) +
               "/50; ie-below-1 count " + std::to_string(below_one) + " over 1000 maps" + probe_note;
    return v;
}

// ---------------------------------------------------------------------------
// Criterion 3 — tracker replay: 10 synthetic loss streams of 1000 steps match
// an independently coded closed-form recomputation within 1e-12, and the
// dynamic set equals the strict-positive filter at every step.
// ---------------------------------------------------------------------------

Verdict criterion3() {
    const int n = 40, steps = 1000, t1 = 100;
    const double alpha_l = 0.1, alpha_s = 0.9;
    double worst = 0.0;
    int dbn_mismatches = 0;

    for (int stream = 0; stream < 10; ++stream) {
        Rng rng(derive_seed(909, "acceptance/c3/" + std::to_string(stream)));
        std::vector<int> ids(n), labels(n);
        for (int i = 0; i < n; ++i) {
            ids[static_cast<std::size_t>(i)] = i;
            labels[static_cast<std::size_t>(i)] = i % 2;
        }
        BnState st(ids, labels, alpha_l, alpha_s, t1);

        std::vector<double> l(static_cast<std::size_t>(n), 0.0), s(static_cast<std::size_t>(n), 0.0);
        std::vector<bool> seen(static_cast<std::size_t>(n), false);
        std::vector<std::optional<double>> ref(static_cast<std::size_t>(n));

        for (int step = 0; step < steps; ++step) {
            for (int id = 0; id < n; ++id) {
                if (rng.uniform() < 0.3) continue;  // not in this mini-batch
                double ce = 0.05 + std::abs(rng.normal()) * 0.8;
                st.step_update(id, ce, step);

                auto k = static_cast<std::size_t>(id);
                if (!seen[k]) {
                    l[k] = ce;
                    seen[k] = true;
                } else {
                    l[k] = alpha_l * ce + (1.0 - alpha_l) * l[k];
                }
                if (step >= t1 && !ref[k]) ref[k] = l[k];
                if (ref[k]) s[k] = alpha_s * (l[k] - *ref[k]) + (1.0 - alpha_s) * s[k];
            }

            std::vector<int> expect_dbn;
            for (int id = 0; id < n; ++id) {
                auto k = static_cast<std::size_t>(id);
                const TrackerEntry& e = st.entry(id);
                worst = std::max(worst, std::abs(e.l - l[k]));
                worst = std::max(worst, std::abs(e.s - s[k]));
                if (e.l_ref.has_value() != ref[k].has_value())
                    worst = std::max(worst, 1.0);
                else if (ref[k])
                    worst = std::max(worst, std::abs(*e.l_ref - *ref[k]));
                if (s[k] > 0.0) expect_dbn.push_back(id);
            }
            if (st.current_dbn() != expect_dbn) ++dbn_mismatches;
        }
    }

    Verdict v;
    v.pass = worst <= 1e-12 && dbn_mismatches == 0;
    v.detail = "10 streams x 1000 steps: max deviation " + fmt(worst, 3) +
               " (limit 1e-12), dynamic-set mismatches " + std::to_string(dbn_mismatches);
    return v;
}

// ---------------------------------------------------------------------------
// End-to-end experiment block shared by criteria 4-6.
// ---------------------------------------------------------------------------

int run_cli(const std::string& bin, const std::string& args, const fs::path& log) {
    std::string cmd = "\"" + bin + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

struct ExperimentBlock {
    bool ok = true;
    std::string first_failure;
    double main_secs = 0.0;  // the 3-seed x 3-mode block (criterion 5's budget)
    double pair_secs = 0.0;  // the extra pair-source ablation runs
};

ExperimentBlock run_experiments(const std::string& bin, const fs::path& work) {
    ExperimentBlock block;
    auto run = [&](const std::string& args, const fs::path& dir, const std::string& tag) {
        if (!block.ok) return;
        fs::create_directories(dir);
        std::cout << "[acceptance] " << tag << "\n" << std::flush;
        int rc = run_cli(bin, args, dir / ("log_" + tag + ".txt"));
        if (rc != 0) {
            block.ok = false;
            block.first_failure = tag + " exited with status " + std::to_string(rc) + " (see " +
                                  (dir / ("log_" + tag + ".txt")).string() + ")";
        }
    };

    auto start = Clock::now();
    for (int seed = 1; seed <= 3; ++seed) {
        fs::path dir = work / ("seed" + std::to_string(seed));
        std::string base = "--seed " + std::to_string(seed) + " --out-dir \"" + dir.string() + "\"";
        for (const char* mode : {"full", "vanilla", "reweight_only"})
            run("run-all " + base + " --mode " + mode, dir,
                "seed" + std::to_string(seed) + "_" + mode);
    }
    block.main_secs = seconds_since(start);

    start = Clock::now();
    for (int seed = 1; seed <= 3; ++seed) {
        fs::path dir = work / ("seed" + std::to_string(seed) + "_paird");
        run("run-all --seed " + std::to_string(seed) + " --out-dir \"" + dir.string() +
                "\" --mode full --pair-source d",
            dir, "seed" + std::to_string(seed) + "_paird");
    }
    block.pair_secs = seconds_since(start);
    return block;
}

// ---------------------------------------------------------------------------
// Criterion 4 — loss recomposition on every logged step of the 5000-iteration
// full run: total == lambda*main + lambda_sim*sim + cls + bn within 1e-9, and
// the ramp endpoints are exactly 0 at T2 and 1 at the final step.
// ---------------------------------------------------------------------------

Verdict criterion4(const fs::path& experiment_dir, bool experiment_ok) {
    Verdict v;
    if (!experiment_ok) {
        v.detail = "skipped: experiment runs failed";
        return v;
    }
    ExperimentConfig defaults;  // the experiment ran on the default schedule
    const int total = defaults.train.total_iters, t2 = defaults.train.t2;
    const double lambda_sim = defaults.train.lambda_sim;

    std::vector<std::string> lines =
        split_lines(read_text_file((experiment_dir / "full" / "step_log.csv").string()));
    double worst = 0.0;
    int rows = 0;
    bool t2_exact = false, final_exact = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 13) {
            v.detail = "step_log.csv row " + std::to_string(i + 1) + " has " +
                       std::to_string(f.size()) + " fields, expected 13";
            return v;
        }
        ++rows;
        int step = std::stoi(f[0]);
        double main = std::stod(f[1]), sim = std::stod(f[2]), cls = std::stod(f[3]);
        double bn = std::stod(f[4]), total_loss = std::stod(f[5]), lambda = std::stod(f[6]);
        worst = std::max(std::abs(total_loss - (lambda * main + lambda_sim * sim + cls + bn)), worst);
        if (step == t2) t2_exact = lambda == 0.0;
        if (step == total) final_exact = lambda == 1.0;
    }

    v.pass = rows == total && worst <= 1e-9 && t2_exact && final_exact;
    v.detail = std::to_string(rows) + " logged steps, max |total - recomposed| " + fmt(worst, 3) +
               " (limit 1e-9), lambda(T2)==0 " + (t2_exact ? "yes" : "NO") +
               ", lambda(final)==1 " + (final_exact ? "yes" : "NO");
    return v;
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6 — metric comparisons over the experiment block.
// ---------------------------------------------------------------------------

std::optional<MetricsRow> find_row(const std::vector<MetricsRow>& rows, const std::string& mode) {
    for (const MetricsRow& r : rows)
        if (r.mode == mode) return r;
    return std::nullopt;
}

struct BlockMetrics {
    bool ok = true;
    std::string error;
    // means over the three seeds
    double full_class_avg = 0.0;
    double vanilla_class_avg = 0.0;
    double reweight_class_avg = 0.0;
    double paird_class_avg = 0.0;
    double bn_auc = 0.0;
    // pooled dynamic-set composition over the three full runs
    long cand_ba = 0, cand_bc = 0, retained_ba = 0, retained_bc = 0;
    std::vector<double> full_per_seed, vanilla_per_seed, reweight_per_seed, paird_per_seed;
};

BlockMetrics collect_block_metrics(const fs::path& work) {
    BlockMetrics bm;
    for (int seed = 1; seed <= 3; ++seed) {
        fs::path dir = work / ("seed" + std::to_string(seed));
        std::vector<MetricsRow> rows = read_metrics_csv((dir / "metrics.csv").string());
        auto full = find_row(rows, "full");
        auto vanilla = find_row(rows, "vanilla");
        auto reweight = find_row(rows, "reweight_only");
        if (!full || !vanilla || !reweight) {
            bm.ok = false;
            bm.error = "metrics.csv for seed " + std::to_string(seed) + " is missing a mode row";
            return bm;
        }
        bm.full_per_seed.push_back(full->class_avg);
        bm.vanilla_per_seed.push_back(vanilla->class_avg);
        bm.reweight_per_seed.push_back(reweight->class_avg);
        bm.full_class_avg += full->class_avg / 3.0;
        bm.vanilla_class_avg += vanilla->class_avg / 3.0;
        bm.reweight_class_avg += reweight->class_avg / 3.0;
        bm.bn_auc += full->bn_auc / 3.0;

        std::vector<std::string> lines =
            split_lines(read_text_file((dir / "full" / "dbn_composition.csv").string()));
        if (lines.size() < 2) {
            bm.ok = false;
            bm.error = "dbn_composition.csv for seed " + std::to_string(seed) + " has no data row";
            return bm;
        }
        std::vector<std::string> f = split_csv_line(lines[1]);
        bm.cand_ba += std::stol(f[0]);
        bm.cand_bc += std::stol(f[1]);
        bm.retained_ba += std::stol(f[2]);
        bm.retained_bc += std::stol(f[3]);

        fs::path pair_dir = work / ("seed" + std::to_string(seed) + "_paird");
        std::vector<MetricsRow> pair_rows = read_metrics_csv((pair_dir / "metrics.csv").string());
        auto paird = find_row(pair_rows, "full");
        if (!paird) {
            bm.ok = false;
            bm.error = "pair-source-d metrics.csv for seed " + std::to_string(seed) + " has no row";
            return bm;
        }
        bm.paird_per_seed.push_back(paird->class_avg);
        bm.paird_class_avg += paird->class_avg / 3.0;
    }
    return bm;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "/" : "") + fmt(v[i], 4);
    return out;
}

Verdict criterion5(const BlockMetrics& bm, const ExperimentBlock& block, double budget_secs) {
    Verdict v;
    if (!block.ok) {
        v.detail = "experiment run failed: " + block.first_failure;
        return v;
    }
    if (!bm.ok) {
        v.detail = bm.error;
        return v;
    }
    bool a = bm.full_class_avg >= bm.vanilla_class_avg + 5.0;
    bool b = bm.full_class_avg >= bm.reweight_class_avg - 1.0;
    bool c = bm.bn_auc >= 0.7;
    long dbn_total = bm.retained_ba + bm.retained_bc;
    long cand_total = bm.cand_ba + bm.cand_bc;
    double frac_dbn = dbn_total > 0 ? static_cast<double>(bm.retained_ba) / dbn_total : 1.0;
    double frac_cand = cand_total > 0 ? static_cast<double>(bm.cand_ba) / cand_total : 0.0;
    bool d = dbn_total > 0 && frac_dbn < frac_cand;
    bool timed = block.main_secs <= budget_secs;

    v.pass = a && b && c && d && timed;
    v.detail = "class-avg full " + fmt(bm.full_class_avg, 4) + " (" + join(bm.full_per_seed) +
               ") vs vanilla " + fmt(bm.vanilla_class_avg, 4) + " (" + join(bm.vanilla_per_seed) +
               ") [>= +5: " + (a ? "yes" : "NO") + "], vs reweight " +
               fmt(bm.reweight_class_avg, 4) + " (" + join(bm.reweight_per_seed) + ") [>= -1: " +
               (b ? "yes" : "NO") + "]; bn_auc " + fmt(bm.bn_auc, 4) + " [>= 0.7: " +
               (c ? "yes" : "NO") + "]; BA fraction " + fmt(frac_dbn, 4) + " (dynamic) < " +
               fmt(frac_cand, 4) + " (candidates) [" + (d ? "yes" : "NO") + "]; block " +
               fmt(block.main_secs, 4) + " s of " + fmt(budget_secs, 4) + " s budget [" +
               (timed ? "yes" : "NO") + "]";
    return v;
}

Verdict criterion6(const BlockMetrics& bm, const ExperimentBlock& block) {
    Verdict v;
    if (!block.ok) {
        v.detail = "experiment run failed: " + block.first_failure;
        return v;
    }
    if (!bm.ok) {
        v.detail = bm.error;
        return v;
    }
    v.pass = bm.paird_class_avg <= bm.full_class_avg + 1.0;
    v.detail = "pair-source d class-avg " + fmt(bm.paird_class_avg, 4) + " (" +
               join(bm.paird_per_seed) + ") vs dynamic-set pairing " + fmt(bm.full_class_avg, 4) +
               " (" + join(bm.full_per_seed) + "); required d <= dbn + 1";
    return v;
}

// ---------------------------------------------------------------------------
// Criterion 7 — two identical run-alls produce byte-identical metrics.csv.
// Determinism is scale-free, so this uses a minutes-not-hours configuration.
// ---------------------------------------------------------------------------

Verdict criterion7(const std::string& bin, const fs::path& work) {
    ExperimentConfig tiny;
    tiny.seed = 7;
    tiny.data.per_class_count = 100;
    tiny.data.test_per_class = 2;
    tiny.data.severity = 0.05;
    tiny.data.image_size = 16;
    tiny.data.max_translation = 2;
    tiny.data.shape_scale = 0.7;
    tiny.model.conv_channels = {4, 8};
    tiny.ensemble.count = 1;
    tiny.ensemble.iters = 2;
    tiny.ensemble.batch_size = 16;
    tiny.train.total_iters = 8;
    tiny.train.t1 = 2;
    tiny.train.t2 = 4;
    tiny.train.batch_size = 8;
    tiny.train.eval_every = 4;
    tiny.train.tracker_log_every = 2;

    fs::path cfg_path = work / "determinism.json";
    write_text_file(cfg_path.string(), config_to_json(tiny).dump(2) + "\n");
    fs::path a = work / "det_a", b = work / "det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    fs::create_directories(a);
    fs::create_directories(b);

    Verdict v;
    std::string args = "run-all --config \"" + cfg_path.string() + "\" --out-dir \"";
    if (run_cli(bin, args + a.string() + "\"", a / "log.txt") != 0 ||
        run_cli(bin, args + b.string() + "\"", b / "log.txt") != 0) {
        v.detail = "run-all exited nonzero (see " + (a / "log.txt").string() + ")";
        return v;
    }
    std::string ma = read_text_file((a / "metrics.csv").string());
    std::string mb = read_text_file((b / "metrics.csv").string());
    v.pass = ma == mb;
    v.detail = v.pass ? "metrics.csv byte-identical across two fresh run-all invocations (" +
                            std::to_string(ma.size()) + " bytes)"
                      : "metrics.csv differs between two identical run-all invocations";
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: ifg_acceptance <path-to-ifg-cli-binary>\n";
        return 64;
    }
    std::string bin = fs::absolute(argv[1]).string();
    fs::path work = fs::absolute("acceptance_work");
    fs::create_directories(work);

    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    // The runtime budget is stated for a 4-core machine; single-threaded
    // stages scale with core count, so prorate it for this host.
    double budget_secs = 900.0 * 4.0 / hw;
    std::cout << "[acceptance] work dir " << work.string() << "\n";
    std::cout << "[acceptance] budget: 900 s on 4 cores, prorated to " << fmt(budget_secs, 4)
              << " s for " << hw << " hardware thread(s)\n"
              << std::flush;

    std::map<int, Verdict> verdicts;
    auto guarded = [&](int n, auto&& fn) {
        try {
            verdicts[n] = fn();
        } catch (const std::exception& e) {
            verdicts[n] = {false, std::string("exception: ") + e.what()};
        }
    };

    guarded(1, criterion1);
    guarded(3, criterion3);

    ExperimentBlock block;
    try {
        block = run_experiments(bin, work);
    } catch (const std::exception& e) {
        block.ok = false;
        block.first_failure = std::string("exception: ") + e.what();
    }
    if (block.ok)
        std::cout << "[acceptance] experiment block " << fmt(block.main_secs, 4)
                  << " s, pair-source runs " << fmt(block.pair_secs, 4) << " s\n";

    BlockMetrics bm;
    if (block.ok) {
        try {
            bm = collect_block_metrics(work);
        } catch (const std::exception& e) {
            bm.ok = false;
            bm.error = std::string("exception: ") + e.what();
        }
    }

    guarded(2, [&] { return criterion2(work / "seed1", block.ok); });
    guarded(4, [&] { return criterion4(work / "seed1", block.ok); });
    guarded(5, [&] { return criterion5(bm, block, budget_secs); });
    guarded(6, [&] { return criterion6(bm, block); });
    guarded(7, [&] { return criterion7(bin, work); });

    int failures = 0;
    for (const auto& [n, v] : verdicts) {
        std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " — " << v.detail
                  << "\n";
        failures += v.pass ? 0 : 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << "\n";
    return failures;
}

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "ifg/data.hpp"
#include "ifg/ensemble.hpp"
#include "ifg/errors.hpp"
#include "ifg/eval.hpp"
#include "ifg/guidance.hpp"
#include "ifg/io.hpp"
#include "ifg/model.hpp"
#include "ifg/plots.hpp"
#include "ifg/tensor.hpp"
#include "ifg/trainer.hpp"

namespace fs = std::filesystem;

namespace ifg::cli {
namespace {

// Round-trip-exact double formatting for machine-read CSV logs (the
// fixed-point fmt_fixed is for human-facing output only).
std::string fmt_full(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "' for hashing");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hash_hex(bytes);
}

double parse_double_field(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw FormatError(what + ": cannot parse number '" + s + "'");
    }
}

int parse_int_field(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError(what + ": cannot parse integer '" + s + "'");
    }
}

// ---------------------------------------------------------------------------
// Run manifest: stage -> {input hash, outputs}. A stage is current when its
// recorded hash equals the hash recomputed from the effective config and all
// its outputs still exist; current stages are skipped unless --force.
// ---------------------------------------------------------------------------

struct StageEntry {
    std::string hash;
    std::vector<std::string> outputs;  // paths relative to the run directory
};

struct Manifest {
    std::string run_id;       // lineage id: data + model + ensemble sections + seed
    std::string config_hash;  // effective config of the most recent invocation
    std::string dataset_hash;
    std::map<std::string, StageEntry> stages;
};

fs::path manifest_path(const std::string& out_dir) { return fs::path(out_dir) / "manifest.json"; }

Manifest load_manifest(const std::string& out_dir) {
    Manifest m;
    fs::path p = manifest_path(out_dir);
    if (!fs::exists(p)) return m;
    nlohmann::json j;
    try {
        std::ifstream in(p);
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + p.string() + "' is not valid JSON: " + e.what());
    }
    try {
        m.run_id = j.value("run_id", "");
        m.config_hash = j.value("config_hash", "");
        m.dataset_hash = j.value("dataset_hash", "");
        if (j.contains("stages"))
            for (auto it = j["stages"].begin(); it != j["stages"].end(); ++it) {
                StageEntry e;
                e.hash = it.value().at("hash").get<std::string>();
                for (const auto& o : it.value().at("outputs")) e.outputs.push_back(o.get<std::string>());
                m.stages[it.key()] = e;
            }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + p.string() + "' has unexpected structure: " + e.what());
    }
    return m;
}

void save_manifest(const std::string& out_dir, const Manifest& m) {
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [name, e] : m.stages)
        stages[name] = {{"hash", e.hash}, {"outputs", e.outputs}};
    nlohmann::json j = {{"run_id", m.run_id},
                        {"config_hash", m.config_hash},
                        {"dataset_hash", m.dataset_hash},
                        {"stages", stages}};
    write_text_file(manifest_path(out_dir).string(), j.dump(2) + "\n");
}

bool stage_current(const Manifest& m, const std::string& out_dir, const std::string& name,
                   const std::string& hash) {
    auto it = m.stages.find(name);
    if (it == m.stages.end() || it->second.hash != hash) return false;
    for (const auto& rel : it->second.outputs)
        if (!fs::exists(fs::path(out_dir) / rel)) return false;
    return true;
}

void require_stage(const Manifest& m, const std::string& out_dir, const std::string& name,
                   const std::string& hash, const std::string& needed_by) {
    if (!stage_current(m, out_dir, name, hash))
        throw PreconditionError("'" + needed_by + "' requires stage '" + name +
                                "' completed for the current config; run `ifg " +
                                (name == "generate" ? std::string("generate-data")
                                                    : name.substr(0, name.find(':'))) +
                                "` first");
}

// ---------------------------------------------------------------------------
// Stage identity
// ---------------------------------------------------------------------------

nlohmann::json section(const ExperimentConfig& cfg, const char* key) {
    return config_to_json(cfg).at(key);
}

std::string lineage_id(const ExperimentConfig& cfg) {
    nlohmann::json j = config_to_json(cfg);
    nlohmann::json lineage = {{"data", j.at("data")},
                              {"ensemble", j.at("ensemble")},
                              {"model", j.at("model")},
                              {"seed", j.at("seed")}};
    return hash_hex("run|" + lineage.dump());
}

}  // namespace

std::string generate_stage_hash(const ExperimentConfig& cfg) {
    nlohmann::json j = {{"data", section(cfg, "data")}, {"seed", section(cfg, "seed")}};
    return hash_hex("generate|" + j.dump());
}

std::string pretrain_stage_hash(const ExperimentConfig& cfg) {
    nlohmann::json j = {{"ensemble", section(cfg, "ensemble")}, {"model", section(cfg, "model")}};
    return hash_hex("pretrain|" + generate_stage_hash(cfg) + "|" + j.dump());
}

std::string train_stage_hash(const ExperimentConfig& cfg) {
    return hash_hex("train|" + pretrain_stage_hash(cfg) + "|" + section(cfg, "train").dump());
}

std::string evaluate_stage_hash(const ExperimentConfig& cfg) {
    return hash_hex("evaluate|" + train_stage_hash(cfg));
}

namespace {

// ---------------------------------------------------------------------------
// Artifact paths
// ---------------------------------------------------------------------------

struct Paths {
    fs::path root;
    explicit Paths(const std::string& out_dir) : root(out_dir) {}

    fs::path dataset() const { return root / "dataset.bin"; }
    fs::path partitions() const { return root / "partitions.csv"; }
    fs::path candidate_quality() const { return root / "candidate_quality.csv"; }
    fs::path member(int k) const { return root / "ensemble" / ("member_" + std::to_string(k) + ".ckpt"); }
    fs::path metrics() const { return root / "metrics.csv"; }
    fs::path report() const { return root / "report.md"; }

    fs::path mode_dir(const std::string& mode) const { return root / mode; }
    fs::path in_mode(const std::string& mode, const char* name) const { return mode_dir(mode) / name; }
};

std::string rel(const Paths& p, const fs::path& abs) {
    return fs::relative(abs, p.root).generic_string();
}

void write_csv(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    write_text_file(path.string(), content);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void run_generate(const Invocation& inv, Manifest& m) {
    const std::string stage = "generate";
    std::string hash = generate_stage_hash(inv.cfg);
    Paths paths(inv.out_dir);
    if (!inv.force && stage_current(m, inv.out_dir, stage, hash)) {
        std::cout << "[generate] up to date (hash " << hash << "), skipping\n";
        return;
    }
    BiasedDataset ds = generate_dataset(inv.cfg.data, inv.cfg.seed);
    fs::create_directories(paths.root);
    save_dataset(ds, paths.dataset().string());
    m.dataset_hash = file_hash(paths.dataset());
    m.stages[stage] = {hash, {rel(paths, paths.dataset())}};
    save_manifest(inv.out_dir, m);
    int bc = 0;
    for (const auto& s : ds.train) bc += s.bias_aligned ? 0 : 1;
    std::cout << "[generate] wrote " << rel(paths, paths.dataset()) << ": " << ds.train.size()
              << " train (" << bc << " bias-conflicting) / " << ds.test.size()
              << " test, severity " << fmt_fixed(inv.cfg.data.severity * 100.0, 2) << "%\n";
}

void run_pretrain(const Invocation& inv, Manifest& m) {
    const std::string stage = "pretrain";
    std::string hash = pretrain_stage_hash(inv.cfg);
    Paths paths(inv.out_dir);
    if (!inv.force && stage_current(m, inv.out_dir, stage, hash)) {
        std::cout << "[pretrain] up to date (hash " << hash << "), skipping\n";
        return;
    }
    require_stage(m, inv.out_dir, "generate", generate_stage_hash(inv.cfg), stage);

    BiasedDataset ds = load_dataset(paths.dataset().string());
    std::vector<TrainSample> train = ds.train_view();
    int threads = inv.cfg.train.threads;

    std::cout << "[pretrain] training " << inv.cfg.ensemble.count << " biased members, "
              << inv.cfg.ensemble.iters << " GCE steps each\n";
    ModelEnsemble ensemble = pretrain_biased(train, inv.cfg.arch(), inv.cfg.ensemble, inv.cfg.seed, threads);
    PartitionSet parts = build_partitions(ensemble, train, inv.cfg.ensemble.threshold, threads);
    if (parts.amplified.empty())
        std::cerr << "warning: bias-amplified set is empty at threshold "
                  << fmt_fixed(inv.cfg.ensemble.threshold, 2)
                  << "; the biased model will receive no update batches\n";

    std::vector<std::string> outputs;
    fs::create_directories(paths.root / "ensemble");
    for (int k = 0; k < inv.cfg.ensemble.count; ++k) {
        ensemble.members[static_cast<std::size_t>(k)].save(paths.member(k).string());
        outputs.push_back(rel(paths, paths.member(k)));
    }
    save_partitions(parts, paths.partitions().string());
    outputs.push_back(rel(paths, paths.partitions()));

    CandidateQuality q = candidate_quality(parts, ds);
    std::ostringstream csv;
    csv << "amplified_count,cand_count,cand_bc,total_bc,bc_recall,ba_contamination\n"
        << parts.amplified.size() << ',' << q.cand_count << ',' << q.cand_bc << ',' << q.total_bc
        << ',' << fmt_full(q.bc_recall) << ',' << fmt_full(q.ba_contamination) << "\n";
    write_csv(paths.candidate_quality(), csv.str());
    outputs.push_back(rel(paths, paths.candidate_quality()));

    m.stages[stage] = {hash, outputs};
    save_manifest(inv.out_dir, m);
    std::cout << "[pretrain] amplified " << parts.amplified.size() << ", candidates "
              << parts.candidates.size() << " (bias-conflicting recall "
              << fmt_fixed(q.bc_recall, 3) << ", contamination "
              << fmt_fixed(q.ba_contamination, 3) << ")\n";
}

// Exports the guidance maps of one (sample, auxiliary) pair under the final
// debiased model, so a finished run leaves an inspectable explanation trail.
void export_final_maps(const ConvNet& f_d, const BiasedDataset& ds, const TrainResult& result,
                       const PartitionSet& parts, double tau, const fs::path& maps_dir,
                       std::vector<std::string>* outputs, const Paths& paths) {
    std::unordered_map<int, const Sample*> by_id;
    for (const auto& s : ds.train) by_id[s.id] = &s;
    const Sample* x = ds.train.empty() ? nullptr : &ds.train.front();
    if (x == nullptr) return;
    const Sample* x_bn = nullptr;
    for (int id : result.final_dbn)
        if (by_id.count(id) && by_id[id]->label == x->label && id != x->id) { x_bn = by_id[id]; break; }
    if (x_bn == nullptr)
        for (int id : parts.candidates)
            if (by_id.count(id) && by_id[id]->label == x->label && id != x->id) { x_bn = by_id[id]; break; }
    if (x_bn == nullptr) return;

    Tape tape;
    TapedNet taped = watch_net(f_d, tape);
    Tensor z = taped.embed(x->image);
    Tensor z_bn = taped.embed(x_bn->image);
    GuidanceMaps maps = compute_guidance(f_d, z, z_bn, x->label, tau);
    fs::create_directories(maps_dir);
    std::string prefix = "sample" + std::to_string(x->id) + "_pair" + std::to_string(x_bn->id);
    export_guidance_maps(maps, maps_dir.string(), prefix);
    for (const char* suffix : {"_e.csv", "_e.pgm", "_e_bn.csv", "_e_bn.pgm", "_c.csv", "_c.pgm",
                               "_r.csv", "_r.pgm", "_ie.csv", "_ie.pgm"})
        outputs->push_back(rel(paths, maps_dir / (prefix + suffix)));
}

void run_train(const Invocation& inv, Manifest& m) {
    const ExperimentConfig& cfg = inv.cfg;
    std::string mode = to_string(cfg.train.mode);
    const std::string stage = "train:" + mode;
    std::string hash = train_stage_hash(cfg);
    Paths paths(inv.out_dir);
    if (!inv.force && stage_current(m, inv.out_dir, stage, hash)) {
        std::cout << "[train] " << mode << " up to date (hash " << hash << "), skipping\n";
        return;
    }
    require_stage(m, inv.out_dir, "pretrain", pretrain_stage_hash(cfg), stage);

    BiasedDataset ds = load_dataset(paths.dataset().string());
    std::vector<TrainSample> train_set = ds.train_view();
    PartitionSet parts = load_partitions(paths.partitions().string());
    int threads = cfg.train.threads;

    fs::path mode_dir = paths.mode_dir(mode);
    fs::create_directories(mode_dir);
    write_text_file(paths.in_mode(mode, "config_snapshot.json").string(),
                    config_to_json(cfg).dump(2) + "\n");

    // Best-over-training selection happens here, in the CLI's evaluation hook,
    // so the training loop itself never sees test data or bias flags.
    struct BestState {
        int step = -1;
        Metrics metrics;
        ConvNet net;
    } best;
    std::vector<AccuracyPoint> eval_points;
    TrainHooks hooks;
    hooks.on_eval = [&](int step, const ConvNet& f_d) {
        Metrics mt = evaluate(f_d, ds.test, threads);
        eval_points.push_back({step, mt.overall, mt.class_avg, mt.ba, mt.bc});
        if (best.step < 0 || mt.class_avg > best.metrics.class_avg) {
            best.step = step;
            best.metrics = mt;
            best.net = f_d;
        }
        std::cout << "[train] " << mode << " step " << step << "/" << cfg.train.total_iters
                  << "  overall " << fmt_fixed(mt.overall, 4) << "  class-avg "
                  << fmt_fixed(mt.class_avg, 4) << "  bc " << fmt_fixed(mt.bc, 4) << "\n";
    };

    std::cout << "[train] mode " << mode << ", " << cfg.train.total_iters << " iterations, seed "
              << cfg.seed << "\n";
    TrainResult result = train(cfg.train, train_set, cfg.arch(), &parts, cfg.seed, hooks);

    std::unordered_map<int, bool> aligned;
    for (const auto& s : ds.train) aligned[s.id] = s.bias_aligned;

    std::vector<std::string> outputs;
    auto emit = [&](const fs::path& p, const std::string& content) {
        write_csv(p, content);
        outputs.push_back(rel(paths, p));
    };

    {
        std::ostringstream csv;
        csv << "step,main,guide_sim,guide_cls,bn,total,lambda,w_mean,s_w_mean,pair_x,pair_x_bn,"
               "pair_tier,degenerate_w_count\n";
        for (const auto& r : result.steps)
            csv << r.step << ',' << fmt_full(r.main) << ',' << fmt_full(r.guide_sim) << ','
                << fmt_full(r.guide_cls) << ',' << fmt_full(r.bn) << ',' << fmt_full(r.total) << ','
                << fmt_full(r.lambda) << ',' << fmt_full(r.w_mean) << ',' << fmt_full(r.s_w_mean)
                << ',' << r.pair_x << ',' << r.pair_x_bn << ',' << r.pair_tier << ','
                << r.degenerate_w_count << "\n";
        emit(paths.in_mode(mode, "step_log.csv"), csv.str());
    }
    {
        std::ostringstream csv;
        csv << "step,sample_id,label,is_bc_eval_only,l,s\n";
        for (const auto& r : result.tracker_rows)
            csv << r.step << ',' << r.sample_id << ',' << r.label << ','
                << (aligned.at(r.sample_id) ? 0 : 1) << ',' << fmt_full(r.l) << ',' << fmt_full(r.s)
                << "\n";
        emit(paths.in_mode(mode, "tracker_log.csv"), csv.str());
    }
    {
        std::ostringstream csv;
        csv << "step,overall,class_avg,ba,bc\n";
        for (const auto& p : eval_points)
            csv << p.step << ',' << fmt_full(p.overall) << ',' << fmt_full(p.class_avg) << ','
                << fmt_full(p.ba) << ',' << fmt_full(p.bc) << "\n";
        emit(paths.in_mode(mode, "eval_log.csv"), csv.str());
    }

    result.f_d.save(paths.in_mode(mode, "f_d_final.ckpt").string());
    outputs.push_back(rel(paths, paths.in_mode(mode, "f_d_final.ckpt")));
    best.net.save(paths.in_mode(mode, "f_d_best.ckpt").string());
    outputs.push_back(rel(paths, paths.in_mode(mode, "f_d_best.ckpt")));
    if (cfg.train.mode != TrainMode::vanilla) {
        result.f_b.save(paths.in_mode(mode, "f_b_final.ckpt").string());
        outputs.push_back(rel(paths, paths.in_mode(mode, "f_b_final.ckpt")));
    }

    nlohmann::json summary = {
        {"best_step", best.step},
        {"best",
         {{"overall", best.metrics.overall},
          {"class_avg", best.metrics.class_avg},
          {"ba", best.metrics.ba},
          {"bc", best.metrics.bc}}},
        {"dbn_size", result.final_dbn.size()},
        {"incidents", result.incidents.size()},
    };
    write_text_file(paths.in_mode(mode, "best_summary.json").string(), summary.dump(2) + "\n");
    outputs.push_back(rel(paths, paths.in_mode(mode, "best_summary.json")));

    if (cfg.train.mode != TrainMode::vanilla) {
        {
            std::ostringstream csv;
            csv << "sample_id,label,is_bc_eval_only,l,s\n";
            for (const auto& e : result.final_entries)
                csv << e.sample_id << ',' << e.label << ',' << (aligned.at(e.sample_id) ? 0 : 1)
                    << ',' << fmt_full(e.l) << ',' << fmt_full(e.s) << "\n";
            emit(paths.in_mode(mode, "bn_scores_final.csv"), csv.str());
        }
        {
            DbnComposition comp = dbn_composition(parts, result.final_dbn, ds);
            std::ostringstream csv;
            csv << "cand_ba,cand_bc,retained_ba,retained_bc,excluded_ba,excluded_bc,"
                   "retained_ba_pct_of_d,retained_bc_pct_of_d,ba_fraction_cand,ba_fraction_dbn\n"
                << comp.cand_ba << ',' << comp.cand_bc << ',' << comp.retained_ba << ','
                << comp.retained_bc << ',' << comp.excluded_ba() << ',' << comp.excluded_bc()
                << ',' << fmt_full(comp.retained_ba_pct_of_d) << ','
                << fmt_full(comp.retained_bc_pct_of_d) << ',' << fmt_full(comp.ba_fraction_cand)
                << ',' << fmt_full(comp.ba_fraction_dbn) << "\n";
            emit(paths.in_mode(mode, "dbn_composition.csv"), csv.str());
        }
        if (!result.incidents.empty()) {
            std::ostringstream csv;
            csv << "step,sample_id,value\n";
            for (const auto& i : result.incidents)
                csv << i.step << ',' << i.sample_id << ',' << fmt_full(i.value) << "\n";
            write_csv(paths.in_mode(mode, "incidents.csv"), csv.str());
            std::cerr << "warning: " << result.incidents.size()
                      << " non-finite biased-model losses were skipped (see "
                      << rel(paths, paths.in_mode(mode, "incidents.csv")) << ")\n";
        }
        if (cfg.train.mode == TrainMode::full && cfg.train.t2 < cfg.train.total_iters &&
            cfg.train.guide_loss_enabled)
            export_final_maps(result.f_d, ds, result, parts, cfg.train.tau,
                              mode_dir / "maps", &outputs, paths);
    }

    m.stages[stage] = {hash, outputs};
    save_manifest(inv.out_dir, m);
    std::cout << "[train] " << mode << " done: best class-avg " << fmt_fixed(best.metrics.class_avg, 4)
              << " at step " << best.step << ", final bias-negative set "
              << result.final_dbn.size() << " samples\n";
}

void run_evaluate(const Invocation& inv, Manifest& m) {
    const ExperimentConfig& cfg = inv.cfg;
    std::string mode = to_string(cfg.train.mode);
    const std::string stage = "evaluate:" + mode;
    std::string hash = evaluate_stage_hash(cfg);
    Paths paths(inv.out_dir);
    if (!inv.force && stage_current(m, inv.out_dir, stage, hash)) {
        std::cout << "[evaluate] " << mode << " up to date (hash " << hash << "), skipping\n";
        return;
    }
    require_stage(m, inv.out_dir, "train:" + mode, train_stage_hash(cfg), stage);

    BiasedDataset ds = load_dataset(paths.dataset().string());
    int threads = cfg.train.threads;
    ConvNet f_best = ConvNet::load(paths.in_mode(mode, "f_d_best.ckpt").string());
    ConvNet f_final = ConvNet::load(paths.in_mode(mode, "f_d_final.ckpt").string());
    Metrics best = evaluate(f_best, ds.test, threads);
    Metrics fin = evaluate(f_final, ds.test, threads);

    int best_step = -1;
    {
        nlohmann::json j;
        std::ifstream in(paths.in_mode(mode, "best_summary.json"));
        try {
            in >> j;
            best_step = j.at("best_step").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("cannot read best_summary.json: " + std::string(e.what()));
        }
    }

    // BN-score AUC from the final tracker snapshot: bias-conflicting samples
    // are the positive class, the BN score is the ranking statistic.
    double bn_auc = std::numeric_limits<double>::quiet_NaN();
    fs::path scores = paths.in_mode(mode, "bn_scores_final.csv");
    if (fs::exists(scores)) {
        std::vector<std::string> lines = split_lines(read_text_file(scores.string()));
        std::vector<double> s_values;
        std::vector<char> positive;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            std::vector<std::string> f = split_csv_line(lines[i]);
            if (f.size() != 5)
                throw FormatError("bn_scores_final.csv line " + std::to_string(i + 1) +
                                  ": expected 5 fields, got " + std::to_string(f.size()));
            positive.push_back(f[2] == "1" ? 1 : 0);
            s_values.push_back(parse_double_field(f[4], "bn_scores_final.csv"));
        }
        bn_auc = roc_auc(s_values, positive);
    }

    MetricsRow row;
    row.mode = mode;
    row.seed = cfg.seed;
    row.severity_pct = cfg.data.severity * 100.0;
    row.overall = best.overall;
    row.class_avg = best.class_avg;
    row.ba = best.ba;
    row.bc = best.bc;
    row.bn_auc = bn_auc;
    row.best_step = best_step;
    row.final_overall = fin.overall;
    row.final_class_avg = fin.class_avg;
    row.final_ba = fin.ba;
    row.final_bc = fin.bc;
    upsert_metrics_row(paths.metrics().string(), row);

    m.stages[stage] = {hash, {rel(paths, paths.metrics())}};
    save_manifest(inv.out_dir, m);
    std::cout << "[evaluate] " << mode << " seed " << cfg.seed << ": best class-avg "
              << fmt_fixed(best.class_avg, 4) << " (step " << best_step << "), final "
              << fmt_fixed(fin.class_avg, 4) << ", bn_auc " << fmt_fixed(bn_auc, 4) << "\n";
}

std::string report_stage_hash(const Manifest& m, const Paths& paths) {
    std::string acc = "report";
    for (const auto& [name, e] : m.stages)
        if (name.rfind("evaluate:", 0) == 0) acc += "|" + name + "=" + e.hash;
    if (fs::exists(paths.metrics())) acc += "|" + file_hash(paths.metrics());
    return hash_hex(acc);
}

std::vector<AccuracyPoint> read_eval_log(const fs::path& path) {
    std::vector<AccuracyPoint> points;
    std::vector<std::string> lines = split_lines(read_text_file(path.string()));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 5)
            throw FormatError(path.string() + " line " + std::to_string(i + 1) +
                              ": expected 5 fields, got " + std::to_string(f.size()));
        AccuracyPoint p;
        p.step = parse_int_field(f[0], "eval_log.csv");
        p.overall = parse_double_field(f[1], "eval_log.csv");
        p.class_avg = parse_double_field(f[2], "eval_log.csv");
        p.ba = parse_double_field(f[3], "eval_log.csv");
        p.bc = parse_double_field(f[4], "eval_log.csv");
        points.push_back(p);
    }
    return points;
}

std::vector<TrackerLogRow> read_tracker_log(const fs::path& path) {
    std::vector<TrackerLogRow> rows;
    std::vector<std::string> lines = split_lines(read_text_file(path.string()));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 6)
            throw FormatError(path.string() + " line " + std::to_string(i + 1) +
                              ": expected 6 fields, got " + std::to_string(f.size()));
        TrackerLogRow r;
        r.step = parse_int_field(f[0], "tracker_log.csv");
        r.sample_id = parse_int_field(f[1], "tracker_log.csv");
        r.label = parse_int_field(f[2], "tracker_log.csv");
        r.l = parse_double_field(f[4], "tracker_log.csv");
        r.s = parse_double_field(f[5], "tracker_log.csv");
        rows.push_back(r);
    }
    return rows;
}

void run_report(const Invocation& inv, Manifest& m) {
    const std::string stage = "report";
    Paths paths(inv.out_dir);
    std::string hash = report_stage_hash(m, paths);
    if (!inv.force && stage_current(m, inv.out_dir, stage, hash)) {
        std::cout << "[report] up to date (hash " << hash << "), skipping\n";
        return;
    }
    if (!fs::exists(paths.metrics()))
        throw PreconditionError("'report' requires stage 'evaluate' completed for at least one "
                                "mode; run `ifg evaluate` first");

    std::vector<MetricsRow> rows = read_metrics_csv(paths.metrics().string());
    std::vector<std::string> outputs;

    // Bias flags are needed for the trajectory plot's BA/BC split.
    std::unordered_map<int, bool> aligned;
    if (fs::exists(paths.dataset())) {
        BiasedDataset ds = load_dataset(paths.dataset().string());
        for (const auto& s : ds.train) aligned[s.id] = s.bias_aligned;
    }

    std::ostringstream md;
    md << "# Run report\n\n";
    md << "Run directory: `" << paths.root.generic_string() << "`\n\n";
    md << "## Test accuracy (best over training, unbiased test split)\n\n";
    md << "| mode | seed | severity % | overall | class avg | BA | BC | BN AUC | best step |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows)
        md << "| " << r.mode << " | " << r.seed << " | " << fmt_fixed(r.severity_pct, 3) << " | "
           << fmt_fixed(r.overall, 4) << " | " << fmt_fixed(r.class_avg, 4) << " | "
           << fmt_fixed(r.ba, 4) << " | " << fmt_fixed(r.bc, 4) << " | " << fmt_fixed(r.bn_auc, 4)
           << " | " << r.best_step << " |\n";
    md << "\n## Final-step accuracy\n\n";
    md << "| mode | seed | severity % | overall | class avg | BA | BC |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows)
        md << "| " << r.mode << " | " << r.seed << " | " << fmt_fixed(r.severity_pct, 3) << " | "
           << fmt_fixed(r.final_overall, 4) << " | " << fmt_fixed(r.final_class_avg, 4) << " | "
           << fmt_fixed(r.final_ba, 4) << " | " << fmt_fixed(r.final_bc, 4) << " |\n";

    for (const char* mode : {"full", "reweight_only", "vanilla"}) {
        fs::path eval_log = paths.in_mode(mode, "eval_log.csv");
        if (!fs::exists(eval_log)) continue;
        std::vector<AccuracyPoint> points = read_eval_log(eval_log);
        fs::path acc_svg = paths.in_mode(mode, "accuracy.svg");
        emit_accuracy_plot(acc_svg.string(), points);
        outputs.push_back(rel(paths, acc_svg));
        md << "\n## " << mode << " diagnostics\n\n";
        md << "- [accuracy over training](" << rel(paths, acc_svg) << ")\n";

        fs::path tracker_log = paths.in_mode(mode, "tracker_log.csv");
        if (fs::exists(tracker_log) && !aligned.empty()) {
            std::vector<TrackerLogRow> t_rows = read_tracker_log(tracker_log);
            if (!t_rows.empty()) {
                fs::path traj_svg = paths.in_mode(mode, "bn_trajectory.svg");
                emit_bn_trajectory(traj_svg.string(), t_rows, aligned);
                outputs.push_back(rel(paths, traj_svg));
                md << "- [BN score trajectory](" << rel(paths, traj_svg) << ")\n";
            }
        }
        fs::path comp_csv = paths.in_mode(mode, "dbn_composition.csv");
        if (fs::exists(comp_csv)) {
            std::vector<std::string> lines = split_lines(read_text_file(comp_csv.string()));
            if (lines.size() >= 2) {
                std::vector<std::string> h = split_csv_line(lines[0]);
                std::vector<std::string> v = split_csv_line(lines[1]);
                md << "\nBias-negative set composition:\n\n| field | value |\n|---|---|\n";
                for (std::size_t i = 0; i < h.size() && i < v.size(); ++i) {
                    std::string val = v[i];
                    try {
                        double d = parse_double_field(val, "dbn_composition.csv");
                        if (d != std::floor(d) || val.find('.') != std::string::npos)
                            val = fmt_fixed(d, 4);
                    } catch (const FormatError&) {
                    }
                    md << "| " << h[i] << " | " << val << " |\n";
                }
            }
        }
    }

    write_text_file(paths.report().string(), md.str());
    outputs.push_back(rel(paths, paths.report()));

    // Recompute: the metrics file hash feeding this stage is unchanged by the
    // report artifacts themselves, so the recorded hash stays reproducible.
    m.stages[stage] = {report_stage_hash(m, paths), outputs};
    save_manifest(inv.out_dir, m);
    std::cout << "[report] wrote " << rel(paths, paths.report()) << " covering " << rows.size()
              << " metrics row(s)\n";
}

// ---------------------------------------------------------------------------
// Argument handling
// ---------------------------------------------------------------------------

int run_impl(const std::vector<std::string>& args) {
    CLI::App app{"Intrinsic-feature-guided debiasing: synthetic-benchmark harness"};
    app.name("ifg");
    app.require_subcommand(1);

    std::string config_path, out_dir, mode_str, pair_str;
    double severity_pct = 0.0;
    std::uint64_t seed = 0;
    bool force = false, no_guide = false, no_bn = false, no_score = false;

    const char* stage_names[] = {"generate-data", "pretrain", "train", "evaluate", "report",
                                 "run-all"};
    const char* stage_descs[] = {"render the synthetic biased dataset",
                                 "pretrain the biased ensemble and build the data partitions",
                                 "train the debiased model (mode from config or --mode)",
                                 "score checkpoints on the test split and update metrics.csv",
                                 "render plots and the markdown summary",
                                 "run every stage in order"};
    std::vector<CLI::App*> subs;
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(stage_names[i], stage_descs[i]);
        sub->add_option("--config", config_path, "JSON config file (built-in defaults when omitted)");
        sub->add_option("--out-dir", out_dir, "run directory (default: runs/<run-id>)");
        sub->add_option("--severity", severity_pct, "bias severity in percent (e.g. 1.0)");
        sub->add_option("--seed", seed, "root seed for every derived RNG stream");
        sub->add_option("--mode", mode_str, "training mode: full | vanilla | reweight_only");
        sub->add_option("--pair-source", pair_str, "auxiliary pair pool: dbn | cand | d");
        sub->add_flag("--force", force, "re-run stages even when their hashes match");
        sub->add_flag("--no-guide-loss", no_guide, "ablation: drop the guidance losses");
        sub->add_flag("--no-bn-loss", no_bn, "ablation: drop the auxiliary-sample CE loss");
        sub->add_flag("--no-score-weight", no_score, "ablation: fix the BN score weight to 1");
        subs.push_back(sub);
    }

    std::vector<const char*> argv_store;
    argv_store.push_back("ifg");
    for (const auto& a : args) argv_store.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv_store.size()), argv_store.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[config]: " << e.what() << "\n";
        return kExitConfig;
    }
    CLI::App* sub = app.get_subcommands().front();

    Invocation inv;
    if (sub->count("--config") > 0)
        inv.cfg = load_config_file(config_path);
    if (sub->count("--seed") > 0) inv.cfg.seed = seed;
    if (sub->count("--severity") > 0) {
        if (!(severity_pct > 0.0) || severity_pct > 50.0)
            throw ConfigError("--severity must be a percentage in (0, 50], got " +
                              fmt_fixed(severity_pct, 3));
        inv.cfg.data.severity = severity_pct / 100.0;
    }
    if (sub->count("--mode") > 0) inv.cfg.train.mode = train_mode_from_string(mode_str);
    if (sub->count("--pair-source") > 0)
        inv.cfg.train.pair_source = pair_source_from_string(pair_str);
    if (no_guide) inv.cfg.train.guide_loss_enabled = false;
    if (no_bn) inv.cfg.train.bn_loss_enabled = false;
    if (no_score) inv.cfg.train.score_weight_enabled = false;
    inv.cfg.validate();
    inv.force = force;
    inv.out_dir = sub->count("--out-dir") > 0 ? out_dir : "runs/" + lineage_id(inv.cfg);

    Manifest m = load_manifest(inv.out_dir);
    std::string lineage = lineage_id(inv.cfg);
    if (!m.run_id.empty() && m.run_id != lineage)
        std::cout << "note: run directory previously held lineage " << m.run_id
                  << "; stages for the new config will be rebuilt as needed\n";
    m.run_id = lineage;
    m.config_hash = hash_hex(config_to_json(inv.cfg).dump());

    const std::string& name = sub->get_name();
    if (name == "generate-data") {
        run_generate(inv, m);
    } else if (name == "pretrain") {
        run_pretrain(inv, m);
    } else if (name == "train") {
        run_train(inv, m);
    } else if (name == "evaluate") {
        run_evaluate(inv, m);
    } else if (name == "report") {
        run_report(inv, m);
    } else {  // run-all
        run_generate(inv, m);
        run_pretrain(inv, m);
        run_train(inv, m);
        run_evaluate(inv, m);
        run_report(inv, m);
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    try {
        return run_impl(args);
    } catch (const ConfigError& e) {
        std::cerr << "error[config]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PreconditionError& e) {
        std::cerr << "error[precondition]: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const InputError& e) {
        std::cerr << "error[input]: " << e.what() << "\n";
        return kExitInput;
    } catch (const FormatError& e) {
        std::cerr << "error[format]: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace ifg::cli

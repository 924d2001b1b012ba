#include "ifg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "ifg/guidance.hpp"
#include "ifg/io.hpp"
#include "ifg/losses.hpp"
#include "ifg/parallel.hpp"

namespace ifg {

std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::full: return "full";
        case TrainMode::vanilla: return "vanilla";
        case TrainMode::reweight_only: return "reweight_only";
    }
    return "?";
}

std::string to_string(PairSource p) {
    switch (p) {
        case PairSource::dbn: return "dbn";
        case PairSource::cand: return "cand";
        case PairSource::d: return "d";
    }
    return "?";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "full") return TrainMode::full;
    if (s == "vanilla") return TrainMode::vanilla;
    if (s == "reweight_only") return TrainMode::reweight_only;
    throw ConfigError("unknown mode '" + s + "' (expected full, vanilla, or reweight_only)");
}

PairSource pair_source_from_string(const std::string& s) {
    if (s == "dbn") return PairSource::dbn;
    if (s == "cand") return PairSource::cand;
    if (s == "d") return PairSource::d;
    throw ConfigError("unknown pair source '" + s + "' (expected dbn, cand, or d)");
}

void TrainConfig::validate() const {
    if (total_iters < 1) throw ConfigError("train total_iters must be >= 1");
    if (t1 < 1 || t1 > t2 || t2 > total_iters)
        throw ConfigError("train schedule must satisfy 1 <= t1 <= t2 <= total_iters, got t1=" +
                          std::to_string(t1) + " t2=" + std::to_string(t2) + " total=" +
                          std::to_string(total_iters));
    if (batch_size < 1) throw ConfigError("train batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train learning_rate must be > 0");
    if (!(alpha_l > 0.0 && alpha_l <= 1.0)) throw ConfigError("train alpha_l must be in (0, 1]");
    if (!(alpha_s > 0.0 && alpha_s <= 1.0)) throw ConfigError("train alpha_s must be in (0, 1]");
    if (!(tau > 0.0)) throw ConfigError("train tau must be > 0");
    if (lambda_sim < 0.0) throw ConfigError("train lambda_sim must be >= 0");
    if (eval_every < 1) throw ConfigError("train eval_every must be >= 1");
    if (tracker_log_every < 1) throw ConfigError("train tracker_log_every must be >= 1");
    if (threads < 1) throw ConfigError("train threads must be >= 1");
}

PairChoice sample_pair(int x_id, int label, const std::vector<std::vector<int>>& dbn_by_class,
                       const std::vector<std::vector<int>>& cand_by_class,
                       const std::vector<std::vector<int>>& d_by_class, Rng& rng) {
    auto has_label = [label](const std::vector<std::vector<int>>& by_class) {
        return label < static_cast<int>(by_class.size()) &&
               !by_class[static_cast<std::size_t>(label)].empty();
    };
    auto pick = [&rng](const std::vector<int>& v) {
        return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
    };
    if (has_label(dbn_by_class)) return PairChoice{pick(dbn_by_class[static_cast<std::size_t>(label)]), 0};
    if (has_label(cand_by_class)) return PairChoice{pick(cand_by_class[static_cast<std::size_t>(label)]), 1};
    if (!has_label(d_by_class))
        throw ContractViolation("sample_pair: no training sample of label " + std::to_string(label));
    const std::vector<int>& all = d_by_class[static_cast<std::size_t>(label)];
    if (all.size() == 1) return PairChoice{all[0], 2};
    // Uniform over the label's samples excluding x: draw from n-1 slots and
    // remap a hit on x to the last element.
    int j = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(all.size()) - 2));
    int id = all[static_cast<std::size_t>(j)];
    if (id == x_id) id = all.back();
    return PairChoice{id, 2};
}

namespace {

struct FbWork {
    double ce = 0.0;
    bool in_amplified = false;
    std::vector<Tensor> grads;
};

struct FdWork {
    std::vector<Tensor> grads;
    double main = 0.0, sim = 0.0, cls = 0.0, bn = 0.0, total = 0.0;
    double w = 1.0, s_w = 0.0;
    bool degenerate_w = false;
    std::string abort;  // nonempty: step dossier for a non-finite loss
};

std::vector<Tensor> apply_sgd(const std::vector<Tensor>& params,
                              const std::vector<const std::vector<Tensor>*>& grads, double lr) {
    std::vector<Tensor> updated;
    updated.reserve(params.size());
    double step = lr / static_cast<double>(grads.size());
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        std::vector<double> next = params[pi].values();
        for (const auto* g : grads) {
            const auto& gv = (*g)[pi].values();
            for (std::size_t j = 0; j < next.size(); ++j) next[j] -= step * gv[j];
        }
        updated.emplace_back(params[pi].shape(), std::move(next));
    }
    return updated;
}

std::string dossier(int step, int sample_id, int pair_id, int tier, double lambda, const FdWork& w) {
    return "non-finite loss at step " + std::to_string(step) + ": sample=" + std::to_string(sample_id) +
           " pair=" + std::to_string(pair_id) + " tier=" + std::to_string(tier) + " lambda=" +
           fmt_fixed(lambda, 6) + " w=" + fmt_fixed(w.w, 6) + " s_w=" + fmt_fixed(w.s_w, 6) + " main=" +
           fmt_fixed(w.main, 6) + " guide_sim=" + fmt_fixed(w.sim, 6) + " guide_cls=" + fmt_fixed(w.cls, 6) +
           " bn=" + fmt_fixed(w.bn, 6) + " total=" + fmt_fixed(w.total, 6);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<TrainSample>& train_set,
                  const ArchConfig& arch, const PartitionSet* partitions, std::uint64_t seed,
                  const TrainHooks& hooks) {
    cfg.validate();
    arch.validate();
    if (train_set.empty()) throw InputError("train: empty training set");
    int n = static_cast<int>(train_set.size());
    if (cfg.batch_size > n)
        throw ConfigError("train batch_size " + std::to_string(cfg.batch_size) +
                          " exceeds training set size " + std::to_string(n));
    const bool needs_fb = cfg.mode != TrainMode::vanilla;
    if (needs_fb && partitions == nullptr)
        throw ContractViolation("train: partitions are required unless mode is vanilla");

    int classes = arch.classes;
    std::unordered_map<int, int> idx_of;
    std::vector<std::vector<int>> d_by_class(static_cast<std::size_t>(classes));
    for (int i = 0; i < n; ++i) {
        const TrainSample& s = train_set[static_cast<std::size_t>(i)];
        if (s.label < 0 || s.label >= classes)
            throw InputError("train: sample " + std::to_string(s.id) + " has label " +
                             std::to_string(s.label) + " outside [0, " + std::to_string(classes) + ")");
        if (!idx_of.emplace(s.id, i).second)
            throw InputError("train: duplicate sample id " + std::to_string(s.id));
        d_by_class[static_cast<std::size_t>(s.label)].push_back(s.id);
    }
    for (int c = 0; c < classes; ++c)
        if (d_by_class[static_cast<std::size_t>(c)].empty())
            throw InputError("train: class " + std::to_string(c) + " has no training samples");

    std::unordered_set<int> amplified;
    std::vector<int> cand_ids, cand_labels;
    std::vector<std::vector<int>> cand_by_class(static_cast<std::size_t>(classes));
    if (needs_fb) {
        auto label_of = [&](int id) {
            auto it = idx_of.find(id);
            if (it == idx_of.end())
                throw InputError("train: partition references unknown sample id " + std::to_string(id));
            return train_set[static_cast<std::size_t>(it->second)].label;
        };
        for (int id : partitions->amplified) {
            label_of(id);
            amplified.insert(id);
        }
        for (int id : partitions->candidates) {
            int label = label_of(id);
            cand_ids.push_back(id);
            cand_labels.push_back(label);
            cand_by_class[static_cast<std::size_t>(label)].push_back(id);
        }
        if (cand_ids.empty()) throw InputError("train: candidate partition is empty");
    }

    TrainResult out;
    out.f_d = ConvNet::init(arch, derive_seed(seed, "f_d/init"));
    if (needs_fb) out.f_b = ConvNet::init(arch, derive_seed(seed, "f_b/init"));
    std::optional<BnState> tracker;
    if (needs_fb) tracker.emplace(cand_ids, cand_labels, cfg.alpha_l, cfg.alpha_s, cfg.t1);

    Rng rng(derive_seed(seed, "batches"));
    const int B = cfg.batch_size;
    const bool guidance_possible = cfg.mode == TrainMode::full && cfg.t2 < cfg.total_iters;

    std::vector<char> flips(static_cast<std::size_t>(B));
    std::vector<Tensor> images(static_cast<std::size_t>(B));
    std::vector<FbWork> fbw(static_cast<std::size_t>(B));
    std::vector<FdWork> fdw(static_cast<std::size_t>(B));
    std::vector<int> pair_ids(static_cast<std::size_t>(B), -1);
    std::vector<int> pair_tiers(static_cast<std::size_t>(B), -1);
    std::vector<char> pair_flips(static_cast<std::size_t>(B), 0);
    std::vector<double> pair_s_w(static_cast<std::size_t>(B), 0.0);

    for (int t = 1; t <= cfg.total_iters; ++t) {
        std::vector<int> batch = rng.sample_without_replacement(n, B);
        for (int b = 0; b < B; ++b)
            flips[static_cast<std::size_t>(b)] = cfg.augment_flip && rng.coin() ? 1 : 0;
        for (int b = 0; b < B; ++b) {
            const TrainSample& s = train_set[static_cast<std::size_t>(batch[static_cast<std::size_t>(b)])];
            images[static_cast<std::size_t>(b)] =
                flips[static_cast<std::size_t>(b)] ? flip_horizontal(s.image) : s.image;
        }

        // Biased-model pass: every batch member's CE (for tracking and for the
        // relative-difficulty weight), gradients only for amplified members.
        if (needs_fb) {
            parallel_for(B, cfg.threads, [&](int b) {
                const TrainSample& s =
                    train_set[static_cast<std::size_t>(batch[static_cast<std::size_t>(b)])];
                FbWork& w = fbw[static_cast<std::size_t>(b)];
                w.grads.clear();
                w.in_amplified = amplified.count(s.id) != 0;
                if (w.in_amplified) {
                    Tape tape;
                    TapedNet fb = watch_net(out.f_b, tape);
                    Tensor ce = cross_entropy(fb.forward(images[static_cast<std::size_t>(b)]), s.label);
                    w.ce = ce.item();
                    tape.backward(ce);
                    w.grads.reserve(fb.params.size());
                    for (const Tensor& p : fb.params) w.grads.push_back(tape.grad(p));
                } else {
                    w.ce = cross_entropy(out.f_b.forward(images[static_cast<std::size_t>(b)]), s.label).item();
                }
            });

            // Tracker updates in batch order; non-finite losses skip and log.
            for (int b = 0; b < B; ++b) {
                const TrainSample& s =
                    train_set[static_cast<std::size_t>(batch[static_cast<std::size_t>(b)])];
                if (tracker->is_tracked(s.id))
                    tracker->step_update(s.id, fbw[static_cast<std::size_t>(b)].ce, t);
            }

            std::vector<const std::vector<Tensor>*> fb_grads;
            for (int b = 0; b < B; ++b)
                if (fbw[static_cast<std::size_t>(b)].in_amplified) {
                    if (!std::isfinite(fbw[static_cast<std::size_t>(b)].ce))
                        throw TrainingAborted(
                            "non-finite biased-model loss at step " + std::to_string(t) + ": sample=" +
                            std::to_string(
                                train_set[static_cast<std::size_t>(batch[static_cast<std::size_t>(b)])].id) +
                            " ce=" + std::to_string(fbw[static_cast<std::size_t>(b)].ce));
                    fb_grads.push_back(&fbw[static_cast<std::size_t>(b)].grads);
                }
            if (!fb_grads.empty())
                out.f_b = out.f_b.with_params(apply_sgd(out.f_b.params(), fb_grads, cfg.learning_rate));
        }

        // Guided phase setup: refresh the dynamic set, then draw one
        // same-label pair per batch element (sequentially, for determinism).
        const bool guided = guidance_possible && t >= cfg.t2;
        const bool needs_pairs = guided && (cfg.guide_loss_enabled || cfg.bn_loss_enabled);
        const double lambda = guided ? lambda_main(t, cfg.t2, cfg.total_iters) : 1.0;
        if (needs_pairs) {
            std::vector<std::vector<int>> dbn_by_class(static_cast<std::size_t>(classes));
            if (cfg.pair_source == PairSource::dbn)
                for (int id : tracker->current_dbn())
                    dbn_by_class[static_cast<std::size_t>(tracker->entry(id).label)].push_back(id);
            static const std::vector<std::vector<int>> kNone;
            const auto& tier1 = cfg.pair_source == PairSource::d
                                    ? kNone
                                    : cand_by_class;
            for (int b = 0; b < B; ++b) {
                const TrainSample& s =
                    train_set[static_cast<std::size_t>(batch[static_cast<std::size_t>(b)])];
                PairChoice pc = sample_pair(s.id, s.label, dbn_by_class, tier1, d_by_class, rng);
                pair_ids[static_cast<std::size_t>(b)] = pc.id;
                pair_tiers[static_cast<std::size_t>(b)] = pc.tier;
                pair_flips[static_cast<std::size_t>(b)] = cfg.augment_flip && rng.coin() ? 1 : 0;
                double s_w = 1.0;
                if (cfg.score_weight_enabled)
                    s_w = tracker->is_tracked(pc.id) ? tracker->loss_weight(pc.id) : 0.0;
                pair_s_w[static_cast<std::size_t>(b)] = s_w;
            }
        } else {
            std::fill(pair_ids.begin(), pair_ids.end(), -1);
            std::fill(pair_tiers.begin(), pair_tiers.end(), -1);
            std::fill(pair_s_w.begin(), pair_s_w.end(), 0.0);
        }

        // Debiased-model pass: per-sample tapes, reduced in batch order.
        parallel_for(B, cfg.threads, [&](int b) {
            const TrainSample& s = train_set[static_cast<std::size_t>(batch[static_cast<std::size_t>(b)])];
            FdWork& w = fdw[static_cast<std::size_t>(b)];
            w = FdWork{};
            Tape tape;
            TapedNet fd = watch_net(out.f_d, tape);
            Tensor z = fd.embed(images[static_cast<std::size_t>(b)]);
            Tensor ce_d = cross_entropy(fd.classify(z), s.label);

            Tensor total;
            if (cfg.mode == TrainMode::vanilla) {
                w.w = 1.0;
                w.main = ce_d.item();
                total = ce_d;
            } else {
                double ce_b = fbw[static_cast<std::size_t>(b)].ce;
                if (!std::isfinite(ce_b) || !std::isfinite(ce_d.item())) {
                    w.main = ce_d.item();
                    w.abort = dossier(t, s.id, pair_ids[static_cast<std::size_t>(b)],
                                      pair_tiers[static_cast<std::size_t>(b)], lambda, w);
                    return;
                }
                RelativeDifficulty rd = relative_difficulty(ce_b, ce_d.item());
                w.w = rd.w;
                w.degenerate_w = rd.degenerate;
                Tensor main_node = scale(ce_d, rd.w);
                w.main = main_node.item();
                if (!guided) {
                    total = main_node;
                } else {
                    total = scale(main_node, lambda);
                    if (needs_pairs) {
                        int pair_idx = idx_of.at(pair_ids[static_cast<std::size_t>(b)]);
                        const TrainSample& sp = train_set[static_cast<std::size_t>(pair_idx)];
                        Tensor img_bn = pair_flips[static_cast<std::size_t>(b)]
                                            ? flip_horizontal(sp.image)
                                            : sp.image;
                        Tensor z_bn = fd.embed(img_bn);
                        w.s_w = pair_s_w[static_cast<std::size_t>(b)];
                        if (cfg.guide_loss_enabled) {
                            GuidanceMaps maps = compute_guidance(out.f_d, z, z_bn, s.label, cfg.tau);
                            Tensor sim = loss_guide_sim(w.s_w, z, maps.g);
                            Tensor cls = loss_guide_cls(rd.w, fd, maps.g, s.label);
                            w.sim = sim.item();
                            w.cls = cls.item();
                            total = add(total, loss_guide(sim, cls, cfg.lambda_sim));
                        }
                        if (cfg.bn_loss_enabled) {
                            Tensor bn = loss_bn(w.s_w, fd.classify(z_bn), sp.label);
                            w.bn = bn.item();
                            total = add(total, bn);
                        }
                    }
                }
            }
            w.total = total.item();
            if (!std::isfinite(w.total)) {
                w.abort = dossier(t, s.id, pair_ids[static_cast<std::size_t>(b)],
                                  pair_tiers[static_cast<std::size_t>(b)], lambda, w);
                return;
            }
            tape.backward(total);
            w.grads.reserve(fd.params.size());
            for (const Tensor& p : fd.params) w.grads.push_back(tape.grad(p));
        });

        for (int b = 0; b < B; ++b)
            if (!fdw[static_cast<std::size_t>(b)].abort.empty())
                throw TrainingAborted(fdw[static_cast<std::size_t>(b)].abort);

        std::vector<const std::vector<Tensor>*> fd_grads;
        fd_grads.reserve(static_cast<std::size_t>(B));
        for (int b = 0; b < B; ++b) fd_grads.push_back(&fdw[static_cast<std::size_t>(b)].grads);
        out.f_d = out.f_d.with_params(apply_sgd(out.f_d.params(), fd_grads, cfg.learning_rate));

        StepRecord rec;
        rec.step = t;
        rec.lambda = lambda;
        for (int b = 0; b < B; ++b) {
            const FdWork& w = fdw[static_cast<std::size_t>(b)];
            rec.main += w.main;
            rec.guide_sim += w.sim;
            rec.guide_cls += w.cls;
            rec.bn += w.bn;
            rec.total += w.total;
            rec.w_mean += w.w;
            rec.s_w_mean += w.s_w;
            rec.degenerate_w_count += w.degenerate_w ? 1 : 0;
        }
        rec.main /= B;
        rec.guide_sim /= B;
        rec.guide_cls /= B;
        rec.bn /= B;
        rec.total /= B;
        rec.w_mean /= B;
        rec.s_w_mean /= B;
        rec.pair_x = needs_pairs ? train_set[static_cast<std::size_t>(batch[0])].id : -1;
        rec.pair_x_bn = pair_ids[0];
        rec.pair_tier = pair_tiers[0];
        out.steps.push_back(rec);

        if (needs_fb && (t % cfg.tracker_log_every == 0 || t == cfg.total_iters))
            for (const auto& [id, e] : tracker->entries())
                out.tracker_rows.push_back(TrackerLogRow{t, id, e.label, e.l, e.s});

        if (hooks.on_eval && (t % cfg.eval_every == 0 || t == cfg.total_iters)) hooks.on_eval(t, out.f_d);
    }

    if (needs_fb) {
        out.final_dbn = tracker->current_dbn();
        for (const auto& [id, e] : tracker->entries()) out.final_entries.push_back(e);
        out.incidents = tracker->incidents();
    }
    return out;
}

}  // namespace ifg

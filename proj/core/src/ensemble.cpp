#include "ifg/ensemble.hpp"

#include <algorithm>

#include "ifg/io.hpp"
#include "ifg/parallel.hpp"
#include "ifg/rng.hpp"

namespace ifg {

void EnsembleConfig::validate() const {
    if (count < 1 || count % 2 == 0)
        throw ConfigError("ensemble count must be odd and positive, got " + std::to_string(count));
    if (iters < 1) throw ConfigError("ensemble iters must be >= 1, got " + std::to_string(iters));
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("ensemble gce q must be in (0, 1]");
    if (!(threshold > 0.5 && threshold <= 1.0))
        throw ConfigError("ensemble threshold must be in (0.5, 1], got " + std::to_string(threshold));
    if (batch_size < 1) throw ConfigError("ensemble batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("ensemble lr must be > 0");
}

bool amplified_vote(const std::vector<double>& true_label_probs, double threshold) {
    int hits = 0;
    for (double p : true_label_probs)
        if (p >= threshold) ++hits;
    return 2 * hits > static_cast<int>(true_label_probs.size());
}

bool candidate_vote(const std::vector<int>& predictions, int label) {
    int wrong = 0;
    for (int p : predictions)
        if (p != label) ++wrong;
    return 2 * wrong > static_cast<int>(predictions.size());
}

namespace {

// One SGD step on the mean GCE loss of a batch. Per-sample gradients are
// computed on private tapes in parallel, then reduced in batch order so the
// result is independent of the thread count.
ConvNet gce_step(const ConvNet& net, const std::vector<TrainSample>& train, const std::vector<int>& batch,
                 const std::vector<char>& flip, double q, double lr, int threads) {
    int b = static_cast<int>(batch.size());
    std::vector<std::vector<Tensor>> grads(static_cast<std::size_t>(b));
    parallel_for(b, threads, [&](int i) {
        Tape tape;
        TapedNet tn = watch_net(net, tape);
        const TrainSample& s = train[static_cast<std::size_t>(batch[static_cast<std::size_t>(i)])];
        Tensor img = flip[static_cast<std::size_t>(i)] ? flip_horizontal(s.image) : s.image;
        Tensor loss = gce_loss(tn.forward(img), s.label, q);
        tape.backward(loss);
        auto& g = grads[static_cast<std::size_t>(i)];
        g.reserve(tn.params.size());
        for (const Tensor& p : tn.params) g.push_back(tape.grad(p));
    });
    std::vector<Tensor> updated;
    updated.reserve(net.params().size());
    double scale_lr = lr / b;
    for (std::size_t pi = 0; pi < net.params().size(); ++pi) {
        std::vector<double> next = net.params()[pi].values();
        for (int i = 0; i < b; ++i) {
            const auto& g = grads[static_cast<std::size_t>(i)][pi].values();
            for (std::size_t j = 0; j < next.size(); ++j) next[j] -= scale_lr * g[j];
        }
        updated.emplace_back(net.params()[pi].shape(), std::move(next));
    }
    return net.with_params(std::move(updated));
}

}  // namespace

ModelEnsemble pretrain_biased(const std::vector<TrainSample>& train, const ArchConfig& arch,
                              const EnsembleConfig& cfg, std::uint64_t seed, int threads) {
    cfg.validate();
    arch.validate();
    if (train.empty()) throw InputError("pretrain_biased: empty training set");
    if (cfg.batch_size > static_cast<int>(train.size()))
        throw ConfigError("ensemble batch_size " + std::to_string(cfg.batch_size) +
                          " exceeds training set size " + std::to_string(train.size()));
    ModelEnsemble ensemble;
    int n = static_cast<int>(train.size());
    for (int m = 0; m < cfg.count; ++m) {
        std::string tag = "biased-member-" + std::to_string(m);
        ConvNet net = ConvNet::init(arch, derive_seed(seed, tag + "/init"));
        Rng rng(derive_seed(seed, tag + "/batches"));
        std::vector<char> flip(static_cast<std::size_t>(cfg.batch_size), 0);
        for (int t = 0; t < cfg.iters; ++t) {
            std::vector<int> batch = rng.sample_without_replacement(n, cfg.batch_size);
            for (auto& f : flip) f = cfg.augment_flip && rng.coin() ? 1 : 0;
            net = gce_step(net, train, batch, flip, cfg.q, cfg.lr, threads);
        }
        ensemble.members.push_back(std::move(net));
    }
    return ensemble;
}

EnsembleVotes compute_votes(const ModelEnsemble& ensemble, const std::vector<TrainSample>& train,
                            int threads) {
    if (ensemble.members.empty()) throw InputError("compute_votes: empty ensemble");
    int n = static_cast<int>(train.size());
    int m = static_cast<int>(ensemble.members.size());
    EnsembleVotes votes;
    votes.ids.resize(static_cast<std::size_t>(n));
    votes.labels.resize(static_cast<std::size_t>(n));
    votes.true_label_prob.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
    votes.prediction.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(m)));
    parallel_for(n, threads, [&](int i) {
        const TrainSample& s = train[static_cast<std::size_t>(i)];
        votes.ids[static_cast<std::size_t>(i)] = s.id;
        votes.labels[static_cast<std::size_t>(i)] = s.label;
        for (int k = 0; k < m; ++k) {
            Tensor p = softmax(ensemble.members[static_cast<std::size_t>(k)].forward(s.image));
            votes.true_label_prob[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = p[s.label];
            votes.prediction[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = argmax(p.values());
        }
    });
    return votes;
}

std::vector<int> build_amplified(const EnsembleVotes& votes, double threshold) {
    if (!(threshold > 0.5 && threshold <= 1.0))
        throw ConfigError("amplified threshold must be in (0.5, 1], got " + std::to_string(threshold));
    std::vector<int> out;
    for (std::size_t i = 0; i < votes.ids.size(); ++i)
        if (amplified_vote(votes.true_label_prob[i], threshold)) out.push_back(votes.ids[i]);
    return out;
}

std::vector<int> build_candidates(const EnsembleVotes& votes) {
    std::vector<int> out;
    for (std::size_t i = 0; i < votes.ids.size(); ++i)
        if (candidate_vote(votes.prediction[i], votes.labels[i])) out.push_back(votes.ids[i]);
    if (out.empty())
        throw InputError("candidate set is empty: no sample is misclassified by a majority of the biased "
                         "models, so guidance has nothing to work with");
    return out;
}

PartitionSet build_partitions(const ModelEnsemble& ensemble, const std::vector<TrainSample>& train,
                              double threshold, int threads) {
    EnsembleVotes votes = compute_votes(ensemble, train, threads);
    PartitionSet p;
    p.amplified = build_amplified(votes, threshold);
    p.candidates = build_candidates(votes);
    return p;
}

void save_partitions(const PartitionSet& p, const std::string& path) {
    std::string out;
    for (int id : p.amplified) out += std::to_string(id) + ",amplified\n";
    for (int id : p.candidates) out += std::to_string(id) + ",candidate\n";
    write_text_file(path, out);
}

PartitionSet load_partitions(const std::string& path) {
    PartitionSet p;
    std::vector<std::string> lines = split_lines(read_text_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> fields = split_csv_line(lines[i]);
        if (fields.size() != 2)
            throw FormatError("'" + path + "' line " + std::to_string(i + 1) +
                              ": expected `sample_id,partition`, got '" + lines[i] + "'");
        int id;
        try {
            id = std::stoi(fields[0]);
        } catch (const std::exception&) {
            throw FormatError("'" + path + "' line " + std::to_string(i + 1) + ": bad sample id '" +
                              fields[0] + "'");
        }
        if (fields[1] == "amplified")
            p.amplified.push_back(id);
        else if (fields[1] == "candidate")
            p.candidates.push_back(id);
        else
            throw FormatError("'" + path + "' line " + std::to_string(i + 1) + ": unknown partition '" +
                              fields[1] + "'");
    }
    return p;
}

}  // namespace ifg

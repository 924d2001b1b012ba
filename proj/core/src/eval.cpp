#include "ifg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "ifg/io.hpp"
#include "ifg/parallel.hpp"

namespace ifg {

namespace {
double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }
}

Metrics::Metrics() : bn_auc(nan_value()) {}
MetricsRow::MetricsRow() : bn_auc(nan_value()) {}

Metrics metrics_from_predictions(const std::vector<int>& predictions, const std::vector<Sample>& test) {
    if (test.empty()) throw InputError("evaluate: empty test set");
    if (predictions.size() != test.size())
        throw InputError("evaluate: prediction count does not match test set size");
    int classes = 0;
    for (const Sample& s : test) classes = std::max(classes, s.label + 1);

    std::vector<int> per_class_total(static_cast<std::size_t>(classes), 0);
    std::vector<int> per_class_hit(static_cast<std::size_t>(classes), 0);
    int hits = 0, ba_total = 0, ba_hits = 0, bc_total = 0, bc_hits = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Sample& s = test[i];
        bool hit = predictions[i] == s.label;
        ++per_class_total[static_cast<std::size_t>(s.label)];
        per_class_hit[static_cast<std::size_t>(s.label)] += hit;
        hits += hit;
        if (s.bias_aligned) {
            ++ba_total;
            ba_hits += hit;
        } else {
            ++bc_total;
            bc_hits += hit;
        }
    }
    for (int c = 0; c < classes; ++c)
        if (per_class_total[static_cast<std::size_t>(c)] == 0)
            throw ConfigError("evaluate: class " + std::to_string(c) + " is absent from the test set");

    Metrics m;
    m.overall = 100.0 * hits / static_cast<double>(test.size());
    m.per_class.resize(static_cast<std::size_t>(classes));
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
        m.per_class[static_cast<std::size_t>(c)] = 100.0 * per_class_hit[static_cast<std::size_t>(c)] /
                                                   static_cast<double>(per_class_total[static_cast<std::size_t>(c)]);
        sum += m.per_class[static_cast<std::size_t>(c)];
    }
    m.class_avg = sum / classes;
    m.ba = ba_total > 0 ? 100.0 * ba_hits / ba_total : nan_value();
    m.bc = bc_total > 0 ? 100.0 * bc_hits / bc_total : nan_value();
    return m;
}

Metrics evaluate(const ConvNet& net, const std::vector<Sample>& test, int threads) {
    if (test.empty()) throw InputError("evaluate: empty test set");
    std::vector<int> preds(test.size());
    parallel_for(static_cast<int>(test.size()), threads,
                 [&](int i) { preds[static_cast<std::size_t>(i)] = net.predict(test[static_cast<std::size_t>(i)].image); });
    return metrics_from_predictions(preds, test);
}

double roc_auc(const std::vector<double>& scores, const std::vector<char>& positive) {
    if (scores.size() != positive.size()) throw InputError("roc_auc: score/label length mismatch");
    std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (char p : positive) n_pos += p ? 1 : 0;
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return nan_value();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks across ties, then Mann-Whitney.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            if (positive[order[k]]) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

std::unordered_map<int, bool> bias_flags_by_id(const BiasedDataset& ds) {
    std::unordered_map<int, bool> flags;
    for (const Sample& s : ds.train) flags.emplace(s.id, s.bias_aligned);
    return flags;
}

bool flag_of(const std::unordered_map<int, bool>& flags, int id) {
    auto it = flags.find(id);
    if (it == flags.end())
        throw InputError("sample id " + std::to_string(id) + " is not in the training set");
    return it->second;
}

}  // namespace

double bn_auc_from_entries(const std::vector<TrackerEntry>& entries, const BiasedDataset& ds) {
    auto flags = bias_flags_by_id(ds);
    std::vector<double> scores;
    std::vector<char> positive;
    scores.reserve(entries.size());
    positive.reserve(entries.size());
    for (const TrackerEntry& e : entries) {
        scores.push_back(e.s);
        positive.push_back(flag_of(flags, e.sample_id) ? 0 : 1);  // BC is the positive class
    }
    return roc_auc(scores, positive);
}

DbnComposition dbn_composition(const PartitionSet& partitions, const std::vector<int>& dbn_final,
                               const BiasedDataset& ds) {
    auto flags = bias_flags_by_id(ds);
    std::unordered_set<int> dbn(dbn_final.begin(), dbn_final.end());
    DbnComposition comp;
    for (int id : partitions.candidates) {
        bool ba = flag_of(flags, id);
        bool retained = dbn.count(id) != 0;
        comp.cand_ba += ba;
        comp.cand_bc += !ba;
        comp.retained_ba += ba && retained;
        comp.retained_bc += !ba && retained;
    }
    int d_ba = 0, d_bc = 0;
    for (const Sample& s : ds.train) (s.bias_aligned ? d_ba : d_bc) += 1;
    comp.retained_ba_pct_of_d = d_ba > 0 ? 100.0 * comp.retained_ba / d_ba : 0.0;
    comp.retained_bc_pct_of_d = d_bc > 0 ? 100.0 * comp.retained_bc / d_bc : 0.0;
    int cand_total = comp.cand_ba + comp.cand_bc;
    int dbn_total = comp.retained_ba + comp.retained_bc;
    comp.ba_fraction_cand = cand_total > 0 ? static_cast<double>(comp.cand_ba) / cand_total : 0.0;
    comp.ba_fraction_dbn = dbn_total > 0 ? static_cast<double>(comp.retained_ba) / dbn_total : 0.0;
    return comp;
}

CandidateQuality candidate_quality(const PartitionSet& partitions, const BiasedDataset& ds) {
    auto flags = bias_flags_by_id(ds);
    CandidateQuality q;
    q.cand_count = static_cast<int>(partitions.candidates.size());
    for (int id : partitions.candidates) q.cand_bc += flag_of(flags, id) ? 0 : 1;
    for (const Sample& s : ds.train) q.total_bc += s.bias_aligned ? 0 : 1;
    q.bc_recall = q.total_bc > 0 ? static_cast<double>(q.cand_bc) / q.total_bc : 0.0;
    q.ba_contamination = q.cand_count > 0
                             ? static_cast<double>(q.cand_count - q.cand_bc) / q.cand_count
                             : 0.0;
    return q;
}

namespace {

constexpr const char* kMetricsHeader =
    "mode,seed,severity,overall,class_avg,ba,bc,bn_auc,best_step,"
    "final_overall,final_class_avg,final_ba,final_bc";

std::string format_row(const MetricsRow& r) {
    std::string out = r.mode;
    out += ',' + std::to_string(r.seed);
    out += ',' + fmt_fixed(r.severity_pct, 3);
    out += ',' + fmt_fixed(r.overall, 6);
    out += ',' + fmt_fixed(r.class_avg, 6);
    out += ',' + fmt_fixed(r.ba, 6);
    out += ',' + fmt_fixed(r.bc, 6);
    out += ',' + fmt_fixed(r.bn_auc, 6);
    out += ',' + std::to_string(r.best_step);
    out += ',' + fmt_fixed(r.final_overall, 6);
    out += ',' + fmt_fixed(r.final_class_avg, 6);
    out += ',' + fmt_fixed(r.final_ba, 6);
    out += ',' + fmt_fixed(r.final_bc, 6);
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    if (s == "nan") return nan_value();
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw FormatError("'" + path + "' line " + std::to_string(line) + ": bad number '" + s + "'");
    }
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::vector<MetricsRow> rows;
    std::vector<std::string> lines = split_lines(read_text_file(path));
    if (lines.empty()) return rows;
    if (lines[0] != kMetricsHeader)
        throw FormatError("'" + path + "': unexpected header '" + lines[0] + "'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != 13)
            throw FormatError("'" + path + "' line " + std::to_string(i + 1) + ": expected 13 fields, got " +
                              std::to_string(f.size()));
        MetricsRow r;
        r.mode = f[0];
        try {
            r.seed = std::stoull(f[1]);
            r.best_step = std::stoi(f[8]);
        } catch (const std::exception&) {
            throw FormatError("'" + path + "' line " + std::to_string(i + 1) + ": bad integer field");
        }
        r.severity_pct = parse_double(f[2], path, i + 1);
        r.overall = parse_double(f[3], path, i + 1);
        r.class_avg = parse_double(f[4], path, i + 1);
        r.ba = parse_double(f[5], path, i + 1);
        r.bc = parse_double(f[6], path, i + 1);
        r.bn_auc = parse_double(f[7], path, i + 1);
        r.final_overall = parse_double(f[9], path, i + 1);
        r.final_class_avg = parse_double(f[10], path, i + 1);
        r.final_ba = parse_double(f[11], path, i + 1);
        r.final_bc = parse_double(f[12], path, i + 1);
        rows.push_back(std::move(r));
    }
    return rows;
}

void upsert_metrics_row(const std::string& path, const MetricsRow& row) {
    std::vector<MetricsRow> rows;
    std::ifstream probe(path);
    if (probe.good()) {
        probe.close();
        rows = read_metrics_csv(path);
    }
    auto key = [](const MetricsRow& r) { return std::make_tuple(r.mode, r.seed, r.severity_pct); };
    bool replaced = false;
    for (MetricsRow& r : rows)
        if (key(r) == key(row)) {
            r = row;
            replaced = true;
            break;
        }
    if (!replaced) rows.push_back(row);
    std::sort(rows.begin(), rows.end(),
              [&](const MetricsRow& a, const MetricsRow& b) { return key(a) < key(b); });
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const MetricsRow& r : rows) out += format_row(r) + "\n";
    write_text_file(path, out);
}

}  // namespace ifg

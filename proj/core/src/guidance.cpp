#include "ifg/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ifg/io.hpp"

namespace ifg {

namespace {

constexpr double kEps = 1e-12;

void check_feature_map(const Tensor& z, const char* who) {
    if (z.rank() != 3) throw InputError(std::string(who) + " expects [h, w, c], got " + shape_str(z.shape()));
}

}  // namespace

std::vector<double> gradcam(const ConvNet& net, const Tensor& z, int label) {
    check_feature_map(z, "gradcam");
    if (!z.attached())
        throw ContractViolation("gradcam requires z attached to a live tape (a detached map cannot guide "
                                "any gradient)");
    int h = z.shape()[0], w = z.shape()[1], c = z.shape()[2];

    // Scratch tape: watch z's values, run the classification head with the
    // net's current (detached) parameters, and pull d(logit_label)/dz.
    Tape tape;
    Tensor z_leaf = tape.watch(z);
    Tensor logits = run_classify(net.arch(), net.params(), z_leaf);
    tape.backward(select(logits, label));
    Tensor dz = tape.grad(z_leaf);

    int hw = h * w;
    std::vector<double> alpha(static_cast<std::size_t>(c), 0.0);
    const double* dzp = dz.values().data();
    for (int n = 0; n < hw; ++n)
        for (int ch = 0; ch < c; ++ch) alpha[static_cast<std::size_t>(ch)] += dzp[static_cast<std::size_t>(n) * c + ch];
    for (double& a : alpha) a /= hw;

    std::vector<double> raw(static_cast<std::size_t>(hw), 0.0);
    const double* zp = z.values().data();
    double raw_max = 0.0;
    for (int n = 0; n < hw; ++n) {
        double acc = 0.0;
        for (int ch = 0; ch < c; ++ch) acc += alpha[static_cast<std::size_t>(ch)] * zp[static_cast<std::size_t>(n) * c + ch];
        double v = acc > 0.0 ? acc : 0.0;
        raw[static_cast<std::size_t>(n)] = v;
        raw_max = std::max(raw_max, v);
    }
    if (raw_max > kEps)
        for (double& v : raw) v /= raw_max;
    else
        std::fill(raw.begin(), raw.end(), 0.0);
    return raw;
}

CommonScore common_score(const Tensor& z, const Tensor& z_bn) {
    check_feature_map(z, "common_score");
    if (z.shape() != z_bn.shape())
        throw InputError("common_score shape mismatch: " + shape_str(z.shape()) + " vs " +
                         shape_str(z_bn.shape()));
    int h = z.shape()[0], w = z.shape()[1], c = z.shape()[2];
    int hw = h * w;
    const double* zp = z.values().data();
    const double* bp = z_bn.values().data();

    CommonScore out;
    out.c.assign(static_cast<std::size_t>(hw), 0.0);
    out.pairing.assign(static_cast<std::size_t>(hw), 0);
    double global_max = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < hw; ++n) {
        double best = -std::numeric_limits<double>::infinity();
        int best_i = 0;
        for (int i = 0; i < hw; ++i) {
            double dot = 0.0;
            for (int ch = 0; ch < c; ++ch)
                dot += bp[static_cast<std::size_t>(i) * c + ch] * zp[static_cast<std::size_t>(n) * c + ch];
            if (dot > best) {  // strict: ties keep the lowest i
                best = dot;
                best_i = i;
            }
        }
        out.c[static_cast<std::size_t>(n)] = best;
        out.pairing[static_cast<std::size_t>(n)] = best_i;
        global_max = std::max(global_max, best);
    }
    if (global_max <= kEps) {
        for (int n = 0; n < hw; ++n) {
            out.c[static_cast<std::size_t>(n)] = 0.0;
            out.pairing[static_cast<std::size_t>(n)] = n;
        }
        return out;
    }
    for (double& v : out.c) v /= global_max;
    return out;
}

std::vector<double> relative_exploitation(const std::vector<double>& e, const std::vector<double>& e_bn,
                                          const std::vector<int>& pairing, double tau) {
    if (!(tau > 0.0)) throw ConfigError("relative_exploitation tau must be > 0");
    if (e.size() != e_bn.size() || e.size() != pairing.size())
        throw InputError("relative_exploitation: map/pairing sizes disagree");
    std::vector<double> r(e.size(), 0.0);
    for (std::size_t n = 0; n < e.size(); ++n) {
        double a = e_bn[static_cast<std::size_t>(pairing[n])];
        double b = e[n];
        if (a <= kEps && b <= kEps) continue;  // 0/0 guard; r stays 0
        r[n] = std::pow(2.0 * a / (a + b), tau);
    }
    return r;
}

std::vector<double> ie_weight(const std::vector<double>& c_map, const std::vector<double>& r_map) {
    if (c_map.size() != r_map.size()) throw InputError("ie_weight: map sizes disagree");
    std::vector<double> ie(c_map.size());
    for (std::size_t n = 0; n < c_map.size(); ++n) ie[n] = std::max(c_map[n] * r_map[n], 1.0);
    return ie;
}

Tensor guide(const Tensor& z, const std::vector<double>& ie) {
    check_feature_map(z, "guide");
    int hw = z.shape()[0] * z.shape()[1];
    int c = z.shape()[2];
    if (static_cast<int>(ie.size()) != hw)
        throw InputError("guide: ie has " + std::to_string(ie.size()) + " positions, z has " +
                         std::to_string(hw));
    // Broadcast ie to z's shape as a constant, then reuse the elementwise
    // multiply op: gradients flow into z only.
    std::vector<double> bcast(static_cast<std::size_t>(hw) * c);
    for (int n = 0; n < hw; ++n)
        for (int ch = 0; ch < c; ++ch) bcast[static_cast<std::size_t>(n) * c + ch] = ie[static_cast<std::size_t>(n)];
    return mul(z, Tensor(z.shape(), std::move(bcast)));
}

GuidanceMaps compute_guidance(const ConvNet& net, const Tensor& z, const Tensor& z_bn, int label,
                              double tau) {
    GuidanceMaps m;
    m.h = z.shape()[0];
    m.w = z.shape()[1];
    m.z = z;
    m.z_bn = z_bn;
    m.e = gradcam(net, z, label);
    m.e_bn = gradcam(net, z_bn, label);
    CommonScore cs = common_score(z, z_bn);
    m.c_map = std::move(cs.c);
    m.pairing = std::move(cs.pairing);
    m.r_map = relative_exploitation(m.e, m.e_bn, m.pairing, tau);
    m.ie = ie_weight(m.c_map, m.r_map);
    m.g = guide(z, m.ie);
    return m;
}

namespace {

void write_map_csv(const std::string& path, const std::vector<double>& map, int h, int w) {
    std::string out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x) out += ',';
            out += fmt_fixed(map[static_cast<std::size_t>(y) * w + x], 6);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

void write_map_pgm(const std::string& path, const std::vector<double>& map, int h, int w) {
    double lo = *std::min_element(map.begin(), map.end());
    double hi = *std::max_element(map.begin(), map.end());
    double span = hi - lo;
    std::string out = "P2\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = map[static_cast<std::size_t>(y) * w + x];
            int gray = span > kEps ? static_cast<int>(std::lround((v - lo) / span * 255.0)) : 0;
            if (x) out += ' ';
            out += std::to_string(gray);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace

void export_guidance_maps(const GuidanceMaps& maps, const std::string& dir, const std::string& prefix) {
    struct Item {
        const char* name;
        const std::vector<double>* map;
    };
    const Item items[] = {
        {"e", &maps.e}, {"e_bn", &maps.e_bn}, {"c", &maps.c_map}, {"r", &maps.r_map}, {"ie", &maps.ie},
    };
    for (const Item& it : items) {
        std::string base = dir + "/" + prefix + "_" + it.name;
        write_map_csv(base + ".csv", *it.map, maps.h, maps.w);
        write_map_pgm(base + ".pgm", *it.map, maps.h, maps.w);
    }
}

}  // namespace ifg

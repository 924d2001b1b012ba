#pragma once

#include <string>
#include <vector>

#include "ifg/model.hpp"
#include "ifg/tensor.hpp"

namespace ifg {

// Spatial guidance derived from a (sample, candidate) feature pair. All maps
// are plain value arrays: gradients never flow through them, only through z
// via g. Positions are row-major over the h x w embedding grid.
struct GuidanceMaps {
    int h = 0;
    int w = 0;
    Tensor z;                    // the sample's embedding
    Tensor z_bn;                 // the paired candidate's embedding
    std::vector<double> e;       // explanation map of z, max-normalized
    std::vector<double> e_bn;    // explanation map of z_bn, max-normalized
    std::vector<int> pairing;    // for each position n of z, the matched position of z_bn
    std::vector<double> c_map;   // common-feature score
    std::vector<double> r_map;   // relative-exploitation score
    std::vector<double> ie;      // intrinsic-feature weight, >= 1
    Tensor g;                    // guided features, attached iff z is
};

// Grad-CAM over the classification head: alpha_ch = spatial mean of
// d(logit_label)/d(z[., ch]); raw_n = relu(sum_ch alpha_ch * z[n, ch]);
// E = raw / max(raw), or all zeros when max(raw) <= eps. The gradient is
// taken on an internal scratch tape with the net's current parameters, so E
// is a constant w.r.t. the caller's tape. z must be attached to a live tape
// (it has to be part of a differentiable path for guidance to matter).
std::vector<double> gradcam(const ConvNet& net, const Tensor& z, int label);

struct CommonScore {
    std::vector<double> c;
    std::vector<int> pairing;
};

// For each position n of z: i*(n) = argmax_i(z_bn[i] . z[n]) (ties to the
// lowest i), c_n = (z_bn[i*] . z[n]) / max_{i,j}(z_bn[i] . z[j]). When the
// global maximum is <= eps, c is all zeros and the pairing defaults to i*=n.
CommonScore common_score(const Tensor& z, const Tensor& z_bn);

// r_n = (2*e_bn[i*(n)] / (e_bn[i*(n)] + e[n]))^tau; 0 when both denominator
// terms are <= eps.
std::vector<double> relative_exploitation(const std::vector<double>& e, const std::vector<double>& e_bn,
                                          const std::vector<int>& pairing, double tau);

// ie_n = max(c_n * r_n, 1).
std::vector<double> ie_weight(const std::vector<double>& c_map, const std::vector<double>& r_map);

// g[n, ch] = z[n, ch] * ie[n]; differentiable w.r.t. z, ie held constant.
Tensor guide(const Tensor& z, const std::vector<double>& ie);

// Full chain for one pair; z and z_bn must both be attached (their
// explanation maps need classifier gradients).
GuidanceMaps compute_guidance(const ConvNet& net, const Tensor& z, const Tensor& z_bn, int label,
                              double tau);

// Writes <prefix>_{e,e_bn,c,r,ie}.csv (exact values) and .pgm (min-max scaled
// to 8-bit for quick viewing) into dir.
void export_guidance_maps(const GuidanceMaps& maps, const std::string& dir, const std::string& prefix);

}  // namespace ifg

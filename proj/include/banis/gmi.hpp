#pragma once

#include <string>
#include <utility>
#include <vector>

#include "banis/mask.hpp"
#include "banis/networks.hpp"
#include "banis/preprocess.hpp"

namespace banis {

enum class BinarizeMethod { Fixed, Otsu };

struct BinarizeSpec {
    BinarizeMethod method = BinarizeMethod::Fixed;
    double threshold = 0.5; // on [0,1]-mapped intensity, used by Fixed
};

// Pixel true iff the [0,1]-mapped intensity strictly exceeds the threshold.
// Otsu falls back to the fixed 0.5 threshold (with a warning on stderr) when
// the image is constant.
BinaryMask binarize(const GrayImage& img, const BinarizeSpec& spec);

// 2|x∩y| / (|x|+|y|); 0 when both masks are empty.
double dsc(const BinaryMask& x, const BinaryMask& y);

struct GmiReport {
    std::vector<std::string> pair_ids;  // sorted
    std::vector<double> dsc_values;     // parallel to pair_ids
    std::vector<double> thresholds;
    std::vector<double> matched_fraction; // parallel to thresholds
    int n_pairs = 0;
    int degenerate_pairs = 0; // both reconstructed masks empty
};

// Core counting rule of the metric: matched iff DSC < TS, strictly.
GmiReport gmi_from_dsc(std::vector<std::string> ids, std::vector<double> dsc_values,
                       const std::vector<double>& thresholds);

// GMI over mask pairs directly (ground-truth evaluation path).
GmiReport gmi_from_masks(const std::vector<std::string>& ids,
                         const std::vector<std::pair<const BinaryMask*, const BinaryMask*>>& masks,
                         const std::vector<double>& thresholds);

// Full metric: reconstruct (S_B(a), S_A(b)) for every test pair in inference
// mode, binarize, count DSC < TS per threshold.
GmiReport compute_gmi(const std::vector<ImagePair>& test_pairs, ModelBundle& bundle,
                      const std::vector<double>& thresholds, const BinarizeSpec& bin,
                      bool domain_a_is_membrane = true);

// report CSV: "pair_id,dsc" header and rows, then TS summary rows.
void write_gmi_report(const std::string& path, const GmiReport& report);
GmiReport read_gmi_report(const std::string& path);

} // namespace banis

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "banis/image.hpp"
#include "banis/mask.hpp"

namespace banis {

// Parameters of one synthetic embryo slice. Cells are packed as
// non-overlapping ellipses; each carries a bright nucleus disc strictly
// inside its membrane outline, so the two modalities are geometrically
// matched but spatially disjoint.
struct EmbryoSpec {
    int cell_count = 3;
    int canvas_size = 64;
    int membrane_thickness = 2;
    int nucleus_radius_min = 3;
    int nucleus_radius_max = 6;
    double noise_sigma = 0.05; // additive Gaussian, as a fraction of the full gray range
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruthPair {
    GrayImage membrane_image; // [-1, 1]
    GrayImage nuclei_image;   // [-1, 1]
    BinaryMask membrane_mask;
    BinaryMask nuclei_mask;
    std::uint64_t seed = 0;
};

// Deterministic in spec.seed; masks are exact (no antialiasing), images are
// antialiased and noise-clamped to [-1,1].
GroundTruthPair generate_pair(const EmbryoSpec& spec);

struct ManifestEntry {
    std::string pair_id;
    std::string split; // "train" | "test"
    std::string membrane_path;
    std::string nuclei_path;
    std::string membrane_mask_path;
    std::string nuclei_mask_path;
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::string path;     // manifest file location
    std::string root_dir; // entries' paths are relative to this
    std::vector<ManifestEntry> entries;

    std::size_t count_split(const std::string& split) const {
        std::size_t n = 0;
        for (const auto& e : entries)
            if (e.split == split) ++n;
        return n;
    }
};

// Writes n_pairs image pairs plus masks as 8-bit PNGs under out_dir and a
// line-oriented manifest with a seeded 90/10 train/test split (test count is
// floor(n/10), so tiny datasets degenerate to train-only).
DatasetManifest generate_dataset(const EmbryoSpec& spec_template, int n_pairs,
                                 const std::string& out_dir);

DatasetManifest load_manifest(const std::string& path);

} // namespace banis

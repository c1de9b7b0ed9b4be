#include "banis/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "banis/png_io.hpp"
#include "banis/rng.hpp"

namespace fs = std::filesystem;

namespace banis {

void EmbryoSpec::validate() const {
    if (cell_count < 1) throw ValidationError("embryo.cell_count must be >= 1");
    if (canvas_size < 16) throw ValidationError("embryo.canvas_size must be >= 16");
    if (membrane_thickness < 1)
        throw ValidationError("embryo.membrane_thickness must be >= 1");
    if (nucleus_radius_min < 1)
        throw ValidationError("embryo.nucleus_radius_min must be >= 1");
    if (nucleus_radius_max < nucleus_radius_min)
        throw ValidationError("embryo.nucleus_radius_range is inverted (max < min)");
    if (noise_sigma < 0.0 || noise_sigma >= 1.0)
        throw ValidationError("embryo.noise_sigma must be in [0,1)");
    // every cell must hold its nucleus clear of the membrane inside its tile
    const double min_semi = nucleus_radius_max + membrane_thickness + 3.0;
    int grid = 1;
    while (grid * grid < cell_count) ++grid;
    const double tile = static_cast<double>(canvas_size) / grid;
    if (tile / 2.0 - 1.0 < min_semi)
        throw ValidationError(
            "embryo.cell_count: " + std::to_string(cell_count) + " cells of inradius >= " +
            std::to_string(min_semi) + " px cannot fit a " + std::to_string(canvas_size) +
            "px canvas (reduce cell_count or nucleus_radius_max)");
}

namespace {

struct Cell {
    double cx, cy;   // center
    double a, b;     // semi-axes, a >= b
    double cos_t, sin_t;
    double nx, ny;   // nucleus center
    double nr;       // nucleus radius
};

// Approximate signed distance to the ellipse outline, gradient-normalized.
// Exact enough for rendering a few-pixel band.
double ellipse_sdf(const Cell& c, double px, double py) {
    const double dx0 = px - c.cx, dy0 = py - c.cy;
    const double dx = dx0 * c.cos_t + dy0 * c.sin_t;
    const double dy = -dx0 * c.sin_t + dy0 * c.cos_t;
    const double f = (dx * dx) / (c.a * c.a) + (dy * dy) / (c.b * c.b);
    const double gx = 2.0 * dx / (c.a * c.a);
    const double gy = 2.0 * dy / (c.b * c.b);
    const double gnorm = std::sqrt(gx * gx + gy * gy);
    if (gnorm < 1e-12) return -std::min(c.a, c.b); // at the center
    return (f - 1.0) / gnorm;
}

int pack_grid_side(int cell_count) {
    int g = 1;
    while (g * g < cell_count) ++g;
    return g;
}

double min_semi_axis(const EmbryoSpec& spec) {
    return spec.nucleus_radius_max + spec.membrane_thickness + 3.0;
}

// Jittered tile placement: each cell's bounding circle stays inside its own
// tile, so ellipses from different tiles cannot touch. Deterministic in the
// RNG stream, robust for any feasible spec.
std::vector<Cell> pack_cells(const EmbryoSpec& spec, Rng& rng) {
    const double min_semi = min_semi_axis(spec);
    const int g = pack_grid_side(spec.cell_count);
    const double tile = static_cast<double>(spec.canvas_size) / g;
    const double tile_cap = tile / 2.0 - 1.0;
    const double max_semi = std::min(tile_cap, std::max(min_semi, 0.30 * spec.canvas_size));

    std::vector<int> tiles(static_cast<std::size_t>(g) * g);
    for (std::size_t i = 0; i < tiles.size(); ++i) tiles[i] = static_cast<int>(i);
    for (std::size_t i = tiles.size() - 1; i > 0; --i)
        std::swap(tiles[i], tiles[rng.uniform_index(i + 1)]);

    std::vector<Cell> cells;
    for (int ci = 0; ci < spec.cell_count; ++ci) {
        const int t = tiles[static_cast<std::size_t>(ci)];
        const double tx = (t % g + 0.5) * tile;
        const double ty = (t / g + 0.5) * tile;
        Cell c{};
        c.a = rng.uniform(min_semi, max_semi);
        c.b = rng.uniform(min_semi, c.a);
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        c.cos_t = std::cos(theta);
        c.sin_t = std::sin(theta);
        const double jitter = tile / 2.0 - c.a - 1.0;
        c.cx = tx + rng.uniform(-jitter, jitter);
        c.cy = ty + rng.uniform(-jitter, jitter);
        // nucleus strictly inside: |offset| + r <= b - thickness - 2
        c.nr = rng.uniform(static_cast<double>(spec.nucleus_radius_min),
                           static_cast<double>(spec.nucleus_radius_max));
        const double slack = c.b - spec.membrane_thickness - c.nr - 2.0;
        const double rho = slack > 0 ? rng.uniform(0.0, slack) : 0.0;
        const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        c.nx = c.cx + rho * std::cos(phi);
        c.ny = c.cy + rho * std::sin(phi);
        cells.push_back(c);
    }
    return cells;
}

} // namespace

GroundTruthPair generate_pair(const EmbryoSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int n = spec.canvas_size;
    const auto cells = pack_cells(spec, rng);

    GroundTruthPair out;
    out.seed = spec.seed;
    out.membrane_image = make_gray(n, n, -1.f);
    out.nuclei_image = make_gray(n, n, -1.f);
    out.membrane_mask = BinaryMask(n, n);
    out.nuclei_mask = BinaryMask(n, n);

    const double half_t = spec.membrane_thickness / 2.0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            double mem_cov = 0.0, nuc_cov = 0.0;
            for (const Cell& c : cells) {
                const double d = std::abs(ellipse_sdf(c, px, py));
                // linear 1px antialiasing on the rendered band
                mem_cov = std::max(mem_cov, std::clamp(half_t + 0.5 - d, 0.0, 1.0));
                if (d <= half_t) out.membrane_mask.at(y, x) = 1;

                const double nd = std::hypot(px - c.nx, py - c.ny);
                if (nd <= c.nr) out.nuclei_mask.at(y, x) = 1;
                double cov = std::clamp(c.nr + 0.5 - nd, 0.0, 1.0);
                if (cov > 0.0) {
                    // slight radial shading so nuclei are not flat discs
                    const double shade = 1.0 - 0.25 * std::min(1.0, nd / c.nr);
                    cov *= shade;
                }
                nuc_cov = std::max(nuc_cov, cov);
            }
            out.membrane_image[static_cast<std::size_t>(y) * n + x] =
                static_cast<float>(-1.0 + 2.0 * mem_cov);
            out.nuclei_image[static_cast<std::size_t>(y) * n + x] =
                static_cast<float>(-1.0 + 2.0 * nuc_cov);
        }
    }

    if (spec.noise_sigma > 0.0) {
        const double s = 2.0 * spec.noise_sigma; // full gray range spans 2.0
        for (auto* img : {&out.membrane_image, &out.nuclei_image})
            for (auto& v : img->v)
                v = static_cast<float>(
                    std::clamp(static_cast<double>(v) + rng.normal(0.0, s), -1.0, 1.0));
    }
    return out;
}

namespace {

void write_mask_png(const std::string& path, const BinaryMask& m) {
    Image8 img(m.height, m.width, 1);
    for (std::size_t i = 0; i < m.v.size(); ++i) img.pixels[i] = m.v[i] ? 255 : 0;
    write_png(path, img);
}

std::string pair_name(int i) {
    std::ostringstream os;
    os << "pair_";
    os.width(4);
    os.fill('0');
    os << i;
    return os.str();
}

} // namespace

DatasetManifest generate_dataset(const EmbryoSpec& spec_template, int n_pairs,
                                 const std::string& out_dir) {
    if (n_pairs < 1) throw ValidationError("datagen: n_pairs must be >= 1");
    spec_template.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create dataset directory: " + out_dir);

    // seeded shuffle, first floor(n/10) of the permutation become the test split
    const int n_test = n_pairs / 10;
    std::vector<int> order(static_cast<std::size_t>(n_pairs));
    for (int i = 0; i < n_pairs; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng split_rng(mix_seed(spec_template.seed, 0x5917));
    for (int i = n_pairs - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[split_rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
    std::vector<bool> is_test(static_cast<std::size_t>(n_pairs), false);
    for (int i = 0; i < n_test; ++i) is_test[static_cast<std::size_t>(order[i])] = true;

    DatasetManifest mf;
    mf.root_dir = out_dir;
    mf.path = (fs::path(out_dir) / "dataset.txt").string();
    std::ofstream manifest(mf.path);
    if (!manifest) throw IoError("cannot write manifest: " + mf.path);

    for (int i = 0; i < n_pairs; ++i) {
        EmbryoSpec spec = spec_template;
        spec.seed = mix_seed(spec_template.seed, static_cast<std::uint64_t>(i) + 1);
        const GroundTruthPair pair = generate_pair(spec);

        ManifestEntry e;
        e.pair_id = pair_name(i);
        e.split = is_test[static_cast<std::size_t>(i)] ? "test" : "train";
        e.membrane_path = e.pair_id + "_membrane.png";
        e.nuclei_path = e.pair_id + "_nuclei.png";
        e.membrane_mask_path = e.pair_id + "_membrane_mask.png";
        e.nuclei_mask_path = e.pair_id + "_nuclei_mask.png";
        e.seed = spec.seed;

        const fs::path root(out_dir);
        write_png((root / e.membrane_path).string(), gray_to_image8(pair.membrane_image));
        write_png((root / e.nuclei_path).string(), gray_to_image8(pair.nuclei_image));
        write_mask_png((root / e.membrane_mask_path).string(), pair.membrane_mask);
        write_mask_png((root / e.nuclei_mask_path).string(), pair.nuclei_mask);

        manifest << e.pair_id << ',' << e.split << ',' << e.membrane_path << ','
                 << e.nuclei_path << ',' << e.membrane_mask_path << ',' << e.nuclei_mask_path
                 << ',' << e.seed << '\n';
        mf.entries.push_back(std::move(e));
    }
    manifest.close();
    if (!manifest) throw IoError("manifest write failed: " + mf.path);
    return mf;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    DatasetManifest mf;
    mf.path = path;
    mf.root_dir = fs::path(path).parent_path().string();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        std::istringstream ls(line);
        while (std::getline(ls, cur, ',')) fields.push_back(cur);
        if (fields.size() != 7)
            throw ParseError("manifest line " + std::to_string(lineno) + ": expected 7 fields, got " +
                             std::to_string(fields.size()));
        ManifestEntry e;
        e.pair_id = fields[0];
        e.split = fields[1];
        if (e.split != "train" && e.split != "test")
            throw ParseError("manifest line " + std::to_string(lineno) + ": bad split '" +
                             e.split + "'");
        e.membrane_path = fields[2];
        e.nuclei_path = fields[3];
        e.membrane_mask_path = fields[4];
        e.nuclei_mask_path = fields[5];
        try {
            e.seed = std::stoull(fields[6]);
        } catch (const std::exception&) {
            throw ParseError("manifest line " + std::to_string(lineno) + ": bad seed '" +
                             fields[6] + "'");
        }
        mf.entries.push_back(std::move(e));
    }
    return mf;
}

} // namespace banis

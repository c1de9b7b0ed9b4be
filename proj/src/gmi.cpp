#include "banis/gmi.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace banis {

namespace {

double otsu_threshold(const std::vector<std::size_t>& hist, std::size_t total) {
    // maximize between-class variance over 256 bins
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[static_cast<std::size_t>(i)];
    double sum_bg = 0.0, w_bg = 0.0, best_var = -1.0;
    int best_bin = 127;
    for (int t = 0; t < 256; ++t) {
        w_bg += static_cast<double>(hist[static_cast<std::size_t>(t)]);
        if (w_bg == 0.0) continue;
        const double w_fg = static_cast<double>(total) - w_bg;
        if (w_fg == 0.0) break;
        sum_bg += static_cast<double>(t) * hist[static_cast<std::size_t>(t)];
        const double mu_bg = sum_bg / w_bg;
        const double mu_fg = (sum_all - sum_bg) / w_fg;
        const double var = w_bg * w_fg * (mu_bg - mu_fg) * (mu_bg - mu_fg);
        if (var > best_var) {
            best_var = var;
            best_bin = t;
        }
    }
    return (best_bin + 0.5) / 256.0;
}

} // namespace

BinaryMask binarize(const GrayImage& img, const BinarizeSpec& spec) {
    if (img.rank() != 2) throw ValidationError("binarize: expected a 2-D image");
    for (float v : img.v)
        if (!std::isfinite(v)) throw ValidationError("binarize: non-finite pixel");
    const int h = img.dim(0), w = img.dim(1);
    double threshold = spec.threshold;
    if (spec.method == BinarizeMethod::Otsu) {
        std::vector<std::size_t> hist(256, 0);
        float lo = img[0], hi = img[0];
        for (float v : img.v) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            const double intensity = (static_cast<double>(v) + 1.0) / 2.0;
            int bin = static_cast<int>(intensity * 256.0);
            bin = std::clamp(bin, 0, 255);
            ++hist[static_cast<std::size_t>(bin)];
        }
        if (lo == hi) {
            std::fprintf(stderr, "banis: otsu on a constant image, falling back to fixed 0.5\n");
            threshold = 0.5;
        } else {
            threshold = otsu_threshold(hist, img.numel());
        }
    }
    BinaryMask m(h, w);
    for (std::size_t i = 0; i < img.numel(); ++i) {
        const double intensity = (static_cast<double>(img[i]) + 1.0) / 2.0;
        m.v[i] = intensity > threshold ? 1 : 0;
    }
    return m;
}

double dsc(const BinaryMask& x, const BinaryMask& y) {
    if (!x.same_shape(y))
        throw ValidationError("dsc: mask shape mismatch (" + std::to_string(x.width) + "x" +
                              std::to_string(x.height) + " vs " + std::to_string(y.width) + "x" +
                              std::to_string(y.height) + ")");
    std::size_t nx = 0, ny = 0, inter = 0;
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        nx += x.v[i] ? 1 : 0;
        ny += y.v[i] ? 1 : 0;
        inter += (x.v[i] && y.v[i]) ? 1 : 0;
    }
    if (nx + ny == 0) return 0.0; // no structures in either mask
    return 2.0 * static_cast<double>(inter) / static_cast<double>(nx + ny);
}

GmiReport gmi_from_dsc(std::vector<std::string> ids, std::vector<double> dsc_values,
                       const std::vector<double>& thresholds) {
    if (ids.size() != dsc_values.size())
        throw ValidationError("gmi: id/dsc length mismatch");
    if (ids.empty()) throw ValidationError("gmi: empty test set");
    for (double ts : thresholds)
        if (!(ts > 0.0 && ts <= 1.0))
            throw ValidationError("gmi: threshold " + std::to_string(ts) + " outside (0,1]");

    // order-independent output: sort by pair id
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });

    GmiReport r;
    r.n_pairs = static_cast<int>(ids.size());
    r.thresholds = thresholds;
    for (std::size_t i : order) {
        r.pair_ids.push_back(std::move(ids[i]));
        r.dsc_values.push_back(dsc_values[i]);
    }
    for (double ts : thresholds) {
        std::size_t matched = 0;
        for (double d : r.dsc_values)
            if (d < ts) ++matched; // strict: DSC == TS counts as unmatched
        r.matched_fraction.push_back(static_cast<double>(matched) /
                                     static_cast<double>(r.n_pairs));
    }
    return r;
}

GmiReport gmi_from_masks(const std::vector<std::string>& ids,
                         const std::vector<std::pair<const BinaryMask*, const BinaryMask*>>& masks,
                         const std::vector<double>& thresholds) {
    if (ids.size() != masks.size()) throw ValidationError("gmi: id/mask length mismatch");
    std::vector<double> values;
    int degenerate = 0;
    values.reserve(masks.size());
    for (const auto& [ma, mb] : masks) {
        values.push_back(dsc(*ma, *mb));
        if (ma->count() + mb->count() == 0) ++degenerate;
    }
    GmiReport r = gmi_from_dsc(ids, std::move(values), thresholds);
    r.degenerate_pairs = degenerate;
    return r;
}

GmiReport compute_gmi(const std::vector<ImagePair>& test_pairs, ModelBundle& bundle,
                      const std::vector<double>& thresholds, const BinarizeSpec& bin,
                      bool domain_a_is_membrane) {
    if (test_pairs.empty()) throw ValidationError("gmi: empty test set");
    const int n = static_cast<int>(test_pairs.size());
    const int s = bundle.cfg.image_size;

    // batch both directions over the whole test set (inference snapshot)
    Tensor<float> a_batch({n, s, s, 1}), b_batch({n, s, s, 1});
    for (int i = 0; i < n; ++i) {
        const GrayImage& a_img =
            domain_a_is_membrane ? test_pairs[static_cast<std::size_t>(i)].membrane
                                 : test_pairs[static_cast<std::size_t>(i)].nuclei;
        const GrayImage& b_img =
            domain_a_is_membrane ? test_pairs[static_cast<std::size_t>(i)].nuclei
                                 : test_pairs[static_cast<std::size_t>(i)].membrane;
        if (a_img.dim(0) != s || a_img.dim(1) != s)
            throw ValidationError("gmi: pair " + test_pairs[static_cast<std::size_t>(i)].id +
                                  " image size does not match the model (" + a_img.shape_str() +
                                  " vs " + std::to_string(s) + ")");
        std::copy(a_img.v.begin(), a_img.v.end(),
                  a_batch.v.begin() + static_cast<std::ptrdiff_t>(i) * s * s);
        std::copy(b_img.v.begin(), b_img.v.end(),
                  b_batch.v.begin() + static_cast<std::ptrdiff_t>(i) * s * s);
    }
    // Algorithm order: (S_B(a), S_A(b))
    const Tensor<float> rec_b = bundle.successor(Side::B, a_batch);
    const Tensor<float> rec_a = bundle.successor(Side::A, b_batch);

    std::vector<std::string> ids;
    std::vector<double> values;
    int degenerate = 0;
    GrayImage img_a({s, s}), img_b({s, s});
    for (int i = 0; i < n; ++i) {
        std::copy(rec_a.v.begin() + static_cast<std::ptrdiff_t>(i) * s * s,
                  rec_a.v.begin() + static_cast<std::ptrdiff_t>(i + 1) * s * s,
                  img_a.v.begin());
        std::copy(rec_b.v.begin() + static_cast<std::ptrdiff_t>(i) * s * s,
                  rec_b.v.begin() + static_cast<std::ptrdiff_t>(i + 1) * s * s,
                  img_b.v.begin());
        const BinaryMask ma = binarize(img_a, bin);
        const BinaryMask mb = binarize(img_b, bin);
        if (ma.count() + mb.count() == 0) ++degenerate;
        ids.push_back(test_pairs[static_cast<std::size_t>(i)].id);
        values.push_back(dsc(ma, mb));
    }
    GmiReport r = gmi_from_dsc(std::move(ids), std::move(values), thresholds);
    r.degenerate_pairs = degenerate;
    return r;
}

void write_gmi_report(const std::string& path, const GmiReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write GMI report: " + path);
    out << "pair_id,dsc\n";
    char buf[64];
    for (std::size_t i = 0; i < report.pair_ids.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", report.dsc_values[i]);
        out << report.pair_ids[i] << ',' << buf << '\n';
    }
    for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%g", report.thresholds[i]);
        out << "TS," << buf << ",matched_fraction,";
        std::snprintf(buf, sizeof buf, "%.9g", report.matched_fraction[i]);
        out << buf << '\n';
    }
    out.close();
    if (!out) throw IoError("GMI report write failed: " + path);
}

GmiReport read_gmi_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open GMI report: " + path);
    GmiReport r;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != "pair_id,dsc")
                throw ParseError(path + ":1: expected 'pair_id,dsc' header");
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> fields;
        std::string cur;
        while (std::getline(ls, cur, ',')) fields.push_back(cur);
        try {
            if (fields.size() == 4 && fields[0] == "TS") {
                r.thresholds.push_back(std::stod(fields[1]));
                r.matched_fraction.push_back(std::stod(fields[3]));
            } else if (fields.size() == 2) {
                r.pair_ids.push_back(fields[0]);
                r.dsc_values.push_back(std::stod(fields[1]));
            } else {
                throw ParseError("");
            }
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed GMI report row");
        }
    }
    r.n_pairs = static_cast<int>(r.pair_ids.size());
    return r;
}

} // namespace banis

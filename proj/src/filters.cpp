#include "s2s/filters.hpp"

#include "s2s/errors.hpp"
#include "s2s/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace s2s::filters {

namespace {

void require_odd(unsigned v, const char* what) {
    if (v == 0 || v % 2 == 0) {
        throw ConfigError(std::string(what) + " must be odd and >= 1");
    }
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string(what) + " must be positive");
    }
}

void require_finite(const ImageGrid& img, const char* filter) {
    for (double v : img.values()) {
        if (!std::isfinite(v)) {
            throw InputError(std::string(filter) + ": non-finite input value");
        }
    }
}

std::vector<int> reflect_table(int n, int pad) {
    std::vector<int> t(static_cast<std::size_t>(n + 2 * pad));
    for (int i = 0; i < n + 2 * pad; ++i) {
        t[static_cast<std::size_t>(i)] = reflect_index(i - pad, n);
    }
    return t;
}

// Weighted patch averaging over a mirror-extended image. For each search offset the
// per-pixel patch distance image is built once and box-summed with running windows.
ImageGrid nonlocal_average(const ImageGrid& img, unsigned search, unsigned patch, double h, bool pearson) {
    const int rs = static_cast<int>(search / 2);
    const int rp = static_cast<int>(patch / 2);
    const int pn = static_cast<int>(patch);
    const int pad = rs + rp;
    const int w = img.width();
    const int hgt = img.height();
    const double shift = pearson ? kPositivityShift : 0.0;

    ImageGrid padded = mirror_pad(img, pad, pad);
    if (pearson) {
        for (auto& v : padded.values()) {
            v += shift;
            if (!(v > 0.0)) {
                throw InputError("obnlm: nonpositive pixel after positivity shift");
            }
        }
    }
    const int pw = padded.width();
    const double* P = padded.values().data();

    // Distances are needed on the patch-extended domain (hgt + 2 rp) x (w + 2 rp).
    const int ew = w + 2 * rp;
    const int eh = hgt + 2 * rp;
    std::vector<double> dist(static_cast<std::size_t>(ew) * eh);
    std::vector<double> hsum(static_cast<std::size_t>(eh) * w);
    std::vector<double> col(static_cast<std::size_t>(w));
    std::vector<double> wsum(static_cast<std::size_t>(w) * hgt, 0.0);
    std::vector<double> acc(wsum.size(), 0.0);
    const double inv_area = 1.0 / (static_cast<double>(pn) * pn);
    const double inv_h2 = 1.0 / (h * h);

    for (int dz = -rs; dz <= rs; ++dz) {
        for (int dx = -rs; dx <= rs; ++dx) {
            for (int zz = 0; zz < eh; ++zz) {
                const double* a = P + static_cast<std::size_t>(zz + rs) * pw + rs;
                const double* b = P + static_cast<std::size_t>(zz + rs + dz) * pw + rs + dx;
                double* d = dist.data() + static_cast<std::size_t>(zz) * ew;
                if (pearson) {
                    for (int xx = 0; xx < ew; ++xx) {
                        const double diff = a[xx] - b[xx];
                        d[xx] = diff * diff / b[xx];
                    }
                } else {
                    for (int xx = 0; xx < ew; ++xx) {
                        const double diff = a[xx] - b[xx];
                        d[xx] = diff * diff;
                    }
                }
                double* hs = hsum.data() + static_cast<std::size_t>(zz) * w;
                double s = 0.0;
                for (int t = 0; t < pn; ++t) {
                    s += d[t];
                }
                hs[0] = s;
                for (int x = 1; x < w; ++x) {
                    s += d[x + pn - 1] - d[x - 1];
                    hs[x] = s;
                }
            }
            std::fill(col.begin(), col.end(), 0.0);
            for (int t = 0; t < pn; ++t) {
                const double* hs = hsum.data() + static_cast<std::size_t>(t) * w;
                for (int x = 0; x < w; ++x) {
                    col[static_cast<std::size_t>(x)] += hs[x];
                }
            }
            for (int z = 0; z < hgt; ++z) {
                if (z > 0) {
                    const double* add = hsum.data() + static_cast<std::size_t>(z + pn - 1) * w;
                    const double* sub = hsum.data() + static_cast<std::size_t>(z - 1) * w;
                    for (int x = 0; x < w; ++x) {
                        col[static_cast<std::size_t>(x)] += add[x] - sub[x];
                    }
                }
                const double* cand = P + static_cast<std::size_t>(z + pad + dz) * pw + pad + dx;
                double* ws = wsum.data() + static_cast<std::size_t>(z) * w;
                double* ac = acc.data() + static_cast<std::size_t>(z) * w;
                for (int x = 0; x < w; ++x) {
                    const double wt = std::exp(-col[static_cast<std::size_t>(x)] * inv_area * inv_h2);
                    ws[x] += wt;
                    ac[x] += wt * cand[x];
                }
            }
        }
    }

    ImageGrid out = img;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = acc[i] / wsum[i] - shift;
    }
    return out;
}

} // namespace

void validate(const FilterParams& params) {
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Srad>) {
                if (p.iterations < 1) {
                    throw ConfigError("srad: iterations must be >= 1");
                }
                require_positive(p.lambda, "srad: lambda");
                if (p.roi.width <= 0 || p.roi.height <= 0 || p.roi.x0 < 0 || p.roi.z0 < 0) {
                    throw ConfigError("srad: roi must be a nonempty rectangle at nonnegative offset");
                }
            } else if constexpr (std::is_same_v<T, Median>) {
                require_odd(p.window, "median: window");
            } else if constexpr (std::is_same_v<T, Bilateral>) {
                require_positive(p.sigma_range, "bilateral: sigma_range");
                require_positive(p.sigma_spatial, "bilateral: sigma_spatial");
            } else {
                require_odd(p.search, "search");
                require_odd(p.patch, "patch");
                require_positive(p.h, "h");
                if (p.patch > p.search) {
                    throw ConfigError("patch must not exceed search");
                }
            }
        },
        params);
}

ImageGrid srad(const ImageGrid& img, const Srad& p) {
    validate(p);
    require_finite(img, "srad");
    const int w = img.width();
    const int h = img.height();
    const int rx0 = std::min(p.roi.x0, w);
    const int rz0 = std::min(p.roi.z0, h);
    const int rx1 = std::min(p.roi.x0 + p.roi.width, w);
    const int rz1 = std::min(p.roi.z0 + p.roi.height, h);
    if (rx1 <= rx0 || rz1 <= rz0) {
        throw ConfigError("srad: roi does not intersect the image");
    }

    std::vector<double> cur(img.values().begin(), img.values().end());
    for (auto& v : cur) {
        v += kPositivityShift;
    }
    std::vector<double> next(cur.size());
    std::vector<double> coeff(cur.size());
    auto I = [&](int x, int z) { return cur[static_cast<std::size_t>(reflect_index(z, h)) * w + reflect_index(x, w)]; };
    const double step = 0.25 * p.lambda;

    for (unsigned it = 0; it < p.iterations; ++it) {
        double mean = 0.0;
        for (int z = rz0; z < rz1; ++z) {
            for (int x = rx0; x < rx1; ++x) {
                mean += I(x, z);
            }
        }
        const double n_roi = static_cast<double>((rx1 - rx0) * (rz1 - rz0));
        mean /= n_roi;
        double var = 0.0;
        for (int z = rz0; z < rz1; ++z) {
            for (int x = rx0; x < rx1; ++x) {
                const double d = I(x, z) - mean;
                var += d * d;
            }
        }
        var /= n_roi;
        const double q0sq = mean != 0.0 ? var / (mean * mean) : 0.0;

        for (int z = 0; z < h; ++z) {
            for (int x = 0; x < w; ++x) {
                const double c = I(x, z);
                const double dn = I(x, z - 1) - c;
                const double ds = I(x, z + 1) - c;
                const double dw = I(x - 1, z) - c;
                const double de = I(x + 1, z) - c;
                const double g2 = (dn * dn + ds * ds + dw * dw + de * de) / (c * c);
                const double l = (dn + ds + dw + de) / c;
                const double num = 0.5 * g2 - (1.0 / 16.0) * l * l;
                const double den = (1.0 + 0.25 * l) * (1.0 + 0.25 * l);
                const double qsq = num / den;
                double cq;
                if (q0sq > 0.0) {
                    const double denom = 1.0 + (qsq - q0sq) / (q0sq * (1.0 + q0sq));
                    cq = denom <= 1.0 ? 1.0 : 1.0 / denom;
                } else {
                    cq = qsq <= 0.0 ? 1.0 : 0.0;
                }
                coeff[static_cast<std::size_t>(z) * w + x] = std::isfinite(cq) ? std::clamp(cq, 0.0, 1.0) : 0.0;
            }
        }
        auto C = [&](int x, int z) { return coeff[static_cast<std::size_t>(reflect_index(z, h)) * w + reflect_index(x, w)]; };
        for (int z = 0; z < h; ++z) {
            for (int x = 0; x < w; ++x) {
                const double c = I(x, z);
                const double cc = C(x, z);
                const double div = C(x, z + 1) * (I(x, z + 1) - c) + cc * (I(x, z - 1) - c) +
                                   C(x + 1, z) * (I(x + 1, z) - c) + cc * (I(x - 1, z) - c);
                next[static_cast<std::size_t>(z) * w + x] = c + step * div;
            }
        }
        cur.swap(next);
    }

    ImageGrid out = img;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = cur[i] - kPositivityShift;
    }
    return out;
}

ImageGrid median_filter(const ImageGrid& img, const Median& p) {
    validate(p);
    const int r = static_cast<int>(p.window / 2);
    const int w = img.width();
    const int h = img.height();
    const auto tx = reflect_table(w, r);
    const auto tz = reflect_table(h, r);
    const std::size_t n = static_cast<std::size_t>(p.window) * p.window;
    std::vector<double> buf(n);
    ImageGrid out = img;
    for (int z = 0; z < h; ++z) {
        for (int x = 0; x < w; ++x) {
            std::size_t k = 0;
            for (int v = 0; v < static_cast<int>(p.window); ++v) {
                const auto src = img.row(tz[static_cast<std::size_t>(z + v)]);
                for (int u = 0; u < static_cast<int>(p.window); ++u) {
                    buf[k++] = src[static_cast<std::size_t>(tx[static_cast<std::size_t>(x + u)])];
                }
            }
            auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
            std::nth_element(buf.begin(), mid, buf.end());
            out.at(x, z) = *mid;
        }
    }
    return out;
}

ImageGrid bilateral_filter(const ImageGrid& img, const Bilateral& p) {
    validate(p);
    const int r = static_cast<int>(std::ceil(3.0 * p.sigma_spatial));
    const int w = img.width();
    const int h = img.height();
    const int k = 2 * r + 1;
    std::vector<double> spatial(static_cast<std::size_t>(k) * k);
    for (int v = -r; v <= r; ++v) {
        for (int u = -r; u <= r; ++u) {
            spatial[static_cast<std::size_t>(v + r) * k + (u + r)] =
                std::exp(-(u * u + v * v) / (2.0 * p.sigma_spatial * p.sigma_spatial));
        }
    }
    const double inv_2sr2 = 1.0 / (2.0 * p.sigma_range * p.sigma_range);
    const auto tx = reflect_table(w, r);
    const auto tz = reflect_table(h, r);
    ImageGrid out = img;
    for (int z = 0; z < h; ++z) {
        for (int x = 0; x < w; ++x) {
            const double center = img.at(x, z);
            double num = 0.0;
            double den = 0.0;
            for (int v = 0; v < k; ++v) {
                const auto src = img.row(tz[static_cast<std::size_t>(z + v)]);
                const double* sw = spatial.data() + static_cast<std::size_t>(v) * k;
                for (int u = 0; u < k; ++u) {
                    const double q = src[static_cast<std::size_t>(tx[static_cast<std::size_t>(x + u)])];
                    const double d = q - center;
                    const double wt = sw[u] * std::exp(-d * d * inv_2sr2);
                    num += wt * q;
                    den += wt;
                }
            }
            out.at(x, z) = num / den;
        }
    }
    return out;
}

ImageGrid nlm(const ImageGrid& img, const Nlm& p) {
    validate(p);
    require_finite(img, "nlm");
    return nonlocal_average(img, p.search, p.patch, p.h, false);
}

ImageGrid obnlm(const ImageGrid& img, const Obnlm& p) {
    validate(p);
    require_finite(img, "obnlm");
    return nonlocal_average(img, p.search, p.patch, p.h, true);
}

ImageGrid apply(const ImageGrid& img, const FilterParams& params) {
    return std::visit(
        [&](const auto& p) -> ImageGrid {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Srad>) {
                return srad(img, p);
            } else if constexpr (std::is_same_v<T, Median>) {
                return median_filter(img, p);
            } else if constexpr (std::is_same_v<T, Bilateral>) {
                return bilateral_filter(img, p);
            } else if constexpr (std::is_same_v<T, Nlm>) {
                return nlm(img, p);
            } else {
                return obnlm(img, p);
            }
        },
        params);
}

std::string type_name(const FilterParams& params) {
    static constexpr const char* names[] = {"srad", "median", "bilateral", "nlm", "obnlm"};
    return names[params.index()];
}

FilterParams params_from_json(const nlohmann::json& j) {
    using json_util::read_optional;
    using json_util::require_keys_subset;
    if (!j.is_object() || !j.contains("type")) {
        throw ConfigError("filter spec must be an object with a \"type\" key");
    }
    const auto type = json_util::as<std::string>(j.at("type"), "filter.type");
    const std::string where = "filter[" + type + "]";
    FilterParams out;
    if (type == "srad") {
        require_keys_subset(j, {"type", "name", "iterations", "lambda", "roi"}, where);
        Srad p;
        read_optional(j, "iterations", p.iterations, where);
        read_optional(j, "lambda", p.lambda, where);
        if (const auto it = j.find("roi"); it != j.end()) {
            require_keys_subset(*it, {"x0", "z0", "width", "height"}, where + ".roi");
            read_optional(*it, "x0", p.roi.x0, where + ".roi");
            read_optional(*it, "z0", p.roi.z0, where + ".roi");
            read_optional(*it, "width", p.roi.width, where + ".roi");
            read_optional(*it, "height", p.roi.height, where + ".roi");
        }
        out = p;
    } else if (type == "median") {
        require_keys_subset(j, {"type", "name", "window"}, where);
        Median p;
        read_optional(j, "window", p.window, where);
        out = p;
    } else if (type == "bilateral") {
        require_keys_subset(j, {"type", "name", "sigma_range", "sigma_spatial"}, where);
        Bilateral p;
        read_optional(j, "sigma_range", p.sigma_range, where);
        read_optional(j, "sigma_spatial", p.sigma_spatial, where);
        out = p;
    } else if (type == "nlm") {
        require_keys_subset(j, {"type", "name", "h", "search", "patch"}, where);
        Nlm p;
        read_optional(j, "h", p.h, where);
        read_optional(j, "search", p.search, where);
        read_optional(j, "patch", p.patch, where);
        out = p;
    } else if (type == "obnlm") {
        require_keys_subset(j, {"type", "name", "h", "search", "patch"}, where);
        Obnlm p;
        read_optional(j, "h", p.h, where);
        read_optional(j, "search", p.search, where);
        read_optional(j, "patch", p.patch, where);
        out = p;
    } else {
        throw ConfigError("unknown filter type '" + type + "'");
    }
    validate(out);
    return out;
}

nlohmann::json params_to_json(const FilterParams& params) {
    return std::visit(
        [](const auto& p) -> nlohmann::json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Srad>) {
                return {{"type", "srad"},
                        {"iterations", p.iterations},
                        {"lambda", p.lambda},
                        {"roi", {{"x0", p.roi.x0}, {"z0", p.roi.z0}, {"width", p.roi.width}, {"height", p.roi.height}}}};
            } else if constexpr (std::is_same_v<T, Median>) {
                return {{"type", "median"}, {"window", p.window}};
            } else if constexpr (std::is_same_v<T, Bilateral>) {
                return {{"type", "bilateral"}, {"sigma_range", p.sigma_range}, {"sigma_spatial", p.sigma_spatial}};
            } else if constexpr (std::is_same_v<T, Nlm>) {
                return {{"type", "nlm"}, {"h", p.h}, {"search", p.search}, {"patch", p.patch}};
            } else {
                return {{"type", "obnlm"}, {"search", p.search}, {"patch", p.patch}, {"h", p.h}};
            }
        },
        params);
}

} // namespace s2s::filters

#include "dfd/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dfd/config.hpp"

namespace dfd {

namespace {

// Jacobi eigendecomposition of a symmetric n x n matrix (n small). Returns
// eigenvalues ascending with matching eigenvectors in columns of `vecs`.
void jacobi_eigen(std::vector<double>& m, int n, std::vector<double>& vals,
                  std::vector<double>& vecs) {
    vecs.assign(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) vecs[size_t(i) * n + i] = 1.0;
    auto at = [&](std::vector<double>& a, int r, int c) -> double& {
        return a[size_t(r) * n + c];
    };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(m, p, q) * at(m, p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(m, p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (at(m, q, q) - at(m, p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = at(m, k, p), mkq = at(m, k, q);
                    at(m, k, p) = c * mkp - s * mkq;
                    at(m, k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = at(m, p, k), mqk = at(m, q, k);
                    at(m, p, k) = c * mpk - s * mqk;
                    at(m, q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = at(vecs, k, p), vkq = at(vecs, k, q);
                    at(vecs, k, p) = c * vkp - s * vkq;
                    at(vecs, k, q) = s * vkp + c * vkq;
                }
            }
    }
    // sort ascending
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return at(m, a, a) < at(m, b, b); });
    vals.resize(n);
    std::vector<double> sorted(vecs.size());
    for (int c = 0; c < n; ++c) {
        vals[c] = at(m, order[c], order[c]);
        for (int r = 0; r < n; ++r) sorted[size_t(r) * n + c] = at(vecs, r, order[c]);
    }
    vecs.swap(sorted);
}

struct Similarity {
    double scale = 1.0, cx = 0.0, cy = 0.0;
    Point2 apply(const Point2& p) const { return {(p.x - cx) * scale, (p.y - cy) * scale}; }
};

Similarity normalizer(const std::vector<Point2>& pts) {
    Similarity s;
    for (const auto& p : pts) {
        s.cx += p.x;
        s.cy += p.y;
    }
    s.cx /= double(pts.size());
    s.cy /= double(pts.size());
    double mean_d = 0.0;
    for (const auto& p : pts) mean_d += std::hypot(p.x - s.cx, p.y - s.cy);
    mean_d /= double(pts.size());
    s.scale = mean_d > 1e-12 ? std::sqrt(2.0) / mean_d : 1.0;
    return s;
}

} // namespace

HomographyFit fit_homography(const std::vector<CorrespondencePair>& pairs) {
    if (pairs.size() < 4)
        throw std::invalid_argument("fit_homography: need at least 4 correspondences");

    std::vector<Point2> from, to;
    for (const auto& p : pairs) {
        from.push_back(p.from);
        to.push_back(p.to);
    }
    const Similarity nf = normalizer(from), nt = normalizer(to);

    // Rows of the DLT system for h = vec(H), |h| = 1.
    std::vector<double> ata(81, 0.0);
    auto accumulate = [&](const double row[9]) {
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j) ata[size_t(i) * 9 + j] += row[i] * row[j];
    };
    for (const auto& pr : pairs) {
        const Point2 p = nf.apply(pr.from);
        const Point2 q = nt.apply(pr.to);
        const double r1[9] = {p.x, p.y, 1, 0, 0, 0, -q.x * p.x, -q.x * p.y, -q.x};
        const double r2[9] = {0, 0, 0, p.x, p.y, 1, -q.y * p.x, -q.y * p.y, -q.y};
        accumulate(r1);
        accumulate(r2);
    }

    std::vector<double> vals, vecs;
    jacobi_eigen(ata, 9, vals, vecs);
    if (vals[8] <= 0.0 || vals[1] < 1e-10 * vals[8])
        throw std::invalid_argument(
            "fit_homography: degenerate correspondence configuration (collinear points?)");

    std::array<double, 9> hn{};
    for (int i = 0; i < 9; ++i) hn[i] = vecs[size_t(i) * 9 + 0];

    // Denormalize: H = T_to^-1 * Hn * T_from.
    const Homography t_from({nf.scale, 0, -nf.scale * nf.cx, 0, nf.scale, -nf.scale * nf.cy,
                             0, 0, 1});
    const Homography t_to_inv({1.0 / nt.scale, 0, nt.cx, 0, 1.0 / nt.scale, nt.cy, 0, 0, 1});
    Homography h = t_to_inv.compose(Homography(hn).compose(t_from));
    if (!h.invertible())
        throw std::invalid_argument("fit_homography: fitted homography is singular");

    double acc = 0.0;
    for (const auto& pr : pairs) {
        const Point2 q = h.apply(pr.from);
        acc += (q.x - pr.to.x) * (q.x - pr.to.x) + (q.y - pr.to.y) * (q.y - pr.to.y);
    }
    return {h, std::sqrt(acc / double(pairs.size()))};
}

CalibrationRecord calibrate_ab(const std::vector<CalibSample>& data, bool refine) {
    std::set<double> depths;
    size_t n_total = 0;
    for (const auto& s : data) {
        if (!(s.z_true > 0.0))
            throw std::invalid_argument("calibrate_ab: nonpositive calibration distance");
        if (!s.ratios.empty()) depths.insert(s.z_true);
        n_total += s.ratios.size();
    }
    if (depths.size() < 2)
        throw std::invalid_argument("calibrate_ab: need ratios from at least 2 distinct distances");

    // Stage 1: 1/Z = p + q r with p = b/a, q = 1/a; plain least squares.
    double sr = 0.0, srr = 0.0, sy = 0.0, sry = 0.0;
    for (const auto& s : data)
        for (double r : s.ratios) {
            const double y = 1.0 / s.z_true;
            sr += r;
            srr += r * r;
            sy += y;
            sry += r * y;
        }
    const double n = double(n_total);
    const double det = n * srr - sr * sr;
    if (!(std::abs(det) > 1e-20 * std::max(1.0, srr * n)))
        throw std::invalid_argument("calibrate_ab: rank-deficient system (ratios do not vary)");
    const double q = (n * sry - sr * sy) / det;
    const double p = (sy - q * sr) / n;
    if (q == 0.0 || !std::isfinite(q) || !std::isfinite(p))
        throw std::invalid_argument("calibrate_ab: linear stage failed");

    CalibrationRecord rec;
    rec.a = 1.0 / q;
    rec.b = p / q;
    rec.method = CalibMethod::LinearInverseDepth;
    for (double z : depths) rec.dataset_depths.push_back(z);

    auto cost = [&](double a, double b) {
        double acc = 0.0;
        for (const auto& s : data)
            for (double r : s.ratios) {
                const double e = s.z_true - a / (b + r);
                acc += e * e;
            }
        return acc;
    };

    if (refine) {
        // Stage 2: Gauss-Newton on the depth-domain objective, Levenberg
        // damping on divergence.
        double a = rec.a, b = rec.b;
        double lambda = 0.0;
        const int max_iter = 50;
        bool converged = false;
        int it = 0;
        auto fmt_iterate = [](double a_, double b_) {
            char buf[80];
            std::snprintf(buf, sizeof buf, "a=%.9g b=%.9g", a_, b_);
            return std::string(buf);
        };
        for (; it < max_iter && !converged; ++it) {
            double jtj00 = 0, jtj01 = 0, jtj11 = 0, jte0 = 0, jte1 = 0;
            for (const auto& s : data)
                for (double r : s.ratios) {
                    const double den = b + r;
                    const double pred = a / den;
                    const double e = s.z_true - pred;
                    const double ja = 1.0 / den;        // d pred / d a
                    const double jb = -a / (den * den); // d pred / d b
                    jtj00 += ja * ja;
                    jtj01 += ja * jb;
                    jtj11 += jb * jb;
                    jte0 += ja * e;
                    jte1 += jb * e;
                }
            const double c0 = cost(a, b);
            double da = 0.0, db = 0.0;
            bool stepped = false;
            for (int tries = 0; tries < 16 && !stepped && !converged; ++tries) {
                const double d00 = jtj00 * (1.0 + lambda), d11 = jtj11 * (1.0 + lambda);
                const double det2 = d00 * d11 - jtj01 * jtj01;
                if (std::abs(det2) < 1e-300) {
                    lambda = lambda == 0.0 ? 1e-6 : lambda * 10.0;
                    continue;
                }
                da = (d11 * jte0 - jtj01 * jte1) / det2;
                db = (d00 * jte1 - jtj01 * jte0) / det2;
                const double rel = std::abs(da) / std::max(std::abs(a), 1e-300) +
                                   std::abs(db) / std::max(std::abs(b), 1e-300);
                if (rel < 1e-10) {
                    converged = true; // at the optimum already
                } else if (cost(a + da, b + db) <= c0) {
                    stepped = true;
                } else {
                    lambda = lambda == 0.0 ? 1e-6 : lambda * 10.0;
                }
            }
            if (converged) break;
            if (!stepped)
                throw std::runtime_error("calibrate_ab: Gauss-Newton diverged; last iterate " +
                                         fmt_iterate(a, b));
            a += da;
            b += db;
            lambda *= 0.1;
            const double rel = std::abs(da) / std::max(std::abs(a), 1e-300) +
                               std::abs(db) / std::max(std::abs(b), 1e-300);
            if (rel < 1e-10) converged = true;
        }
        if (!converged)
            throw std::runtime_error(
                "calibrate_ab: no convergence after 50 iterations; last iterate " +
                fmt_iterate(a, b));
        rec.a = a;
        rec.b = b;
        rec.method = CalibMethod::GaussNewton;
        rec.iterations = it + 1;
    }

    rec.residual_rms = std::sqrt(cost(rec.a, rec.b) / double(n_total));
    if (!std::isfinite(rec.residual_rms))
        throw std::runtime_error("calibrate_ab: non-finite residual");
    return rec;
}

std::string to_string(CalibMethod m) {
    return m == CalibMethod::GaussNewton ? "gauss-newton" : "linear-inverse-depth";
}

CalibMethod calib_method_from_string(const std::string& s) {
    if (s == "gauss-newton") return CalibMethod::GaussNewton;
    if (s == "linear-inverse-depth") return CalibMethod::LinearInverseDepth;
    throw std::invalid_argument("unknown calibration method '" + s + "'");
}

void save_calibration(const std::string& path, const CalibrationRecord& rec,
                      const Homography* h) {
    Config cfg;
    cfg.set_double("calibration", "a", rec.a);
    cfg.set_double("calibration", "b", rec.b);
    cfg.set_double("calibration", "residual_rms", rec.residual_rms);
    cfg.set("calibration", "method", to_string(rec.method));
    cfg.set_int("calibration", "iterations", rec.iterations);
    std::string depths;
    for (size_t i = 0; i < rec.dataset_depths.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", rec.dataset_depths[i]);
        depths += (i ? ", " : "") + std::string(buf);
    }
    cfg.set("calibration", "depths", depths);
    if (!rec.dataset_note.empty()) cfg.set("calibration", "dataset", rec.dataset_note);
    if (h) {
        std::string m;
        for (int i = 0; i < 9; ++i) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", h->m()[i]);
            m += (i ? ", " : "") + std::string(buf);
        }
        cfg.set("homography", "m", m);
    }
    cfg.save(path);
}

CalibrationRecord load_calibration(const std::string& path, Homography* h_out) {
    Config cfg = Config::parse_file(path);
    CalibrationRecord rec;
    rec.a = cfg.require_double("calibration", "a");
    rec.b = cfg.require_double("calibration", "b");
    rec.residual_rms = cfg.get_double("calibration", "residual_rms", 0.0);
    rec.method = calib_method_from_string(
        cfg.get_string("calibration", "method", "gauss-newton"));
    rec.iterations = int(cfg.get_int("calibration", "iterations", 0));
    rec.dataset_depths = cfg.get_double_list("calibration", "depths", {});
    rec.dataset_note = cfg.get_string("calibration", "dataset", "");
    if (h_out) {
        const std::vector<double> m = cfg.get_double_list("homography", "m", {});
        if (m.size() == 9) {
            std::array<double, 9> a{};
            std::copy(m.begin(), m.end(), a.begin());
            *h_out = Homography(a);
        } else if (!m.empty()) {
            throw std::runtime_error(path + ": homography.m must have 9 entries");
        }
    }
    return rec;
}

} // namespace dfd

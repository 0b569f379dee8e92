#pragma once

// Least-squares fitting of the empirical scaling laws:
//   y = a * log10(x) + b,   y = a * log2(x) + b,   y = c1 * sqrt(1 + c2 / x) + c3

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "specscale/error.hpp"
#include "specscale/format.hpp"

namespace specscale {

enum class LawForm { Log10Linear, Log2Linear, InvSqrt };

inline constexpr std::string_view law_form_name(LawForm f) {
    switch (f) {
        case LawForm::Log10Linear: return "log10";
        case LawForm::Log2Linear: return "log2";
        case LawForm::InvSqrt: return "invsqrt";
    }
    return "?";
}

inline LawForm parse_law_form(std::string_view name) {
    if (name == "log10") return LawForm::Log10Linear;
    if (name == "log2") return LawForm::Log2Linear;
    if (name == "invsqrt") return LawForm::InvSqrt;
    throw ParseError("unknown law form '" + std::string(name) + "' (expected log10, log2 or invsqrt)");
}

inline constexpr std::size_t param_count(LawForm f) { return f == LawForm::InvSqrt ? 3 : 2; }

struct DataPoint {
    double x = 0;
    double y = 0;

    bool operator==(const DataPoint&) const = default;
};

/// Points sorted by strictly increasing, strictly positive x.
class DataSeries {
public:
    DataSeries() = default;

    static DataSeries from_points(std::vector<DataPoint> points, std::string x_label = "x",
                                  std::string y_label = "y") {
        std::sort(points.begin(), points.end(), [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
                throw ValidationError("x", "non-finite value");
            }
            if (points[i].x <= 0.0) throw ValidationError("x", "must be > 0, got " + format_double(points[i].x));
            if (i > 0 && points[i].x == points[i - 1].x) {
                throw ValidationError("x", "duplicate value " + format_double(points[i].x));
            }
        }
        if (points.size() < 2) throw ValidationError("points", "need at least 2 points");
        DataSeries s;
        s.points_ = std::move(points);
        s.x_label_ = std::move(x_label);
        s.y_label_ = std::move(y_label);
        return s;
    }

    const std::vector<DataPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const std::string& x_label() const { return x_label_; }
    const std::string& y_label() const { return y_label_; }

private:
    std::vector<DataPoint> points_;
    std::string x_label_ = "x";
    std::string y_label_ = "y";
};

/// Parses a two-column CSV with the exact header `x,y`.
inline DataSeries parse_series_csv(std::string_view text, const std::string& origin = "<csv>") {
    auto lines = split(text, '\n');
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(origin + ": empty file");
    if (trim(lines.front()) != "x,y") throw ParseError(origin + ": expected header 'x,y'");
    std::vector<DataPoint> points;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        DataPoint p;
        if (cells.size() != 2 || !parse_real(cells[0], p.x) || !parse_real(cells[1], p.y)) {
            throw ParseError(origin + ":" + std::to_string(i + 1) + ": expected two numbers");
        }
        points.push_back(p);
    }
    if (points.empty()) throw ParseError(origin + ": no data rows");
    return DataSeries::from_points(std::move(points));
}

inline DataSeries ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_series_csv(ss.str(), path.string());
}

struct ScalingFit {
    LawForm form = LawForm::Log10Linear;
    std::vector<double> params;  // (alpha, beta) or (c1, c2, c3)
    double r_squared = 0;
    std::size_t n_points = 0;
    bool converged = true;
    int iterations = 0;
};

inline double predict(const ScalingFit& fit, double x) {
    if (!(x > 0.0)) throw DomainError("predict: x must be > 0, got " + format_double(x));
    const auto& p = fit.params;
    switch (fit.form) {
        case LawForm::Log10Linear: return p.at(0) * std::log10(x) + p.at(1);
        case LawForm::Log2Linear: return p.at(0) * std::log2(x) + p.at(1);
        case LawForm::InvSqrt: {
            const double arg = 1.0 + p.at(1) / x;
            if (arg < 0.0) throw DomainError("predict: 1 + c2/x < 0 at x = " + format_double(x));
            return p.at(0) * std::sqrt(arg) + p.at(2);
        }
    }
    throw InvariantViolation("predict: unknown form");
}

inline double residual_sum_of_squares(const ScalingFit& fit, const DataSeries& s) {
    double ss = 0;
    for (const auto& pt : s.points()) {
        const double r = pt.y - predict(fit, pt.x);
        ss += r * r;
    }
    return ss;
}

/// 1 - SS_res / SS_tot. Constant data gives 1 for an exact fit.
inline double r_squared(const ScalingFit& fit, const DataSeries& s) {
    const auto& pts = s.points();
    const double mean =
        std::accumulate(pts.begin(), pts.end(), 0.0, [](double a, const DataPoint& p) { return a + p.y; }) /
        static_cast<double>(pts.size());
    double ss_tot = 0;
    for (const auto& p : pts) ss_tot += (p.y - mean) * (p.y - mean);
    const double ss_res = residual_sum_of_squares(fit, s);
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - ss_res / ss_tot;
}

namespace detail {

inline ScalingFit fit_log_linear(const DataSeries& s, LawForm form) {
    const auto& pts = s.points();
    const auto n = static_cast<double>(pts.size());
    std::vector<double> u(pts.size());
    std::transform(pts.begin(), pts.end(), u.begin(), [form](const DataPoint& p) {
        return form == LawForm::Log10Linear ? std::log10(p.x) : std::log2(p.x);
    });
    double ubar = 0, ybar = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ubar += u[i];
        ybar += pts[i].y;
    }
    ubar /= n;
    ybar /= n;
    double suu = 0, suy = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        suu += (u[i] - ubar) * (u[i] - ubar);
        suy += (u[i] - ubar) * (pts[i].y - ybar);
    }
    if (suu == 0.0) throw DegenerateData("all x equal after log transform");
    const double alpha = suy / suu;
    ScalingFit fit;
    fit.form = form;
    fit.params = {alpha, ybar - alpha * ubar};
    fit.n_points = pts.size();
    return fit;
}

inline ScalingFit fit_inv_sqrt(const DataSeries& s) {
    constexpr int kMaxIterations = 500;
    const auto& pts = s.points();
    const double min_x = pts.front().x;

    std::vector<double> ys(pts.size());
    std::transform(pts.begin(), pts.end(), ys.begin(), [](const DataPoint& p) { return p.y; });
    const double y_min = *std::min_element(ys.begin(), ys.end());
    const double y_max = *std::max_element(ys.begin(), ys.end());
    // Median of the (sorted) abscissae.
    const std::size_t mid = pts.size() / 2;
    const double median_x = pts.size() % 2 ? pts[mid].x : 0.5 * (pts[mid - 1].x + pts[mid].x);

    // c1 > 0 gives a curve falling in x; start on the side the data trends.
    Eigen::Vector3d p(0, median_x, 0);
    if (pts.back().y <= pts.front().y) {
        p[2] = y_min - 1.0;
        p[0] = y_max - p[2];
    } else {
        p[2] = y_max + 1.0;
        p[0] = y_min - p[2];
    }

    auto sse_at = [&](const Eigen::Vector3d& q) {
        double ss = 0;
        for (const auto& pt : pts) {
            const double r = pt.y - (q[0] * std::sqrt(1.0 + q[1] / pt.x) + q[2]);
            ss += r * r;
        }
        return ss;
    };
    auto feasible = [&](const Eigen::Vector3d& q) { return q.allFinite() && q[1] > -min_x; };

    double sse = sse_at(p);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;
    for (; iter < kMaxIterations && !converged; ++iter) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (const auto& pt : pts) {
            const double root = std::sqrt(1.0 + p[1] / pt.x);
            const Eigen::Vector3d grad(root, p[0] / (2.0 * root * pt.x), 1.0);
            const double r = pt.y - (p[0] * root + p[2]);
            jtj += grad * grad.transpose();
            jtr += grad * r;
        }
        if (sse == 0.0 || jtr.cwiseAbs().maxCoeff() == 0.0) {
            converged = true;
            break;
        }
        bool accepted = false;
        while (!accepted) {
            Eigen::Matrix3d damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
            const Eigen::Vector3d step = damped.ldlt().solve(jtr);
            const Eigen::Vector3d trial = p + step;
            const double trial_sse = feasible(trial) ? sse_at(trial) : std::numeric_limits<double>::infinity();
            if (trial_sse < sse) {
                const bool tiny_gain = (sse - trial_sse) <= 1e-14 * sse;
                const bool tiny_step = step.norm() <= 1e-12 * (p.norm() + 1e-12);
                p = trial;
                sse = trial_sse;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (tiny_gain && tiny_step) converged = true;
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    // No descent direction left at working precision.
                    converged = true;
                    break;
                }
            }
        }
    }

    ScalingFit fit;
    fit.form = LawForm::InvSqrt;
    fit.params = {p[0], p[1], p[2]};
    fit.n_points = pts.size();
    fit.converged = converged;
    fit.iterations = iter;
    return fit;
}

}  // namespace detail

/// Ordinary least squares on the log-transformed abscissa for the log forms;
/// Levenberg-Marquardt for InvSqrt. A non-converged InvSqrt fit still returns
/// the best parameters found, with converged == false.
inline ScalingFit fit(const DataSeries& series, LawForm form) {
    if (series.size() < param_count(form)) {
        throw DegenerateData(std::to_string(series.size()) + " points for " +
                          std::to_string(param_count(form)) + " parameters");
    }
    ScalingFit result =
        form == LawForm::InvSqrt ? detail::fit_inv_sqrt(series) : detail::fit_log_linear(series, form);
    result.r_squared = r_squared(result, series);
    return result;
}

inline nlohmann::ordered_json fit_report_json(const ScalingFit& f) {
    nlohmann::ordered_json j;
    j["form"] = std::string(law_form_name(f.form));
    j["params"] = f.params;
    j["r_squared"] = f.r_squared;
    j["n_points"] = f.n_points;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    return j;
}

}  // namespace specscale

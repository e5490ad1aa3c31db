// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "photoapp/error.hpp"
#include "photoapp/image.hpp"
#include "photoapp/parallel.hpp"

namespace photoapp {

/// Plain mean squared error over all pixels and channels.
template <typename T>
double mse(const BasicImage<T>& pred, const BasicImage<T>& gt)
{
    if (!pred.same_shape(gt))
        throw StructuralError("mse operands differ in size");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i)
    {
        double d = static_cast<double>(pred.data[i]) - static_cast<double>(gt.data[i]);
        sum += d * d;
    }
    return pred.data.empty() ? 0.0 : sum / static_cast<double>(pred.data.size());
}

/// Scale-invariant MSE: one global s* = <pred,gt>/<pred,pred> over all pixels
/// and channels, then MSE(s* pred, gt). An all-zero prediction scores MSE(0, gt).
template <typename T>
double si_mse(const BasicImage<T>& pred, const BasicImage<T>& gt)
{
    if (!pred.same_shape(gt))
        throw StructuralError("si_mse operands differ in size");
    double pp = 0.0, pg = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i)
    {
        pp += static_cast<double>(pred.data[i]) * static_cast<double>(pred.data[i]);
        pg += static_cast<double>(pred.data[i]) * static_cast<double>(gt.data[i]);
    }
    const double s   = pp > 0.0 ? pg / pp : 0.0;
    double       sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i)
    {
        double d = s * static_cast<double>(pred.data[i]) - static_cast<double>(gt.data[i]);
        sum += d * d;
    }
    return pred.data.empty() ? 0.0 : sum / static_cast<double>(pred.data.size());
}

struct SsimOptions
{
    int    window = 11;
    double sigma  = 1.5;
    double k1     = 0.01;
    double k2     = 0.03;
    double range  = 1.0;
};

namespace detail {
inline std::vector<double> gaussian_window(int size, double sigma)
{
    std::vector<double> w(static_cast<std::size_t>(size));
    double              sum = 0.0;
    const double        c   = (size - 1) / 2.0;
    for (int i = 0; i < size; ++i)
    {
        double x = i - c;
        w[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w)
        v /= sum;
    return w;
}

/// Separable 'valid' filtering of a single-channel plane.
inline std::vector<double> filter_valid(const std::vector<double>& plane, int W, int H, const std::vector<double>& k)
{
    const int           n = static_cast<int>(k.size());
    const int           ow = W - n + 1, oh = H - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * static_cast<std::size_t>(H));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < ow; ++x)
        {
            double acc = 0.0;
            for (int t = 0; t < n; ++t)
                acc += k[static_cast<std::size_t>(t)] * plane[static_cast<std::size_t>(y) * static_cast<std::size_t>(W) + static_cast<std::size_t>(x + t)];
            tmp[static_cast<std::size_t>(y) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(x)] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
        {
            double acc = 0.0;
            for (int t = 0; t < n; ++t)
                acc += k[static_cast<std::size_t>(t)] * tmp[static_cast<std::size_t>(y + t) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(x)];
            out[static_cast<std::size_t>(y) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(x)] = acc;
        }
    return out;
}
} // namespace detail

/// Mean SSIM over every valid window position, computed per channel and
/// averaged over the three channels. Inputs are expected in [0, range].
template <typename T>
double ssim(const BasicImage<T>& a, const BasicImage<T>& b, const SsimOptions& opt = {})
{
    if (!a.same_shape(b))
        throw StructuralError("ssim operands differ in size");
    if (a.width < opt.window || a.height < opt.window)
        throw ParameterError("ssim needs images of at least " + std::to_string(opt.window) + "x" + std::to_string(opt.window));
    const int    W = a.width, H = a.height;
    const auto   k  = detail::gaussian_window(opt.window, opt.sigma);
    const double c1 = (opt.k1 * opt.range) * (opt.k1 * opt.range);
    const double c2 = (opt.k2 * opt.range) * (opt.k2 * opt.range);

    double total = 0.0;
    for (int c = 0; c < 3; ++c)
    {
        const std::size_t   n = a.pixel_count();
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            x[i]  = static_cast<double>(a.data[3 * i + static_cast<std::size_t>(c)]);
            y[i]  = static_cast<double>(b.data[3 * i + static_cast<std::size_t>(c)]);
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        auto mx = detail::filter_valid(x, W, H, k), my = detail::filter_valid(y, W, H, k);
        auto mxx = detail::filter_valid(xx, W, H, k), myy = detail::filter_valid(yy, W, H, k);
        auto mxy = detail::filter_valid(xy, W, H, k);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i)
        {
            const double vx  = mxx[i] - mx[i] * mx[i];
            const double vy  = myy[i] - my[i] * my[i];
            const double cov = mxy[i] - mx[i] * my[i];
            sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += sum / static_cast<double>(mx.size());
    }
    return total / 3.0;
}

struct MetricSummary
{
    double mean  = 0.0;
    double sigma = 0.0; ///< population standard deviation
};

inline MetricSummary summarize(const std::vector<double>& v)
{
    MetricSummary s;
    if (v.empty())
        return s;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    s.mean     = sum / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v)
        var += (x - s.mean) * (x - s.mean);
    s.sigma = std::sqrt(var / static_cast<double>(v.size()));
    return s;
}

struct EvalReport
{
    std::string         label;
    std::vector<double> si_mse;
    std::vector<double> ssim;
    MetricSummary       si_mse_summary;
    MetricSummary       ssim_summary;

    std::string to_csv() const
    {
        std::ostringstream out;
        out.precision(9);
        out << "set,metric,mean,sigma\n";
        out << label << ",si_mse," << si_mse_summary.mean << ',' << si_mse_summary.sigma << '\n';
        out << label << ",ssim," << ssim_summary.mean << ',' << ssim_summary.sigma << '\n';
        return out.str();
    }

    nlohmann::json to_json() const
    {
        return {{"set", label},
                {"pairs", si_mse.size()},
                {"metrics",
                 {{{"metric", "si_mse"}, {"mean", si_mse_summary.mean}, {"sigma", si_mse_summary.sigma}},
                  {{"metric", "ssim"}, {"mean", ssim_summary.mean}, {"sigma", ssim_summary.sigma}}}},
                {"per_pair", {{"si_mse", si_mse}, {"ssim", ssim}}}};
    }
};

/// Per-pair Si-MSE and SSIM plus their mean and population sigma. Pairs are
/// (prediction, ground truth) in display range.
inline EvalReport evaluate(const std::vector<std::pair<HdrImage, HdrImage>>& pairs, std::string label)
{
    if (pairs.empty())
        throw ParameterError("evaluation needs at least one pair");
    EvalReport r;
    r.label = std::move(label);
    r.si_mse.resize(pairs.size());
    r.ssim.resize(pairs.size());
    parallel_for(0, static_cast<int>(pairs.size()),
                 [&](int i)
                 {
                     const auto& [pred, gt] = pairs[static_cast<std::size_t>(i)];
                     r.si_mse[static_cast<std::size_t>(i)] = si_mse(pred, gt);
                     r.ssim[static_cast<std::size_t>(i)]   = ssim(pred, gt);
                 });
    r.si_mse_summary = summarize(r.si_mse);
    r.ssim_summary   = summarize(r.ssim);
    return r;
}

} // namespace photoapp

#pragma once

// Learning-curve figures as standalone SVG.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "reversedq/harness.hpp"
#include "reversedq/results_io.hpp"

namespace reversedq {

struct Curve {
  std::string label;
  std::vector<double> mean;
  std::vector<double> half_width;  // NaN entries mean no band
};

/// Round tick positions covering [lo, hi]: steps of 1, 2 or 5 times a power
/// of ten, at most `max_ticks` of them.
inline std::vector<double> nice_ticks(double lo, double hi, std::size_t max_ticks = 8) {
  if (!(hi > lo)) hi = lo + 1.0;
  const double raw = (hi - lo) / static_cast<double>(std::max<std::size_t>(max_ticks - 1, 1));
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    const double count = std::floor(hi / step) - std::ceil(lo / step) + 1;
    if (step >= raw && count <= static_cast<double>(max_ticks)) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) ticks.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
  return ticks;
}

/// Mean scaled cumulative curve per variant of one environment, rebuilt
/// from CSV rows. Variants are returned in summary-file order.
inline std::vector<Curve> curves_from_rows(const std::vector<EpisodeRow>& episodes,
                                           const std::vector<SummaryRow>& summary, const std::string& env) {
  std::vector<Curve> out;
  for (const auto& s : summary) {
    if (s.env != env) continue;
    std::map<std::uint64_t, RunResult> by_seed;
    for (const auto& e : episodes) {
      if (e.env != env || e.variant != s.variant) continue;
      auto& run = by_seed[e.seed];
      run.seed = e.seed;
      if (run.cumulative.size() < e.episode) run.cumulative.resize(e.episode);
      run.cumulative[e.episode - 1] = e.cumulative_return;
    }
    if (by_seed.empty()) throw ResultsError("no episode rows for " + s.variant + " on " + env);
    std::vector<std::vector<double>> curves;
    for (const auto& [seed, run] : by_seed) curves.push_back(scaled_curve(run, s.oracle_return, s.random_return));
    const std::size_t K = curves.front().size();
    Curve c{display_name(s.variant), std::vector<double>(K), std::vector<double>(K)};
    std::vector<double> column(curves.size());
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < curves.size(); ++i) {
        if (curves[i].size() != K) throw ResultsError("runs of " + s.variant + " differ in length");
        column[i] = curves[i][k];
      }
      if (column.size() >= 2) {
        const auto ci = confidence_interval(column);
        c.mean[k] = ci.mean;
        c.half_width[k] = ci.half_width;
      } else {
        c.mean[k] = column.front();
        c.half_width[k] = std::nan("");
      }
    }
    out.push_back(std::move(c));
  }
  if (out.empty()) throw ResultsError("no results for environment " + env);
  return out;
}

inline std::string render_learning_curves(const std::vector<Curve>& curves, const std::string& title) {
  constexpr double W = 820, H = 520, left = 70, right = 210, top = 50, bottom = 60;
  constexpr std::array<const char*, 8> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  std::size_t K = 1;
  double ylo = 0.0, yhi = 100.0;
  for (const auto& c : curves) {
    K = std::max(K, c.mean.size());
    for (std::size_t k = 0; k < c.mean.size(); ++k) {
      const double hw = std::isnan(c.half_width[k]) ? 0.0 : c.half_width[k];
      ylo = std::min(ylo, c.mean[k] - hw);
      yhi = std::max(yhi, c.mean[k] + hw);
    }
  }
  ylo = std::max(ylo, -100.0);
  yhi = std::min(yhi, 200.0);
  const auto yticks = nice_ticks(ylo, yhi);
  ylo = std::min(ylo, yticks.front());
  yhi = std::max(yhi, yticks.back());
  const auto xticks = nice_ticks(1.0, static_cast<double>(K));

  const double pw = W - left - right, ph = H - top - bottom;
  auto X = [&](double ep) { return left + (K > 1 ? (ep - 1.0) / static_cast<double>(K - 1) : 0.5) * pw; };
  auto Y = [&](double v) { return top + (1.0 - (std::clamp(v, ylo, yhi) - ylo) / (yhi - ylo)) * ph; };

  std::ostringstream svg;
  svg << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">)",
                     W, H, W, H)
      << '\n';
  svg << fmt::format(R"(<rect x="0" y="0" width="{}" height="{}" fill="white"/>)", W, H) << '\n';
  svg << fmt::format(R"(<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>)", left + pw / 2, title) << '\n';

  for (double t : yticks) {
    svg << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="#e0e0e0"/>)", left, Y(t), left + pw, Y(t)) << '\n';
    svg << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="end">{}</text>)", left - 6, Y(t) + 4, t) << '\n';
  }
  for (double t : xticks)
    svg << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle">{}</text>)", X(t), top + ph + 18, t) << '\n';
  svg << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)", left, top, pw, ph) << '\n';
  svg << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle">Episode</text>)", left + pw / 2, H - 15) << '\n';
  svg << fmt::format(R"x(<text transform="translate(18 {:.2f}) rotate(-90)" text-anchor="middle">Scaled mean cumulative reward (%)</text>)x",
                     top + ph / 2)
      << '\n';

  // Oracle and Random references.
  for (auto [value, label] : {std::pair{100.0, "Oracle"}, std::pair{0.0, "Random"}}) {
    svg << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="#555" stroke-dasharray="6 4"/>)", left,
                       Y(value), left + pw, Y(value))
        << '\n';
    svg << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" fill="#555">{}</text>)", left + 4, Y(value) - 4, label) << '\n';
  }

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = palette[i % palette.size()];
    const bool band = std::ranges::none_of(c.half_width, [](double x) { return std::isnan(x); });
    if (band && !c.mean.empty()) {
      std::string pts;
      for (std::size_t k = 0; k < c.mean.size(); ++k)
        pts += fmt::format("{:.2f},{:.2f} ", X(static_cast<double>(k + 1)), Y(c.mean[k] + c.half_width[k]));
      for (std::size_t k = c.mean.size(); k-- > 0;)
        pts += fmt::format("{:.2f},{:.2f} ", X(static_cast<double>(k + 1)), Y(c.mean[k] - c.half_width[k]));
      svg << fmt::format(R"(<polygon points="{}" fill="{}" fill-opacity="0.18" stroke="none"/>)", pts, color) << '\n';
    }
    std::string pts;
    for (std::size_t k = 0; k < c.mean.size(); ++k)
      pts += fmt::format("{:.2f},{:.2f} ", X(static_cast<double>(k + 1)), Y(c.mean[k]));
    svg << fmt::format(R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"/>)", pts, color) << '\n';

    const double ly = top + 14 + 20 * static_cast<double>(i);
    svg << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="{}" stroke-width="3"/>)", W - right + 14, ly,
                       W - right + 38, ly, color)
        << '\n';
    svg << fmt::format(R"(<text x="{:.2f}" y="{:.2f}">{}</text>)", W - right + 44, ly + 4, c.label) << '\n';
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace reversedq

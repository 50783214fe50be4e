#include "chainctl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "chainctl/csv.hpp"

namespace chainctl {

namespace {

constexpr double kWidth = 840.0;
constexpr double kHeight = 520.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;

struct SvgFile {
  std::ofstream out;

  explicit SvgFile(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  ~SvgFile() { out << "</svg>\n"; }

  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start") {
    out << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">"
        << s << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke = "black", double width = 1.0) {
    out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2
        << "\" y2=\"" << y2 << "\" stroke=\"" << stroke << "\" stroke-width=\""
        << width << "\"/>\n";
  }
};

struct Axis {
  double lo = 0.0, hi = 1.0, pix_lo = 0.0, pix_hi = 1.0;
  double map(double v) const {
    const double t = (v - lo) / (hi - lo);
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

std::string rgb(int r, int g, int b) {
  std::ostringstream s;
  s << "rgb(" << r << "," << g << "," << b << ")";
  return s.str();
}

/// value in [-vmax, vmax] -> blue..white..red
std::string diverging_color(double v, double vmax) {
  const double t = vmax > 0.0 ? std::clamp(v / vmax, -1.0, 1.0) : 0.0;
  const double a = std::abs(t);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - a)));
  return t >= 0.0 ? rgb(255, fade, fade) : rgb(fade, fade, 255);
}

void draw_frame(SvgFile& svg, const std::string& xlabel,
                const std::string& ylabel, double xlo, double xhi, double ylo,
                double yhi) {
  svg.line(kMarginLeft, kHeight - kMarginBottom, kWidth - kMarginRight,
           kHeight - kMarginBottom);
  svg.line(kMarginLeft, kMarginTop, kMarginLeft, kHeight - kMarginBottom);
  svg.text(kWidth / 2, kHeight - 12, xlabel, 13, "middle");
  svg.text(16, kMarginTop - 10, ylabel, 13);
  svg.text(kMarginLeft, kHeight - kMarginBottom + 18, format_double(xlo), 11,
           "middle");
  svg.text(kWidth - kMarginRight, kHeight - kMarginBottom + 18,
           format_double(xhi), 11, "middle");
  svg.text(kMarginLeft - 6, kHeight - kMarginBottom + 4, format_double(ylo),
           11, "end");
  svg.text(kMarginLeft - 6, kMarginTop + 4, format_double(yhi), 11, "end");
}

void require_states(const Trajectory& traj) {
  if (traj.states.size() == 0 || traj.stored_steps.empty())
    throw std::invalid_argument("plot: trajectory has no stored states");
}

}  // namespace

void emit_heatline_svg(const std::string& path, const Trajectory& traj) {
  require_states(traj);
  const Index n = traj.n_agents();
  const Index stored = traj.states.cols();
  // cap the column count so long runs stay a few hundred kB
  const Index skip = std::max<Index>(1, (stored + 249) / 250);
  const Index cols = (stored + skip - 1) / skip;
  const double vmax = std::max(traj.states.cwiseAbs().maxCoeff(), 1e-300);

  SvgFile svg(path);
  const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
  const double y0 = kMarginTop, y1 = kHeight - kMarginBottom;
  const double cw = (x1 - x0) / static_cast<double>(cols);
  const double ch = (y1 - y0) / static_cast<double>(n);
  for (Index c = 0; c < cols; ++c) {
    for (Index j = 0; j < n; ++j) {
      svg.out << "<rect x=\"" << x0 + c * cw << "\" y=\"" << y0 + j * ch
              << "\" width=\"" << cw + 0.5 << "\" height=\"" << ch + 0.5
              << "\" fill=\""
              << diverging_color(traj.states(j, c * skip), vmax) << "\"/>\n";
    }
  }
  draw_frame(svg, "tau", "agent", traj.tau_of_step(traj.stored_steps.front()),
             traj.tau_of_step(traj.stored_steps.back()), static_cast<double>(n),
             1.0);
  svg.text(kWidth - kMarginRight, kMarginTop - 10,
           "|y| max = " + format_double(vmax), 11, "end");
}

void emit_agent_lines_svg(const std::string& path, const Trajectory& traj) {
  require_states(traj);
  const Index n = traj.n_agents();
  const Index stored = traj.states.cols();
  const Index skip = std::max<Index>(1, (stored + 499) / 500);
  double lo = traj.states.minCoeff(), hi = traj.states.maxCoeff();
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  Axis x{traj.tau_of_step(traj.stored_steps.front()),
         traj.tau_of_step(traj.stored_steps.back()), kMarginLeft,
         kWidth - kMarginRight};
  Axis y{lo, hi, kHeight - kMarginBottom, kMarginTop};

  SvgFile svg(path);
  for (Index j = 0; j < n; ++j) {
    svg.out << "<polyline fill=\"none\" stroke=\""
            << rgb(40, 60 + static_cast<int>(160 * j / std::max<Index>(1, n - 1)),
                   200 - static_cast<int>(150 * j / std::max<Index>(1, n - 1)))
            << "\" stroke-width=\"1\" points=\"";
    for (Index c = 0; c < stored; c += skip)
      svg.out << x.map(traj.tau_of_step(traj.stored_steps[c])) << ','
              << y.map(traj.states(j, c)) << ' ';
    if ((stored - 1) % skip != 0)
      svg.out << x.map(traj.tau_of_step(traj.stored_steps[stored - 1])) << ','
              << y.map(traj.states(j, stored - 1)) << ' ';
    svg.out << "\"/>\n";
  }
  if (lo < 0.0 && hi > 0.0)
    svg.line(x.pix_lo, y.map(0.0), x.pix_hi, y.map(0.0), "gray", 0.5);
  draw_frame(svg, "tau", "y_j", x.lo, x.hi, lo, hi);
}

void emit_cost_vs_n_svg(const std::string& path,
                        const std::vector<std::pair<int, double>>& points,
                        const CostFit& fit) {
  if (points.empty()) throw std::invalid_argument("plot: no cost points");
  double nlo = points.front().first, nhi = points.front().first;
  double llo = 0.0, lhi = 0.0;
  bool first = true;
  for (const auto& [n, cost] : points) {
    if (!(cost > 0.0))
      throw std::invalid_argument("plot: costs must be positive");
    const double lc = std::log(cost);
    nlo = std::min(nlo, static_cast<double>(n));
    nhi = std::max(nhi, static_cast<double>(n));
    if (first) {
      llo = lhi = lc;
      first = false;
    }
    llo = std::min(llo, lc);
    lhi = std::max(lhi, lc);
  }
  if (nhi == nlo) nhi = nlo + 1.0;
  if (lhi - llo < 1e-12) {
    lhi += 1.0;
    llo -= 1.0;
  }
  Axis x{nlo, nhi, kMarginLeft, kWidth - kMarginRight};
  Axis y{llo, lhi, kHeight - kMarginBottom, kMarginTop};

  SvgFile svg(path);

  // fitted model over the N range
  auto model_log_cost = [&](double n) {
    switch (fit.model) {
      case CostModel::Bounded: return fit.intercept;
      case CostModel::ExpInN: return fit.intercept + fit.rate * n;
      case CostModel::ExpInN2: return fit.intercept + fit.rate * n * n;
    }
    return fit.intercept;
  };
  svg.out << "<polyline fill=\"none\" stroke=\"gray\" stroke-width=\"1\" "
             "stroke-dasharray=\"4 3\" points=\"";
  for (int i = 0; i <= 100; ++i) {
    const double n = nlo + (nhi - nlo) * i / 100.0;
    const double v = std::clamp(model_log_cost(n), llo - 1.0, lhi + 1.0);
    svg.out << x.map(n) << ',' << y.map(v) << ' ';
  }
  svg.out << "\"/>\n";

  for (const auto& [n, cost] : points)
    svg.out << "<circle cx=\"" << x.map(n) << "\" cy=\""
            << y.map(std::log(cost)) << "\" r=\"4\" fill=\"crimson\"/>\n";

  draw_frame(svg, "N", "log cost", nlo, nhi, llo, lhi);
  svg.text(kWidth - kMarginRight, kMarginTop - 10,
           "fit: " + to_string(fit.model) + ", rate " + format_double(fit.rate),
           11, "end");

  // inset: log cost against N^2
  const double ix0 = kMarginLeft + 20, ix1 = kMarginLeft + 240;
  const double iy0 = kMarginTop + 10, iy1 = kMarginTop + 150;
  svg.out << "<rect x=\"" << ix0 << "\" y=\"" << iy0 << "\" width=\""
          << ix1 - ix0 << "\" height=\"" << iy1 - iy0
          << "\" fill=\"white\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  Axis ix{nlo * nlo, nhi * nhi, ix0 + 8, ix1 - 8};
  Axis iy{llo, lhi, iy1 - 8, iy0 + 8};
  svg.out << "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"1\" "
             "points=\"";
  for (const auto& [n, cost] : points)
    svg.out << ix.map(static_cast<double>(n) * n) << ','
            << iy.map(std::log(cost)) << ' ';
  svg.out << "\"/>\n";
  svg.text(ix0 + 4, iy1 + 14, "log cost vs N^2", 10);
}

}  // namespace chainctl

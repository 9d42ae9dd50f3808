#include "fnet/svg.hpp"

#include <array>
#include <cstdio>

namespace fnet::svg {

namespace {

constexpr int kMargin = 50;
constexpr int kLegendWidth = 140;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string color(std::size_t k) {
  static constexpr std::array<const char*, 12> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                          "#bcbd22", "#17becf", "#393b79", "#637939"};
  return palette[k % palette.size()];
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

Canvas::Canvas(int width, int height, std::string title) : width_(width), height_(height), title_(std::move(title)) {}

void Canvas::set_bounds(double xmin, double xmax, double ymin, double ymax) {
  if (xmax <= xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax <= ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  xmin_ = xmin;
  xmax_ = xmax;
  ymin_ = ymin;
  ymax_ = ymax;
}

double Canvas::px(double x) const {
  double w = width_ - 2 * kMargin - kLegendWidth;
  return kMargin + (x - xmin_) / (xmax_ - xmin_) * w;
}

double Canvas::py(double y) const {
  double h = height_ - 2 * kMargin;
  return height_ - kMargin - (y - ymin_) / (ymax_ - ymin_) * h;
}

void Canvas::point(double x, double y, const std::string& fill, const std::string& tooltip) {
  body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"4\" fill=\"" + fill +
           "\"><title>" + escape(tooltip) + "</title></circle>\n";
}

void Canvas::polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
  body_ += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + stroke + "\" points=\"";
  for (const auto& [x, y] : pts) body_ += num(px(x)) + "," + num(py(y)) + " ";
  body_ += "\"/>\n";
}

void Canvas::legend(const std::string& label, const std::string& fill) {
  double x = width_ - kLegendWidth + 10;
  double y = kMargin + 18.0 * static_cast<double>(legend_rows_++);
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"10\" height=\"10\" fill=\"" + fill + "\"/>";
  body_ += "<text x=\"" + num(x + 16) + "\" y=\"" + num(y) + "\" font-size=\"11\">" + escape(label) + "</text>\n";
}

void Canvas::axis_labels(const std::string& x_label, const std::string& y_label) {
  axes_ = "<text x=\"" + num(px((xmin_ + xmax_) / 2)) + "\" y=\"" + std::to_string(height_ - 12) +
          "\" font-size=\"12\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n" +
          "<text x=\"14\" y=\"" + num(py((ymin_ + ymax_) / 2)) + "\" font-size=\"12\" text-anchor=\"middle\" " +
          "transform=\"rotate(-90 14 " + num(py((ymin_ + ymax_) / 2)) + ")\">" + escape(y_label) + "</text>\n" +
          "<text x=\"" + std::to_string(kMargin - 4) + "\" y=\"" + num(py(ymin_)) +
          "\" font-size=\"10\" text-anchor=\"end\">" + num(ymin_) + "</text>\n" + "<text x=\"" +
          std::to_string(kMargin - 4) + "\" y=\"" + num(py(ymax_)) + "\" font-size=\"10\" text-anchor=\"end\">" +
          num(ymax_) + "</text>\n";
}

std::string Canvas::finish() const {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) + "\" height=\"" +
                    std::to_string(height_) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(width_ / 2) + "\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">" +
         escape(title_) + "</text>\n";
  out += "<rect x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(kMargin) + "\" width=\"" +
         std::to_string(width_ - 2 * kMargin - kLegendWidth) + "\" height=\"" + std::to_string(height_ - 2 * kMargin) +
         "\" fill=\"none\" stroke=\"#999\"/>\n";
  out += axes_ + body_ + "</svg>\n";
  return out;
}

}  // namespace fnet::svg

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fnet::svg {

/// Categorical colour for index k (cycles through a fixed palette).
std::string color(std::size_t k);

/// Minimal plotting surface: data coordinates are mapped into a framed plot area.
class Canvas {
 public:
  Canvas(int width, int height, std::string title);

  void set_bounds(double xmin, double xmax, double ymin, double ymax);
  void point(double x, double y, const std::string& fill, const std::string& tooltip);
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke);
  void legend(const std::string& label, const std::string& fill);
  void axis_labels(const std::string& x_label, const std::string& y_label);

  std::string finish() const;

 private:
  double px(double x) const;
  double py(double y) const;

  int width_;
  int height_;
  std::string title_;
  double xmin_ = 0, xmax_ = 1, ymin_ = 0, ymax_ = 1;
  std::string body_;
  std::string axes_;
  std::size_t legend_rows_ = 0;
};

std::string escape(const std::string& s);

}  // namespace fnet::svg

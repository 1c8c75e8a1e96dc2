#pragma once

#include "cutlocus/types.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace cutlocus {

// printf-style %.<digits>g with negative zero folded to 0.
std::string format_number(double v, int digits = 12);

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);

// Finite values as numbers, infinity as {"tag": "infinity"}.
nlohmann::json extended_to_json(const ExtendedTime& t);
ExtendedTime extended_from_json(const nlohmann::json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Minimal SVG canvas in data coordinates; numbers printed with 9 significant digits.
class SvgCanvas {
 public:
  SvgCanvas(double x0, double y0, double x1, double y1, int width_px = 600);

  void polyline(const std::vector<Vec>& pts, const std::string& color, double width = 1.0, bool closed = false);
  void circle(const Vec& c, double r_px, const std::string& color);
  void text(const Vec& at, const std::string& s, const std::string& color = "black");
  std::string str() const;

 private:
  double sx(double x) const;
  double sy(double y) const;

  double x0_, y0_, x1_, y1_;
  int w_, h_;
  std::string body_;
};

}  // namespace cutlocus

#include "cutlocus/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cutlocus {

std::string format_number(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || j.size() > 3) throw ConfigError("expected an array of 1 to 3 numbers");
  Vec v(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("expected a number in vector");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

nlohmann::json extended_to_json(const ExtendedTime& t) {
  if (t.is_inf()) return {{"tag", "infinity"}};
  return t.value;
}

ExtendedTime extended_from_json(const nlohmann::json& j) {
  if (j.is_object() && j.value("tag", "") == "infinity") return ExtendedTime::infinite();
  if (!j.is_number()) throw ConfigError("expected a number or an infinity tag");
  return ExtendedTime::of(j.get<double>());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

SvgCanvas::SvgCanvas(double x0, double y0, double x1, double y1, int width_px)
    : x0_(x0), y0_(y0), x1_(x1), y1_(y1), w_(width_px) {
  const double span = std::max(x1 - x0, 1e-12);
  h_ = std::max(1, static_cast<int>(std::lround(width_px * (y1 - y0) / span)));
}

double SvgCanvas::sx(double x) const { return (x - x0_) / (x1_ - x0_) * w_; }
double SvgCanvas::sy(double y) const { return (y1_ - y) / (y1_ - y0_) * h_; }

void SvgCanvas::polyline(const std::vector<Vec>& pts, const std::string& color, double width, bool closed) {
  if (pts.empty()) return;
  std::string d;
  for (const auto& p : pts) d += format_number(sx(p[0]), 9) + "," + format_number(sy(p[1]), 9) + " ";
  if (closed) d += format_number(sx(pts[0][0]), 9) + "," + format_number(sy(pts[0][1]), 9);
  body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + format_number(width, 9) +
           "\" points=\"" + d + "\"/>\n";
}

void SvgCanvas::circle(const Vec& c, double r_px, const std::string& color) {
  body_ += "<circle cx=\"" + format_number(sx(c[0]), 9) + "\" cy=\"" + format_number(sy(c[1]), 9) + "\" r=\"" +
           format_number(r_px, 9) + "\" fill=\"" + color + "\"/>\n";
}

void SvgCanvas::text(const Vec& at, const std::string& s, const std::string& color) {
  body_ += "<text x=\"" + format_number(sx(at[0]), 9) + "\" y=\"" + format_number(sy(at[1]), 9) + "\" fill=\"" +
           color + "\" font-size=\"12\">" + s + "</text>\n";
}

std::string SvgCanvas::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w_) + "\" height=\"" +
         std::to_string(h_) + "\" viewBox=\"0 0 " + std::to_string(w_) + " " + std::to_string(h_) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
}

}  // namespace cutlocus

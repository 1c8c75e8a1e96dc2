#include "cutlocus/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cutlocus {

namespace {

std::shared_ptr<const MetricField> euclidean_metric(int dim) {
  return std::make_shared<RiemannianMetric>(Mat::Identity(dim, dim));
}

Vec unit_or_zero(const Vec& v) {
  const double n = v.norm();
  return n > 0 ? Vec(v / n) : Vec(Vec::Zero(v.size()));
}

Vec rot2(const Vec& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return vec2(c * v[0] - s * v[1], s * v[0] + c * v[1]);
}

}  // namespace

FlatDomain::FlatDomain(std::shared_ptr<const MetricField> metric, Region region)
    : Manifold(std::move(metric)), region_(region) {
  center_ = Vec::Zero(dim());
}

std::shared_ptr<FlatDomain> FlatDomain::plane(int dim, std::shared_ptr<const MetricField> metric) {
  if (!metric) metric = euclidean_metric(dim);
  auto m = std::make_shared<FlatDomain>(metric, Region::Plane);
  return m;
}

std::shared_ptr<FlatDomain> FlatDomain::half_plane(double extent, std::shared_ptr<const MetricField> metric) {
  if (!metric) metric = euclidean_metric(2);
  auto m = std::make_shared<FlatDomain>(metric, Region::HalfPlane);
  m->extent_ = extent;
  m->build_boundary();
  return m;
}

std::shared_ptr<FlatDomain> FlatDomain::disk(Vec center, double radius, std::shared_ptr<const MetricField> metric) {
  if (!(radius > 0)) throw ConfigError("disk radius must be positive");
  if (!metric) metric = euclidean_metric(static_cast<int>(center.size()));
  auto m = std::make_shared<FlatDomain>(metric, Region::Disk);
  m->center_ = center;
  m->r_outer_ = radius;
  m->build_boundary();
  return m;
}

std::shared_ptr<FlatDomain> FlatDomain::annulus(Vec center, double r_inner, double r_outer,
                                                std::shared_ptr<const MetricField> metric) {
  if (!(r_inner > 0 && r_outer > r_inner)) throw ConfigError("annulus needs 0 < r_inner < r_outer");
  if (!metric) metric = euclidean_metric(static_cast<int>(center.size()));
  auto m = std::make_shared<FlatDomain>(metric, Region::Annulus);
  m->center_ = center;
  m->r_inner_ = r_inner;
  m->r_outer_ = r_outer;
  m->build_boundary();
  return m;
}

std::shared_ptr<FlatDomain> FlatDomain::rectangle(Vec lo, Vec hi, std::shared_ptr<const MetricField> metric) {
  if (lo.size() != hi.size() || ((hi - lo).array() <= 0).any()) throw ConfigError("rectangle needs lo < hi");
  if (!metric) metric = euclidean_metric(static_cast<int>(lo.size()));
  auto m = std::make_shared<FlatDomain>(metric, Region::Rectangle);
  m->lo_ = lo;
  m->hi_ = hi;
  return m;
}

std::string FlatDomain::kind() const {
  if (metric_->kind() == MetricKind::Finsler) return "minkowski_plane";
  switch (region_) {
    case Region::Plane: return "plane";
    case Region::HalfPlane: return "half_plane";
    case Region::Disk: return "disk";
    case Region::Annulus: return "annulus";
    case Region::Rectangle: return "rectangle";
  }
  return "plane";
}

bool FlatDomain::euclidean() const {
  if (metric_->kind() != MetricKind::Riemannian || !metric_->is_constant()) return false;
  const Mat g = metric_->tensor(Vec::Zero(dim()));
  return (g - Mat::Identity(dim(), dim())).norm() < 1e-14;
}

void FlatDomain::build_boundary() {
  boundary_.clear();
  if (dim() != 2) return;
  const Vec c = center_;
  auto circle = [&](int id, double r, double normal_sign) {
    BoundaryComponent b;
    b.id = id;
    b.position = [c, r](double s) { return Vec(c + r * vec2(std::cos(s), std::sin(s))); };
    b.tangent = [r](double s) { return vec2(-r * std::sin(s), r * std::cos(s)); };
    b.inner_normal = [normal_sign](double s) { return vec2(normal_sign * std::cos(s), normal_sign * std::sin(s)); };
    return b;
  };
  switch (region_) {
    case Region::HalfPlane: {
      BoundaryComponent b;
      b.periodic = false;
      b.s_min = -extent_;
      b.s_max = extent_;
      b.position = [](double s) { return vec2(s, 0.0); };
      b.tangent = [](double) { return vec2(1.0, 0.0); };
      b.inner_normal = [](double) { return vec2(0.0, 1.0); };
      boundary_.push_back(b);
      break;
    }
    case Region::Disk:
      boundary_.push_back(circle(0, r_outer_, -1.0));
      break;
    case Region::Annulus:
      boundary_.push_back(circle(0, r_inner_, 1.0));
      boundary_.push_back(circle(1, r_outer_, -1.0));
      break;
    default:
      break;
  }
}

double FlatDomain::interior_margin(const Vec& p) const {
  switch (region_) {
    case Region::Plane: return kInf;
    case Region::HalfPlane: return p[1];
    case Region::Disk: return r_outer_ - (p - center_).norm();
    case Region::Annulus: {
      const double r = (p - center_).norm();
      return std::min(r - r_inner_, r_outer_ - r);
    }
    case Region::Rectangle: return std::min((p - lo_).minCoeff(), (hi_ - p).minCoeff());
  }
  return kInf;
}

bool FlatDomain::has_distance_oracle() const { return region_ != Region::Annulus || euclidean(); }

double FlatDomain::distance(const Vec& p, const Vec& q) const {
  if (!has_distance_oracle()) return Manifold::distance(p, q);
  const Vec d = q - p;
  if (region_ != Region::Annulus) return metric_->norm(p, d);
  const Vec a = p - center_, b = q - center_;
  const double r = r_inner_;
  const double seg2 = d.squaredNorm();
  const double tc = seg2 > 0 ? std::clamp(-a.dot(d) / seg2, 0.0, 1.0) : 0.0;
  if ((a + tc * d).norm() >= r * (1.0 - 1e-14)) return d.norm();
  const double ra = std::max(a.norm(), r), rb = std::max(b.norm(), r);
  const double alpha_a = std::acos(std::min(1.0, r / ra)), alpha_b = std::acos(std::min(1.0, r / rb));
  const double travel = std::abs(periodic_diff(std::atan2(b[1], b[0]), std::atan2(a[1], a[0]), 2 * kPi));
  return std::sqrt(ra * ra - r * r) + std::sqrt(rb * rb - r * r) + r * std::max(0.0, travel - alpha_a - alpha_b);
}

std::vector<GeodesicLink> FlatDomain::geodesics_between(const Vec& p, const Vec& q, double slack) const {
  if (!has_distance_oracle()) return Manifold::geodesics_between(p, q, slack);
  const Vec d = q - p;
  auto straight = [&]() {
    GeodesicLink l;
    l.length = metric_->norm(p, d);
    l.initial = l.length > 0 ? Vec(d / l.length) : Vec(Vec::Zero(d.size()));
    l.arrival = l.initial;
    return l;
  };
  if (region_ != Region::Annulus) return {straight()};

  // Shortest paths in the plane with the inner disk removed: either the straight
  // segment or tangent segments joined by an arc of the inner circle.
  const Vec a = p - center_, b = q - center_;
  const double r = r_inner_;
  const double seg2 = d.squaredNorm();
  double tc = seg2 > 0 ? std::clamp(-a.dot(d) / seg2, 0.0, 1.0) : 0.0;
  const double closest = (a + tc * d).norm();
  std::vector<GeodesicLink> out;
  if (closest >= r * (1.0 - 1e-14)) out.push_back(straight());
  const double ra = std::max(a.norm(), r), rb = std::max(b.norm(), r);
  const double alpha_a = std::acos(std::min(1.0, r / ra)), alpha_b = std::acos(std::min(1.0, r / rb));
  const double th_a = std::atan2(a[1], a[0]), th_b = std::atan2(b[1], b[0]);
  for (double sigma : {1.0, -1.0}) {
    double travel = wrap_angle(sigma * (th_b - th_a));
    const double arc = travel - alpha_a - alpha_b;
    if (arc <= 0) continue;
    GeodesicLink l;
    l.length = std::sqrt(ra * ra - r * r) + std::sqrt(rb * rb - r * r) + r * arc;
    const Vec ta = r * vec2(std::cos(th_a + sigma * alpha_a), std::sin(th_a + sigma * alpha_a));
    const Vec tb = r * vec2(std::cos(th_b - sigma * alpha_b), std::sin(th_b - sigma * alpha_b));
    l.initial = (ta - a).norm() > 0 ? Vec((ta - a).normalized()) : Vec(rot2(a.normalized(), sigma * kPi / 2));
    l.arrival = (b - tb).norm() > 0 ? Vec((b - tb).normalized()) : Vec(rot2(b.normalized(), sigma * kPi / 2));
    out.push_back(l);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.length < y.length; });
  if (out.empty()) throw NumericalError("annulus geodesic construction failed");
  const double best = out.front().length;
  out.erase(std::remove_if(out.begin(), out.end(), [&](const auto& l) { return l.length > best + slack; }),
            out.end());
  return out;
}

GridSpec FlatDomain::grid_spec() const {
  GridSpec g;
  switch (region_) {
    case Region::Plane:
      g = {-extent_, extent_, -extent_, extent_, false, false};
      break;
    case Region::HalfPlane:
      g = {-extent_, extent_, 0.0, extent_, false, false};
      break;
    case Region::Disk:
    case Region::Annulus:
      g = {center_[0] - r_outer_, center_[0] + r_outer_, center_[1] - r_outer_, center_[1] + r_outer_, false, false};
      break;
    case Region::Rectangle:
      g = {lo_[0], hi_[0], lo_[1], hi_[1], false, false};
      break;
  }
  return g;
}

FlatTorus::FlatTorus(Vec periods) : Manifold(euclidean_metric(static_cast<int>(periods.size()))), periods_(periods) {
  if ((periods_.array() <= 0).any()) throw ConfigError("torus periods must be positive");
}

Vec FlatTorus::wrap(const Vec& p) const {
  Vec w = p;
  for (int i = 0; i < p.size(); ++i) {
    w[i] = std::fmod(p[i], periods_[i]);
    if (w[i] < 0) w[i] += periods_[i];
  }
  return w;
}

Vec FlatTorus::displacement(const Vec& a, const Vec& b) const {
  Vec d = b - a;
  for (int i = 0; i < d.size(); ++i) d[i] = periodic_diff(d[i], 0.0, periods_[i]);
  return d;
}

double FlatTorus::distance(const Vec& p, const Vec& q) const {
  return geodesics_between(p, q, 0.0).front().length;
}

std::vector<GeodesicLink> FlatTorus::geodesics_between(const Vec& p, const Vec& q, double slack) const {
  const Vec base = displacement(p, q);
  const int n = dim();
  const int reach = kLatticeReach;
  const int side = 2 * reach + 1;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= side;
  std::vector<GeodesicLink> out;
  double best = kInf;
  for (int idx = 0; idx < total; ++idx) {
    Vec d = base;
    int rest = idx;
    for (int i = 0; i < n; ++i) {
      d[i] += (rest % side - reach) * periods_[i];
      rest /= side;
    }
    GeodesicLink l;
    l.length = d.norm();
    l.initial = unit_or_zero(d);
    l.arrival = l.initial;
    best = std::min(best, l.length);
    out.push_back(l);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [&](const auto& l) { return l.length > best + slack; }),
            out.end());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.length < y.length; });
  return out;
}

GridSpec FlatTorus::grid_spec() const { return {0.0, periods_[0], 0.0, periods_[1], true, true}; }

QuadricSurface::QuadricSurface(Vec semiaxes, double cap_colatitude)
    : Manifold(euclidean_metric(3)), axes_(std::move(semiaxes)), cap_(cap_colatitude) {
  if (axes_.size() != 3 || (axes_.array() <= 0).any()) throw ConfigError("ellipsoid needs three positive semiaxes");
  if (std::isfinite(cap_)) {
    if (!(cap_ > 0 && cap_ < kPi)) throw ConfigError("cap colatitude must lie in (0, pi)");
    BoundaryComponent b;
    const Vec ax = axes_;
    const double c0 = cap_;
    b.position = [ax, c0](double s) {
      return vec3(ax[0] * std::sin(c0) * std::cos(s), ax[1] * std::sin(c0) * std::sin(s), ax[2] * std::cos(c0));
    };
    b.tangent = [ax, c0](double s) {
      return vec3(-ax[0] * std::sin(c0) * std::sin(s), ax[1] * std::sin(c0) * std::cos(s), 0.0);
    };
    b.inner_normal = [ax, c0](double s) {
      return vec3(-ax[0] * std::cos(c0) * std::cos(s), -ax[1] * std::cos(c0) * std::sin(s), ax[2] * std::sin(c0));
    };
    boundary_.push_back(b);
  }
}

std::shared_ptr<QuadricSurface> QuadricSurface::sphere(double radius) {
  return std::make_shared<QuadricSurface>(vec3(radius, radius, radius));
}

std::shared_ptr<QuadricSurface> QuadricSurface::ellipsoid(double a, double b, double c) {
  return std::make_shared<QuadricSurface>(vec3(a, b, c));
}

bool QuadricSurface::is_sphere() const {
  return std::abs(axes_[0] - axes_[1]) < 1e-15 * axes_[0] && std::abs(axes_[0] - axes_[2]) < 1e-15 * axes_[0];
}

double QuadricSurface::colatitude(const Vec& p) const {
  return std::acos(std::clamp(p[2] / axes_[2], -1.0, 1.0));
}

double QuadricSurface::interior_margin(const Vec& p) const {
  if (!std::isfinite(cap_)) return kInf;
  return axes_[2] * (cap_ - colatitude(p));
}

Vec QuadricSurface::project(const Vec& x) const {
  const double s = std::sqrt((x.array() / axes_.array()).square().sum());
  return x / s;
}

Vec QuadricSurface::normal(const Vec& p) const {
  const Vec g = (p.array() / axes_.array().square()).matrix();
  return g.normalized();
}

Mat QuadricSurface::tangent_basis(const Vec& p) const {
  const Eigen::Vector3d n = normal(p);
  Eigen::Vector3d a = std::abs(n[2]) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d e1 = (a - a.dot(n) * n).normalized();
  const Eigen::Vector3d e2 = n.cross(e1);
  Mat e(3, 2);
  e.col(0) = e1;
  e.col(1) = e2;
  return e;
}

Vec QuadricSurface::acceleration(const Vec& x, const Vec& v) const {
  const Vec h = (2.0 / axes_.array().square()).matrix();
  const Vec hx = (h.array() * x.array()).matrix();
  const double s = (h.array() * v.array().square()).sum();
  return -(s / hx.squaredNorm()) * hx;
}

void QuadricSurface::acceleration_jacobians(const Vec& x, const Vec& v, Mat& ax, Mat& av) const {
  const Vec h = (2.0 / axes_.array().square()).matrix();
  const Vec hx = (h.array() * x.array()).matrix();
  const Vec hv = (h.array() * v.array()).matrix();
  const Vec h2x = (h.array() * hx.array()).matrix();
  const double s = v.dot(hv);
  const double m = hx.squaredNorm();
  av = -2.0 / m * hx * hv.transpose();
  ax = -(s / m) * Mat(h.asDiagonal()) + (2.0 * s / (m * m)) * hx * h2x.transpose();
}

double QuadricSurface::distance(const Vec& p, const Vec& q) const {
  if (!is_sphere()) return Manifold::distance(p, q);
  const double c = std::clamp(p.dot(q) / (p.norm() * q.norm()), -1.0, 1.0);
  return axes_[0] * std::acos(c);
}

std::vector<GeodesicLink> QuadricSurface::geodesics_between(const Vec& p, const Vec& q, double slack) const {
  if (!is_sphere()) return Manifold::geodesics_between(p, q, slack);
  const double r = axes_[0];
  const Vec pu = p.normalized(), qu = q.normalized();
  const double omega = std::acos(std::clamp(pu.dot(qu), -1.0, 1.0));
  GeodesicLink l;
  l.length = r * omega;
  if (kPi - omega < 1e-9) {
    l.continuum = true;
    l.initial = tangent_basis(p).col(0);
    l.arrival = -tangent_basis(q).col(0);
    return {l};
  }
  l.initial = unit_or_zero(qu - qu.dot(pu) * pu);
  l.arrival = unit_or_zero(qu.dot(pu) * qu - pu);
  std::vector<GeodesicLink> out{l};
  if (r * (2 * kPi - omega) <= l.length + slack && omega > 0) {
    GeodesicLink m;
    m.length = r * (2 * kPi - omega);
    m.initial = -l.initial;
    m.arrival = -l.arrival;
    out.push_back(m);
  }
  return out;
}

GridSpec QuadricSurface::grid_spec() const {
  return {0.0, std::min(cap_, kPi), 0.0, 2 * kPi, false, true};
}

Vec QuadricSurface::grid_point(double u, double v) const {
  return vec3(axes_[0] * std::sin(u) * std::cos(v), axes_[1] * std::sin(u) * std::sin(v), axes_[2] * std::cos(u));
}

ChartManifold::ChartManifold(std::shared_ptr<const MetricField> metric, Vec lo, Vec hi)
    : Manifold(std::move(metric)), lo_(std::move(lo)), hi_(std::move(hi)) {}

std::shared_ptr<ChartManifold> ChartManifold::spherical_chart() {
  auto metric = std::make_shared<RiemannianMetric>(2, [](const Vec& p) {
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = std::sin(p[0]) * std::sin(p[0]);
    return g;
  });
  return std::make_shared<ChartManifold>(metric, vec2(0.05, -10.0), vec2(kPi - 0.05, 10.0));
}

double ChartManifold::interior_margin(const Vec& p) const {
  return std::min((p - lo_).minCoeff(), (hi_ - p).minCoeff());
}

GridSpec ChartManifold::grid_spec() const { return {lo_[0], hi_[0], lo_[1], hi_[1], false, false}; }

namespace {

void require_keys(const nlohmann::json& doc, std::initializer_list<const char*> allowed) {
  if (!doc.is_object()) throw ConfigError("manifold description must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown manifold key '" + it.key() + "'");
}

Vec json_vec(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty() || j.size() > 3) throw ConfigError(std::string(what) + " must be an array of 1-3 numbers");
  Vec v(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + " must contain numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

double json_num(const nlohmann::json& doc, const char* key, double fallback, bool required = false) {
  if (!doc.contains(key)) {
    if (required) throw ConfigError(std::string("missing manifold key '") + key + "'");
    return fallback;
  }
  if (!doc[key].is_number()) throw ConfigError(std::string("manifold key '") + key + "' must be a number");
  return doc[key].get<double>();
}

std::shared_ptr<const MetricField> json_metric(const nlohmann::json& doc, int dim) {
  if (!doc.contains("metric")) return euclidean_metric(dim);
  const auto& m = doc["metric"];
  if (!m.is_array() || static_cast<int>(m.size()) != dim) throw ConfigError("metric must be a square matrix");
  Mat g(dim, dim);
  for (int i = 0; i < dim; ++i) g.row(i) = json_vec(m[i], "metric row").transpose();
  return std::make_shared<RiemannianMetric>(g);
}

std::shared_ptr<Manifold> flat_region(const nlohmann::json& doc, std::shared_ptr<const MetricField> metric) {
  const std::string kind = doc.value("kind", "plane");
  if (kind == "plane") {
    require_keys(doc, {"kind", "metric"});
    return FlatDomain::plane(metric->dim(), metric);
  }
  if (kind == "half_plane") {
    require_keys(doc, {"kind", "extent", "metric"});
    return FlatDomain::half_plane(json_num(doc, "extent", 4.0), metric);
  }
  if (kind == "disk") {
    require_keys(doc, {"kind", "radius", "center", "metric"});
    Vec c = doc.contains("center") ? json_vec(doc["center"], "center") : Vec(Vec::Zero(2));
    return FlatDomain::disk(c, json_num(doc, "radius", 1.0), metric);
  }
  if (kind == "annulus") {
    require_keys(doc, {"kind", "r_inner", "r_outer", "center", "metric"});
    Vec c = doc.contains("center") ? json_vec(doc["center"], "center") : Vec(Vec::Zero(2));
    return FlatDomain::annulus(c, json_num(doc, "r_inner", 0, true), json_num(doc, "r_outer", 0, true), metric);
  }
  if (kind == "rectangle") {
    require_keys(doc, {"kind", "lo", "hi", "metric"});
    if (!doc.contains("lo") || !doc.contains("hi")) throw ConfigError("rectangle needs lo and hi");
    return FlatDomain::rectangle(json_vec(doc["lo"], "lo"), json_vec(doc["hi"], "hi"), metric);
  }
  throw ConfigError("unknown manifold kind '" + kind + "'");
}

}  // namespace

std::shared_ptr<Manifold> manifold_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
    throw ConfigError("manifold description needs a string 'kind'");
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "flat_torus") {
    require_keys(doc, {"kind", "periods"});
    Vec periods = doc.contains("periods") ? json_vec(doc["periods"], "periods") : vec2(1.0, 1.0);
    return std::make_shared<FlatTorus>(periods);
  }
  if (kind == "sphere") {
    require_keys(doc, {"kind", "radius", "cap_colatitude"});
    const double r = json_num(doc, "radius", 1.0);
    return std::make_shared<QuadricSurface>(vec3(r, r, r), json_num(doc, "cap_colatitude", kInf));
  }
  if (kind == "ellipsoid") {
    require_keys(doc, {"kind", "semiaxes", "cap_colatitude"});
    if (!doc.contains("semiaxes")) throw ConfigError("ellipsoid needs semiaxes");
    return std::make_shared<QuadricSurface>(json_vec(doc["semiaxes"], "semiaxes"),
                                            json_num(doc, "cap_colatitude", kInf));
  }
  if (kind == "minkowski_plane") {
    require_keys(doc, {"kind", "randers_drift", "quadratic", "domain"});
    if (!doc.contains("randers_drift")) throw ConfigError("minkowski_plane needs randers_drift");
    const Vec b = json_vec(doc["randers_drift"], "randers_drift");
    Mat a = Mat::Identity(b.size(), b.size());
    if (doc.contains("quadratic")) {
      const auto& q = doc["quadratic"];
      if (!q.is_array() || q.size() != static_cast<size_t>(b.size())) throw ConfigError("quadratic must be square");
      for (int i = 0; i < b.size(); ++i) a.row(i) = json_vec(q[i], "quadratic row").transpose();
    }
    auto metric = std::make_shared<RandersMetric>(a, b);
    nlohmann::json domain = doc.value("domain", nlohmann::json{{"kind", "plane"}});
    if (domain.is_string()) domain = nlohmann::json{{"kind", domain}};
    return flat_region(domain, metric);
  }
  if (kind == "plane" || kind == "half_plane" || kind == "disk" || kind == "annulus" || kind == "rectangle") {
    int dim = 2;
    if (doc.contains("center")) dim = static_cast<int>(doc["center"].size());
    if (doc.contains("lo")) dim = static_cast<int>(doc["lo"].size());
    return flat_region(doc, json_metric(doc, dim));
  }
  throw ConfigError("unknown manifold kind '" + kind + "'");
}

nlohmann::json manifold_to_json(const Manifold& m) {
  nlohmann::json j;
  j["kind"] = m.kind();
  if (auto t = dynamic_cast<const FlatTorus*>(&m)) {
    j["periods"] = std::vector<double>(t->periods().data(), t->periods().data() + t->periods().size());
  } else if (auto q = dynamic_cast<const QuadricSurface*>(&m)) {
    if (q->is_sphere()) j["radius"] = q->semiaxes()[0];
    else j["semiaxes"] = {q->semiaxes()[0], q->semiaxes()[1], q->semiaxes()[2]};
  } else if (auto f = dynamic_cast<const FlatDomain*>(&m)) {
    if (f->region() == FlatDomain::Region::Annulus) {
      j["r_inner"] = f->r_inner();
      j["r_outer"] = f->r_outer();
    } else if (f->region() == FlatDomain::Region::Disk) {
      j["radius"] = f->r_outer();
    }
  }
  return j;
}

}  // namespace cutlocus

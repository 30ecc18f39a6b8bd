#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace testutil {

// Smooth function with analytic derivatives for interpolation checks.
struct Smooth2D {
  std::function<double(const Eigen::Vector2d&)> val;
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> grad;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> hess;
};

inline Smooth2D poly2(double a, double b, double c, double d, double e, double f) {
  // a x^2 + b x y + c y^2 + d x + e y + f
  Smooth2D s;
  s.val = [=](const Eigen::Vector2d& p) {
    return a * p.x() * p.x() + b * p.x() * p.y() + c * p.y() * p.y() + d * p.x() + e * p.y() + f;
  };
  s.grad = [=](const Eigen::Vector2d& p) {
    return Eigen::Vector2d(2 * a * p.x() + b * p.y() + d, b * p.x() + 2 * c * p.y() + e);
  };
  s.hess = [=](const Eigen::Vector2d&) {
    Eigen::Matrix2d h;
    h << 2 * a, b, b, 2 * c;
    return h;
  };
  return s;
}

inline Smooth2D sinsin(double ax, double by) {
  Smooth2D s;
  s.val = [=](const Eigen::Vector2d& p) { return std::sin(ax * p.x()) * std::sin(by * p.y()); };
  s.grad = [=](const Eigen::Vector2d& p) {
    return Eigen::Vector2d(ax * std::cos(ax * p.x()) * std::sin(by * p.y()),
                           by * std::sin(ax * p.x()) * std::cos(by * p.y()));
  };
  s.hess = [=](const Eigen::Vector2d& p) {
    Eigen::Matrix2d h;
    double sx = std::sin(ax * p.x()), cx = std::cos(ax * p.x());
    double sy = std::sin(by * p.y()), cy = std::cos(by * p.y());
    h << -ax * ax * sx * sy, ax * by * cx * cy, ax * by * cx * cy, -by * by * sx * sy;
    return h;
  };
  return s;
}

inline Smooth2D expxy(double a, double b) {
  Smooth2D s;
  s.val = [=](const Eigen::Vector2d& p) { return std::exp(a * p.x() + b * p.y()); };
  s.grad = [=](const Eigen::Vector2d& p) {
    return (Eigen::Vector2d(a, b) * std::exp(a * p.x() + b * p.y())).eval();
  };
  s.hess = [=](const Eigen::Vector2d& p) {
    Eigen::Matrix2d h;
    double v = std::exp(a * p.x() + b * p.y());
    h << a * a * v, a * b * v, a * b * v, b * b * v;
    return h;
  };
  return s;
}

inline Smooth2D cubic(double a, double b) {
  // a x^3 + b x^2 y - y^3 + x y
  Smooth2D s;
  s.val = [=](const Eigen::Vector2d& p) {
    double x = p.x(), y = p.y();
    return a * x * x * x + b * x * x * y - y * y * y + x * y;
  };
  s.grad = [=](const Eigen::Vector2d& p) {
    double x = p.x(), y = p.y();
    return Eigen::Vector2d(3 * a * x * x + 2 * b * x * y + y, b * x * x - 3 * y * y + x);
  };
  s.hess = [=](const Eigen::Vector2d& p) {
    double x = p.x(), y = p.y();
    Eigen::Matrix2d h;
    h << 6 * a * x + 2 * b * y, 2 * b * x + 1, 2 * b * x + 1, -6 * y;
    return h;
  };
  return s;
}

inline Smooth2D gaussian(double cx, double cy, double s2) {
  Smooth2D s;
  s.val = [=](const Eigen::Vector2d& p) {
    return std::exp(-((p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy)) / s2);
  };
  s.grad = [=](const Eigen::Vector2d& p) {
    double g = std::exp(-((p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy)) / s2);
    return (Eigen::Vector2d(-2 * (p.x() - cx) / s2, -2 * (p.y() - cy) / s2) * g).eval();
  };
  s.hess = [=](const Eigen::Vector2d& p) {
    double g = std::exp(-((p.x() - cx) * (p.x() - cx) + (p.y() - cy) * (p.y() - cy)) / s2);
    double ux = -2 * (p.x() - cx) / s2, uy = -2 * (p.y() - cy) / s2;
    Eigen::Matrix2d h;
    h << (ux * ux - 2 / s2) * g, ux * uy * g, ux * uy * g, (uy * uy - 2 / s2) * g;
    return h;
  };
  return s;
}

inline std::vector<Smooth2D> smooth_samples() {
  std::vector<Smooth2D> v;
  v.push_back(poly2(1, 0, 0, 0, 0, 0));
  v.push_back(poly2(0, 1, 0, 0, 0, 0));
  v.push_back(poly2(0, 0, 1, 0, 0, 0));
  v.push_back(poly2(0.3, -1.2, 0.7, 0.5, -0.25, 2.0));
  v.push_back(poly2(-0.8, 0.4, 1.5, -1.0, 0.6, -0.3));
  v.push_back(cubic(1.0, 0.0));
  v.push_back(cubic(0.25, -1.5));
  v.push_back(cubic(-0.5, 0.75));
  v.push_back(sinsin(M_PI, M_PI));
  v.push_back(sinsin(2.0, 1.0));
  v.push_back(sinsin(1.3, 2.7));
  v.push_back(sinsin(0.5, 3.0));
  v.push_back(expxy(1.0, 0.0));
  v.push_back(expxy(0.5, -0.5));
  v.push_back(expxy(-0.3, 1.1));
  v.push_back(gaussian(0.3, 0.4, 1.0));
  v.push_back(gaussian(-0.2, 0.7, 2.5));
  v.push_back(gaussian(0.8, -0.1, 0.8));
  v.push_back(poly2(2.0, 3.0, -1.0, 0.0, 1.0, -4.0));
  v.push_back(cubic(-1.0, 2.0));
  return v;
}

}  // namespace testutil

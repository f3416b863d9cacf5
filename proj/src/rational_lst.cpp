#include <cmath>

#include "ttlcache/approximation.hpp"
#include "ttlcache/errors.hpp"

namespace ttl {

double poly_eval(const std::vector<double>& p, double s) {
  double r = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) r = r * s + p[i];
  return r;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

std::vector<double> poly_sub(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}

std::vector<double> poly_shift(const std::vector<double>& p, double c) {
  // Horner in polynomial arithmetic: r = (...(p_n)(s+c) + p_{n-1})(s+c) + ...
  if (p.empty()) return {};
  std::vector<double> r{p.back()};
  for (std::size_t i = p.size() - 1; i-- > 0;) {
    r = poly_mul(r, {c, 1.0});
    r[0] += p[i];
  }
  return r;
}

namespace {

double deriv0(const std::vector<double>& p) { return p.size() > 1 ? p[1] : 0.0; }

}  // namespace

double RationalLst::operator()(double s) const { return poly_eval(num, s) / poly_eval(den, s); }

double RationalLst::mean() const {
  const double n0 = poly_eval(num, 0.0), d0 = poly_eval(den, 0.0);
  return -(deriv0(num) * d0 - n0 * deriv0(den)) / (d0 * d0);
}

RationalLst lst_product(const RationalLst& a, const RationalLst& b) {
  return {poly_mul(a.num, b.num), poly_mul(a.den, b.den)};
}

RationalLst lst_of_ph(const DistributionSpec& d) {
  const PhaseType p = d.ph();
  const int n = p.order();
  const Eigen::MatrixXd& S = p.S;
  const Eigen::VectorXd ex = p.exit();
  // Faddeev-LeVerrier: det(sI - S) and adj(sI - S) = sum_k s^{n-k} M_k.
  std::vector<double> den(n + 1, 0.0);
  den[n] = 1.0;
  std::vector<double> num(n + 1, 0.0);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    M = S * M + den[n - k + 1] * I;
    den[n - k] = -(S * M).trace() / k;
    num[n - k] = p.alpha.dot(M * ex);
  }
  const double deficit = 1.0 - p.alpha.sum();
  if (std::abs(deficit) > 0.0)
    for (int i = 0; i <= n; ++i) num[i] += deficit * den[i];
  return {num, den};
}

RationalLst lst_L(const RationalLst& fx, double lambdaT) {
  if (lambdaT < 0.0) throw InvalidArgument("TTL rate must be >= 0");
  return {poly_shift(fx.num, lambdaT), poly_shift(fx.den, lambdaT)};
}

RationalLst miss_lst_no_delay(const RationalLst& fx, const RationalLst& l) {
  const double q = l(0.0);
  if (!(q < 1.0 - 1e-14)) throw DegenerateError("P(X < T) = 1: the cache never misses");
  // (Nx/Dx - Nl/Dl) / (1 - Nl/Dl) = (Nx Dl - Nl Dx) / (Dx (Dl - Nl))
  return {poly_sub(poly_mul(fx.num, l.den), poly_mul(l.num, fx.den)), poly_mul(fx.den, poly_sub(l.den, l.num))};
}

RationalLst miss_lst_with_delay(const RationalLst& fx, const RationalLst& l, const RationalLst& fdelta) {
  return lst_product(fdelta, miss_lst_no_delay(fx, l));
}

}  // namespace ttl

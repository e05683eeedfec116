#include "hedgelab/analytics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hedgelab/errors.hpp"

namespace hedgelab::analytics {

namespace {

void check(const BsInputs& in) {
  if (!(in.spot > 0.0) || !(in.strike > 0.0))
    throw domain_error("bs inputs: spot and strike must be positive (spot=" +
                       std::to_string(in.spot) + ", strike=" + std::to_string(in.strike) + ")");
  if (in.tau < 0.0 || in.vol < 0.0)
    throw domain_error("bs inputs: tau and vol must be non-negative");
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

D1D2 bs_d1_d2(const BsInputs& in) {
  check(in);
  if (in.vol == 0.0 || in.tau == 0.0)
    throw domain_error("bs_d1_d2: vol and tau must be positive; use the limit formulas");
  double sq = in.vol * std::sqrt(in.tau);
  double d1 = (std::log(in.spot / in.strike) + (in.rate + 0.5 * in.vol * in.vol) * in.tau) / sq;
  return {d1, d1 - sq};
}

double bs_price(const BsInputs& in) {
  check(in);
  if (in.tau == 0.0) return std::max(in.spot - in.strike, 0.0);
  double disc = in.strike * std::exp(-in.rate * in.tau);
  if (in.vol == 0.0) return std::max(in.spot - disc, 0.0);
  auto [d1, d2] = bs_d1_d2(in);
  return norm_cdf(d1) * in.spot - norm_cdf(d2) * disc;
}

double bs_delta(const BsInputs& in) {
  check(in);
  if (in.tau == 0.0) {
    if (in.spot > in.strike) return 1.0;
    if (in.spot < in.strike) return 0.0;
    return 0.5;
  }
  if (in.vol == 0.0) {
    double disc = in.strike * std::exp(-in.rate * in.tau);
    if (in.spot > disc) return 1.0;
    if (in.spot < disc) return 0.0;
    return 0.5;
  }
  return norm_cdf(bs_d1_d2(in).d1);
}

}  // namespace hedgelab::analytics

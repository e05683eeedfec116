#pragma once

namespace hedgelab::analytics {

// Inputs of the closed-form call valuation: spot S_t, strike K, continuously
// compounded rate r, volatility sigma, and time to maturity tau in years.
struct BsInputs {
  double spot;
  double strike;
  double rate;
  double vol;
  double tau;
};

double norm_cdf(double x);
double norm_pdf(double x);

struct D1D2 {
  double d1;
  double d2;
};

// Requires vol > 0 and tau > 0; degenerate limits are handled by the callers.
D1D2 bs_d1_d2(const BsInputs& in);

// European call value. tau = 0 gives the expiry payoff, vol = 0 the
// discounted deterministic forward.
double bs_price(const BsInputs& in);

// Call delta N(d1) in [0,1]. At tau = 0 it degenerates to a step function
// with value 0.5 exactly at the strike (midpoint of the subgradient).
double bs_delta(const BsInputs& in);

inline double bs_price(double spot, double strike, double rate, double vol, double tau) {
  return bs_price(BsInputs{spot, strike, rate, vol, tau});
}
inline double bs_delta(double spot, double strike, double rate, double vol, double tau) {
  return bs_delta(BsInputs{spot, strike, rate, vol, tau});
}

}  // namespace hedgelab::analytics

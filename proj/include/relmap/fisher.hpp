#ifndef RELMAP_FISHER_HPP_
#define RELMAP_FISHER_HPP_

namespace relmap {

// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

// CDF of the Fisher F distribution with (d1, d2) degrees of freedom.
double fisher_cdf(double x, int d1, int d2);

// Quantile of the F distribution: the x with fisher_cdf(x) = q, found by
// bracketed bisection refined to an absolute tolerance of 1e-10.
// Throws std::invalid_argument for q outside (0,1) or nonpositive dof,
// std::runtime_error if the inversion fails to converge.
double fisher_quantile(double q, int d1, int d2);

}  // namespace relmap

#endif  // RELMAP_FISHER_HPP_

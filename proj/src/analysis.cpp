#include "marital/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "marital/errors.hpp"

namespace marital {

namespace {

using cplx = std::complex<double>;

bool nearly_equal(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Eigenvector of [[r1, -u2], [-u1, r2]] for eigenvalue mu.
std::array<cplx, 2> adjoint_eigenvector(double r1, double r2, double u1, double u2, cplx mu) {
  const double scale = std::max({1.0, std::abs(r1), std::abs(r2)});
  const cplx d1 = r1 - mu;
  if (std::abs(d1) > 1e-12 * scale) return {cplx(u2) / d1, 1.0};
  // First row vanishes: use the second row, -u1 v1 + (r2 - mu) v2 = 0.
  if (std::abs(u1) > 1e-12 * scale) return {(r2 - mu) / u1, 1.0};
  return {1.0, 0.0};
}

}  // namespace

std::string to_string(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::Saddle: return "Saddle";
    case EquilibriumClass::UnstableNode: return "UnstableNode";
    case EquilibriumClass::UnstableSpiral: return "UnstableSpiral";
    case EquilibriumClass::Degenerate: return "Degenerate";
  }
  return "Degenerate";
}

std::string to_string(InteractionStyle s) {
  switch (s) {
    case InteractionStyle::ConflictAvoiding: return "ConflictAvoiding";
    case InteractionStyle::Validating: return "Validating";
    case InteractionStyle::Mixed: return "Mixed";
  }
  return "Mixed";
}

AdjointVec adjoint_equilibrium(const ModelParams& p, double u1, double u2) {
  const double denom = p.r1 * p.r2 - u1 * u2;
  if (denom == 0.0) {
    throw DegenerateDenominator("r1 * r2 == u1 * u2: the adjoint system has no isolated fixed point");
  }
  return {((1.0 - p.alpha) * u2 + p.alpha * p.r2) / denom,
          ((1.0 - p.alpha) * p.r1 + p.alpha * u1) / denom};
}

EquilibriumReport classify_adjoint_equilibrium(const ModelParams& p, double u1, double u2) {
  const double r1 = p.r1, r2 = p.r2;
  const double prod = u1 * u2;
  const double det = r1 * r2 - prod;
  const double trace = r1 + r2;
  const double disc = trace * trace - 4.0 * det;

  EquilibriumReport rep;
  if (det != 0.0) rep.point = adjoint_equilibrium(p, u1, u2);

  const cplx root = std::sqrt(cplx(disc, 0.0));
  rep.mu_plus = 0.5 * (trace + root);
  rep.mu_minus = 0.5 * (trace - root);
  rep.v = adjoint_eigenvector(r1, r2, u1, u2, rep.mu_plus);
  rep.w = adjoint_eigenvector(r1, r2, u1, u2, rep.mu_minus);

  const double spiral_edge = -0.25 * (r1 - r2) * (r1 - r2);
  if (prod > r1 * r2) {
    rep.classification = EquilibriumClass::Saddle;
  } else if (prod < r1 * r2 && prod > spiral_edge) {
    rep.classification = EquilibriumClass::UnstableNode;
  } else if (prod < spiral_edge) {
    rep.classification = EquilibriumClass::UnstableSpiral;
  } else {
    rep.classification = EquilibriumClass::Degenerate;
  }
  return rep;
}

PositivityVerdict adjoint_positivity_check(const Trajectory& traj, double tol) {
  traj.check_shape();
  PositivityVerdict verdict;
  // The last node is t = T, where both adjoints are pinned to zero.
  for (std::size_t k = 0; k + 1 < traj.grid.size(); ++k) {
    if (!(traj.lam1[k] > -tol) || !(traj.lam2[k] > -tol)) {
      verdict.positive = false;
      verdict.first_violation = k;
      break;
    }
  }
  return verdict;
}

SingularityReport singularity_report(const ModelParams& p, double tol) {
  SingularityReport r;
  r.u1_initial_gap = p.x1_0 - p.xbar1;
  r.u1_balance_gap = -p.r2 * p.xbar2 - p.u2max * p.xbar1;
  r.u1_singular_capable = nearly_equal(p.x1_0, p.xbar1, tol) &&
                          nearly_equal(-p.r2 * p.xbar2, p.u2max * p.xbar1, tol);

  r.u2_initial_gap = p.x2_0 - p.xbar2;
  r.u2_balance_gap = -p.r1 * p.xbar1 - p.u1max * p.xbar2;
  const bool u2_balance = nearly_equal(-p.r1 * p.xbar1, p.u1max * p.xbar2, tol);
  r.u2_singular_capable = nearly_equal(p.x2_0, p.xbar2, tol) && u2_balance;

  r.u2_initial_gap_literal = p.x2_0 - p.xbar1;
  r.u2_singular_capable_literal = nearly_equal(p.x2_0, p.xbar1, tol) && u2_balance;

  r.lambda_interval_zero_possible = false;
  if (p.alpha == 1.0) {
    r.lambda_interval_zero_reason =
        "alpha = 1: a vanishing lambda_1 forces 0 = -1 in its own equation, a contradiction";
  } else if (p.alpha == 0.0) {
    r.lambda_interval_zero_reason =
        "alpha = 0: lambda_1' = 0 on an interval requires exp(r2 (t - T)) = 1, i.e. only t = T";
  } else {
    r.lambda_interval_zero_reason =
        "0 < alpha < 1: an admissible u2 keeping lambda_1' = 0 needs exp(r2 (t - T)) > 1, "
        "i.e. t > T, a contradiction";
  }
  return r;
}

double maximized_hamiltonian(const ModelParams& p, const StateVec& s, const AdjointVec& lam) {
  return hamiltonian(p, s, control_law(p, s, lam), lam);
}

std::array<std::array<double, 2>, 2> maximized_hamiltonian_hessian(const ModelParams& p,
                                                                   const StateVec& s,
                                                                   const AdjointVec& lam,
                                                                   double step) {
  const auto m = [&](double dx1, double dx2) {
    return maximized_hamiltonian(p, {s.x1 + dx1, s.x2 + dx2}, lam);
  };
  const double h = step;
  const double m0 = m(0, 0);
  const double h11 = (m(h, 0) - 2.0 * m0 + m(-h, 0)) / (h * h);
  const double h22 = (m(0, h) - 2.0 * m0 + m(0, -h)) / (h * h);
  const double h12 = (m(h, h) - m(h, -h) - m(-h, h) + m(-h, -h)) / (4.0 * h * h);
  return {{{h11, h12}, {h12, h22}}};
}

ConcavityReport concavity_probe(const ModelParams& p, const AdjointVec& lam, const StateBox& box,
                                std::size_t samples) {
  ConcavityReport rep;
  rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t j = 0; j < samples; ++j) {
      const double x1 = box.x1_min + (box.x1_max - box.x1_min) * (i + 0.5) / samples;
      const double x2 = box.x2_min + (box.x2_max - box.x2_min) * (j + 0.5) / samples;
      const auto hess = maximized_hamiltonian_hessian(p, {x1, x2}, lam);
      const double tr = hess[0][0] + hess[1][1];
      const double det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
      const double gap = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
      const double top = 0.5 * tr + gap;
      ++rep.points;
      if (top <= 1e-6) ++rep.negative_semidefinite;
      rep.max_eigenvalue = std::max(rep.max_eigenvalue, top);
    }
  }
  if (rep.points > 0) {
    rep.fraction_negative_semidefinite =
        static_cast<double>(rep.negative_semidefinite) / static_cast<double>(rep.points);
  }
  return rep;
}

std::vector<InfluenceSample> influence_samples(const Trajectory& traj, Spouse spouse) {
  traj.check_shape();
  const bool first = spouse == Spouse::First;
  const auto& u = first ? traj.u1 : traj.u2;
  const auto& partner = first ? traj.x2 : traj.x1;
  std::vector<InfluenceSample> out;
  out.reserve(traj.grid.size());
  for (std::size_t k = 0; k < traj.grid.size(); ++k) {
    out.push_back({traj.grid.node(k), partner[k], u[k] * partner[k], u[k]});
  }
  return out;
}

double window_slope(const std::vector<InfluenceSample>& samples, double start, double end,
                    bool include_end) {
  double n = 0.0, sx = 0.0, sy = 0.0, su = 0.0;
  for (const auto& s : samples) {
    if (s.t >= start && (s.t < end || (include_end && s.t <= end))) {
      n += 1.0;
      sx += s.partner_x;
      sy += s.influence;
      su += s.control;
    }
  }
  if (n == 0.0) return 0.0;
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    if (s.t >= start && (s.t < end || (include_end && s.t <= end))) {
      sxx += (s.partner_x - mx) * (s.partner_x - mx);
      sxy += (s.partner_x - mx) * (s.influence - my);
    }
  }
  if (sxx / n < 1e-12) return su / n;
  return sxy / sxx;
}

SlopeProfile slope_profile(const std::vector<Trajectory>& trajs, double window) {
  if (trajs.empty()) throw InvalidParams("trajectories", "need at least one trajectory");
  if (!(window > 0.0)) throw InvalidParams("window", "must be > 0");
  const double T = trajs.front().grid.horizon();
  for (const auto& tr : trajs) {
    if (tr.grid.horizon() != T) throw InvalidParams("T", "all trajectories must share T");
  }
  const double ratio = T / window;
  const auto count = static_cast<std::size_t>(std::llround(ratio));
  if (count == 0 || std::abs(ratio - static_cast<double>(count)) > 1e-9 * ratio) {
    throw InvalidParams("window", "must divide T");
  }

  SlopeProfile prof;
  prof.window = window;
  for (Spouse sp : {Spouse::First, Spouse::Second}) {
    std::vector<std::vector<InfluenceSample>> all;
    all.reserve(trajs.size());
    for (const auto& tr : trajs) all.push_back(influence_samples(tr, sp));

    auto& rows = sp == Spouse::First ? prof.spouse1 : prof.spouse2;
    for (std::size_t w = 0; w < count; ++w) {
      const double start = window * static_cast<double>(w);
      const double end = (w + 1 == count) ? T : window * static_cast<double>(w + 1);
      const bool last = w + 1 == count;
      std::vector<double> slopes;
      double control_sum = 0.0;
      std::size_t control_n = 0;
      for (const auto& samples : all) {
        slopes.push_back(window_slope(samples, start, end, last));
        for (const auto& s : samples) {
          if (s.t >= start && (s.t < end || (last && s.t <= end))) {
            control_sum += s.control;
            ++control_n;
          }
        }
      }
      double mean = 0.0;
      for (double s : slopes) mean += s;
      mean /= static_cast<double>(slopes.size());
      double var = 0.0;
      for (double s : slopes) var += (s - mean) * (s - mean);
      const double sd =
          slopes.size() > 1 ? std::sqrt(var / static_cast<double>(slopes.size() - 1)) : 0.0;
      rows.push_back({start, end, mean, sd,
                      control_n ? control_sum / static_cast<double>(control_n) : 0.0});
    }
  }
  return prof;
}

namespace {

SpouseStyle classify_one(const std::vector<double>& u, const std::vector<double>& partner,
                         const Grid& grid, double umax, double u0, const StyleThresholds& th) {
  SpouseStyle out;
  double neg_sum = 0.0, pos_sum = 0.0;
  std::size_t neg_n = 0, pos_n = 0;
  const double horizon = th.horizon_fraction * grid.horizon();
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (partner[k] < 0.0) {
      neg_sum += u[k];
      ++neg_n;
    } else if (partner[k] > 0.0) {
      pos_sum += u[k];
      ++pos_n;
    }
    if (grid.node(k) <= horizon) {
      out.max_deviation_from_u0 = std::max(out.max_deviation_from_u0, std::abs(u[k] - u0));
    }
  }
  out.mean_u_partner_negative = neg_n ? neg_sum / static_cast<double>(neg_n) : 0.0;
  out.mean_u_partner_positive = pos_n ? pos_sum / static_cast<double>(pos_n) : 0.0;

  const bool both_signs = neg_n > 0 && pos_n > 0;
  if (both_signs && out.mean_u_partner_negative <= th.low * umax &&
      out.mean_u_partner_positive >= th.high * umax) {
    out.style = InteractionStyle::ConflictAvoiding;
  } else if (out.max_deviation_from_u0 <= th.flat * umax) {
    out.style = InteractionStyle::Validating;
  } else {
    out.style = InteractionStyle::Mixed;
    out.reason = both_signs ? "neither avoiding nor flat within thresholds"
                            : "partner positivity never changes sign";
  }
  return out;
}

}  // namespace

StyleVerdict style_classify(const Trajectory& traj, const ModelParams& p,
                            const StyleThresholds& thresholds) {
  traj.check_shape();
  return {classify_one(traj.u1, traj.x2, traj.grid, p.u1max, p.u0, thresholds),
          classify_one(traj.u2, traj.x1, traj.grid, p.u2max, p.u0, thresholds)};
}

}  // namespace marital
